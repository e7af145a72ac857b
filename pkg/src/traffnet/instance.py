"""Convert a generated network into a complete interdiction instance.

The flow network orients every relationship: source -> controllers,
controllers -> victims, victims -> sink. Node capacities carry the
controller-span semantics (victims 1, bottoms span+1, traffickers their
victim count), so with nothing interdicted the max flow equals victims
plus bottoms. Trafficker-trafficker arcs get capacity zero; they exist
only to seed the restructure-able arc sets.

Restructure-able arcs come in seven categories:

  BACKUP      source -> latent replacement trafficker, needs its trafficker
              interdicted
  RECRUIT     trafficker -> latent recruitable victim
  KNOWN       trafficker -> existing victim of a socially adjacent trafficker
  PROMOTE     source -> promotable victim, needs the operation's bottom
              interdicted; grants the victim the bottom's span
  TAKE        trafficker -> own victim currently held only by the bottom
  GIVE        bottom -> own victim not yet held by the bottom
  ASSIGN      promoted victim -> own-operation victim, gated on the PROMOTE
              arc of that victim

Every arc is an "out" arc charged to its operation's trafficker; KNOWN and
TAKE arcs (existing trafficker to existing victim) are additionally "in"
arcs. The list is sorted by (category, owner, tail, head), which is the
canonical order used for deterministic tie-breaking everywhere downstream.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum

from .model import ArcKind, Role, TraffickingNetwork, validate_network

SOURCE = -1
SINK = -2


class InstanceError(ValueError):
    """Raised for invalid networks or malformed instance data."""


class NodeKind(str, Enum):
    TRAFFICKER = "trafficker"
    BOTTOM = "bottom"
    VICTIM = "victim"
    RECRUITABLE = "recruitable"
    BACKUP = "backup"


class Category(str, Enum):
    BACKUP = "backup"
    RECRUIT = "recruit"
    KNOWN = "known-victim"
    PROMOTE = "promote"
    TAKE = "take-from-bottom"
    GIVE = "give-to-bottom"
    ASSIGN = "assign-to-promoted"


# Branch/tie-break order: categories by descending flow-gain potential.
CATEGORY_RANK = {
    Category.BACKUP: 0,
    Category.RECRUIT: 1,
    Category.KNOWN: 2,
    Category.PROMOTE: 3,
    Category.TAKE: 4,
    Category.GIVE: 5,
    Category.ASSIGN: 6,
}


@dataclass
class CostSchedule:
    """Interdiction costs, cost reductions, restructuring costs and the
    structural fractions controlling latent nodes."""

    r_trafficker: float = 8.0
    r_bottom: float = 4.0
    r_victim: float = 2.0
    d_bottom: float = 3.0
    d_victim: float = 1.0
    r_min: float = 2.0
    b_restructure: float = 8.0
    c_known_victim: float = 1.0
    c_bottom_transfer: float = 1.0
    c_recruit: float = 2.0
    c_backup: float = 4.0
    c_promote: float = 5.0
    c_assign_promoted: float = 2.0
    recruitable_fraction: float = 0.4
    backup_threshold: int = 4
    promotable_fraction: float = 0.5
    trafficker_capacity_slack: float = 1.0
    latent_interdictable: bool = True

    def validate(self) -> None:
        costs = [self.r_trafficker, self.r_bottom, self.r_victim, self.d_bottom,
                 self.d_victim, self.r_min, self.b_restructure, self.c_known_victim,
                 self.c_bottom_transfer, self.c_recruit, self.c_backup,
                 self.c_promote, self.c_assign_promoted]
        if any(c < 0 for c in costs):
            raise InstanceError("all costs must be non-negative")
        if self.r_min > self.r_trafficker:
            raise InstanceError("r_min must not exceed the trafficker cost")
        for name, f in [("recruitable_fraction", self.recruitable_fraction),
                        ("promotable_fraction", self.promotable_fraction)]:
            if not 0.0 <= f <= 1.0:
                raise InstanceError(f"{name} must be in [0,1]")
        if self.trafficker_capacity_slack < 1.0:
            raise InstanceError("trafficker_capacity_slack must be >= 1.0")


def default_schedule() -> CostSchedule:
    return CostSchedule()


@dataclass(frozen=True)
class InstanceNode:
    id: int
    kind: NodeKind
    capacity: int
    cost: float
    operation: int | None


@dataclass(frozen=True)
class RestructArc:
    """One activatable arc; ``in_allowed`` marks membership in the in-set."""

    tail: int
    head: int
    owner: int
    cost: float
    category: Category
    in_allowed: bool
    gate: int | None = None  # index of the PROMOTE arc this one requires

    def sort_key(self):
        return (CATEGORY_RANK[self.category], self.owner, self.tail, self.head)


@dataclass
class InterdictionInstance:
    nodes: dict[int, InstanceNode]
    arcs: list[tuple[int, int, int]]  # (tail, head, capacity)
    restruct_arcs: list[RestructArc]
    recruitables: dict[int, tuple[int, ...]]  # id -> eligible traffickers
    backups: list[tuple[int, int]]  # (trafficker, backup)
    promotables: list[tuple[int, int, int]]  # (bottom, victim, capacity gain)
    reductions: dict[tuple[int, int], float]  # (trafficker, node) -> d
    schedule: CostSchedule
    big_m: int
    num_victims: int
    num_bottoms: int
    source: int = SOURCE
    sink: int = SINK
    split_arcs: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.split_arcs:
            # Split-graph vertex numbering: source 0, sink 1, then one
            # (in, out) vertex pair per node in id order.
            self.split_arcs = {
                nid: (2 + 2 * i, 3 + 2 * i) for i, nid in enumerate(sorted(self.nodes))
            }
        self._by_kind: dict[NodeKind, list[int]] = {}
        for kind in NodeKind:
            self._by_kind[kind] = sorted(
                n.id for n in self.nodes.values() if n.kind is kind)
        self._out_adj: dict[int, set[int]] = {}
        self._in_adj: dict[int, set[int]] = {}
        for tail, head, _cap in self.arcs:
            self._out_adj.setdefault(tail, set()).add(head)
            self._in_adj.setdefault(head, set()).add(tail)

    # -- structure queries used by the solvers ------------------------------

    def ids(self, kind: NodeKind) -> list[int]:
        return self._by_kind[kind]

    def base_flow(self) -> int:
        """Value of the un-interdicted, un-restructured max flow."""
        return self.num_victims + self.num_bottoms

    def has_arc(self, tail: int, head: int) -> bool:
        return head in self._out_adj.get(tail, ())

    def direct_victims(self, trafficker: int) -> list[int]:
        """Existing victims with a base trafficker->victim arc."""
        return sorted(h for h in self._out_adj.get(trafficker, ())
                      if h in self.nodes and self.nodes[h].kind is NodeKind.VICTIM)

    def direct_traffickers(self, victim: int) -> list[int]:
        return sorted(t for t in self._in_adj.get(victim, ())
                      if t in self.nodes and self.nodes[t].kind is NodeKind.TRAFFICKER)

    def interdictable(self) -> list[int]:
        latent = {NodeKind.RECRUITABLE, NodeKind.BACKUP}
        return sorted(n.id for n in self.nodes.values()
                      if self.schedule.latent_interdictable or n.kind not in latent)

    def promotion_gain(self, victim: int) -> int:
        for _b, v, gain in self.promotables:
            if v == victim:
                return gain
        return 0

    def operation_of(self, node: int) -> int | None:
        return self.nodes[node].operation


_SYMMETRY_ATTR = "_victim_symmetry_classes"


def victim_symmetry_classes(inst: InterdictionInstance) -> dict[int, int]:
    """Classes of victims whose swap is an automorphism of the whole
    instance: base arcs with capacities, restructure-able arcs with costs,
    gates and directions, and promotion gains. Swapping members of a class
    changes neither flow values nor plan feasibility, so searches may
    restrict themselves to id-ordered representatives. Only classes with at
    least two members are recorded."""
    cached = getattr(inst, _SYMMETRY_ATTR, None)
    if cached is not None:
        return cached
    base = set(inst.arcs)
    incident: dict[int, list[tuple[int, int, int]]] = {}
    for (t, h, c) in inst.arcs:
        incident.setdefault(t, []).append((t, h, c))
        incident.setdefault(h, []).append((t, h, c))
    gate_key = {}
    for idx, a in enumerate(inst.restruct_arcs):
        gate_key[idx] = (a.tail, a.head)
    rsig = []
    for a in inst.restruct_arcs:
        rsig.append((a.category, a.owner, a.tail, a.head, a.cost, a.in_allowed,
                     gate_key[a.gate] if a.gate is not None else None))
    rset = set(rsig)
    rtouch: dict[int, list[tuple]] = {}
    for sig in rsig:
        touched = [sig[2], sig[3]]
        if sig[6]:
            touched.extend(sig[6])
        for node in touched:
            rtouch.setdefault(node, []).append(sig)
    gains = {v: g for (_b, v, g) in inst.promotables}
    victims_by_op: dict[int, list[int]] = {}
    for n in inst.nodes.values():
        if n.kind is NodeKind.VICTIM and n.operation is not None:
            victims_by_op.setdefault(n.operation, []).append(n.id)

    def swappable(i: int, j: int) -> bool:
        if gains.get(i) != gains.get(j):
            return False

        def s(x):
            return j if x == i else (i if x == j else x)

        for (t, h, c) in incident.get(i, ()) + incident.get(j, ()):
            if (s(t), s(h), c) not in base:
                return False
        for (cat, owner, t, h, c, inn, gate) in rtouch.get(i, ()) + rtouch.get(j, ()):
            mapped_gate = (s(gate[0]), s(gate[1])) if gate else None
            if (cat, owner, s(t), s(h), c, inn, mapped_gate) not in rset:
                return False
        return True

    classes: dict[int, int] = {}
    next_class = 0
    for op, members in sorted(victims_by_op.items()):
        members.sort()
        assigned: set[int] = set()
        for pos, i in enumerate(members):
            if i in assigned:
                continue
            group = [i]
            for j in members[pos + 1:]:
                if j not in assigned and all(swappable(g, j) for g in group):
                    group.append(j)
                    assigned.add(j)
            if len(group) > 1:
                for m in group:
                    classes[m] = next_class
                next_class += 1
            assigned.add(i)
    object.__setattr__(inst, _SYMMETRY_ATTR, classes)
    return classes


def build_instance(net: TraffickingNetwork, sched: CostSchedule,
                   rng: random.Random) -> InterdictionInstance:
    """Assemble the oriented, capacitated instance plus all restructure-able
    arc sets from a validated network."""
    sched.validate()
    violations = validate_network(net)
    if violations:
        raise InstanceError("network fails validation: " + "; ".join(violations[:5]))

    victims = net.ids_by_role(Role.VICTIM)
    bottoms = net.ids_by_role(Role.BOTTOM)
    n_recruit = math.ceil(sched.recruitable_fraction * len(victims))
    big_m = len(victims) + len(bottoms) + n_recruit + 1

    nodes: dict[int, InstanceNode] = {}
    arcs: list[tuple[int, int, int]] = []
    seen_arcs: set[tuple[int, int]] = set()

    def add_arc(tail: int, head: int, cap: int):
        if (tail, head) not in seen_arcs:
            seen_arcs.add((tail, head))
            arcs.append((tail, head, cap))

    adj = net.adjacency()
    op_arcs = net.operational_adjacency()

    # Person nodes with controller-span capacities.
    for op in net.operations:
        n_vic = len(op.victims())
        t_cap = max(1, math.ceil(sched.trafficker_capacity_slack * n_vic))
        nodes[op.trafficker] = InstanceNode(
            op.trafficker, NodeKind.TRAFFICKER, t_cap, sched.r_trafficker, op.index)
        if op.bottom is not None:
            wired = sorted(v for v in op.victims() if v in op_arcs[op.bottom])
            nodes[op.bottom] = InstanceNode(
                op.bottom, NodeKind.BOTTOM, len(wired) + 1, sched.r_bottom, op.index)
        for v in op.victims():
            nodes[v] = InstanceNode(v, NodeKind.VICTIM, 1, sched.r_victim, op.index)

    # Oriented base arcs.
    for op in net.operations:
        add_arc(SOURCE, op.trafficker, big_m)
        if op.bottom is not None:
            add_arc(SOURCE, op.bottom, big_m)
        for v in sorted(op.victims()):
            if v in op_arcs[op.trafficker]:
                add_arc(op.trafficker, v, big_m)
            if op.bottom is not None and v in op_arcs[op.bottom]:
                add_arc(op.bottom, v, big_m)
    victim_set = set(victims)
    for a in net.arcs:
        if a.u in victim_set and a.v in victim_set:
            add_arc(a.u, a.v, big_m)
            add_arc(a.v, a.u, big_m)
    for (t1, t2) in net.trafficker_social:
        add_arc(t1, t2, 0)
        add_arc(t2, t1, 0)
    for b in bottoms:
        add_arc(b, SINK, 1)
    for v in victims:
        add_arc(v, SINK, 1)

    next_id = max(nodes) + 1 if nodes else 0
    raw: list[RestructArc] = []

    by_index = {op.index: op for op in net.operations}
    trafficker_of_op = {op.index: op.trafficker for op in net.operations}

    # KNOWN: victims of socially adjacent traffickers, both directions.
    social_adj: dict[int, set[int]] = {}
    for (t1, t2) in net.trafficker_social:
        social_adj.setdefault(t1, set()).add(t2)
        social_adj.setdefault(t2, set()).add(t1)
    for op in net.operations:
        i = op.trafficker
        for k in sorted(social_adj.get(i, ())):
            for j in sorted(v for v in op_arcs[k] if v in victim_set):
                raw.append(RestructArc(i, j, i, sched.c_known_victim,
                                       Category.KNOWN, in_allowed=True))

    # TAKE / GIVE between a trafficker and their bottom's victims.
    for op in net.operations:
        if op.bottom is None:
            continue
        i, b = op.trafficker, op.bottom
        for k in sorted(op.victims()):
            if k in op_arcs[b] and k not in op_arcs[i]:
                raw.append(RestructArc(i, k, i, sched.c_bottom_transfer,
                                       Category.TAKE, in_allowed=True))
            if k not in op_arcs[b]:
                raw.append(RestructArc(b, k, i, sched.c_bottom_transfer,
                                       Category.GIVE, in_allowed=False))

    # RECRUIT: latent victims with random non-empty eligibility sets.
    trafficker_ids = sorted(trafficker_of_op.values())
    recruitables: dict[int, tuple[int, ...]] = {}
    for _ in range(n_recruit):
        rid = next_id
        next_id += 1
        eligible: tuple[int, ...] = ()
        while not eligible:
            eligible = tuple(t for t in trafficker_ids if rng.random() < 0.5)
        recruitables[rid] = eligible
        nodes[rid] = InstanceNode(rid, NodeKind.RECRUITABLE, 1, sched.r_victim, None)
        add_arc(rid, SINK, 1)
        for t in eligible:
            raw.append(RestructArc(t, rid, t, sched.c_recruit,
                                   Category.RECRUIT, in_allowed=False))

    # BACKUP: replacement traffickers for large operations.
    backups: list[tuple[int, int]] = []
    for op in net.operations:
        span = len(op.victims()) + (1 if op.bottom is not None else 0)
        if span >= sched.backup_threshold:
            jid = next_id
            next_id += 1
            nodes[jid] = InstanceNode(jid, NodeKind.BACKUP,
                                      nodes[op.trafficker].capacity,
                                      sched.r_trafficker, op.index)
            backups.append((op.trafficker, jid))
            for v in sorted(op.victims()):
                add_arc(jid, v, big_m)
            raw.append(RestructArc(SOURCE, jid, op.trafficker, sched.c_backup,
                                   Category.BACKUP, in_allowed=False))

    # PROMOTE: eligible victims per bottomed operation; pool is the
    # trafficker-held victims, falling back to all victims when none are.
    promotables: list[tuple[int, int, int]] = []
    for op in net.operations:
        if op.bottom is None:
            continue
        pool = sorted(v for v in op.victims() if v in op_arcs[op.trafficker])
        if not pool:
            pool = sorted(op.victims())
        count = max(1, math.ceil(sched.promotable_fraction * len(pool)))
        chosen = sorted(rng.sample(pool, min(count, len(pool))))
        gain = nodes[op.bottom].capacity - 1
        for j in chosen:
            promotables.append((op.bottom, j, gain))
            raw.append(RestructArc(SOURCE, j, op.trafficker, sched.c_promote,
                                   Category.PROMOTE, in_allowed=False))

    # ASSIGN: promoted victim to own-operation victims it is not tied to.
    assign_raw: list[tuple[RestructArc, tuple[int, int]]] = []
    for (b, j, _gain) in promotables:
        op = by_index[nodes[j].operation]
        for k in sorted(op.victims()):
            if k != j and k not in adj[j]:
                arc = RestructArc(j, k, op.trafficker, sched.c_assign_promoted,
                                  Category.ASSIGN, in_allowed=False)
                assign_raw.append((arc, (SOURCE, j)))

    # Canonical order, then resolve promotion gates to list indices.
    ordered = sorted(raw, key=lambda a: a.sort_key())
    promote_index = {(a.tail, a.head): i for i, a in enumerate(ordered)
                     if a.category is Category.PROMOTE}
    gated = sorted(assign_raw, key=lambda pair: pair[0].sort_key())
    base_len = len(ordered)
    for arc, gate_key in gated:
        ordered.append(replace(arc, gate=promote_index[gate_key]))
    assert all(a.gate is None for a in ordered[:base_len])

    reductions: dict[tuple[int, int], float] = {}
    for op in net.operations:
        if op.bottom is not None:
            reductions[(op.trafficker, op.bottom)] = sched.d_bottom
        for v in sorted(op.victims()):
            reductions[(op.trafficker, v)] = sched.d_victim

    return InterdictionInstance(
        nodes=nodes,
        arcs=arcs,
        restruct_arcs=ordered,
        recruitables=recruitables,
        backups=backups,
        promotables=promotables,
        reductions=reductions,
        schedule=sched,
        big_m=big_m,
        num_victims=len(victims),
        num_bottoms=len(bottoms),
    )
