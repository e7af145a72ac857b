"""Brute-force ground truth for the solvers, at micro scale only.

Feasibility of restructuring plans is re-derived here from the constraint
system, deliberately not sharing code with the defender module: the two
implementations checking each other is the point. Interdiction spending is
recomputed here as well. Instances beyond the size guards are refused
rather than ground through.
"""

from __future__ import annotations

from dataclasses import dataclass

from .defender import IN, OUT, RestructuringPlan, plan_from_items
from .flow import max_flow_value
from .instance import Category, InterdictionInstance, NodeKind

MAX_PERSON_NODES = 20
MAX_RESTRUCT_ARCS = 14
MAX_SPLIT_NODES = 14


class OracleSizeError(ValueError):
    """Instance exceeds the oracle's enumeration guards."""


@dataclass
class OracleResult:
    optimum: int
    optimal_plans: list[tuple[tuple[int, ...], list[RestructuringPlan]]]
    enumerated: int


def _spend(inst: InterdictionInstance, subset: frozenset) -> float:
    total = 0.0
    for n in subset:
        node = inst.nodes[n]
        if node.kind is NodeKind.TRAFFICKER:
            discount = sum(d for (t, k), d in inst.reductions.items()
                           if t == n and k in subset)
            total += max(inst.schedule.r_min, node.cost - discount)
        else:
            total += node.cost
    return total


def _spend_floor(inst: InterdictionInstance, node_id: int) -> float:
    node = inst.nodes[node_id]
    if node.kind is NodeKind.TRAFFICKER:
        discount = sum(d for (t, _k), d in inst.reductions.items() if t == node_id)
        return max(inst.schedule.r_min, node.cost - discount)
    return node.cost


def _budget_sets(inst: InterdictionInstance, budget: float):
    """Every interdiction set whose exact adjusted spend fits the budget."""
    ids = inst.interdictable()
    chosen: list[int] = []

    def rec(pos: int, floor_total: float):
        subset = frozenset(chosen)
        if _spend(inst, subset) <= budget + 1e-9:
            yield subset
        for i in range(pos, len(ids)):
            extra = _spend_floor(inst, ids[i])
            if floor_total + extra > budget + 1e-9:
                continue
            chosen.append(ids[i])
            yield from rec(i + 1, floor_total + extra)
            chosen.pop()

    yield from rec(0, 0.0)


def _plan_feasible(inst: InterdictionInstance, y: frozenset,
                   items: list[tuple[int, int]]) -> bool:
    """Whole-plan feasibility check, written directly from the constraint
    list and independent of the defender's incremental bookkeeping."""
    arcs = inst.restruct_arcs
    sched = inst.schedule

    spend_by_owner: dict[int, float] = {}
    outs_from: dict[int, int] = {}
    ins_to: dict[int, int] = {}
    recruited: dict[int, int] = {}
    promoted_ops: dict[int, int] = {}
    active: set[tuple[int, int]] = set()

    for idx, mode in items:
        a = arcs[idx]
        if (idx, OUT) in active and mode == IN:
            return False  # (17)
        if (idx, IN) in active and mode == OUT:
            return False  # (17)
        active.add((idx, mode))
        if mode == IN and not a.in_allowed:
            return False
        spend_by_owner[a.owner] = spend_by_owner.get(a.owner, 0.0) + a.cost
        if mode == OUT and inst.nodes.get(a.tail) is not None \
                and inst.nodes[a.tail].kind is NodeKind.TRAFFICKER:
            outs_from[a.tail] = outs_from.get(a.tail, 0) + 1
        if mode == IN:
            ins_to[a.head] = ins_to.get(a.head, 0) + 1
        if a.in_allowed:
            recruited[a.head] = recruited.get(a.head, 0) + 1

    for owner, s in spend_by_owner.items():
        if s > sched.b_restructure + 1e-9:
            return False  # (8)
    for t, used in outs_from.items():
        have = sum(1 for h in inst.direct_victims(t) if h in y)
        if used > have:
            return False  # (9)
    for j, used in ins_to.items():
        have = sum(1 for t in inst.direct_traffickers(j) if t in y)
        if used > have:
            return False  # (10)

    backup_owner = dict((j, t) for (t, j) in inst.backups)
    bottom_for = dict((v, b) for (b, v, _g) in inst.promotables)
    for idx, mode in items:
        a = arcs[idx]
        if mode != OUT:
            continue
        if a.category is Category.BACKUP and backup_owner[a.head] not in y:
            return False  # (11)
        if a.category is Category.PROMOTE:
            if bottom_for[a.head] not in y:
                return False  # (12)
            if a.head in y:
                return False  # (13)
            op = inst.nodes[a.head].operation
            promoted_ops[op] = promoted_ops.get(op, 0) + 1
        if a.category is Category.ASSIGN and (a.gate, OUT) not in active:
            return False  # (15)
    if any(c > 1 for c in promoted_ops.values()):
        return False  # (14)
    if any(c > 1 for c in recruited.values()):
        return False  # (16)
    return True


def _feasible_plans(inst: InterdictionInstance, y: frozenset):
    """All feasible (arc, mode) selections under y; prefixes of feasible
    plans are feasible (every constraint has a monotone left side), so the
    search can cut on the first violation."""
    arcs = inst.restruct_arcs
    items: list[tuple[int, int]] = []

    def rec(pos: int):
        yield list(items)
        for i in range(pos, len(arcs)):
            for mode in (OUT, IN):
                if mode == IN and not arcs[i].in_allowed:
                    continue
                items.append((i, mode))
                if _plan_feasible(inst, y, items):
                    yield from rec(i + 1)
                items.pop()

    yield from rec(0)


def oracle_mfnip_r(inst: InterdictionInstance, budget: float) -> OracleResult:
    """Exhaustive min over budget-feasible interdictions of the max over
    feasible restructurings of the resulting flow."""
    _guard_enumeration(inst)
    best = None
    winners: list[tuple[tuple[int, ...], list[RestructuringPlan]]] = []
    evaluated = 0
    for y in _budget_sets(inst, budget):
        y_best = None
        y_plans: list[list[tuple[int, int]]] = []
        for items in _feasible_plans(inst, y):
            value = max_flow_value(inst, y, tuple(i for i, _m in items))
            evaluated += 1
            if y_best is None or value > y_best:
                y_best, y_plans = value, [items]
            elif value == y_best:
                y_plans.append(items)
        if best is None or y_best < best:
            best = y_best
            winners = [(tuple(sorted(y)), [plan_from_items(p) for p in y_plans])]
        elif y_best == best:
            winners.append((tuple(sorted(y)), [plan_from_items(p) for p in y_plans]))
    return OracleResult(optimum=best, optimal_plans=winners, enumerated=evaluated)


def oracle_mfnip(inst: InterdictionInstance, budget: float) -> OracleResult:
    """Exhaustive min over budget-feasible interdictions with restructuring
    disabled."""
    _guard_enumeration(inst)
    best = None
    winners: list[tuple[tuple[int, ...], list[RestructuringPlan]]] = []
    evaluated = 0
    for y in _budget_sets(inst, budget):
        value = max_flow_value(inst, y, ())
        evaluated += 1
        if best is None or value < best:
            best = value
            winners = [(tuple(sorted(y)), [RestructuringPlan()])]
        elif value == best:
            winners.append((tuple(sorted(y)), [RestructuringPlan()]))
    return OracleResult(optimum=best, optimal_plans=winners, enumerated=evaluated)


def _guard_enumeration(inst: InterdictionInstance):
    persons = sum(1 for n in inst.nodes.values()
                  if n.kind in (NodeKind.TRAFFICKER, NodeKind.BOTTOM, NodeKind.VICTIM))
    if persons > MAX_PERSON_NODES:
        raise OracleSizeError(f"{persons} person nodes exceed the guard "
                              f"of {MAX_PERSON_NODES}")
    if len(inst.restruct_arcs) > MAX_RESTRUCT_ARCS:
        raise OracleSizeError(f"{len(inst.restruct_arcs)} restructure-able arcs "
                              f"exceed the guard of {MAX_RESTRUCT_ARCS}")


def oracle_max_flow(inst: InterdictionInstance, interdicted=(), activated=()) -> int:
    """LP-free max flow: enumerate simple source-sink paths on the split
    graph, then search over integral path packings."""
    split_nodes = 2 + 2 * len(inst.nodes)
    if split_nodes > MAX_SPLIT_NODES:
        raise OracleSizeError(f"{split_nodes} split nodes exceed the guard "
                              f"of {MAX_SPLIT_NODES}")
    y = frozenset(interdicted)
    activated = tuple(activated)

    # Independent split-graph assembly: vertex per node side, arc list with
    # residual-free capacities.
    verts: dict = {"s": 0, "t": 1}
    for nid in sorted(inst.nodes):
        verts[(nid, "in")] = len(verts)
        verts[(nid, "out")] = len(verts)
    arcs: list[tuple[int, int, int]] = []  # (u, v, cap)

    def vin(x):
        return verts["s"] if x == inst.source else (
            verts["t"] if x == inst.sink else verts[(x, "in")])

    def vout(x):
        return verts["s"] if x == inst.source else (
            verts["t"] if x == inst.sink else verts[(x, "out")])

    gains = {v: g for (_b, v, g) in inst.promotables}
    promoted = {inst.restruct_arcs[i].head for i in activated
                if inst.restruct_arcs[i].category is Category.PROMOTE}
    for nid, node in inst.nodes.items():
        cap = 0 if nid in y else node.capacity
        if nid in promoted:
            cap += gains.get(nid, 0)
        arcs.append((verts[(nid, "in")], verts[(nid, "out")], cap))
    for (tail, head, cap) in inst.arcs:
        arcs.append((vout(tail), vin(head), cap))
    for i in activated:
        a = inst.restruct_arcs[i]
        arcs.append((vout(a.tail), vin(a.head), inst.big_m))

    adj: dict[int, list[int]] = {}
    for idx, (u, v, cap) in enumerate(arcs):
        if cap > 0:
            adj.setdefault(u, []).append(idx)

    # All simple s-t paths as arc-index tuples.
    paths: list[tuple[int, ...]] = []
    s, t = verts["s"], verts["t"]

    def walk(u: int, used_vertices: set[int], trail: list[int]):
        if u == t:
            paths.append(tuple(trail))
            return
        for e in adj.get(u, ()):
            v = arcs[e][1]
            if v not in used_vertices:
                used_vertices.add(v)
                trail.append(e)
                walk(v, used_vertices, trail)
                trail.pop()
                used_vertices.discard(v)

    walk(s, {s}, [])

    best = 0
    caps = [c for (_u, _v, c) in arcs]

    def pack(idx: int, total: int):
        nonlocal best
        if total > best:
            best = total
        if idx == len(paths):
            return
        # use the path once more, or move on
        p = paths[idx]
        room = min(caps[e] for e in p)
        if room > 0:
            for e in p:
                caps[e] -= 1
            pack(idx, total + 1)
            for e in p:
                caps[e] += 1
        pack(idx + 1, total)

    pack(0, 0)
    return best
