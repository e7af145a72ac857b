"""Core graph data model: people, roles, arcs, operations, networks.

A network is a collection of single-trafficker operations. Each operation
has one trafficker, at most one bottom, and a set of victims partitioned
into pods (cliques of victims managed together). Relationships are stored
undirected; direction is only imposed when a flow instance is built.

Node ids are integers assigned in generation order, so equal seeds yield
identical networks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum


class Role(str, Enum):
    TRAFFICKER = "trafficker"
    BOTTOM = "bottom"
    VICTIM = "victim"


class Age(str, Enum):
    MINOR = "minor"
    ADULT = "adult"
    NA = "n/a"


class ArcKind(str, Enum):
    OPERATIONAL = "operational"
    SOCIAL = "social"


MAX_POD_SIZE = 6


class UnknownOperationError(KeyError):
    """Raised when an operation does not belong to the given network."""


@dataclass(frozen=True)
class Person:
    id: int
    role: Role
    age: Age
    operation: int

    def __post_init__(self):
        if self.role is Role.TRAFFICKER and self.age is not Age.NA:
            raise ValueError(f"trafficker {self.id} must have age 'n/a'")
        if self.role is not Role.TRAFFICKER and self.age is Age.NA:
            raise ValueError(f"{self.role.value} {self.id} needs a minor/adult age")


@dataclass(frozen=True)
class Arc:
    """Undirected relationship between two people.

    Stored with u < v so that (u, v, kind) triples are canonical; the
    ``directed`` flag exists for forward compatibility and is always False
    for generated networks.
    """

    u: int
    v: int
    kind: ArcKind
    directed: bool = False

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError(f"self-loop at node {self.u}")
        if not self.directed and self.u > self.v:
            object.__setattr__(self, "u", self.v)
            object.__setattr__(self, "v", self.u)

    def endpoints(self) -> tuple[int, int]:
        return (self.u, self.v)


@dataclass(frozen=True)
class Pod:
    """A group of victims recruited or housed together; forms a clique."""

    members: tuple[int, ...]

    def __len__(self):
        return len(self.members)


@dataclass
class Operation:
    """One trafficker, their optional bottom, and their victims in pods.

    ``trafficker_pods`` / ``bottom_pods`` record which pods were wired to
    which controller. For single-pod operations wiring is decided per
    victim, so the pod index sets are coarse summaries there; the arcs are
    authoritative.
    """

    index: int
    trafficker: int
    bottom: int | None
    pods: list[Pod]
    trafficker_pods: frozenset[int]
    bottom_pods: frozenset[int]

    def victims(self) -> list[int]:
        return [m for pod in self.pods for m in pod.members]


@dataclass
class TraffickingNetwork:
    """All generated operations plus trafficker-layer and cross-operation ties."""

    operations: list[Operation]
    persons: dict[int, Person]
    arcs: list[Arc]
    trafficker_social: list[tuple[int, int]]
    generation_seed: int
    config_snapshot: dict

    def ids_by_role(self, role: Role) -> list[int]:
        return sorted(p.id for p in self.persons.values() if p.role is role)

    def arc_set(self) -> set[tuple[int, int, ArcKind]]:
        return {(a.u, a.v, a.kind) for a in self.arcs}

    def operational_adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {pid: set() for pid in self.persons}
        for a in self.arcs:
            if a.kind is ArcKind.OPERATIONAL:
                adj[a.u].add(a.v)
                adj[a.v].add(a.u)
        return adj

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {pid: set() for pid in self.persons}
        for a in self.arcs:
            adj[a.u].add(a.v)
            adj[a.v].add(a.u)
        return adj


@dataclass
class SimpleGraph:
    """Small undirected simple graph used for per-operation statistics."""

    nodes: list[int]
    edges: set[frozenset[int]] = field(default_factory=set)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    def add_edge(self, u: int, v: int):
        if u != v and u in self._node_set() and v in self._node_set():
            self.edges.add(frozenset((u, v)))

    def _node_set(self) -> set[int]:
        return set(self.nodes)

    def neighbors(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {u: set() for u in self.nodes}
        for e in self.edges:
            u, v = sorted(e)
            adj[u].add(v)
            adj[v].add(u)
        return adj


def victim_social_subgraph(net: TraffickingNetwork, op: Operation,
                           include_bottom: bool = False) -> SimpleGraph:
    """Undirected graph over one operation's victims (optionally the bottom).

    Contains every arc of the network whose endpoints are both included,
    deduplicated regardless of kind. Which node set matches published
    per-operation statistics is not settled, hence the flag.
    """
    if op.index >= len(net.operations) or net.operations[op.index] is not op:
        raise UnknownOperationError(f"operation {op.index} is not part of this network")
    nodes = sorted(op.victims())
    if include_bottom and op.bottom is not None:
        nodes = sorted(nodes + [op.bottom])
    node_set = set(nodes)
    g = SimpleGraph(nodes=nodes)
    for a in net.arcs:
        if a.u in node_set and a.v in node_set:
            g.edges.add(frozenset((a.u, a.v)))
    return g


def validate_network(net: TraffickingNetwork) -> list[str]:
    """Check every structural invariant; returns one message per violation.

    Violations are data, not faults: an empty list means the network is
    well formed.
    """
    bad: list[str] = []
    persons = net.persons

    for pid, p in persons.items():
        if pid != p.id:
            bad.append(f"person map key {pid} does not match person id {p.id}")

    # Arc sanity: endpoints exist, no self-loops, no duplicate triples.
    seen: set[tuple[int, int, ArcKind]] = set()
    for a in net.arcs:
        if a.u == a.v:
            bad.append(f"arc ({a.u},{a.v}) is a self-loop")
        for e in (a.u, a.v):
            if e not in persons:
                bad.append(f"arc ({a.u},{a.v},{a.kind.value}) references unknown node {e}")
        key = (a.u, a.v, a.kind)
        if key in seen:
            bad.append(f"duplicate arc ({a.u},{a.v},{a.kind.value})")
        seen.add(key)
    for u, v in net.trafficker_social:
        for e in (u, v):
            if e not in persons or persons[e].role is not Role.TRAFFICKER:
                bad.append(f"trafficker social arc ({u},{v}) touches non-trafficker {e}")

    referenced: set[int] = set()
    op_adj = net.operational_adjacency()

    for op in net.operations:
        label = f"operation {op.index}"
        if op.trafficker not in persons or persons[op.trafficker].role is not Role.TRAFFICKER:
            bad.append(f"{label}: trafficker {op.trafficker} missing or mis-labelled")
        referenced.add(op.trafficker)
        if op.bottom is not None:
            if op.bottom not in persons or persons[op.bottom].role is not Role.BOTTOM:
                bad.append(f"{label}: bottom {op.bottom} missing or mis-labelled")
            referenced.add(op.bottom)

        all_members: list[int] = []
        for k, pod in enumerate(op.pods):
            if not 1 <= len(pod) <= MAX_POD_SIZE:
                bad.append(f"{label} pod {k}: size {len(pod)} outside 1..{MAX_POD_SIZE}")
            ages = set()
            for m in pod.members:
                if m not in persons or persons[m].role is not Role.VICTIM:
                    bad.append(f"{label} pod {k}: member {m} missing or not a victim")
                else:
                    ages.add(persons[m].age)
            # Age uniformity applies to pods of multi-pod operations (pairs may
            # mix); single-pod operations draw ages per victim.
            if len(op.pods) > 1 and len(pod) != 2 and len(ages) > 1:
                bad.append(f"{label} pod {k}: mixed ages in a pod of size {len(pod)}")
            # Pods are cliques in the operational layer.
            for i, a_m in enumerate(pod.members):
                for b_m in pod.members[i + 1:]:
                    if b_m not in op_adj.get(a_m, set()):
                        bad.append(f"{label} pod {k}: members {a_m},{b_m} not operationally tied")
            all_members.extend(pod.members)

        if len(set(all_members)) != len(all_members):
            bad.append(f"{label}: pods overlap")
        referenced.update(all_members)

        idx = set(range(len(op.pods)))
        if op.trafficker_pods | op.bottom_pods != idx:
            bad.append(f"{label}: pods {sorted(idx - (op.trafficker_pods | op.bottom_pods))} "
                       "wired to neither trafficker nor bottom")
        if op.bottom is None:
            if op.bottom_pods:
                bad.append(f"{label}: bottom pods recorded without a bottom")
            if op.trafficker_pods != idx:
                bad.append(f"{label}: bottomless operation must wire all pods to the trafficker")

        # Every victim must reach its trafficker or bottom through operational arcs.
        controllers = {op.trafficker} | ({op.bottom} if op.bottom is not None else set())
        reach = _reachable(op_adj, controllers)
        for m in all_members:
            if m not in reach:
                bad.append(f"{label}: victim {m} has no operational path to a controller")

    extra = set(persons) - referenced
    for pid in sorted(extra):
        bad.append(f"node {pid} belongs to no operation")

    # Node-count identity: every person is exactly one trafficker, bottom or victim.
    t = sum(1 for p in persons.values() if p.role is Role.TRAFFICKER)
    b = sum(1 for p in persons.values() if p.role is Role.BOTTOM)
    v = sum(1 for p in persons.values() if p.role is Role.VICTIM)
    expected_t = len(net.operations)
    expected_b = sum(1 for op in net.operations if op.bottom is not None)
    expected_v = sum(len(op.victims()) for op in net.operations)
    if (t, b, v) != (expected_t, expected_b, expected_v) or t + b + v != len(persons):
        bad.append(f"node count identity broken: {len(persons)} nodes vs "
                   f"{t}+{b}+{v} by role, expected {expected_t}+{expected_b}+{expected_v}")

    return bad


def _reachable(adj: dict[int, set[int]], sources: set[int]) -> set[int]:
    seen = set(sources)
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        for w in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen
