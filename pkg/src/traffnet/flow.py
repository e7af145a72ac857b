"""Exact max flow / min cut on the split instance graph.

Every node becomes an (in, out) vertex pair joined by an arc carrying the
node capacity; interdiction zeroes that arc, promotion raises it by the
promoted victim's gain. Restructure-able arcs are always present in the
compiled graph with capacity zero and are switched to the instance's
big-M when activated. Capacities are integers, so Dinic's algorithm
returns an integral optimum.

Feasibility of the (interdiction, restructuring) pair is NOT checked
here; callers enforce it. Capacity semantics for an interdicted but
promoted victim follow the capacity constraints literally: the base
capacity is zeroed, the promotion gain still applies.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .instance import Category, InterdictionInstance

_COMPILED_ATTR = "_compiled_flow_graph"


@dataclass
class FlowAssignment:
    value: int
    arc_flow: dict[tuple[int, int], int]
    node_flow: dict[int, int]


@dataclass
class CutResult:
    value: int
    nodes: list[int]  # cut taken on node split arcs
    arcs: list[tuple[int, int]]  # cut taken on ordinary arcs


class _Compiled:
    """Static split graph; per-query capacities are stamped over a template."""

    __slots__ = ("n", "s", "t", "to", "adj", "cap0", "node_arc", "restruct_idx",
                 "base_idx", "promote_gain")

    def __init__(self, inst: InterdictionInstance):
        split = inst.split_arcs
        self.s, self.t = 0, 1
        self.n = 2 + 2 * len(inst.nodes)
        self.to: list[int] = []
        self.cap0: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(self.n)]

        def add(u: int, v: int, c: int) -> int:
            e = len(self.to)
            self.to.append(v)
            self.cap0.append(c)
            self.adj[u].append(e)
            self.to.append(u)
            self.cap0.append(0)
            self.adj[v].append(e + 1)
            return e

        def vin(x: int) -> int:
            if x == inst.source:
                return self.s
            if x == inst.sink:
                return self.t
            return split[x][0]

        def vout(x: int) -> int:
            if x == inst.source:
                return self.s
            if x == inst.sink:
                return self.t
            return split[x][1]

        self.node_arc = {nid: add(*split[nid], 0) for nid in sorted(inst.nodes)}
        self.base_idx = [add(vout(tail), vin(head), cap)
                         for (tail, head, cap) in inst.arcs]
        self.restruct_idx = [add(vout(a.tail), vin(a.head), 0)
                             for a in inst.restruct_arcs]
        self.promote_gain = {v: gain for (_b, v, gain) in inst.promotables}


def _compiled(inst: InterdictionInstance) -> _Compiled:
    g = getattr(inst, _COMPILED_ATTR, None)
    if g is None:
        g = _Compiled(inst)
        object.__setattr__(inst, _COMPILED_ATTR, g)
    return g


def _stamp(inst: InterdictionInstance, g: _Compiled, interdicted, activated) -> list[int]:
    cap = g.cap0.copy()
    for nid, node in inst.nodes.items():
        cap[g.node_arc[nid]] = 0 if nid in interdicted else node.capacity
    for ri in activated:
        arc = inst.restruct_arcs[ri]
        cap[g.restruct_idx[ri]] = inst.big_m
        if arc.category is Category.PROMOTE:
            cap[g.node_arc[arc.head]] += g.promote_gain.get(arc.head, 0)
    return cap


def _dinic(n: int, adj: list[list[int]], to: list[int], cap: list[int],
           s: int, t: int) -> int:
    flow = 0
    while True:
        level = [-1] * n
        level[s] = 0
        queue = [s]
        qi = 0
        while qi < len(queue):
            u = queue[qi]
            qi += 1
            lu = level[u] + 1
            for e in adj[u]:
                if cap[e] > 0:
                    v = to[e]
                    if level[v] < 0:
                        level[v] = lu
                        queue.append(v)
        if level[t] < 0:
            return flow
        it = [0] * n
        path: list[int] = []
        u = s
        while True:
            advanced = False
            row = adj[u]
            i = it[u]
            lu = level[u] + 1
            while i < len(row):
                e = row[i]
                if cap[e] > 0 and level[to[e]] == lu:
                    it[u] = i
                    path.append(e)
                    u = to[e]
                    advanced = True
                    break
                i += 1
            if advanced:
                if u != t:
                    continue
                aug = cap[path[0]]
                for e in path:
                    if cap[e] < aug:
                        aug = cap[e]
                flow += aug
                cut = -1
                for i, e in enumerate(path):
                    cap[e] -= aug
                    cap[e ^ 1] += aug
                    if cut < 0 and cap[e] == 0:
                        cut = i
                del path[cut:]
                u = to[path[-1]] if path else s
                continue
            it[u] = i
            if u == s:
                break
            level[u] = -1
            e = path.pop()
            u = to[e ^ 1]
            it[u] += 1


def _normalize(interdicted, activated) -> tuple[frozenset, tuple]:
    if interdicted is None:
        interdicted = ()
    if activated is None:
        activated = ()
    if hasattr(interdicted, "interdicted"):
        interdicted = interdicted.interdicted
    if hasattr(activated, "activation_indices"):
        activated = activated.activation_indices()
    return frozenset(interdicted), tuple(activated)


def max_flow_value(inst: InterdictionInstance, interdicted=None, activated=None) -> int:
    """Value-only fast path used in solver inner loops."""
    interdicted, activated = _normalize(interdicted, activated)
    g = _compiled(inst)
    cap = _stamp(inst, g, interdicted, activated)
    return _dinic(g.n, g.adj, g.to, cap, g.s, g.t)


def max_flow_node_flows(inst: InterdictionInstance, interdicted=None,
                        activated=None) -> tuple[int, dict[int, int]]:
    """Value plus per-node throughput, skipping the arc-flow bookkeeping;
    used by solver bounds."""
    interdicted, activated = _normalize(interdicted, activated)
    g = _compiled(inst)
    cap = _stamp(inst, g, interdicted, activated)
    stamped = cap.copy()
    value = _dinic(g.n, g.adj, g.to, cap, g.s, g.t)
    node_flow = {nid: stamped[e] - cap[e] for nid, e in g.node_arc.items()}
    return value, node_flow


def max_flow(inst: InterdictionInstance, interdicted=None, activated=None) -> FlowAssignment:
    """Maximum s-t flow under an interdiction set and activated restructure
    arcs; returns the full integral assignment."""
    interdicted, activated = _normalize(interdicted, activated)
    g = _compiled(inst)
    cap = _stamp(inst, g, interdicted, activated)
    stamped = cap.copy()
    value = _dinic(g.n, g.adj, g.to, cap, g.s, g.t)

    arc_flow: dict[tuple[int, int], int] = {}
    for (tail, head, _c), e in zip(inst.arcs, g.base_idx):
        arc_flow[(tail, head)] = stamped[e] - cap[e]
    for ri in activated:
        a = inst.restruct_arcs[ri]
        e = g.restruct_idx[ri]
        arc_flow[(a.tail, a.head)] = stamped[e] - cap[e]
    node_flow = {nid: stamped[e] - cap[e] for nid, e in g.node_arc.items()}
    return FlowAssignment(value=value, arc_flow=arc_flow, node_flow=node_flow)


def min_cut(inst: InterdictionInstance, interdicted=None, activated=None) -> CutResult:
    """A minimum s-t cut certifying the max-flow value (residual reachability)."""
    interdicted, activated = _normalize(interdicted, activated)
    g = _compiled(inst)
    cap = _stamp(inst, g, interdicted, activated)
    stamped = cap.copy()
    value = _dinic(g.n, g.adj, g.to, cap, g.s, g.t)

    reach = [False] * g.n
    reach[g.s] = True
    queue = deque([g.s])
    while queue:
        u = queue.popleft()
        for e in g.adj[u]:
            v = g.to[e]
            if cap[e] > 0 and not reach[v]:
                reach[v] = True
                queue.append(v)

    cut_nodes: list[int] = []
    cut_arcs: list[tuple[int, int]] = []
    for nid, e in g.node_arc.items():
        if stamped[e] > 0 and reach[g.to[e ^ 1]] and not reach[g.to[e]]:
            cut_nodes.append(nid)
    for (tail, head, _c), e in zip(inst.arcs, g.base_idx):
        if stamped[e] > 0 and reach[g.to[e ^ 1]] and not reach[g.to[e]]:
            cut_arcs.append((tail, head))
    for ri in activated:
        a = inst.restruct_arcs[ri]
        e = g.restruct_idx[ri]
        if stamped[e] > 0 and reach[g.to[e ^ 1]] and not reach[g.to[e]]:
            cut_arcs.append((a.tail, a.head))
    return CutResult(value=value, nodes=sorted(cut_nodes), arcs=sorted(cut_arcs))
