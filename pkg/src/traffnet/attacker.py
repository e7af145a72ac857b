"""Exact interdiction solvers: plain min-max flow and the restructuring-
aware variant solved by column-and-constraint generation.

Master searches are depth-first branch and bound over node subsets in id
order. Two sound pruning bounds are used below a partial interdiction set:

* base bound: the current no-restructuring flow minus a fractional-
  knapsack cap on how much flow the remaining budget could still remove
  (removing a node kills at most the flow routed through it, and any
  completion pays at least each node's floor cost);
* pool bounds: the same reasoning applied to the network restructured by
  the components of a pooled defender plan that stay feasible in every
  completion of the subtree (quota-driven components only grow with more
  interdictions; promotions are counted only when their victim can no
  longer be interdicted in the subtree).

Trafficker interdiction costs are evaluated directly as
max(r_min, r - sum of triggered reductions); with binary decisions this
is the same adjustment the McCormick-linearised formulation produces, so
no product variables are needed. Ties between optimal interdiction sets
break to the lexicographically smallest id tuple.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .defender import (DefenderResult, RestructuringPlan, SolverTimeout,
                       feasible_components, plan_from_items, solve_defender,
                       EMPTY_PLAN)
from .flow import max_flow, max_flow_node_flows, max_flow_value
from .instance import (Category, InterdictionInstance, NodeKind,
                       victim_symmetry_classes)


class IterationCapError(RuntimeError):
    """Generation loop exceeded its iteration cap; carries best bounds."""

    def __init__(self, message, lower, upper):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


@dataclass
class InterdictionPlan:
    interdicted: frozenset[int]
    adjusted_costs: dict[int, float]
    spent: float

    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.interdicted))


@dataclass
class SolveReport:
    plan: InterdictionPlan
    defender_response: DefenderResult
    objective: int
    bounds_trace: list[tuple[float, float]]
    iterations: int
    wall_time: float


@dataclass
class SweepRow:
    budget: float
    mfnip_value: int
    restructured_value: int
    mfnip_r_value: int
    mfnip_counts: tuple[int, int, int]
    mfnip_r_counts: tuple[int, int, int]


def _reductions_by_trafficker(inst) -> dict[int, list[tuple[int, float]]]:
    by: dict[int, list[tuple[int, float]]] = {}
    for (t, k), d in inst.reductions.items():
        by.setdefault(t, []).append((k, d))
    return by


def adjusted_trafficker_cost(inst: InterdictionInstance, trafficker: int,
                             interdicted) -> float:
    """r-tilde: the trafficker cost less every triggered reduction, floored."""
    y = interdicted if isinstance(interdicted, frozenset) else frozenset(interdicted)
    r = inst.nodes[trafficker].cost
    red = sum(d for (t, k), d in inst.reductions.items()
              if t == trafficker and k in y)
    return max(inst.schedule.r_min, r - red)


def plan_spend(inst: InterdictionInstance, interdicted) -> float:
    y = frozenset(interdicted)
    total = 0.0
    for n in y:
        node = inst.nodes[n]
        if node.kind is NodeKind.TRAFFICKER:
            total += adjusted_trafficker_cost(inst, n, y)
        else:
            total += node.cost
    return total


def make_interdiction_plan(inst: InterdictionInstance, interdicted) -> InterdictionPlan:
    y = frozenset(interdicted)
    adjusted = {t: adjusted_trafficker_cost(inst, t, y)
                for t in inst.ids(NodeKind.TRAFFICKER)}
    return InterdictionPlan(interdicted=y, adjusted_costs=adjusted,
                            spent=plan_spend(inst, y))


def _floor_costs(inst: InterdictionInstance) -> dict[int, float]:
    """Per-node lower bound on what interdicting the node can ever cost."""
    by = _reductions_by_trafficker(inst)
    floors = {}
    for n in inst.nodes.values():
        if n.kind is NodeKind.TRAFFICKER:
            all_red = sum(d for _k, d in by.get(n.id, ()))
            floors[n.id] = max(inst.schedule.r_min, n.cost - all_red)
        else:
            floors[n.id] = n.cost
    return floors


def _kill_cap(pieces: list[tuple[float, float]], budget_left: float) -> float:
    """Fractional-knapsack cap on removable flow: greedy by slope over
    (cost, gain) pieces, which is exact for the separable concave
    relaxation and therefore an upper bound on any integral completion."""
    total = 0.0
    for cost, gain in sorted(
            pieces,
            key=lambda it: -(it[1] / it[0]) if it[0] > 0 else -math.inf):
        if gain <= 0:
            continue
        if cost <= 0:
            total += gain
            continue
        if budget_left <= 0:
            break
        if cost <= budget_left:
            total += gain
            budget_left -= cost
        else:
            total += gain * (budget_left / cost)
            break
    return total


@dataclass
class _OpStructure:
    trafficker: int
    bottom: int | None
    victims: tuple[int, ...]
    t_wired: frozenset[int]
    b_wired: frozenset[int]
    members: tuple[int, ...]


def _op_structures(inst: InterdictionInstance) -> list[_OpStructure]:
    by_op: dict[int, dict] = {}
    for n in inst.nodes.values():
        if n.operation is None or n.kind not in (NodeKind.TRAFFICKER,
                                                 NodeKind.BOTTOM, NodeKind.VICTIM):
            continue
        rec = by_op.setdefault(n.operation, {"t": None, "b": None, "v": []})
        if n.kind is NodeKind.TRAFFICKER:
            rec["t"] = n.id
        elif n.kind is NodeKind.BOTTOM:
            rec["b"] = n.id
        else:
            rec["v"].append(n.id)
    out = []
    for op in sorted(by_op):
        rec = by_op[op]
        victims = tuple(sorted(rec["v"]))
        t_wired = frozenset(inst.direct_victims(rec["t"]))
        b_wired = frozenset(
            h for (tail, h, _c) in inst.arcs
            if tail == rec["b"] and h in inst.nodes
            and inst.nodes[h].kind is NodeKind.VICTIM) if rec["b"] is not None \
            else frozenset()
        members = tuple(sorted(x for x in (rec["t"], rec["b"]) + victims
                               if x is not None))
        out.append(_OpStructure(rec["t"], rec["b"], victims, t_wired, b_wired,
                                members))
    return out


def op_base_flow(struct: _OpStructure, removed: frozenset) -> int:
    """Un-restructured flow of one operation under an interdiction set:
    the bottom's own unit plus every surviving victim held by a surviving
    controller. Victim-victim arcs only reroute unit flow, they never add
    to it, so this count is the operation's exact max flow; the test suite
    checks it against the flow engine."""
    t_alive = struct.trafficker not in removed
    b_alive = struct.bottom is not None and struct.bottom not in removed
    total = 1 if b_alive else 0
    for v in struct.victims:
        if v in removed:
            continue
        if (t_alive and v in struct.t_wired) or (b_alive and v in struct.b_wired):
            total += 1
    return total


def _op_spend(inst: InterdictionInstance, struct: _OpStructure,
              removed: frozenset) -> float:
    total = 0.0
    for n in removed:
        node = inst.nodes[n]
        if node.kind is NodeKind.TRAFFICKER:
            red = sum(d for (t, k), d in inst.reductions.items()
                      if t == n and k in removed)
            total += max(inst.schedule.r_min, node.cost - red)
        else:
            total += node.cost
    return total


def _pareto(points: dict[float, int]) -> list[tuple[float, int]]:
    """(spend, gain) staircase: strictly increasing spend, strictly
    increasing gain, starting from (0, 0)."""
    out: list[tuple[float, int]] = []
    best = -1
    for spend in sorted(points):
        if points[spend] > best:
            best = points[spend]
            out.append((spend, best))
    if not out or out[0] != (0.0, 0):
        out.insert(0, (0.0, 0))
    return out


def _hull_segments(pareto: list[tuple[float, int]]) -> list[tuple[float, float]]:
    """Concave upper-hull pieces of a Pareto staircase, as (cost, gain)
    segments with decreasing slopes."""
    hull: list[tuple[float, float]] = [(0.0, 0.0)]
    for p in pareto:
        if p == (0.0, 0):
            continue
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x2) <= (p[1] - y2) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return [(x2 - x1, y2 - y1) for (x1, y1), (x2, y2) in zip(hull, hull[1:])
            if y2 > y1]


@dataclass
class _OpCurve:
    struct: _OpStructure
    members: tuple[int, ...]
    pareto: list[tuple[float, int]]
    segments: list[tuple[float, float]]


_CURVES_ATTR = "_op_kill_curves"


def _op_curves(inst: InterdictionInstance) -> list[_OpCurve]:
    """Per operation, the exact (spend, flow removed) frontier over all
    interdiction patterns of the operation's nodes, so the trafficker
    discount interplay is priced exactly within the operation. Kept both as
    Pareto points (for the integral knapsack bound) and as a concave
    envelope (for the fractional fallback)."""
    cached = getattr(inst, _CURVES_ATTR, None)
    if cached is not None:
        return cached
    curves = []
    for struct in _op_structures(inst):
        members = struct.members
        base = op_base_flow(struct, frozenset())
        points: dict[float, int] = {}
        for mask in range(1 << len(members)):
            removed = frozenset(members[i] for i in range(len(members))
                                if mask >> i & 1)
            spend = _op_spend(inst, struct, removed)
            gain = base - op_base_flow(struct, removed)
            if gain > points.get(spend, -1):
                points[spend] = gain
        pareto = _pareto(points)
        curves.append(_OpCurve(struct, members, pareto, _hull_segments(pareto)))
    object.__setattr__(inst, _CURVES_ATTR, curves)
    return curves


class _Master:
    """Depth-first exact minimisation of the pooled defender response."""

    def __init__(self, inst: InterdictionInstance, budget: float,
                 pool: list[RestructuringPlan], memo: dict,
                 deadline: float | None):
        self.inst = inst
        self.budget = budget
        self.pool = pool
        self.memo = memo  # (y, plan index or -1) -> flow value
        self.deadline = deadline
        self.floor = _floor_costs(inst)
        self.reducer_of: dict[int, tuple[int, float]] = {}
        for (t, k), d in inst.reductions.items():
            self.reducer_of[k] = (t, d)
        self.red_by_trafficker = _reductions_by_trafficker(inst)
        persons = [n.id for n in inst.nodes.values()
                   if n.kind in (NodeKind.TRAFFICKER, NodeKind.BOTTOM, NodeKind.VICTIM)]
        extras = set()
        for plan in pool:
            for i, _m in plan.items():
                head = inst.restruct_arcs[i].head
                if inst.nodes[head].kind in (NodeKind.RECRUITABLE, NodeKind.BACKUP):
                    extras.add(head)
        allowed = set(inst.interdictable())
        if pool:
            # Deciding the latent nodes first lets the pool bounds certify
            # spare recruit arcs (their heads can no longer be interdicted)
            # high up the tree.
            self.node_list = (sorted(extras & allowed)
                              + sorted(set(persons) & allowed))
        else:
            self.node_list = sorted(set(persons) & allowed)
        self.pos_of = {n: i for i, n in enumerate(self.node_list)}
        self.node_class = victim_symmetry_classes(inst) if not pool else {}
        self.curves = _op_curves(inst)
        self.rest_set_cache: dict[int, frozenset] = {
            d: frozenset(self.node_list[d:]) for d in range(len(self.node_list) + 1)}
        # Operation layout along the search order: persons of one operation
        # occupy a contiguous id range, so at any depth at most one operation
        # is partially decided.
        pos_of = {n: i for i, n in enumerate(self.node_list)}
        self.op_span: list[tuple[int, int]] = []
        for curve in self.curves:
            positions = [pos_of[m] for m in curve.members if m in pos_of]
            if positions:
                self.op_span.append((min(positions), max(positions)))
            else:
                self.op_span.append((-1, -1))
        integral = all(
            abs(c - round(c)) < 1e-9
            for curve in self.curves for (c, _g) in curve.pareto)
        self.integral_costs = integral and abs(budget - round(budget)) < 1e-9
        self.cond_cache: dict = {}
        self.dp_cache: dict = {}
        self.wired_of = {t: frozenset(inst.direct_victims(t))
                         for t in inst.ids(NodeKind.TRAFFICKER)}
        # Restoration credits need distinct recruitable heads within a plan.
        self.credit_ok = []
        for plan in pool:
            heads = [inst.restruct_arcs[i].head for i, _m in plan.items()
                     if inst.restruct_arcs[i].category is Category.RECRUIT]
            self.credit_ok.append(len(heads) == len(set(heads)))
        self.stats = {"nodes": 0, "flows": 0}

    # -- flow evaluations ------------------------------------------------------

    def _live_components(self, y: frozenset, plan: RestructuringPlan) -> RestructuringPlan:
        """Master-side component reduction: like feasible_components, but
        activations into interdicted nodes are dropped up front so they
        cannot waste trigger quota. The result is still defender-feasible
        and never carries less flow, so the master bound stays valid."""
        filtered = plan_from_items(
            [(i, m) for (i, m) in plan.items()
             if self.inst.restruct_arcs[i].head not in y])
        return feasible_components(self.inst, y, filtered)

    def _term_value(self, y: frozenset, plan_idx: int) -> int:
        key = (y, plan_idx)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if plan_idx < 0:
            activated: tuple = ()
        else:
            comp = self._live_components(y, self.pool[plan_idx])
            activated = comp.activation_indices()
        value = max_flow_value(self.inst, y, activated)
        self.stats["flows"] += 1
        self.memo[key] = value
        return value

    def _phi(self, y: frozenset, stop_at: float | None = None) -> int | None:
        """Pooled response value; with ``stop_at`` set, returns None as soon
        as some term proves the value cannot beat that incumbent."""
        best = self._term_value(y, -1)
        if stop_at is not None and best >= stop_at:
            return None
        for k in range(len(self.pool)):
            v = self._term_value(y, k)
            if v > best:
                best = v
            if stop_at is not None and best >= stop_at:
                return None
        return best

    # -- subtree lower bounds ---------------------------------------------------

    def _item_costs(self, y: frozenset, nodes: list[int]) -> tuple[list, list]:
        """Two sound per-node marginal costs for knapsack items.

        A: the all-reductions floor (modular, always valid). B: amortised
        costs where a trafficker pays its currently adjusted price and each
        reducer pre-pays its own discount; summing B over any added set
        never exceeds its true spend, so B is valid too.
        """
        cost_a, cost_b = [], []
        for n in nodes:
            node = self.inst.nodes[n]
            cost_a.append(self.floor[n])
            if node.kind is NodeKind.TRAFFICKER:
                red_now = sum(d for k, d in self.red_by_trafficker.get(n, ())
                              if k in y)
                cost_b.append(node.cost - red_now)
            elif n in self.reducer_of:
                cost_b.append(node.cost - self.reducer_of[n][1])
            else:
                cost_b.append(node.cost)
        return cost_a, cost_b

    def _safe_components(self, y: frozenset, undecided: set[int],
                         plan: RestructuringPlan) -> tuple[int, ...]:
        """Components of a pooled plan feasible under every completion of the
        subtree: evaluated at the current quotas, excluding promotions whose
        victim might still be interdicted deeper in the tree."""
        comp = self._live_components(y, plan)
        items = []
        dropped_gates = set()
        for idx, mode in comp.items():
            arc = self.inst.restruct_arcs[idx]
            if arc.category is Category.PROMOTE and arc.head in undecided:
                dropped_gates.add(idx)
                continue
            if arc.category is Category.ASSIGN and arc.gate in dropped_gates:
                continue
            items.append((idx, mode))
        return tuple(i for i, _m in items)

    def _spare_recruit_credits(self, y: frozenset, undecided: set[int],
                               plan: RestructuringPlan,
                               safe: tuple[int, ...]) -> dict[int, int]:
        """Per-trafficker count of the plan's inactive recruit arcs that every
        completion could still activate: the trafficker is decided alive, the
        recruitable head is decided alive and carries no flow yet. Each
        interdicted direct victim of such a trafficker then restores one unit
        through a spare recruit, so that victim's kill nets zero; zeroing that
        many victim items keeps the kill cap an upper bound."""
        inst = self.inst
        safe_set = set(safe)
        safe_heads = {inst.restruct_arcs[i].head for i in safe}
        credits: dict[int, int] = {}
        seen_heads: set[int] = set()
        for idx, _mode in plan.items():
            arc = inst.restruct_arcs[idx]
            if (arc.category is Category.RECRUIT and idx not in safe_set
                    and arc.head not in safe_heads
                    and arc.head not in seen_heads
                    and arc.head not in y and arc.head not in undecided
                    and arc.tail not in y and arc.tail not in undecided):
                seen_heads.add(arc.head)
                credits[arc.tail] = credits.get(arc.tail, 0) + 1
        return credits

    def _conditional_points(self, op_idx: int, y: frozenset,
                            d: int) -> list[tuple[float, int]] | None:
        """Exact marginal (spend, gain) frontier of the partially decided
        operation: enumerate additions over its still-undecided members,
        relative to the already-included ones. None when some marginal is
        negative (pathological schedules), which disables the integral path."""
        curve = self.curves[op_idx]
        members = curve.members
        decided_in = frozenset(m for m in members if m in y)
        undecided = tuple(m for m in members
                          if m in self.rest_set_cache[d])
        key = (op_idx, decided_in, undecided)
        hit = self.cond_cache.get(key)
        if hit is not None:
            return hit if hit != "fallback" else None
        base_spend = _op_spend(self.inst, curve.struct, decided_in)
        base_flow = op_base_flow(curve.struct, decided_in)
        points: dict[float, int] = {}
        ok = True
        for mask in range(1 << len(undecided)):
            added = frozenset(undecided[i] for i in range(len(undecided))
                              if mask >> i & 1)
            removed = decided_in | added
            marginal = _op_spend(self.inst, curve.struct, removed) - base_spend
            if marginal < -1e-9:
                ok = False
                break
            gain = base_flow - op_base_flow(curve.struct, removed)
            if gain > points.get(marginal, -1):
                points[marginal] = gain
        result = _pareto(points) if ok else None
        self.cond_cache[key] = result if ok else "fallback"
        return result

    def _base_kill_exact(self, y: frozenset, d: int, budget_left: float) -> float | None:
        """Exact maximum base-flow reduction achievable by any completion:
        a group knapsack over per-operation frontiers (conditional for the
        boundary operation). Requires integral costs; returns None when the
        integral path does not apply, math.inf when no completion fits the
        budget."""
        if not self.integral_costs:
            return None
        if budget_left < -1e-9:
            return math.inf
        group_lists: list[list[tuple[float, int]]] = []
        for op_idx, (start, end) in enumerate(self.op_span):
            if start < 0 or end < d:
                continue  # operation fully decided (or not interdictable)
            if start >= d:
                group_lists.append(self.curves[op_idx].pareto)
            else:
                pts = self._conditional_points(op_idx, y, d)
                if pts is None:
                    return None
                group_lists.append(pts)
        cap = int(budget_left + 1e-9)
        key = (d, cap, frozenset(y & self.rest_boundary(d)))
        hit = self.dp_cache.get(key)
        if hit is not None:
            return hit
        g = [0] * (cap + 1)
        for pts in group_lists:
            updated = g[:]
            for cost, gain in pts:
                if gain <= 0:
                    continue
                c = int(round(cost))
                if c > cap:
                    continue
                for beta in range(cap, c - 1, -1):
                    cand = g[beta - c] + gain
                    if cand > updated[beta]:
                        updated[beta] = cand
            g = updated
        self.dp_cache[key] = g[cap]
        return g[cap]

    def rest_boundary(self, d: int) -> frozenset:
        """Members of the operation straddling depth d (empty when d sits on
        an operation boundary); the DP result depends on y only through them."""
        for op_idx, (start, end) in enumerate(self.op_span):
            if start < d <= end:
                return frozenset(self.curves[op_idx].members)
        return frozenset()

    def _bound(self, y: frozenset, d: int, budget_left: float,
               terms: list[tuple[int, dict]], threshold: float) -> float:
        """Sound lower bound on the pooled response over every completion of
        the subtree rooted after the first d decisions. The base term uses
        the exact per-operation interdiction frontiers (an integral group
        knapsack when costs allow, a fractional envelope otherwise); pooled
        terms use path-kill items. Early-exits once any term prunes."""
        nodes = self.node_list
        rest = nodes[d:]
        best = -math.inf
        all_a = all_b = None

        undecided = self.rest_set_cache[d]
        for t, (value, node_flow, plan_idx, safe) in enumerate(terms):
            if t == 0:
                kill = self._base_kill_exact(y, d, budget_left)
                if kill is None:
                    segments: list[tuple[float, float]] = []
                    covered: set[int] = set()
                    for op_idx, (start, _end) in enumerate(self.op_span):
                        if start >= d:
                            segments.extend(self.curves[op_idx].segments)
                            covered.update(self.curves[op_idx].members)
                    item_nodes = [n for n in rest if n not in covered]
                    ca, cb = self._item_costs(y, item_nodes)
                    pieces_a = segments + [(ca[i], node_flow.get(n, 0))
                                           for i, n in enumerate(item_nodes)]
                    pieces_b = segments + [(cb[i], node_flow.get(n, 0))
                                           for i, n in enumerate(item_nodes)]
                    kill = min(_kill_cap(pieces_a, budget_left),
                               _kill_cap(pieces_b, budget_left))
            else:
                # Pooled terms restore flow across operations, so the
                # per-operation frontiers do not apply; every remaining node
                # becomes a fractional item, less the kills a guaranteed
                # spare recruit of the plan provably undoes.
                if all_a is None:
                    all_a, all_b = self._item_costs(y, rest)
                phi = [node_flow.get(n, 0) for n in rest]
                if self.credit_ok[plan_idx]:
                    credits = self._spare_recruit_credits(
                        y, undecided, self.pool[plan_idx], safe)
                    for tr, c in credits.items():
                        wired = self.wired_of.get(tr, frozenset())
                        for i, n in enumerate(rest):
                            if c <= 0:
                                break
                            if phi[i] == 1 and n in wired:
                                phi[i] = 0
                                c -= 1
                pieces_a = [(all_a[i], phi[i]) for i in range(len(rest))]
                pieces_b = [(all_b[i], phi[i]) for i in range(len(rest))]
                kill = min(_kill_cap(pieces_a, budget_left),
                           _kill_cap(pieces_b, budget_left))
            term_bound = math.ceil(value - kill - 1e-9) if kill != math.inf \
                else math.inf
            if term_bound > best:
                best = term_bound
            if best >= threshold:
                return best
        return best

    # -- greedy warm start -------------------------------------------------------

    def _seed(self):
        """Greedy interdiction descent on the base term; every feasible prefix
        becomes an incumbent candidate."""
        y: set[int] = set()
        trail: list[frozenset] = []
        while True:
            _value, node_flow = max_flow_node_flows(self.inst, frozenset(y), ())
            self.stats["flows"] += 1
            spend_now = plan_spend(self.inst, y)
            best_score, best_node = 0.0, None
            for n in self.node_list:
                if n in y or node_flow.get(n, 0) <= 0:
                    continue
                marginal = plan_spend(self.inst, y | {n}) - spend_now
                if spend_now + marginal > self.budget + 1e-9:
                    continue
                score = node_flow[n] / max(marginal, 1e-9)
                if score > best_score:
                    best_score, best_node = score, n
            if best_node is None:
                break
            y.add(best_node)
            trail.append(frozenset(y))
        return trail

    # -- search -------------------------------------------------------------------

    def _terms_at(self, y: frozenset, undecided: set[int]) -> list[tuple]:
        value, node_flow = max_flow_node_flows(self.inst, y, ())
        terms = [(value, node_flow, -1, ())]
        self.stats["flows"] += 1
        for k, plan in enumerate(self.pool):
            safe = self._safe_components(y, undecided, plan)
            value, node_flow = max_flow_node_flows(self.inst, y, safe)
            terms.append((value, node_flow, k, safe))
            self.stats["flows"] += 1
        return terms

    def solve(self, seeds=()) -> tuple[frozenset, int]:
        nodes = self.node_list
        classes = self.node_class
        inst = self.inst

        best_val = self._phi(frozenset())
        best_key: tuple = ()
        best_y: frozenset = frozenset()

        candidates = list(self._seed()) + [frozenset(s) for s in seeds]
        for y_seed in candidates:
            y_seed = y_seed & self.rest_set_cache[0]
            if plan_spend(inst, y_seed) <= self.budget + 1e-9:
                val = self._phi(y_seed)
                k = tuple(sorted(self.pos_of[n] for n in y_seed))
                if val < best_val or (val == best_val and k < best_key):
                    best_val, best_key, best_y = val, k, y_seed

        included: list[int] = []
        floor_spent = 0.0
        blocked: dict[int, int] = {}

        def rec(d: int, terms):
            nonlocal best_val, best_key, best_y, floor_spent
            self.stats["nodes"] += 1
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise SolverTimeout("master search exceeded its time limit",
                                    lower=None, upper=best_val)
            if d == len(nodes):
                return
            y = frozenset(included)
            key = tuple(self.pos_of[n] for n in included)
            bound = self._bound(y, d, self.budget - plan_spend(inst, y),
                                terms, best_val)
            if bound > best_val or (bound == best_val and not key < best_key):
                return
            node = nodes[d]
            cls = classes.get(node)
            # include branch; skipped when an exchangeable lower-id victim is
            # already excluded (canonical representatives match the lex order)
            if (floor_spent + self.floor[node] <= self.budget + 1e-9
                    and not blocked.get(cls, 0)):
                included.append(node)
                floor_spent += self.floor[node]
                y2 = frozenset(included)
                if plan_spend(inst, y2) <= self.budget + 1e-9:
                    k2 = tuple(self.pos_of[n] for n in included)
                    cutoff = best_val + 1 if k2 < best_key else best_val
                    val = self._phi(y2, stop_at=cutoff)
                    if val is not None and (val < best_val
                                            or (val == best_val and k2 < best_key)):
                        best_val, best_key, best_y = val, k2, y2
                rec(d + 1, self._terms_at(y2, set(nodes[d + 1:])))
                included.pop()
                floor_spent -= self.floor[node]
            # exclude branch: carried terms stay sound (their guaranteed
            # component sets only grow as fewer nodes remain undecided)
            if cls is not None:
                blocked[cls] = blocked.get(cls, 0) + 1
            rec(d + 1, terms)
            if cls is not None:
                blocked[cls] -= 1

        rec(0, self._terms_at(frozenset(), set(nodes)))
        return best_y, best_val


def solve_mfnip(inst: InterdictionInstance, budget: float,
                time_limit: float | None = None) -> SolveReport:
    """Exact min-max flow with restructuring disabled."""
    if budget < 0:
        raise ValueError("budget must be non-negative")
    t0 = time.perf_counter()
    deadline = time.monotonic() + time_limit if time_limit else None
    master = _Master(inst, budget, [], {}, deadline)
    y, value = master.solve()
    assignment = max_flow(inst, y, ())
    response = DefenderResult(plan=EMPTY_PLAN, flow=assignment, optimal=True,
                              explored={"restructuring": "disabled"})
    return SolveReport(plan=make_interdiction_plan(inst, y),
                       defender_response=response,
                       objective=value,
                       bounds_trace=[(float(value), float(value))],
                       iterations=1,
                       wall_time=time.perf_counter() - t0)


def evaluate_plan(inst: InterdictionInstance, interdicted,
                  time_limit: float | None = None) -> DefenderResult:
    """Post-restructuring flow of a fixed interdiction plan."""
    return solve_defender(inst, interdicted, time_limit)


def solve_mfnip_r(inst: InterdictionInstance, budget: float,
                  time_limit: float | None = None,
                  max_iterations: int = 10_000) -> SolveReport:
    """Exact restructuring-aware interdiction via column-and-constraint
    generation: the master lower-bounds with pooled plans reduced to their
    feasible components, the exact defender upper-bounds and refills the
    pool, and equal bounds certify optimality."""
    if budget < 0:
        raise ValueError("budget must be non-negative")
    t0 = time.perf_counter()
    deadline = time.monotonic() + time_limit if time_limit else None
    pool: list[RestructuringPlan] = []
    pool_keys: set = set()
    memo: dict = {}
    trace: list[tuple[float, float]] = []
    best_ub: float = math.inf
    best_y: frozenset = frozenset()
    best_resp: DefenderResult | None = None

    seeds: list[frozenset] = []
    for _ in range(max_iterations):
        master = _Master(inst, budget, pool, memo, deadline)
        y_star, lower = master.solve(seeds=seeds)
        seeds = [y_star, best_y]
        remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
        resp = solve_defender(inst, y_star, remaining)
        value = resp.value
        if value < best_ub or (value == best_ub
                               and tuple(sorted(y_star)) < tuple(sorted(best_y))):
            best_ub, best_y, best_resp = value, y_star, resp
        trace.append((float(lower), float(best_ub)))
        if lower >= best_ub:
            break
        key = resp.plan.key()
        if key in pool_keys:
            # The pooled bound already dominates this plan, so the master
            # value cannot be below it; loop again only to tighten bounds.
            trace[-1] = (float(best_ub), float(best_ub))
            break
        pool.append(resp.plan)
        pool_keys.add(key)
    else:
        raise IterationCapError("generation loop exceeded its iteration cap",
                                lower=trace[-1][0] if trace else None,
                                upper=best_ub)

    assert best_resp is not None
    return SolveReport(plan=make_interdiction_plan(inst, best_y),
                       defender_response=best_resp,
                       objective=int(best_ub),
                       bounds_trace=trace,
                       iterations=len(trace),
                       wall_time=time.perf_counter() - t0)


def interdiction_counts(inst: InterdictionInstance, interdicted) -> tuple[int, int, int]:
    """(traffickers, bottoms, victims) interdicted; latent replacements count
    with their person kind (backups as traffickers, recruitables as victims)."""
    t = b = v = 0
    for n in interdicted:
        kind = inst.nodes[n].kind
        if kind in (NodeKind.TRAFFICKER, NodeKind.BACKUP):
            t += 1
        elif kind is NodeKind.BOTTOM:
            b += 1
        else:
            v += 1
    return t, b, v


def budget_sweep(inst: InterdictionInstance, budgets,
                 time_limit: float | None = None) -> list[SweepRow]:
    """Per budget: plain interdiction value, the flow after the defender
    optimally restructures against that plan, and the restructuring-aware
    value, with interdiction counts by role for both models."""
    if not budgets:
        raise ValueError("budgets must be non-empty")
    rows = []
    for b in budgets:
        mfnip = solve_mfnip(inst, b, time_limit)
        restructured = evaluate_plan(inst, mfnip.plan.interdicted, time_limit)
        mfnip_r = solve_mfnip_r(inst, b, time_limit)
        rows.append(SweepRow(
            budget=b,
            mfnip_value=mfnip.objective,
            restructured_value=restructured.value,
            mfnip_r_value=mfnip_r.objective,
            mfnip_counts=interdiction_counts(inst, mfnip.plan.interdicted),
            mfnip_r_counts=interdiction_counts(inst, mfnip_r.plan.interdicted),
        ))
    return rows
