"""Exact defender: optimal restructuring for a fixed interdiction plan.

The feasible set is defined by the per-trafficker budget, the
interdiction-triggered quota constraints, the backup/promotion gates and
the per-victim exclusivity rules; see ``is_feasible`` for the complete
numbered list. ``solve_defender`` runs a depth-first branch and bound over
activations in canonical arc order. The bound enables every remaining
candidate for free, which is valid because max flow is monotone in the
enabled arc set. Ties between optimal plans break to the
lexicographically smallest activation key, an (arc index, mode) sequence
with out < in.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .flow import FlowAssignment, max_flow, max_flow_value
from .instance import (Category, InterdictionInstance, NodeKind, RestructArc,
                       victim_symmetry_classes)

OUT, IN = 0, 1
_MODE_NAME = {OUT: "out", IN: "in"}

# Categories whose tail is the owning trafficker; these consume the
# trafficker's out-restructuring quota.
_TRAFFICKER_OUT = (Category.KNOWN, Category.TAKE, Category.RECRUIT)


class SolverTimeout(RuntimeError):
    """Wall-clock cap hit; carries the best bounds seen so far."""

    def __init__(self, message: str, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


@dataclass(frozen=True)
class RestructuringPlan:
    """Activation sets, stored as indices into instance.restruct_arcs."""

    activated_out: frozenset[int] = frozenset()
    activated_in: frozenset[int] = frozenset()

    def items(self) -> list[tuple[int, int]]:
        pairs = [(i, OUT) for i in self.activated_out]
        pairs += [(i, IN) for i in self.activated_in]
        return sorted(pairs)

    def activation_indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.activated_out | self.activated_in))

    def key(self) -> tuple[tuple[int, int], ...]:
        return tuple(self.items())

    def arcs_out(self, inst: InterdictionInstance) -> list[RestructArc]:
        return [inst.restruct_arcs[i] for i in sorted(self.activated_out)]

    def arcs_in(self, inst: InterdictionInstance) -> list[RestructArc]:
        return [inst.restruct_arcs[i] for i in sorted(self.activated_in)]

    def __len__(self):
        return len(self.activated_out) + len(self.activated_in)


EMPTY_PLAN = RestructuringPlan()


def plan_from_items(items) -> RestructuringPlan:
    out = frozenset(i for i, m in items if m == OUT)
    inn = frozenset(i for i, m in items if m == IN)
    return RestructuringPlan(out, inn)


@dataclass
class DefenderResult:
    plan: RestructuringPlan
    flow: FlowAssignment
    optimal: bool
    explored: dict

    @property
    def value(self) -> int:
        return self.flow.value


def _quota_out(inst: InterdictionInstance, y: frozenset) -> dict[int, int]:
    return {t: sum(1 for h in inst.direct_victims(t) if h in y)
            for t in inst.ids(NodeKind.TRAFFICKER)}


def _quota_in(inst: InterdictionInstance, y: frozenset, victim: int) -> int:
    return sum(1 for t in inst.direct_traffickers(victim) if t in y)


class _FeasState:
    """Incremental feasibility bookkeeping shared by the search and the
    feasible-component reduction."""

    def __init__(self, inst: InterdictionInstance, y: frozenset):
        self.inst = inst
        self.y = y
        self.budget_left = {t: inst.schedule.b_restructure
                            for t in inst.ids(NodeKind.TRAFFICKER)}
        self.out_quota = _quota_out(inst, y)
        self.out_used = {t: 0 for t in self.out_quota}
        self.in_quota = {a.head: _quota_in(inst, y, a.head)
                         for a in inst.restruct_arcs if a.in_allowed}
        self.in_used: dict[int, int] = {}
        self.target_used: dict[int, int] = {}
        self.promotes_in_op: dict[int, int] = {}
        self.active_gates: set[int] = set()
        self.backup_of = {j: t for (t, j) in inst.backups}
        self.promote_bottom = {v: b for (b, v, _g) in inst.promotables}

    def allows(self, idx: int, mode: int) -> bool:
        a = self.inst.restruct_arcs[idx]
        if mode == IN and not a.in_allowed:
            return False
        if a.cost > self.budget_left[a.owner] + 1e-9:
            return False
        cat = a.category
        if mode == OUT:
            if cat is Category.BACKUP and self.backup_of[a.head] not in self.y:
                return False  # (11)
            if cat is Category.PROMOTE:
                if self.promote_bottom[a.head] not in self.y:
                    return False  # (12)
                if a.head in self.y:
                    return False  # (13)
                op = self.inst.operation_of(a.head)
                if self.promotes_in_op.get(op, 0) >= 1:
                    return False  # (14)
            if cat in _TRAFFICKER_OUT:
                if self.out_used[a.tail] >= self.out_quota[a.tail]:
                    return False  # (9)
            if cat is Category.ASSIGN and a.gate not in self.active_gates:
                return False  # (15)
        else:
            if self.in_quota[a.head] <= self.in_used.get(a.head, 0):
                return False  # (10)
        if a.in_allowed and self.target_used.get(a.head, 0) >= 1:
            return False  # (16)/(17)
        return True

    def add(self, idx: int, mode: int) -> None:
        a = self.inst.restruct_arcs[idx]
        self.budget_left[a.owner] -= a.cost
        if mode == OUT:
            if a.category in _TRAFFICKER_OUT:
                self.out_used[a.tail] += 1
            if a.category is Category.PROMOTE:
                op = self.inst.operation_of(a.head)
                self.promotes_in_op[op] = self.promotes_in_op.get(op, 0) + 1
                self.active_gates.add(idx)
        else:
            self.in_used[a.head] = self.in_used.get(a.head, 0) + 1
        if a.in_allowed:
            self.target_used[a.head] = self.target_used.get(a.head, 0) + 1

    def remove(self, idx: int, mode: int) -> None:
        a = self.inst.restruct_arcs[idx]
        self.budget_left[a.owner] += a.cost
        if mode == OUT:
            if a.category in _TRAFFICKER_OUT:
                self.out_used[a.tail] -= 1
            if a.category is Category.PROMOTE:
                op = self.inst.operation_of(a.head)
                self.promotes_in_op[op] -= 1
                self.active_gates.discard(idx)
        else:
            self.in_used[a.head] -= 1
        if a.in_allowed:
            self.target_used[a.head] -= 1


def is_feasible(inst: InterdictionInstance, interdicted,
                plan: RestructuringPlan) -> tuple[bool, list[str]]:
    """Check the full constraint family; violations name the constraint."""
    y = frozenset(interdicted)
    arcs = inst.restruct_arcs
    for i in plan.activated_out | plan.activated_in:
        if not 0 <= i < len(arcs):
            raise ValueError(f"restruct arc index {i} out of range")
    for i in plan.activated_in:
        if not arcs[i].in_allowed:
            raise ValueError(f"arc {i} is not an in-restructure-able arc")
    bad: list[str] = []

    spent: dict[int, float] = {}
    for i, _m in plan.items():
        a = arcs[i]
        spent[a.owner] = spent.get(a.owner, 0.0) + a.cost
    for t, s in sorted(spent.items()):
        if s > inst.schedule.b_restructure + 1e-9:
            bad.append(f"(8) trafficker {t} spends {s} over budget "
                       f"{inst.schedule.b_restructure}")

    quota = _quota_out(inst, y)
    outs_by_tail: dict[int, int] = {}
    for i in plan.activated_out:
        a = arcs[i]
        if a.category in _TRAFFICKER_OUT:
            outs_by_tail[a.tail] = outs_by_tail.get(a.tail, 0) + 1
    for t, used in sorted(outs_by_tail.items()):
        if used > quota.get(t, 0):
            bad.append(f"(9) trafficker {t}: {used} out-restructurings exceed "
                       f"{quota.get(t, 0)} interdicted victims of theirs")

    ins_by_head: dict[int, int] = {}
    for i in plan.activated_in:
        a = arcs[i]
        ins_by_head[a.head] = ins_by_head.get(a.head, 0) + 1
    for j, used in sorted(ins_by_head.items()):
        have = _quota_in(inst, y, j)
        if used > have:
            bad.append(f"(10) victim {j}: {used} in-restructurings exceed "
                       f"{have} interdicted traffickers")

    backup_of = {j: t for (t, j) in inst.backups}
    promote_bottom = {v: b for (b, v, _g) in inst.promotables}
    promotes_by_op: dict[int, int] = {}
    for i in sorted(plan.activated_out):
        a = arcs[i]
        if a.category is Category.BACKUP and backup_of[a.head] not in y:
            bad.append(f"(11) backup {a.head} activated while trafficker "
                       f"{backup_of[a.head]} is not interdicted")
        if a.category is Category.PROMOTE:
            if promote_bottom[a.head] not in y:
                bad.append(f"(12) victim {a.head} promoted while bottom "
                           f"{promote_bottom[a.head]} is not interdicted")
            if a.head in y:
                bad.append(f"(13) interdicted victim {a.head} cannot be promoted")
            op = inst.operation_of(a.head)
            promotes_by_op[op] = promotes_by_op.get(op, 0) + 1
        if a.category is Category.ASSIGN and a.gate not in plan.activated_out:
            bad.append(f"(15) assignment ({a.tail},{a.head}) without activating "
                       f"the promotion of {a.tail}")
    for op, cnt in sorted(promotes_by_op.items()):
        if cnt > 1:
            bad.append(f"(14) operation {op}: {cnt} promotions, at most one allowed")

    targets: dict[int, int] = {}
    for i, _m in plan.items():
        a = arcs[i]
        if a.in_allowed:
            targets[a.head] = targets.get(a.head, 0) + 1
    for j, cnt in sorted(targets.items()):
        if cnt > 1:
            bad.append(f"(16) victim {j} recruited by {cnt} activations, "
                       "at most one allowed")

    both = plan.activated_out & plan.activated_in
    for i in sorted(both):
        bad.append(f"(17) arc {i} activated both out and in")

    return (not bad, bad)


def _served_victims(inst: InterdictionInstance, y: frozenset) -> set[int]:
    """Victims whose sink unit is guaranteed in every feasible plan: they
    have a surviving wired controller that cannot saturate even under the
    maximum load the constraint system allows. An activation into such a
    victim never changes the flow, so dropping those arcs is exact."""
    quota = _quota_out(inst, y)
    gives_by_op: dict[int, int] = {}
    for a in inst.restruct_arcs:
        if a.category is Category.GIVE and a.head not in y:
            op = inst.operation_of(a.head)
            gives_by_op[op] = gives_by_op.get(op, 0) + 1
    served: set[int] = set()
    for t in inst.ids(NodeKind.TRAFFICKER):
        wired_alive = [v for v in inst.direct_victims(t) if v not in y]
        if t not in y and inst.nodes[t].capacity >= len(wired_alive) + quota.get(t, 0):
            served.update(wired_alive)
    for b in inst.ids(NodeKind.BOTTOM):
        if b in y:
            continue
        wired_alive = [
            h for (tail, h, _c) in inst.arcs
            if tail == b and h in inst.nodes
            and inst.nodes[h].kind is NodeKind.VICTIM and h not in y]
        op = inst.nodes[b].operation
        load_cap = len(wired_alive) + 1 + gives_by_op.get(op, 0)
        if inst.nodes[b].capacity >= load_cap:
            served.update(wired_alive)
    return served


def _candidates(inst: InterdictionInstance, y: frozenset) -> list[tuple[int, tuple[int, ...]]]:
    """Statically feasible (arc, modes) pairs in canonical order. Arcs whose
    head is interdicted can never carry flow, and arcs into guaranteed-
    served victims never change it; neither belongs to a lexicographically
    smallest optimal plan, so both are dropped."""
    sched = inst.schedule
    quota = _quota_out(inst, y)
    backup_of = {j: t for (t, j) in inst.backups}
    promote_bottom = {v: b for (b, v, _g) in inst.promotables}
    served = _served_victims(inst, y)
    skip_if_served = (Category.KNOWN, Category.TAKE, Category.GIVE,
                      Category.ASSIGN)
    possible_gates: set[int] = set()
    out: list[tuple[int, tuple[int, ...]]] = []
    for idx, a in enumerate(inst.restruct_arcs):
        if a.cost > sched.b_restructure or a.head in y:
            continue
        if a.category in skip_if_served and a.head in served:
            continue
        modes = []
        ok = True
        if a.category is Category.BACKUP:
            ok = backup_of[a.head] in y
        elif a.category is Category.PROMOTE:
            ok = promote_bottom[a.head] in y
        elif a.category in _TRAFFICKER_OUT:
            ok = quota.get(a.tail, 0) > 0
        elif a.category is Category.ASSIGN:
            ok = a.gate in possible_gates
        if ok:
            modes.append(OUT)
            if a.category is Category.PROMOTE:
                possible_gates.add(idx)
        if a.in_allowed and _quota_in(inst, y, a.head) > 0:
            modes.append(IN)
        if modes:
            out.append((idx, tuple(modes)))
    return out


def _frac_knap(items: list[tuple[float, float]], budget: float) -> float:
    """Fractional knapsack value over (cost, value) items."""
    total = 0.0
    for cost, value in sorted(
            items, key=lambda it: -(it[1] / it[0]) if it[0] > 0 else -math.inf):
        if value <= 0:
            continue
        if cost <= 0:
            total += value
            continue
        if budget <= 0:
            break
        if cost <= budget:
            total += value
            budget -= cost
        else:
            total += value * (budget / cost)
            break
    return total


def _gain_cap(inst: InterdictionInstance, state: _FeasState,
              cands, d: int, head_value: dict[int, float]) -> float:
    """Cheap upper bound on the flow the remaining candidates can still add:
    per-activation gains are capped by head capacities, per-trafficker
    totals by the restructuring budget and the out-quota."""
    by_owner: dict[int, tuple[list, list]] = {}
    for idx, modes in cands[d:]:
        a = inst.restruct_arcs[idx]
        quota_item = a.category in _TRAFFICKER_OUT and modes == (OUT,)
        value = head_value[a.head]
        quota_list, free_list = by_owner.setdefault(a.owner, ([], []))
        (quota_list if quota_item else free_list).append((a.cost, value))
    total = 0.0
    for owner, (quota_items, free_items) in by_owner.items():
        budget = state.budget_left[owner]
        if budget <= 0:
            continue
        q_left = max(0, state.out_quota.get(owner, 0) - state.out_used.get(owner, 0))
        ub_all = _frac_knap(quota_items + free_items, budget)
        top_q = sum(sorted((v for _c, v in quota_items), reverse=True)[:q_left])
        ub_split = top_q + _frac_knap(free_items, budget)
        total += min(ub_all, ub_split)
    return total


def solve_defender(inst: InterdictionInstance, interdicted,
                   time_limit: float | None = None) -> DefenderResult:
    """Exact optimum over all feasible restructuring plans for a fixed
    interdiction set."""
    y = frozenset(interdicted)
    cands = _candidates(inst, y)
    suffix: list[tuple[int, ...]] = [()] * (len(cands) + 1)
    for d in range(len(cands) - 1, -1, -1):
        suffix[d] = (cands[d][0],) + suffix[d + 1]

    # Any single activation raises the flow by at most its head's capacity
    # potential (base capacity plus promotion gain where applicable).
    gains = {v: g for (_b, v, g) in inst.promotables}
    head_value = {a.head: inst.nodes[a.head].capacity + gains.get(a.head, 0)
                  for a, _m in ((inst.restruct_arcs[i], m) for i, m in cands)}

    deadline = time.monotonic() + time_limit if time_limit else None
    stats = {"nodes": 0, "flows": 0}
    state = _FeasState(inst, y)
    included: list[tuple[int, int]] = []

    # Interchangeable heads (recruitables with equal eligibility, victims
    # whose swap is an instance automorphism): a later head of a class may
    # only be targeted once every smaller live one is already used or still
    # reachable later, which is exactly the usage pattern of the
    # lexicographically smallest optimal plans.
    head_class: dict[int, tuple] = {}
    victim_classes = victim_symmetry_classes(inst)
    head_positions: dict[int, list[int]] = {}
    for pos, (idx, _modes) in enumerate(cands):
        a = inst.restruct_arcs[idx]
        if a.category is Category.RECRUIT:
            head_class[a.head] = ("recruit", inst.recruitables[a.head])
        elif a.head in victim_classes and a.head not in y:
            head_class[a.head] = ("victim", victim_classes[a.head])
        head_positions.setdefault(a.head, []).append(pos)
    class_heads: dict[tuple, list[int]] = {}
    for h, cls in head_class.items():
        class_heads.setdefault(cls, []).append(h)
    used_heads: dict[int, int] = {}

    def _head_ok(head: int, d: int) -> bool:
        cls = head_class.get(head)
        if cls is None:
            return True
        for h in class_heads[cls]:
            if h >= head or used_heads.get(h, 0):
                continue
            positions = head_positions.get(h)
            if positions and positions[-1] <= d:
                return False
        return True

    best_val = max_flow_value(inst, y, ())
    best_key: tuple = ()
    best_items: tuple = ()
    stats["flows"] += 1

    def rec(d: int, val_here: int, ub_hint: int | None):
        nonlocal best_val, best_key, best_items
        stats["nodes"] += 1
        if deadline is not None and time.monotonic() > deadline:
            raise SolverTimeout("defender search exceeded its time limit",
                                lower=best_val)
        if d == len(cands):
            return
        key = tuple(included)
        improvable = key < best_key
        cheap_ub = val_here + _gain_cap(inst, state, cands, d, head_value)
        if cheap_ub < best_val or (cheap_ub == best_val and not improvable):
            return
        if ub_hint is None:
            cur = tuple(i for i, _m in included)
            ub = max_flow_value(inst, y, cur + suffix[d])
            stats["flows"] += 1
        else:
            ub = ub_hint
        if ub < best_val or (ub == best_val and not improvable):
            return
        idx, modes = cands[d]
        arc = inst.restruct_arcs[idx]
        for mode in modes:
            if state.allows(idx, mode):
                if not _head_ok(arc.head, d):
                    continue
                state.add(idx, mode)
                included.append((idx, mode))
                used_heads[arc.head] = used_heads.get(arc.head, 0) + 1
                val = max_flow_value(inst, y, tuple(i for i, _m in included))
                stats["flows"] += 1
                k = tuple(included)
                if val > best_val or (val == best_val and k < best_key):
                    best_val, best_key, best_items = val, k, tuple(included)
                # the include-child's enabled superset equals this node's, so
                # the bound carries over unchanged
                rec(d + 1, val, ub)
                used_heads[arc.head] -= 1
                included.pop()
                state.remove(idx, mode)
        rec(d + 1, val_here, None)

    rec(0, best_val, None)
    plan = plan_from_items(best_items)
    assignment = max_flow(inst, y, plan.activation_indices())
    return DefenderResult(plan=plan, flow=assignment, optimal=True, explored=stats)


def feasible_components(inst: InterdictionInstance, interdicted,
                        plan: RestructuringPlan) -> RestructuringPlan:
    """Greedy maximal feasible subset of a plan under a different
    interdiction set: activations are scanned in canonical order (gates
    before gated arcs) and kept whenever they stay feasible."""
    y = frozenset(interdicted)
    state = _FeasState(inst, y)
    kept: list[tuple[int, int]] = []
    for idx, mode in plan.items():
        if state.allows(idx, mode):
            state.add(idx, mode)
            kept.append((idx, mode))
    return plan_from_items(kept)
