"""Seeded generator for synthetic single-trafficker operation networks.

Pipeline per operation: victim count -> bottom presence -> pod partition ->
ages -> controller wiring -> cross-pod social arcs. After all operations:
trafficker layer (Watts-Strogatz) and cross-operation victim social arcs.

Determinism contract: one ``random.Random(seed)`` stream consumed in the
fixed order above, so equal (config, seed) pairs produce identical
networks, including arc insertion order. Node ids are assigned in creation
order: per operation the trafficker first, then the bottom (if present),
then victims pod by pod.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from .model import Age, Arc, ArcKind, Operation, Person, Pod, Role, TraffickingNetwork

MAX_VICTIMS = 12
MAX_PART = 6

# Pair keys for social-arc probabilities, canonical order.
MM, MA, AA = "minor-minor", "minor-adult", "adult-adult"


class ConfigError(ValueError):
    """Invalid generator configuration."""


DEFAULT_VICTIM_COUNT_PMF = {2: 0.10, 3: 0.17, 4: 0.33, 5: 0.20, 6: 0.12, 7: 0.05, 8: 0.03}
DEFAULT_BOTTOM_PROB = {1: 0.0, 2: 0.10, 3: 0.50, 4: 0.85, 5: 0.95, 6: 1.0}
DEFAULT_POD_TO_TRAFFICKER = {"adult": 0.8, "minor": 0.5, "mixed": 0.6}
DEFAULT_POD_TO_BOTTOM = {"adult": 0.6, "minor": 0.8, "mixed": 0.7}
DEFAULT_INTRA_OP_SOCIAL = {MM: 0.5, MA: 0.25, AA: 0.15}
DEFAULT_CROSS_OP_SOCIAL = {MM: 0.08, MA: 0.03, AA: 0.02}


@dataclass
class GeneratorConfig:
    """All sampling parameters; every default can be overridden.

    The victim-count distribution and the bottom probabilities are
    calibrated so 25-operation ensembles statistically resemble reported
    compositions; they are configuration, not constants.
    """

    victim_count_pmf: dict[int, float] = field(
        default_factory=lambda: dict(DEFAULT_VICTIM_COUNT_PMF))
    bottom_prob: dict[int, float] = field(
        default_factory=lambda: dict(DEFAULT_BOTTOM_PROB))
    partition_weight: str = "uniform"
    minor_prob: float = 0.5
    mixed_pair_prob: float = 0.3
    pod_to_trafficker_prob: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_POD_TO_TRAFFICKER))
    pod_to_bottom_prob: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_POD_TO_BOTTOM))
    intra_op_social_prob: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_INTRA_OP_SOCIAL))
    cross_op_social_prob: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_CROSS_OP_SOCIAL))
    ws_neighbors: int = 2
    ws_rewire: float = 0.3
    seed: int = 0

    def validate(self) -> None:
        problems = []
        pmf = self.victim_count_pmf
        if not pmf:
            problems.append("victim_count_pmf is empty")
        if any(not 1 <= k <= MAX_VICTIMS for k in pmf):
            problems.append(f"victim_count_pmf support must lie in 1..{MAX_VICTIMS}")
        if any(not 0.0 <= p <= 1.0 for p in pmf.values()):
            problems.append("victim_count_pmf probabilities must be in [0,1]")
        elif abs(sum(pmf.values()) - 1.0) > 1e-9:
            problems.append(f"victim_count_pmf sums to {sum(pmf.values())}, not 1")

        for name, mapping in [("bottom_prob", self.bottom_prob),
                              ("pod_to_trafficker_prob", self.pod_to_trafficker_prob),
                              ("pod_to_bottom_prob", self.pod_to_bottom_prob),
                              ("intra_op_social_prob", self.intra_op_social_prob),
                              ("cross_op_social_prob", self.cross_op_social_prob)]:
            if any(not 0.0 <= p <= 1.0 for p in mapping.values()):
                problems.append(f"{name} probabilities must be in [0,1]")
        for name, p in [("minor_prob", self.minor_prob),
                        ("mixed_pair_prob", self.mixed_pair_prob),
                        ("ws_rewire", self.ws_rewire)]:
            if not 0.0 <= p <= 1.0:
                problems.append(f"{name} must be in [0,1]")

        counts = sorted(self.bottom_prob)
        for lo, hi in zip(counts, counts[1:]):
            if self.bottom_prob[lo] > self.bottom_prob[hi] + 1e-12:
                problems.append("bottom_prob must be non-decreasing in victim count")
                break
        # Bottoms are (by rule) certain at six or more victims; enforced over
        # every count the configured pmf can actually produce.
        for k in pmf:
            if pmf[k] > 0 and k >= 6 and self.effective_bottom_prob(k) != 1.0:
                problems.append(f"bottom_prob must be 1.0 for {k} victims")

        for pair in (MM, AA):
            for name, mapping in [("intra_op_social_prob", self.intra_op_social_prob),
                                  ("cross_op_social_prob", self.cross_op_social_prob)]:
                if pair not in mapping:
                    problems.append(f"{name} missing key {pair}")
        for name, mapping in [("intra_op_social_prob", self.intra_op_social_prob),
                              ("cross_op_social_prob", self.cross_op_social_prob)]:
            if mapping.get(MM, 1.0) < mapping.get(AA, 0.0):
                problems.append(f"{name}: minor-minor probability must be >= adult-adult")

        for name, mapping in [("pod_to_trafficker_prob", self.pod_to_trafficker_prob),
                              ("pod_to_bottom_prob", self.pod_to_bottom_prob)]:
            for key in ("adult", "minor", "mixed"):
                if key not in mapping:
                    problems.append(f"{name} missing key {key}")

        if self.ws_neighbors < 0 or self.ws_neighbors % 2 != 0:
            problems.append("ws_neighbors must be a non-negative even integer")
        if not (self.partition_weight == "uniform"
                or self.partition_weight.startswith("geometric:")):
            problems.append(f"unknown partition_weight rule {self.partition_weight!r}")
        elif self.partition_weight.startswith("geometric:"):
            try:
                q = float(self.partition_weight.split(":", 1)[1])
            except ValueError:
                q = -1.0
            if q <= 0:
                problems.append("geometric partition weight needs a positive ratio")

        if problems:
            raise ConfigError("; ".join(problems))

    def effective_bottom_prob(self, victims: int) -> float:
        if victims in self.bottom_prob:
            return self.bottom_prob[victims]
        below = [k for k in self.bottom_prob if k <= victims]
        if not below:
            return 0.0
        return self.bottom_prob[max(below)]

    def snapshot(self) -> dict:
        from .io import config_to_dict  # local import to avoid a cycle
        return config_to_dict(self)


def pair_key(a: Age, b: Age) -> str:
    names = sorted((a.value, b.value), key=lambda s: 0 if s == "minor" else 1)
    return f"{names[0]}-{names[1]}"


def pod_age_key(ages: set[Age]) -> str:
    if ages == {Age.MINOR}:
        return "minor"
    if ages == {Age.ADULT}:
        return "adult"
    return "mixed"


def sample_victim_count(cfg: GeneratorConfig, rng: random.Random) -> int:
    """Draw the number of victims for one operation from the configured pmf."""
    pmf = cfg.victim_count_pmf
    if not pmf or any(p < 0 for p in pmf.values()) or abs(sum(pmf.values()) - 1.0) > 1e-9:
        raise ConfigError("victim_count_pmf is not a probability distribution")
    u = rng.random()
    acc = 0.0
    keys = sorted(pmf)
    for k in keys:
        acc += pmf[k]
        if u < acc:
            return k
    return keys[-1]


def sample_bottom_presence(victims: int, cfg: GeneratorConfig, rng: random.Random) -> bool:
    """Whether the operation has a bottom; the bottom is an extra node, not
    one of the ``victims`` drawn above."""
    if victims < 1:
        raise ValueError("victims must be >= 1")
    return rng.random() < cfg.effective_bottom_prob(victims)


def enumerate_partitions(n: int, max_part: int = MAX_PART) -> list[list[int]]:
    """All partitions of n with parts <= max_part, descending parts,
    reverse-lexicographic order (largest-first)."""
    if not 1 <= n <= MAX_VICTIMS:
        raise ValueError(f"n must be in 1..{MAX_VICTIMS}, got {n}")
    out: list[list[int]] = []

    def rec(remaining: int, cap: int, prefix: list[int]):
        if remaining == 0:
            out.append(list(prefix))
            return
        for part in range(min(cap, remaining), 0, -1):
            prefix.append(part)
            rec(remaining - part, part, prefix)
            prefix.pop()

    rec(n, max_part, [])
    return out


def sample_pod_partition(n: int, cfg: GeneratorConfig, rng: random.Random) -> list[int]:
    """Pick one feasible partition under the configured weighting rule."""
    parts = enumerate_partitions(n)
    if cfg.partition_weight == "uniform":
        return parts[rng.randrange(len(parts))]
    q = float(cfg.partition_weight.split(":", 1)[1])
    weights = [q ** (len(p) - 1) for p in parts]
    total = sum(weights)
    u = rng.random() * total
    acc = 0.0
    for p, w in zip(parts, weights):
        acc += w
        if u < acc:
            return p
    return parts[-1]


def assign_ages(part_sizes: list[int], cfg: GeneratorConfig,
                rng: random.Random) -> list[list[Age]]:
    """Per-pod age lists. Multi-pod: one age per pod, except 2-pods which may
    mix. Single pod: ages drawn per victim, as if each were its own pod."""
    if not part_sizes:
        raise ValueError("no pods")
    ages: list[list[Age]] = []
    if len(part_sizes) == 1:
        ages.append([_draw_age(cfg, rng) for _ in range(part_sizes[0])])
        return ages
    for size in part_sizes:
        if size == 2 and rng.random() < cfg.mixed_pair_prob:
            minor_first = rng.random() < 0.5
            ages.append([Age.MINOR, Age.ADULT] if minor_first else [Age.ADULT, Age.MINOR])
        else:
            a = _draw_age(cfg, rng)
            ages.append([a] * size)
    return ages


def _draw_age(cfg: GeneratorConfig, rng: random.Random) -> Age:
    return Age.MINOR if rng.random() < cfg.minor_prob else Age.ADULT


def wire_pods(pod_ages: list[list[Age]], has_bottom: bool, cfg: GeneratorConfig,
              rng: random.Random) -> tuple[set[int], set[int], list[set[int]], list[set[int]]]:
    """Decide which pods (or victims, for single-pod operations) connect to
    the trafficker and to the bottom.

    Returns (trafficker_pods, bottom_pods, per-pod trafficker member index
    sets, per-pod bottom member index sets). Fallbacks: a controller drawn
    no pod gets the largest pod (ties to the lowest index); a pod drawn to
    neither controller goes to the trafficker, since every victim must stay
    connected to the operation.
    """
    k = len(pod_ages)
    sizes = [len(a) for a in pod_ages]
    t_members: list[set[int]] = [set() for _ in range(k)]
    b_members: list[set[int]] = [set() for _ in range(k)]

    if not has_bottom:
        for i in range(k):
            t_members[i] = set(range(sizes[i]))
        return set(range(k)), set(), t_members, b_members

    if k == 1:
        # Per-victim draws, trafficker side then bottom side.
        for j, age in enumerate(pod_ages[0]):
            if rng.random() < cfg.pod_to_trafficker_prob[age.value]:
                t_members[0].add(j)
        for j, age in enumerate(pod_ages[0]):
            if rng.random() < cfg.pod_to_bottom_prob[age.value]:
                b_members[0].add(j)
        if not t_members[0]:
            t_members[0].add(0)
        if not b_members[0]:
            b_members[0].add(0)
        for j in range(sizes[0]):
            if j not in t_members[0] and j not in b_members[0]:
                t_members[0].add(j)
        t_pods = {0} if t_members[0] else set()
        b_pods = {0} if b_members[0] else set()
        return t_pods, b_pods, t_members, b_members

    t_pods: set[int] = set()
    b_pods: set[int] = set()
    for i, ages in enumerate(pod_ages):
        if rng.random() < cfg.pod_to_trafficker_prob[pod_age_key(set(ages))]:
            t_pods.add(i)
    for i, ages in enumerate(pod_ages):
        if rng.random() < cfg.pod_to_bottom_prob[pod_age_key(set(ages))]:
            b_pods.add(i)
    largest = max(range(k), key=lambda i: (sizes[i], -i))
    if not t_pods:
        t_pods.add(largest)
    if not b_pods:
        b_pods.add(largest)
    for i in range(k):
        if i not in t_pods and i not in b_pods:
            t_pods.add(i)
    for i in t_pods:
        t_members[i] = set(range(sizes[i]))
    for i in b_pods:
        b_members[i] = set(range(sizes[i]))
    return t_pods, b_pods, t_members, b_members


def _social_pairs(pod_ages: list[list[Age]]):
    """Cross-pod victim pairs in deterministic order."""
    for i in range(len(pod_ages)):
        for j in range(i + 1, len(pod_ages)):
            for a in range(len(pod_ages[i])):
                for b in range(len(pod_ages[j])):
                    yield (i, a), (j, b)


def generate_operation(cfg: GeneratorConfig, rng: random.Random,
                       index: int = 0, next_id: int = 0
                       ) -> tuple[Operation, dict[int, Person], list[Arc], int]:
    """Build one operation; returns (operation, persons, arcs, next free id)."""
    n = sample_victim_count(cfg, rng)
    has_bottom = sample_bottom_presence(n, cfg, rng)
    part = sample_pod_partition(n, cfg, rng)
    pod_ages = assign_ages(part, cfg, rng)
    t_pods, b_pods, t_members, b_members = wire_pods(pod_ages, has_bottom, cfg, rng)

    persons: dict[int, Person] = {}
    arcs: list[Arc] = []

    t_id = next_id
    next_id += 1
    persons[t_id] = Person(t_id, Role.TRAFFICKER, Age.NA, index)
    b_id = None
    if has_bottom:
        b_id = next_id
        next_id += 1
        persons[b_id] = Person(b_id, Role.BOTTOM, Age.ADULT, index)

    pods: list[Pod] = []
    member_ids: list[list[int]] = []
    for ages in pod_ages:
        ids = []
        for a in ages:
            persons[next_id] = Person(next_id, Role.VICTIM, a, index)
            ids.append(next_id)
            next_id += 1
        member_ids.append(ids)
        pods.append(Pod(members=tuple(ids)))

    # Pod cliques.
    for ids in member_ids:
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                arcs.append(Arc(ids[i], ids[j], ArcKind.OPERATIONAL))
    # Controller wiring.
    for k, ids in enumerate(member_ids):
        for j in sorted(t_members[k]):
            arcs.append(Arc(t_id, ids[j], ArcKind.OPERATIONAL))
    if b_id is not None:
        for k, ids in enumerate(member_ids):
            for j in sorted(b_members[k]):
                arcs.append(Arc(b_id, ids[j], ArcKind.OPERATIONAL))
    # Cross-pod social ties within the operation.
    for (pi, a), (pj, b) in _social_pairs(pod_ages):
        p = cfg.intra_op_social_prob[pair_key(pod_ages[pi][a], pod_ages[pj][b])]
        if rng.random() < p:
            arcs.append(Arc(member_ids[pi][a], member_ids[pj][b], ArcKind.SOCIAL))

    op = Operation(index=index, trafficker=t_id, bottom=b_id, pods=pods,
                   trafficker_pods=frozenset(t_pods), bottom_pods=frozenset(b_pods))
    return op, persons, arcs, next_id


def generate_trafficker_social(num_traffickers: int, cfg: GeneratorConfig,
                               rng: random.Random) -> list[tuple[int, int]]:
    """Watts-Strogatz ring over trafficker indices 0..n-1.

    k is clamped down to the largest feasible even value; each lattice arc
    is rewired with probability ws_rewire, avoiding self-loops and
    duplicates, so the arc count is exactly n*k/2 for every rewire rate.
    """
    n = num_traffickers
    if n < 1:
        raise ValueError("need at least one trafficker")
    k = min(cfg.ws_neighbors, n - 1)
    if k % 2:
        k -= 1
    if k <= 0:
        return []
    order: list[tuple[int, int]] = []
    current: set[tuple[int, int]] = set()
    for offset in range(1, k // 2 + 1):
        for i in range(n):
            e = tuple(sorted((i, (i + offset) % n)))
            if e not in current:
                current.add(e)
                order.append(e)
    result: list[tuple[int, int]] = []
    for (u, v) in order:
        kept = (u, v)
        if rng.random() < cfg.ws_rewire:
            current.discard((u, v))
            candidates = [w for w in range(n)
                          if w != u and tuple(sorted((u, w))) not in current]
            if candidates:
                w = candidates[rng.randrange(len(candidates))]
                kept = tuple(sorted((u, w)))
            current.add(kept)
        result.append(kept)
    return result


def generate_network(num_operations: int, cfg: GeneratorConfig,
                     seed: int | None = None) -> TraffickingNetwork:
    """Generate a complete network of independent operations plus the
    trafficker layer and cross-operation victim ties."""
    if num_operations < 1:
        raise ValueError("num_operations must be >= 1")
    cfg.validate()
    actual_seed = cfg.seed if seed is None else seed
    rng = random.Random(actual_seed)

    operations: list[Operation] = []
    persons: dict[int, Person] = {}
    arcs: list[Arc] = []
    next_id = 0
    for idx in range(num_operations):
        op, ppl, new_arcs, next_id = generate_operation(cfg, rng, idx, next_id)
        operations.append(op)
        persons.update(ppl)
        arcs.extend(new_arcs)

    trafficker_ids = [op.trafficker for op in operations]
    social_idx = generate_trafficker_social(len(trafficker_ids), cfg, rng)
    trafficker_social = [(trafficker_ids[u], trafficker_ids[v]) for u, v in social_idx]
    for u, v in trafficker_social:
        arcs.append(Arc(u, v, ArcKind.SOCIAL))

    # Cross-operation victim ties, operation pairs then member order.
    for i in range(num_operations):
        for j in range(i + 1, num_operations):
            for a in operations[i].victims():
                for b in operations[j].victims():
                    p = cfg.cross_op_social_prob[pair_key(persons[a].age, persons[b].age)]
                    if rng.random() < p:
                        arcs.append(Arc(a, b, ArcKind.SOCIAL))

    return TraffickingNetwork(
        operations=operations,
        persons=persons,
        arcs=arcs,
        trafficker_social=trafficker_social,
        generation_seed=actual_seed,
        config_snapshot=cfg.snapshot(),
    )
