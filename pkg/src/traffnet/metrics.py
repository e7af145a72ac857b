"""Per-operation social-network statistics: density and centralization.

The centralization formulas are reconstructions chosen so that the
canonical structures reproduce published per-operation scores exactly
(path-on-3 -> degree 0.3333, betweenness 1.0; K5 minus one edge ->
0.1, 0.0278). They are documented here as reconstructions, not as any
particular tool's normalization:

  degree centralization      sum_i (d_max - d_i) / (n (n - 1))
  betweenness centralization sum_i (B_max - B_i) / (n - 1),
      B_i = raw betweenness / ((n - 1)(n - 2) / 2)

Shortest paths between disconnected pairs contribute no betweenness.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import SimpleGraph


class UndefinedMetricError(ValueError):
    """Metric not defined for graphs this small."""


@dataclass
class CentralityReport:
    n: int
    arc_density: float
    degree_centralization: float | None
    betweenness_centralization: float | None


def arc_density(g: SimpleGraph) -> float:
    if g.n < 2:
        raise UndefinedMetricError(f"arc density needs >= 2 nodes, got {g.n}")
    return g.m / (g.n * (g.n - 1) / 2)


def degree_centralization(g: SimpleGraph) -> float:
    if g.n < 3:
        raise UndefinedMetricError(f"degree centralization needs >= 3 nodes, got {g.n}")
    adj = g.neighbors()
    degrees = [len(adj[u]) for u in g.nodes]
    d_max = max(degrees)
    return sum(d_max - d for d in degrees) / (g.n * (g.n - 1))


def betweenness_centralization(g: SimpleGraph) -> float:
    if g.n < 3:
        raise UndefinedMetricError(f"betweenness centralization needs >= 3 nodes, got {g.n}")
    raw = betweenness(g)
    norm = (g.n - 1) * (g.n - 2) / 2
    scores = [raw[u] / norm for u in g.nodes]
    b_max = max(scores)
    return sum(b_max - b for b in scores) / (g.n - 1)


def betweenness(g: SimpleGraph) -> dict[int, float]:
    """Raw betweenness by shortest-path counting (Brandes accumulation)."""
    adj = g.neighbors()
    score = {u: 0.0 for u in g.nodes}
    for s in g.nodes:
        # BFS from s, counting shortest paths.
        dist = {s: 0}
        sigma = {u: 0.0 for u in g.nodes}
        sigma[s] = 1.0
        preds: dict[int, list[int]] = {u: [] for u in g.nodes}
        order = [s]
        queue = [s]
        while queue:
            u = queue.pop(0)
            for w in sorted(adj[u]):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
                    order.append(w)
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
                    preds[w].append(u)
        delta = {u: 0.0 for u in g.nodes}
        for w in reversed(order):
            for u in preds[w]:
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w])
            if w != s:
                score[w] += delta[w]
    # Each unordered pair was counted from both endpoints.
    return {u: v / 2.0 for u, v in score.items()}


def centrality_report(g: SimpleGraph) -> CentralityReport:
    """Bundle the three statistics; centralizations are None below 3 nodes."""
    density = arc_density(g)
    if g.n < 3:
        return CentralityReport(g.n, density, None, None)
    return CentralityReport(g.n, density, degree_centralization(g),
                            betweenness_centralization(g))
