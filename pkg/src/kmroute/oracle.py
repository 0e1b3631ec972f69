"""Exact brute-force references for small instances.

Each heuristic stage has a counterpart here. Everything is exponential or
cubic, so sizes are capped by an :class:`OracleBudget` and exceeding it is
an error rather than a silent approximation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Optional, Sequence

from kmroute.fleet import FleetPlan, FleetSpec, InsufficientFleet
from kmroute.geo import HaversineMetric, Metric, Point
from kmroute.roadgraph import RoadGraph

INF = math.inf


class BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_vertices: int = 12
    max_tour_stops: int = 10
    max_partition_points: int = 12

    def __post_init__(self) -> None:
        if min(self.max_vertices, self.max_tour_stops, self.max_partition_points) < 1:
            raise ValueError("oracle budgets must be positive")


DEFAULT_BUDGET = OracleBudget()


def apsp_floyd_warshall(g: RoadGraph, budget: OracleBudget = DEFAULT_BUDGET) -> dict[Hashable, dict[Hashable, float]]:
    vs = g.vertices
    if len(vs) > budget.max_vertices:
        raise BudgetExceeded(f"{len(vs)} vertices > budget {budget.max_vertices}")
    d = {u: {v: (0.0 if u == v else INF) for v in vs} for u in vs}
    for u, v, w in g.edges():
        if w < 0:
            raise ValueError(f"negative edge ({u!r}, {v!r})")
        d[u][v] = min(d[u][v], w)
        if not g.directed:
            d[v][u] = min(d[v][u], w)
    for k in vs:
        dk = d[k]
        for i in vs:
            dik = d[i][k]
            if dik == INF:
                continue
            di = d[i]
            for j in vs:
                alt = dik + dk[j]
                if alt < di[j]:
                    di[j] = alt
    return d


def _tour_cost(order: Sequence, dist: Mapping, depot) -> float:
    seq = [depot, *order, depot]
    return sum(dist[u][v] for u, v in zip(seq, seq[1:]))


def tour_by_permutation(stops: Sequence, dist: Mapping, depot=0) -> tuple[list, float]:
    best_order: Optional[tuple] = None
    best = INF
    for perm in itertools.permutations(stops):
        c = _tour_cost(perm, dist, depot)
        if c < best:
            best, best_order = c, perm
    return list(best_order or ()), best


def tour_by_held_karp(stops: Sequence, dist: Mapping, depot=0) -> tuple[list, float]:
    stops = list(stops)
    n = len(stops)
    if n == 0:
        return [], 0.0
    # cost[(mask, j)]: cheapest path depot -> visits mask -> ends at stops[j]
    cost: dict[tuple[int, int], float] = {}
    parent: dict[tuple[int, int], int] = {}
    for j, s in enumerate(stops):
        cost[(1 << j, j)] = dist[depot][s]
    for size in range(2, n + 1):
        for subset in itertools.combinations(range(n), size):
            mask = 0
            for j in subset:
                mask |= 1 << j
            for j in subset:
                prev_mask = mask ^ (1 << j)
                best, arg = INF, -1
                for i in subset:
                    if i == j:
                        continue
                    c = cost[(prev_mask, i)] + dist[stops[i]][stops[j]]
                    if c < best:
                        best, arg = c, i
                cost[(mask, j)] = best
                parent[(mask, j)] = arg
    full = (1 << n) - 1
    best, last = INF, -1
    for j, s in enumerate(stops):
        c = cost[(full, j)] + dist[s][depot]
        if c < best:
            best, last = c, j
    if last < 0:
        return [], INF
    order = []
    mask, j = full, last
    while j >= 0:
        order.append(stops[j])
        pj = parent.get((mask, j), -1)
        mask ^= 1 << j
        j = pj
    order.reverse()
    return order, best


def exact_tour(stops: Sequence, dist: Mapping, depot=0, budget: OracleBudget = DEFAULT_BUDGET) -> tuple[list, float]:
    """Optimal depot-anchored tour over ``stops``; ``dist[u][v]`` is any distance table."""
    if len(stops) > budget.max_tour_stops:
        raise BudgetExceeded(f"{len(stops)} stops > budget {budget.max_tour_stops}")
    if len(stops) <= 8:
        return tour_by_permutation(stops, dist, depot)
    return tour_by_held_karp(stops, dist, depot)


def partition_objective(groups: Sequence[Sequence[Point]], metric: Metric) -> float:
    total = 0.0
    for group in groups:
        c = metric.centroid(group)
        total += math.fsum(metric.distance(p, c) ** 2 for p in group)
    return total


def best_bipartition(
    points: Sequence[tuple[int, Point]],
    metric: Optional[Metric] = None,
    budget: OracleBudget = DEFAULT_BUDGET,
) -> tuple[tuple[list[int], list[int]], float]:
    """Exhaustive minimum of the k=2 objective over all nontrivial splits."""
    metric = metric or HaversineMetric()
    n = len(points)
    if n > budget.max_partition_points:
        raise BudgetExceeded(f"{n} points > budget {budget.max_partition_points}")
    if n < 2:
        raise ValueError("need at least two points to bipartition")
    best, best_mask = INF, 0
    # point 0 always on side A; masks pick side B among the rest
    for mask in range(1, 1 << (n - 1)):
        a = [points[0][1]]
        b = []
        for i in range(1, n):
            (b if mask >> (i - 1) & 1 else a).append(points[i][1])
        j = partition_objective([a, b], metric)
        if j < best:
            best, best_mask = j, mask
    side_a = [points[0][0]] + [points[i][0] for i in range(1, n) if not best_mask >> (i - 1) & 1]
    side_b = [points[i][0] for i in range(1, n) if best_mask >> (i - 1) & 1]
    return (side_a, side_b), best


def exact_fleet(n: int, spec: FleetSpec) -> FleetPlan:
    """Enumerate count vectors; rank by slack, vehicle count, then lexicographically.

    Two dominance cuts keep this exhaustive but tractable: once the partial
    capacity reaches ``n`` the remaining types stay at zero, and the last
    type only takes its smallest covering count (more can only add slack).
    """
    types = spec.types
    caps = spec.capacities
    limits = [t.max_count for t in types]
    best = None

    def visit(i: int, total: int, counts: tuple) -> None:
        nonlocal best
        if total >= n or i == len(types):
            if total >= n:
                full = counts + (0,) * (len(types) - len(counts))
                key = (total - n, sum(full), full)
                if best is None or key < best:
                    best = key
            return
        hi = -(-(n - total) // caps[i])
        if limits[i] is not None:
            hi = min(hi, limits[i])
        if i == len(types) - 1:
            visit(i + 1, total + hi * caps[i], counts + (hi,))
            return
        for x in range(hi + 1):
            visit(i + 1, total + x * caps[i], counts + (x,))

    visit(0, 0, ())
    if best is None:
        available = sum((t.max_count or 0) * t.capacity for t in types)
        raise InsufficientFleet(n, available)
    slack, _, counts = best
    return FleetPlan(
        counts=tuple((t.type_id, x) for t, x in zip(types, counts)),
        total_capacity=n + slack,
        slack=slack,
    )
