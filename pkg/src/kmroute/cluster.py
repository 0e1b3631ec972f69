"""K-Means over client locations and its recursive bisecting variant.

``recursive_kmeans`` splits the client set in two with k=2 K-Means until a
group's demand fits a vehicle still in the pool, building a binary phase
tree whose leaves are the vehicle clusters.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from kmroute.fleet import FleetPlan, FleetSpec, Vehicle
from kmroute.geo import HaversineMetric, Metric, Point, point_to_json


class ClusteringError(Exception):
    pass


class UnassignableClient(ClusteringError):
    def __init__(self, client_id: int, demand: int) -> None:
        super().__init__(
            f"unassignable client {client_id}: demand {demand} exceeds every remaining vehicle capacity"
        )
        self.client_id = client_id
        self.demand = demand


class FleetExhausted(ClusteringError):
    """The remaining vehicles cannot hold the demand not yet assigned."""

    def __init__(self, remaining_demand: int, remaining_capacity: int) -> None:
        super().__init__(
            f"fleet exhausted: {remaining_demand} demand left, {remaining_capacity} capacity left"
        )
        self.remaining_demand = remaining_demand
        self.remaining_capacity = remaining_capacity


@dataclass(frozen=True)
class Client:
    id: int
    location: Point
    demand: int = 1

    def __post_init__(self) -> None:
        if int(self.id) != self.id or self.id < 1:
            raise ValueError(f"client id must be an integer >= 1 (0 is the depot), got {self.id}")
        if int(self.demand) != self.demand or self.demand < 1:
            raise ValueError(f"client {self.id}: demand must be a positive integer, got {self.demand}")


@dataclass
class KMeansResult:
    assignments: dict[int, int]
    centroids: list[Point]
    objective_j: float
    iterations: int
    history: list[float] = field(default_factory=list)
    distance_evaluations: int = 0
    assignment_passes: int = 0
    reseeds: int = 0

    def members(self, j: int) -> list[int]:
        return [pid for pid, c in self.assignments.items() if c == j]


def _objective(points, labels, centroids, metric) -> float:
    return math.fsum(metric.distance(p, centroids[c]) ** 2 for (_, p), c in zip(points, labels))


def kmeans(
    points: Sequence[tuple[int, Point]],
    k: int,
    rng_seed: int = 0,
    max_iter: int = 100,
    metric: Optional[Metric] = None,
) -> KMeansResult:
    """Lloyd's algorithm with seeded random initial centroids.

    Iterates assign/update until no assignment changes, ``max_iter`` passes,
    or a pass would raise the objective. The last case only arises because
    coordinate means are not exact minimisers of squared great-circle
    distance; the previous (better) state is kept. ``history`` holds the
    objective after each accepted pass and never increases.
    """
    metric = metric or HaversineMetric()
    n = len(points)
    if n == 0:
        raise ValueError("kmeans needs at least one point")
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points {n}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    rng = random.Random(rng_seed)
    centroids: list[Point] = [points[i][1] for i in sorted(rng.sample(range(n), k))]
    evaluations = 0
    passes = 0
    reseeds = 0

    def assign(cents: list[Point]) -> list[int]:
        nonlocal evaluations, passes
        labels = []
        for _, p in points:
            best_j, best_d = 0, math.inf
            for j, c in enumerate(cents):
                d = metric.distance(p, c)
                if d < best_d:
                    best_j, best_d = j, d
            labels.append(best_j)
        evaluations += n * len(cents)
        passes += 1
        return labels

    def repair_empty(labels: list[int], cents: list[Point]) -> list[int]:
        # re-seed an empty cluster at the point farthest from the other centroids
        nonlocal reseeds
        for j in range(k):
            if j in labels:
                continue
            reseeds += 1
            others = [c for i, c in enumerate(cents) if i != j]
            far = max(range(n), key=lambda i: (min(metric.distance(points[i][1], c) for c in others), -i))
            cents[j] = points[far][1]
            labels = assign(cents)
        return labels

    def update(labels: list[int], cents: list[Point]) -> list[Point]:
        new = list(cents)
        for j in range(k):
            group = [p for (_, p), c in zip(points, labels) if c == j]
            if group:
                new[j] = metric.centroid(group)
        return new

    labels = repair_empty(assign(centroids), centroids)
    centroids = update(labels, centroids)
    history = [_objective(points, labels, centroids, metric)]
    iterations = 1
    while iterations < max_iter:
        new_labels = assign(centroids)
        if new_labels == labels:
            break
        new_labels = repair_empty(new_labels, list(centroids))
        new_centroids = update(new_labels, centroids)
        j_new = _objective(points, new_labels, new_centroids, metric)
        iterations += 1
        if j_new > history[-1]:
            break
        labels, centroids = new_labels, new_centroids
        history.append(j_new)

    return KMeansResult(
        assignments={pid: c for (pid, _), c in zip(points, labels)},
        centroids=centroids,
        objective_j=history[-1],
        iterations=iterations,
        history=history,
        distance_evaluations=evaluations,
        assignment_passes=passes,
        reseeds=reseeds,
    )


@dataclass
class PhaseNode:
    members: list[int]
    centroid: Point
    demand: int
    left: Optional["PhaseNode"] = None
    right: Optional["PhaseNode"] = None
    vehicle: Optional[Vehicle] = None
    split: str = ""  # "kmeans" or "median" for internal nodes

    @property
    def is_leaf(self) -> bool:
        return self.left is None and self.right is None

    def leaves(self) -> list["PhaseNode"]:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def to_json(self) -> dict:
        return {
            "members": list(self.members),
            "centroid": point_to_json(self.centroid),
            "demand": self.demand,
            "vehicle": None if self.vehicle is None else {
                "type_id": self.vehicle.type_id,
                "index": self.vehicle.index,
                "capacity": self.vehicle.capacity,
            },
            "left": None if self.left is None else self.left.to_json(),
            "right": None if self.right is None else self.right.to_json(),
        }


def _median_split(members: list[Client]) -> tuple[list[Client], list[Client]]:
    def key(c: Client):
        loc = c.location
        return (getattr(loc, "lat", getattr(loc, "y", 0.0)), c.id)

    ordered = sorted(members, key=key)
    half = len(ordered) // 2
    return ordered[:half], ordered[half:]


def _bisect(members: list[Client], seed: str, max_iter: int, metric: Metric) -> tuple[list[Client], list[Client], str]:
    pts = [(c.id, c.location) for c in members]
    by_id = {c.id: c for c in members}
    # two attempts with fresh seeds, then fall back to a median-latitude cut
    for attempt in range(2):
        rng_seed = f"{seed}/{attempt}"
        res = kmeans(pts, 2, rng_seed=rng_seed, max_iter=max_iter, metric=metric)
        left = [by_id[i] for i in res.members(0)]
        right = [by_id[i] for i in res.members(1)]
        if left and right:
            return left, right, "kmeans"
    left, right = _median_split(members)
    return left, right, "median"


def recursive_kmeans(
    clients: Sequence[Client],
    plan: FleetPlan,
    spec: FleetSpec,
    rng_seed: int = 0,
    max_iter: int = 100,
    metric: Optional[Metric] = None,
) -> PhaseNode:
    """Build the phase tree for ``clients`` against the vehicles in ``plan``.

    A node whose demand fits the largest vehicle left becomes a leaf on the
    smallest vehicle that holds it; larger nodes are bisected. Children are
    processed depth first, left before right. Each node's K-Means seed is
    derived from ``rng_seed`` and the node's path in the tree.
    """
    metric = metric or HaversineMetric()
    if not clients:
        raise ValueError("no clients to cluster")
    ids = [c.id for c in clients]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate client ids")

    pool: list[Vehicle] = plan.vehicles(spec)
    state = {"unassigned": sum(c.demand for c in clients)}

    def take_vehicle(demand: int) -> Optional[Vehicle]:
        fits = [v for v in pool if v.capacity >= demand]
        if not fits:
            return None
        best = min(fits, key=lambda v: (v.capacity, pool.index(v)))
        pool.remove(best)
        return best

    def check_pool() -> None:
        capacity = sum(v.capacity for v in pool)
        if capacity < state["unassigned"]:
            raise FleetExhausted(state["unassigned"], capacity)

    def build(members: list[Client], path: str) -> PhaseNode:
        demand = sum(c.demand for c in members)
        node = PhaseNode(
            members=[c.id for c in members],
            centroid=metric.centroid([c.location for c in members]),
            demand=demand,
        )
        check_pool()
        largest = max((v.capacity for v in pool), default=0)
        if demand <= largest:
            node.vehicle = take_vehicle(demand)
            state["unassigned"] -= demand
            return node
        if len(members) == 1:
            raise UnassignableClient(members[0].id, demand)
        left, right, how = _bisect(members, f"{rng_seed}:{path}", max_iter, metric)
        node.split = how
        node.left = build(left, path + "L")
        node.right = build(right, path + "R")
        return node

    return build(list(clients), "")
