"""Route construction inside each cluster, plus cost and feasibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from kmroute.fleet import Vehicle
from kmroute.merge import ClusterSet
from kmroute.roadgraph import (
    GraphError,
    RoadGraph,
    ShortestPathResult,
    VertexId,
    dijkstra,
    reconstruct_path,
)

DEPOT = 0


class RoutingError(Exception):
    pass


class DisconnectedCluster(RoutingError):
    def __init__(self, member: VertexId, origin: VertexId) -> None:
        super().__init__(f"disconnected cluster: member {member!r} unreachable from {origin!r}")
        self.member = member
        self.origin = origin


@dataclass
class Route:
    vehicle: Optional[Vehicle]
    stops: list[VertexId]
    leg_paths: list[list[VertexId]]
    leg_km: list[float]
    demand: int = 0
    cluster_id: Optional[int] = None

    @property
    def total_km(self) -> float:
        return math.fsum(self.leg_km)

    @property
    def clients(self) -> list[VertexId]:
        return self.stops[1:-1]

    @property
    def occupancy(self) -> float:
        if self.vehicle is None:
            return 0.0
        return self.demand / self.vehicle.capacity


@dataclass
class Solution:
    routes: list[Route]

    @property
    def total_cost_km(self) -> float:
        return math.fsum(r.total_km for r in self.routes)

    def kpi(self) -> dict:
        occ = [r.occupancy for r in self.routes]
        return {
            "mean_occupancy": sum(occ) / len(occ) if occ else 0.0,
            "min_occupancy": min(occ) if occ else 0.0,
            "vehicle_count": len(self.routes),
            "total_km": self.total_cost_km,
        }


class DistanceCache:
    """Memoised Dijkstra runs over a read-only graph."""

    def __init__(self, g: RoadGraph) -> None:
        self.g = g
        self._runs: dict[VertexId, ShortestPathResult] = {}

    def run(self, source: VertexId) -> ShortestPathResult:
        if source not in self._runs:
            self._runs[source] = dijkstra(self.g, source)
        return self._runs[source]


def route_cluster(
    members: Sequence[VertexId],
    g: RoadGraph,
    depot: VertexId = DEPOT,
    vehicle: Optional[Vehicle] = None,
    cache: Optional[DistanceCache] = None,
) -> Route:
    """Nearest-neighbour tour through ``members``, anchored at the depot.

    Starts from the member closest to the depot, keeps moving to the closest
    unvisited member (lowest id on ties) and finally returns to the depot.
    Distances are shortest-path distances in ``g``; each leg keeps the full
    vertex path it follows.
    """
    if not members:
        raise RoutingError("cannot route an empty cluster")
    for v in list(members) + [depot]:
        if v not in g:
            raise RoutingError(f"vertex {v!r} is not in the road graph")
    cache = cache or DistanceCache(g)
    unvisited = set(members)
    stops = [depot]
    leg_paths: list[list[VertexId]] = []
    leg_km: list[float] = []
    current = depot
    while unvisited:
        run = cache.run(current)
        nxt = min(unvisited, key=lambda m: (run.dist[m], m))
        if math.isinf(run.dist[nxt]):
            raise DisconnectedCluster(nxt, current)
        leg_paths.append(reconstruct_path(run, nxt))
        leg_km.append(run.dist[nxt])
        stops.append(nxt)
        unvisited.discard(nxt)
        current = nxt
    run = cache.run(current)
    if math.isinf(run.dist[depot]):
        raise DisconnectedCluster(depot, current)
    leg_paths.append(reconstruct_path(run, depot))
    leg_km.append(run.dist[depot])
    stops.append(depot)
    return Route(vehicle=vehicle, stops=stops, leg_paths=leg_paths, leg_km=leg_km)


def build_solution(clusters: ClusterSet, g: RoadGraph, depot: VertexId = DEPOT) -> Solution:
    cache = DistanceCache(g)
    routes = []
    for c in sorted(clusters.clusters, key=lambda c: c.cluster_id):
        r = route_cluster(list(c.members), g, depot=depot, vehicle=c.vehicle, cache=cache)
        r.demand = c.demand
        r.cluster_id = c.cluster_id
        routes.append(r)
    return Solution(routes)


def evaluate_solution(s: Solution, g: RoadGraph) -> float:
    """Recompute the total cost from the arcs each route actually traverses."""
    total = []
    for r in s.routes:
        for path in r.leg_paths:
            for v in path:
                if v not in g:
                    raise GraphError(f"route references unknown vertex {v!r}")
            total.extend(g.weight(u, v) for u, v in zip(path, path[1:]))
    return math.fsum(total)


@dataclass(frozen=True)
class Violation:
    kind: str  # "degree", "capacity", "depot", "unknown_client", "leg"
    detail: str
    route: Optional[int] = None
    client: Optional[int] = None


@dataclass
class FeasibilityReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_json(self) -> dict:
        return {
            "feasible": self.ok,
            "violations": [
                {"kind": v.kind, "detail": v.detail, "route": v.route, "client": v.client}
                for v in self.violations
            ],
        }


def check_feasibility(s: Solution, instance, depot: VertexId = DEPOT) -> FeasibilityReport:
    """Check a solution against an instance; never raises on bad routes.

    ``instance`` needs a ``clients`` attribute (an iterable of clients with
    ``id`` and ``demand``).
    """
    demand = {c.id: c.demand for c in instance.clients}
    report = FeasibilityReport()
    add = report.violations.append
    incoming = {cid: 0 for cid in demand}
    outgoing = {cid: 0 for cid in demand}

    for ri, r in enumerate(s.routes):
        if not r.stops or r.stops[0] != depot:
            add(Violation("depot", f"route {ri} does not start at the depot", route=ri))
        if not r.stops or r.stops[-1] != depot:
            add(Violation("depot", f"route {ri} does not end at the depot", route=ri))
        for u, v in zip(r.stops, r.stops[1:]):
            if u in outgoing:
                outgoing[u] += 1
            if v in incoming:
                incoming[v] += 1
        load = 0
        for v in r.stops:
            if v == depot:
                continue
            if v not in demand:
                add(Violation("unknown_client", f"route {ri} visits unknown vertex {v!r}", route=ri, client=v))
                continue
            load += demand[v]
        if r.vehicle is None:
            add(Violation("capacity", f"route {ri} has no vehicle", route=ri))
        elif load > r.vehicle.capacity:
            add(Violation(
                "capacity",
                f"route {ri} carries {load} on a vehicle of capacity {r.vehicle.capacity}",
                route=ri,
            ))
        if len(r.leg_paths) != max(0, len(r.stops) - 1):
            add(Violation("leg", f"route {ri} has {len(r.leg_paths)} legs for {len(r.stops)} stops", route=ri))
        else:
            for li, (path, u, v) in enumerate(zip(r.leg_paths, r.stops, r.stops[1:])):
                if not path or path[0] != u or path[-1] != v:
                    add(Violation("leg", f"route {ri} leg {li} does not join {u!r} to {v!r}", route=ri))

    for cid in sorted(demand):
        if incoming[cid] != 1 or outgoing[cid] != 1:
            add(Violation(
                "degree",
                f"client {cid} entered {incoming[cid]} and left {outgoing[cid]} times",
                client=cid,
            ))
    return report
