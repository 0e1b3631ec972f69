"""Road graph and single-source shortest paths."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence

from kmroute.geo import GeoPoint, Metric, PlanarPoint, Point

VertexId = Hashable
INF = math.inf


class GraphError(Exception):
    pass


class NoPath(GraphError):
    def __init__(self, source: VertexId, target: VertexId) -> None:
        super().__init__(f"no path from {source!r} to {target!r}")
        self.source = source
        self.target = target


class RoadGraph:
    """Weighted graph of locations. Undirected unless ``directed=True``.

    Parallel edges collapse to the lightest one.
    """

    def __init__(self, directed: bool = False) -> None:
        self.directed = directed
        self.points: dict[VertexId, Optional[Point]] = {}
        self.adj: dict[VertexId, dict[VertexId, float]] = {}

    def add_vertex(self, v: VertexId, point: Optional[Point] = None) -> None:
        if v in self.adj:
            raise GraphError(f"duplicate vertex id {v!r}")
        self.points[v] = point
        self.adj[v] = {}

    def add_edge(self, u: VertexId, v: VertexId, weight: float) -> None:
        if u == v:
            raise GraphError(f"self-edge on {u!r}")
        if u not in self.adj or v not in self.adj:
            missing = u if u not in self.adj else v
            raise GraphError(f"edge references unknown vertex {missing!r}")
        if not weight >= 0:
            raise GraphError(f"negative edge ({u!r}, {v!r}): {weight}")
        weight = float(weight)
        if weight < self.adj[u].get(v, INF):
            self.adj[u][v] = weight
            if not self.directed:
                self.adj[v][u] = weight

    def __contains__(self, v: VertexId) -> bool:
        return v in self.adj

    def __len__(self) -> int:
        return len(self.adj)

    @property
    def vertices(self) -> list[VertexId]:
        return list(self.adj)

    def neighbors(self, u: VertexId) -> Mapping[VertexId, float]:
        return self.adj[u]

    def weight(self, u: VertexId, v: VertexId) -> float:
        if u not in self.adj or v not in self.adj:
            missing = u if u not in self.adj else v
            raise GraphError(f"unknown vertex {missing!r}")
        try:
            return self.adj[u][v]
        except KeyError:
            raise GraphError(f"no edge ({u!r}, {v!r})") from None

    def edges(self) -> list[tuple[VertexId, VertexId, float]]:
        out = []
        seen = set()
        for u, nbrs in self.adj.items():
            for v, w in nbrs.items():
                if not self.directed:
                    key = frozenset((u, v))
                    if key in seen:
                        continue
                    seen.add(key)
                out.append((u, v, w))
        return out

    def to_json(self) -> dict:
        vertices = []
        for v, p in self.points.items():
            entry: dict = {"id": v}
            if isinstance(p, GeoPoint):
                entry.update(lat=p.lat, lon=p.lon)
            elif isinstance(p, PlanarPoint):
                entry.update(x=p.x, y=p.y)
            vertices.append(entry)
        return {
            "vertices": vertices,
            "edges": [{"u": u, "v": v, "w": w} for u, v, w in self.edges()],
            "directed": self.directed,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "RoadGraph":
        try:
            g = cls(directed=bool(doc.get("directed", False)))
            for entry in doc["vertices"]:
                point: Optional[Point] = None
                if "lat" in entry and "lon" in entry:
                    point = GeoPoint(float(entry["lat"]), float(entry["lon"]))
                elif "x" in entry and "y" in entry:
                    point = PlanarPoint(float(entry["x"]), float(entry["y"]))
                g.add_vertex(entry["id"], point)
            for entry in doc["edges"]:
                g.add_edge(entry["u"], entry["v"], float(entry["w"]))
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph document: {exc!r}") from exc
        return g


@dataclass
class DijkstraStats:
    pushes: int = 0
    pops: int = 0
    stale_pops: int = 0
    relaxations: int = 0
    settled: list[tuple[VertexId, float]] = field(default_factory=list)


@dataclass
class ShortestPathResult:
    source: VertexId
    dist: dict[VertexId, float]
    prev: dict[VertexId, VertexId]
    stats: DijkstraStats = field(default_factory=DijkstraStats)

    def reachable(self, v: VertexId) -> bool:
        return self.dist.get(v, INF) < INF

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "dist": {str(v): (d if d < INF else "unreachable") for v, d in self.dist.items()},
            "prev": {str(v): p for v, p in self.prev.items()},
        }


def dijkstra(
    g: RoadGraph,
    source: VertexId,
    on_settle: Optional[Callable[[VertexId, float], None]] = None,
) -> ShortestPathResult:
    """Shortest distances from ``source`` to every vertex.

    Binary heap with lazy deletion: improved distances are pushed again and
    outdated heap entries are discarded when popped.
    """
    if source not in g:
        raise GraphError(f"unknown source vertex {source!r}")
    dist = {v: INF for v in g.adj}
    prev: dict[VertexId, VertexId] = {}
    stats = DijkstraStats()
    dist[source] = 0.0
    # counter breaks ties so vertex ids never need to be comparable
    heap: list[tuple[float, int, VertexId]] = [(0.0, 0, source)]
    stats.pushes = 1
    counter = 1
    done = set()
    while heap:
        d, _, u = heapq.heappop(heap)
        stats.pops += 1
        if u in done:
            stats.stale_pops += 1
            continue
        done.add(u)
        stats.settled.append((u, d))
        if on_settle is not None:
            on_settle(u, d)
        for v, w in g.adj[u].items():
            if w < 0:
                raise GraphError(f"negative edge ({u!r}, {v!r}): {w}")
            alt = d + w
            if alt < dist[v]:
                dist[v] = alt
                prev[v] = u
                stats.relaxations += 1
                heapq.heappush(heap, (alt, counter, v))
                counter += 1
                stats.pushes += 1
    return ShortestPathResult(source=source, dist=dist, prev=prev, stats=stats)


def reconstruct_path(r: ShortestPathResult, target: VertexId) -> list[VertexId]:
    if target not in r.dist:
        raise GraphError(f"unknown target vertex {target!r}")
    if r.dist[target] == INF:
        raise NoPath(r.source, target)
    path = [target]
    while path[-1] != r.source:
        path.append(r.prev[path[-1]])
    path.reverse()
    return path


def path_weight(g: RoadGraph, path: Sequence[VertexId]) -> float:
    return math.fsum(g.weight(u, v) for u, v in zip(path, path[1:]))


def complete_graph_from_points(points: Iterable[tuple[VertexId, Point]], metric: Metric) -> RoadGraph:
    """Undirected complete graph weighted by ``metric`` distances."""
    pts = list(points)
    if not pts:
        raise GraphError("need at least one point")
    g = RoadGraph(directed=False)
    for vid, p in pts:
        g.add_vertex(vid, p)
    for i, (u, pu) in enumerate(pts):
        for v, pv in pts[i + 1:]:
            g.add_edge(u, v, metric.distance(pu, pv))
    return g
