"""Occupancy repair: fold under-filled clusters into their nearest neighbour."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from kmroute.cluster import Client, PhaseNode
from kmroute.fleet import Vehicle
from kmroute.geo import HaversineMetric, Metric, Point


@dataclass(frozen=True)
class Cluster:
    cluster_id: int
    members: tuple[int, ...]
    centroid: Point
    vehicle: Vehicle
    demand: int

    @property
    def capacity(self) -> int:
        return self.vehicle.capacity

    @property
    def occupancy(self) -> float:
        return self.demand / self.vehicle.capacity


@dataclass
class ClusterSet:
    clusters: list[Cluster]

    def validate(self) -> None:
        seen: set[int] = set()
        for c in self.clusters:
            overlap = seen.intersection(c.members)
            if overlap:
                raise ValueError(f"clients {sorted(overlap)} appear in more than one cluster")
            seen.update(c.members)
            if c.demand > c.capacity:
                raise ValueError(f"cluster {c.cluster_id}: demand {c.demand} exceeds capacity {c.capacity}")
            if c.demand <= 0:
                raise ValueError(f"cluster {c.cluster_id} is empty")

    def total_occupancy(self) -> float:
        cap = sum(c.capacity for c in self.clusters)
        return sum(c.demand for c in self.clusters) / cap if cap else 0.0

    def member_ids(self) -> list[int]:
        return sorted(i for c in self.clusters for i in c.members)

    def by_id(self, cluster_id: int) -> Cluster:
        for c in self.clusters:
            if c.cluster_id == cluster_id:
                return c
        raise KeyError(cluster_id)


@dataclass(frozen=True)
class MergePolicy:
    min_occupancy: float = 0.5

    def __post_init__(self) -> None:
        if not (0 < self.min_occupancy <= 1):
            raise ValueError(f"min_occupancy must be in (0, 1], got {self.min_occupancy}")


@dataclass
class MergeEntry:
    step: int
    from_cluster: int
    to_cluster: Optional[int]
    distance_km: Optional[float]
    freed_vehicle: Optional[Vehicle]
    flagged: bool = False  # under-occupied with no cluster able to absorb it

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "from_cluster": self.from_cluster,
            "to_cluster": self.to_cluster,
            "distance_km": self.distance_km,
            "freed_vehicle": None if self.freed_vehicle is None else {
                "type_id": self.freed_vehicle.type_id,
                "index": self.freed_vehicle.index,
                "capacity": self.freed_vehicle.capacity,
            },
            "flagged": self.flagged,
        }


@dataclass
class MergeLog:
    entries: list[MergeEntry] = field(default_factory=list)

    @property
    def merges(self) -> list[MergeEntry]:
        return [e for e in self.entries if not e.flagged]

    @property
    def flagged(self) -> list[int]:
        return [e.from_cluster for e in self.entries if e.flagged]

    @property
    def freed_vehicles(self) -> list[Vehicle]:
        return [e.freed_vehicle for e in self.merges]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json()) + "\n" for e in self.entries)


def clusters_from_tree(root: PhaseNode, clients: Mapping[int, Client]) -> ClusterSet:
    """Number the leaves of a phase tree left to right as clusters."""
    out = []
    for i, leaf in enumerate(root.leaves()):
        out.append(Cluster(
            cluster_id=i,
            members=tuple(leaf.members),
            centroid=leaf.centroid,
            vehicle=leaf.vehicle,
            demand=sum(clients[m].demand for m in leaf.members),
        ))
    return ClusterSet(out)


def merge_pass(
    cluster_set: ClusterSet,
    policy: MergePolicy,
    clients: Mapping[int, Client],
    metric: Optional[Metric] = None,
) -> tuple[ClusterSet, MergeLog]:
    """Merge clusters below ``policy.min_occupancy`` into the closest absorber.

    The emptiest cluster is handled first (lowest id on ties). A cluster
    ``j`` can absorb ``i`` when their combined demand fits ``j``'s vehicle;
    among those the one with the nearest centroid wins (lowest id on ties).
    A cluster with no absorber is flagged and left alone. The input is not
    modified.
    """
    metric = metric or HaversineMetric()
    cluster_set.validate()
    current = {c.cluster_id: c for c in cluster_set.clusters}
    log = MergeLog()
    flagged: set[int] = set()
    step = 0
    while True:
        low = [c for c in current.values() if c.occupancy < policy.min_occupancy and c.cluster_id not in flagged]
        if not low:
            break
        src = min(low, key=lambda c: (c.occupancy, c.cluster_id))
        candidates = [
            (metric.distance(src.centroid, c.centroid), c.cluster_id)
            for c in current.values()
            if c.cluster_id != src.cluster_id and c.demand + src.demand <= c.capacity
        ]
        step += 1
        if not candidates:
            flagged.add(src.cluster_id)
            log.entries.append(MergeEntry(step, src.cluster_id, None, None, None, flagged=True))
            continue
        dist, dst_id = min(candidates)
        dst = current[dst_id]
        members = dst.members + src.members
        current[dst_id] = replace(
            dst,
            members=members,
            centroid=metric.centroid([clients[m].location for m in members]),
            demand=dst.demand + src.demand,
        )
        del current[src.cluster_id]
        log.entries.append(MergeEntry(step, src.cluster_id, dst_id, dist, src.vehicle))

    out = ClusterSet([current[k] for k in sorted(current)])
    out.validate()
    return out, log
