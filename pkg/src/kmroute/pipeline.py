"""End-to-end driver: fleet plan, phase tree, merge, routes, feasibility."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from kmroute.cluster import FleetExhausted, PhaseNode, recursive_kmeans
from kmroute.fleet import FleetPlan, FleetSpec, InsufficientFleet, NewtonConfig, plan_fleet
from kmroute.geo import MEAN_EARTH_RADIUS_KM, Metric, metric_for
from kmroute.io import Instance
from kmroute.merge import ClusterSet, MergeLog, MergePolicy, clusters_from_tree, merge_pass
from kmroute.roadgraph import RoadGraph, complete_graph_from_points
from kmroute.route import FeasibilityReport, Solution, build_solution, check_feasibility

log = logging.getLogger(__name__)


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    rng_seed: int = 0
    epsilon: float = 1e-9
    min_occupancy: float = 0.5
    radius_km: float = MEAN_EARTH_RADIUS_KM
    kmeans_max_iter: int = 100
    output_format: str = "json"

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not (0 < self.min_occupancy <= 1):
            raise ValueError("min_occupancy must be in (0, 1]")
        if not self.radius_km > 0:
            raise ValueError("radius_km must be positive")
        if self.kmeans_max_iter < 1:
            raise ValueError("kmeans_max_iter must be at least 1")
        if self.output_format not in ("json", "csv", "geojson"):
            raise ValueError(f"unknown output format {self.output_format!r}")


@dataclass
class PipelineResult:
    plan: FleetPlan
    tree: PhaseNode
    clusters_before_merge: ClusterSet
    clusters: ClusterSet
    merge_log: MergeLog
    solution: Solution
    feasibility: FeasibilityReport
    graph: RoadGraph
    extra_vehicles: list[str] = field(default_factory=list)


def _grow_plan(plan: FleetPlan, spec: FleetSpec, n: int) -> Optional[FleetPlan]:
    """Add one vehicle of the largest type that still has one to spare."""
    counts = dict(plan.counts)
    for t in sorted(spec.types, key=lambda t: (-t.capacity, t.type_id)):
        if t.max_count is None or counts[t.type_id] < t.max_count:
            counts[t.type_id] += 1
            new = tuple((tid, counts[tid]) for tid, _ in plan.counts)
            total = sum(spec.capacity_of(tid) * c for tid, c in new)
            return FleetPlan(counts=new, total_capacity=total, slack=total - n, relaxed=plan.relaxed)
    return None


def cluster_with_fleet(inst: Instance, plan: FleetPlan, cfg: PipelineConfig, metric: Metric):
    """Run the recursive clustering, adding vehicles while the plan runs dry.

    A minimum-slack plan can be too tight once bisection leaves partly
    filled clusters. Each retry adds one vehicle of the largest type
    available; the merge phase later frees whatever turns out unneeded.
    """
    added = []
    while True:
        try:
            tree = recursive_kmeans(
                inst.clients, plan, inst.fleet,
                rng_seed=cfg.rng_seed, max_iter=cfg.kmeans_max_iter, metric=metric,
            )
            return tree, plan, added
        except FleetExhausted:
            grown = _grow_plan(plan, inst.fleet, inst.total_demand)
            if grown is None:
                raise
            added.append(next(tid for (tid, a), (_, b) in zip(plan.counts, grown.counts) if a != b))
            log.info("fleet exhausted during clustering; retrying with an extra %s", added[-1])
            plan = grown


def build_graph(inst: Instance, metric: Metric) -> RoadGraph:
    if inst.road_graph is not None:
        return inst.road_graph
    return complete_graph_from_points(inst.points(), metric)


def run_pipeline(inst: Instance, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    metric = metric_for(inst.distance_mode, cfg.radius_km)
    clients = inst.client_map()

    try:
        plan = plan_fleet(inst.total_demand, inst.fleet, NewtonConfig(epsilon=cfg.epsilon))
    except (InsufficientFleet, ValueError, ArithmeticError) as exc:
        raise StageError("fleet", exc) from exc

    try:
        tree, plan, added = cluster_with_fleet(inst, plan, cfg, metric)
    except Exception as exc:
        raise StageError("cluster", exc) from exc

    before = clusters_from_tree(tree, clients)
    try:
        merged, merge_log = merge_pass(before, MergePolicy(cfg.min_occupancy), clients, metric)
    except Exception as exc:
        raise StageError("merge", exc) from exc

    try:
        graph = build_graph(inst, metric)
        solution = build_solution(merged, graph)
    except Exception as exc:
        raise StageError("route", exc) from exc

    report = check_feasibility(solution, inst)
    return PipelineResult(
        plan=plan,
        tree=tree,
        clusters_before_merge=before,
        clusters=merged,
        merge_log=merge_log,
        solution=solution,
        feasibility=report,
        graph=graph,
        extra_vehicles=added,
    )
