"""Command-line front end.

Exit status: 0 feasible result, 2 infeasible result, 1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from kmroute.fleet import FleetPlan, InsufficientFleet, Vehicle
from kmroute.geo import metric_for, point_from_json, point_to_json
from kmroute.io import (
    Instance,
    InstanceError,
    load_graph,
    parse_instance,
    render_solution,
    solution_from_json,
    solution_to_json,
    validate_instance,
    vehicle_to_json,
)
from kmroute.merge import Cluster, ClusterSet
from kmroute.oracle import BudgetExceeded, OracleBudget, apsp_floyd_warshall, exact_fleet, exact_tour
from kmroute.pipeline import PipelineConfig, StageError, build_graph, run_pipeline
from kmroute.route import build_solution, check_feasibility, evaluate_solution

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

log = logging.getLogger("kmroute")


def _default_seed() -> int:
    raw = os.environ.get("CVRP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"CVRP_SEED must be an integer, got {raw!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("instance", help="instance file (JSON or TSPLIB/CVRPLIB text)")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: $CVRP_SEED or 0)")
    p.add_argument("--epsilon", type=float, default=1e-9, help="Newton tolerance")
    p.add_argument("--min-occupancy", type=float, default=0.5, help="merge threshold in (0, 1]")
    p.add_argument("--radius-km", type=float, default=PipelineConfig.radius_km)
    p.add_argument("--max-iter", type=int, default=100, help="Lloyd iterations per bisection")
    p.add_argument("--road-graph", default=None, help="road graph JSON (default: complete graph)")
    p.add_argument("-o", "--output", default=None, help="write result here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmroute", description="Cluster-first route-second CVRP solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the full pipeline")
    _common(p)
    p.add_argument("--format", choices=["json", "csv", "geojson"], default="json")
    p.add_argument("--artifacts", default=None, help="directory for plan, tree, merge log and solution")

    p = sub.add_parser("cluster", help="fleet plan, phase tree and merge only")
    _common(p)
    p.add_argument("--dump-tree", action="store_true", help="include the phase tree")

    p = sub.add_parser("route", help="route clusters produced by `cluster`")
    _common(p)
    p.add_argument("--clusters", required=True, help="output of `kmroute cluster`")
    p.add_argument("--format", choices=["json", "csv", "geojson"], default="json")

    p = sub.add_parser("eval", help="cost and feasibility of a solution")
    _common(p)
    p.add_argument("solution", help="solution JSON from `solve`")
    p.add_argument("--oracle", action="store_true", help="compare against exact references (small instances)")
    return parser


def _config(args, fmt: str = "json") -> PipelineConfig:
    seed = args.seed if args.seed is not None else _default_seed()
    return PipelineConfig(
        rng_seed=seed,
        epsilon=args.epsilon,
        min_occupancy=args.min_occupancy,
        radius_km=args.radius_km,
        kmeans_max_iter=args.max_iter,
        output_format=fmt,
    )


def _load(args) -> Instance:
    inst = parse_instance(args.instance)
    if args.road_graph:
        inst.road_graph = load_graph(args.road_graph)
        inst.road_graph_path = args.road_graph
        validate_instance(inst)
    return inst


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def plan_to_json(plan: FleetPlan) -> dict:
    return {
        "counts": [{"type_id": t, "count": c} for t, c in plan.counts],
        "total_capacity": plan.total_capacity,
        "slack": plan.slack,
        "relaxed": list(plan.relaxed),
    }


def cluster_set_to_json(cs: ClusterSet) -> list:
    return [
        {
            "cluster_id": c.cluster_id,
            "members": list(c.members),
            "centroid": point_to_json(c.centroid),
            "vehicle": vehicle_to_json(c.vehicle),
            "demand": c.demand,
            "occupancy": c.occupancy,
        }
        for c in cs.clusters
    ]


def cluster_set_from_json(docs: list, mode: str) -> ClusterSet:
    return ClusterSet([
        Cluster(
            cluster_id=int(d["cluster_id"]),
            members=tuple(d["members"]),
            centroid=point_from_json(d["centroid"], mode),
            vehicle=Vehicle(d["vehicle"]["type_id"], d["vehicle"]["index"], d["vehicle"]["capacity"]),
            demand=int(d["demand"]),
        )
        for d in docs
    ])


def _warn_flagged(result) -> None:
    for cid in result.merge_log.flagged:
        log.warning("cluster %d stays under the occupancy threshold: no cluster can absorb it", cid)


def _report_infeasible(report) -> int:
    sys.stderr.write(_dumps(report.to_json()))
    return EXIT_INFEASIBLE


def cmd_solve(args) -> int:
    cfg = _config(args, args.format)
    inst = _load(args)
    result = run_pipeline(inst, cfg)
    _warn_flagged(result)
    if args.artifacts:
        out = Path(args.artifacts)
        out.mkdir(parents=True, exist_ok=True)
        (out / "plan.json").write_text(_dumps(plan_to_json(result.plan)))
        (out / "tree.json").write_text(_dumps(result.tree.to_json()))
        (out / "merge_log.jsonl").write_text(result.merge_log.to_jsonl())
        (out / "solution.json").write_text(_dumps(solution_to_json(result.solution)))
    _emit(render_solution(result.solution, cfg.output_format, result.graph), args.output)
    if not result.feasibility.ok:
        return _report_infeasible(result.feasibility)
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = _config(args)
    inst = _load(args)
    result = run_pipeline(inst, cfg)
    _warn_flagged(result)
    doc = {
        "instance": inst.name,
        "plan": plan_to_json(result.plan),
        "clusters": cluster_set_to_json(result.clusters),
        "merge_log": [e.to_json() for e in result.merge_log.entries],
    }
    if args.dump_tree:
        doc["tree"] = result.tree.to_json()
    _emit(_dumps(doc), args.output)
    return EXIT_OK


def cmd_route(args) -> int:
    inst = _load(args)
    metric = metric_for(inst.distance_mode, args.radius_km)
    with open(args.clusters) as fh:
        doc = json.load(fh)
    clusters = cluster_set_from_json(doc["clusters"], inst.distance_mode)
    clusters.validate()
    graph = build_graph(inst, metric)
    solution = build_solution(clusters, graph)
    _emit(render_solution(solution, args.format, graph), args.output)
    report = check_feasibility(solution, inst)
    if not report.ok:
        return _report_infeasible(report)
    return EXIT_OK


def cmd_eval(args) -> int:
    inst = _load(args)
    metric = metric_for(inst.distance_mode, args.radius_km)
    with open(args.solution) as fh:
        solution = solution_from_json(json.load(fh))
    graph = build_graph(inst, metric)
    report = check_feasibility(solution, inst)
    doc = {
        "instance": inst.name,
        "cost_km": evaluate_solution(solution, graph),
        "stored_cost_km": solution.total_cost_km,
        "kpi": solution.kpi(),
        "feasibility": report.to_json(),
    }
    if args.oracle:
        doc["oracle"] = _oracle_report(inst, solution, graph)
    _emit(_dumps(doc), args.output)
    return EXIT_OK if report.ok else EXIT_INFEASIBLE


def _oracle_report(inst: Instance, solution, graph) -> dict:
    budget = OracleBudget(max_vertices=max(12, len(graph)))
    out: dict = {}
    try:
        plan = exact_fleet(inst.total_demand, inst.fleet)
        out["fleet"] = plan_to_json(plan)
    except InsufficientFleet as exc:
        out["fleet"] = {"error": str(exc)}
    if len(graph) > 60:
        out["routes"] = {"skipped": f"{len(graph)} vertices is too many for all-pairs oracle"}
        return out
    dist = apsp_floyd_warshall(graph, budget)
    routes = []
    for ri, r in enumerate(solution.routes):
        entry = {"route": ri, "greedy_km": r.total_km}
        try:
            order, cost = exact_tour(r.clients, dist, budget=budget)
            entry.update(optimal_km=cost, optimal_order=order, ratio=(r.total_km / cost if cost else 1.0))
        except BudgetExceeded as exc:
            entry["skipped"] = str(exc)
        routes.append(entry)
    out["routes"] = routes
    return out


COMMANDS = {"solve": cmd_solve, "cluster": cmd_cluster, "route": cmd_route, "eval": cmd_eval}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except StageError as exc:
        log.error("stage %s failed: %s", exc.stage, exc.cause)
        return EXIT_ERROR
    except (InstanceError, OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
