"""Cluster-first route-second CVRP heuristic.

Fleet sizing by Newton-Raphson, recursive bisecting K-Means over client
locations, occupancy-driven cluster merging and Dijkstra-based
nearest-neighbour routing.
"""

from kmroute.cluster import Client, KMeansResult, PhaseNode, kmeans, recursive_kmeans
from kmroute.fleet import FleetPlan, FleetSpec, NewtonConfig, VehicleType, integerize, newton_solve, plan_fleet
from kmroute.geo import EarthModel, GeoPoint, PlanarPoint, centroid, haversine
from kmroute.io import Instance, parse_instance
from kmroute.merge import ClusterSet, MergePolicy, merge_pass
from kmroute.pipeline import PipelineConfig, run_pipeline
from kmroute.roadgraph import RoadGraph, ShortestPathResult, complete_graph_from_points, dijkstra, reconstruct_path
from kmroute.route import Route, Solution, build_solution, check_feasibility, evaluate_solution, route_cluster

__version__ = "0.1.0"
