"""Instance files in, solution documents out.

Instances are read from the JSON schema below or from TSPLIB/CVRPLIB text::

    {"name": ..., "depot": {"lat": .., "lon": ..},
     "clients": [{"id": 1, "lat": .., "lon": .., "demand": 1}, ...],
     "fleet": [{"capacity": 4, "count": 2}, ...],
     "distance_mode": "geo" | "planar",
     "road_graph": "optional/path/to/graph.json"}

Planar instances use ``x``/``y`` keys instead of ``lat``/``lon``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Optional, Union

from kmroute.cluster import Client
from kmroute.fleet import FleetSpec, Vehicle, VehicleType
from kmroute.geo import GeoPoint, PlanarPoint, Point, longitude_span, point_from_json, point_to_json
from kmroute.roadgraph import RoadGraph
from kmroute.route import DEPOT, Route, Solution


class InstanceError(ValueError):
    pass


@dataclass
class Instance:
    name: str
    depot: Point
    clients: list[Client]
    fleet: FleetSpec
    distance_mode: str = "geo"
    road_graph: Optional[RoadGraph] = None
    road_graph_path: Optional[str] = None

    def __post_init__(self) -> None:
        validate_instance(self)

    @property
    def total_demand(self) -> int:
        return sum(c.demand for c in self.clients)

    def client_map(self) -> dict[int, Client]:
        return {c.id: c for c in self.clients}

    def points(self) -> list[tuple[int, Point]]:
        return [(DEPOT, self.depot)] + [(c.id, c.location) for c in self.clients]


def validate_instance(inst: Instance) -> None:
    if not inst.clients:
        raise InstanceError("instance has no clients")
    ids = [c.id for c in inst.clients]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise InstanceError(f"duplicate client ids: {dupes}")
    if inst.distance_mode not in ("geo", "planar"):
        raise InstanceError(f"unknown distance_mode {inst.distance_mode!r}")
    point_type = GeoPoint if inst.distance_mode == "geo" else PlanarPoint
    for _, p in inst.points():
        if not isinstance(p, point_type):
            raise InstanceError(f"{inst.distance_mode} instance contains a {type(p).__name__}")
    if inst.distance_mode == "geo":
        span = longitude_span([p for _, p in inst.points()])
        if span > 180.0:
            raise InstanceError(f"longitude span {span:g} exceeds 180 degrees (antimeridian data unsupported)")
    if inst.road_graph is not None:
        missing = [v for v, _ in inst.points() if v not in inst.road_graph]
        if missing:
            raise InstanceError(f"road graph lacks vertices {missing}")


def _field(entry: dict, key: str, where: str):
    try:
        return entry[key]
    except (KeyError, TypeError):
        raise InstanceError(f"{where}: missing field {key!r}") from None


def instance_from_json(doc: dict, base_dir: Optional[Path] = None) -> Instance:
    mode = doc.get("distance_mode", "geo")
    try:
        depot = point_from_json(_field(doc, "depot", "instance"), mode)
        clients = []
        for i, entry in enumerate(_field(doc, "clients", "instance")):
            where = f"clients[{i}]"
            clients.append(Client(
                id=int(_field(entry, "id", where)),
                location=point_from_json(entry, mode),
                demand=int(entry.get("demand", 1)),
            ))
        types = []
        for i, entry in enumerate(_field(doc, "fleet", "instance")):
            count = entry.get("count")
            types.append(VehicleType(
                type_id=str(entry.get("type_id", f"t{i}")),
                capacity=int(_field(entry, "capacity", f"fleet[{i}]")),
                max_count=None if count is None else int(count),
            ))
        fleet = FleetSpec(tuple(types))
    except InstanceError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"invalid instance: {exc}") from exc

    graph = None
    graph_path = doc.get("road_graph")
    if graph_path:
        p = Path(graph_path)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        graph = load_graph(p)
    return Instance(
        name=str(doc.get("name", "unnamed")),
        depot=depot,
        clients=clients,
        fleet=fleet,
        distance_mode=mode,
        road_graph=graph,
        road_graph_path=graph_path,
    )


def instance_to_json(inst: Instance) -> dict:
    doc = {
        "name": inst.name,
        "depot": point_to_json(inst.depot),
        "clients": [
            {"id": c.id, **point_to_json(c.location), "demand": c.demand} for c in inst.clients
        ],
        "fleet": [
            {"type_id": t.type_id, "capacity": t.capacity, "count": t.max_count} for t in inst.fleet.types
        ],
        "distance_mode": inst.distance_mode,
    }
    if inst.road_graph_path:
        doc["road_graph"] = inst.road_graph_path
    return doc


def load_graph(path: Union[str, Path]) -> RoadGraph:
    with open(path) as fh:
        return RoadGraph.from_json(json.load(fh))


def _tsplib_geo_to_degrees(value: float) -> float:
    # TSPLIB GEO coordinates are DDD.MM (degrees and minutes)
    deg = int(value)
    minutes = value - deg
    return deg + 5.0 * minutes / 3.0


def parse_tsplib(text: str, name: str = "unnamed") -> Instance:
    """Read a CVRPLIB-style text instance.

    The first depot node becomes vertex 0; other nodes keep their ids.
    """
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, int] = {}
    depots: list[int] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper == "EOF":
            break
        if upper.endswith("_SECTION"):
            section = upper
            continue
        if ":" in line and not line.lstrip("-")[:1].isdigit():
            key, _, value = line.partition(":")
            header[key.strip().upper()] = value.strip()
            section = None
            continue
        parts = line.split()
        try:
            if section == "NODE_COORD_SECTION":
                coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
            elif section == "DEMAND_SECTION":
                demands[int(parts[0])] = int(parts[1])
            elif section == "DEPOT_SECTION":
                for tok in parts:
                    if int(tok) == -1:
                        section = None
                        break
                    depots.append(int(tok))
            else:
                raise InstanceError(f"line {lineno}: unexpected content {line!r}")
        except (IndexError, ValueError) as exc:
            raise InstanceError(f"line {lineno}: cannot parse {line!r} ({exc})") from None

    if "CAPACITY" not in header:
        raise InstanceError("missing CAPACITY field")
    if not coords:
        raise InstanceError("missing NODE_COORD_SECTION")
    try:
        capacity = int(header["CAPACITY"])
    except ValueError:
        raise InstanceError(f"CAPACITY field: not an integer: {header['CAPACITY']!r}") from None
    weight_type = header.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper()
    if weight_type == "GEO":
        mode = "geo"
    elif weight_type in ("EUC_2D", "CEIL_2D", "ATT"):
        mode = "planar"
    else:
        raise InstanceError(f"unsupported EDGE_WEIGHT_TYPE {weight_type}")

    depot_id = depots[0] if depots else min(coords)
    if depot_id not in coords:
        raise InstanceError(f"depot node {depot_id} has no coordinates")

    def point(node: int) -> Point:
        a, b = coords[node]
        if mode == "geo":
            return GeoPoint(_tsplib_geo_to_degrees(a), _tsplib_geo_to_degrees(b))
        return PlanarPoint(a, b)

    clients = []
    for node in sorted(coords):
        if node == depot_id:
            continue
        if node not in demands:
            raise InstanceError(f"node {node} has no DEMAND_SECTION entry")
        clients.append(Client(id=node, location=point(node), demand=demands[node]))
    vehicles = header.get("VEHICLES")
    fleet = FleetSpec((VehicleType("t0", capacity, int(vehicles) if vehicles else None),))
    return Instance(
        name=header.get("NAME", name),
        depot=point(depot_id),
        clients=clients,
        fleet=fleet,
        distance_mode=mode,
    )


def parse_instance(source: Union[str, os.PathLike, IO[str]]) -> Instance:
    """Read an instance from a path or an open text stream (JSON or TSPLIB)."""
    base_dir = None
    name = "unnamed"
    if hasattr(source, "read"):
        text = source.read()
    else:
        path = Path(source)
        text = path.read_text()
        base_dir = path.parent
        name = path.stem
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
        return instance_from_json(doc, base_dir)
    return parse_tsplib(text, name)


def dump_instance(inst: Instance) -> str:
    return json.dumps(instance_to_json(inst), indent=2) + "\n"


# solution output

def vehicle_to_json(v) -> Optional[dict]:
    if v is None:
        return None
    return {"type_id": v.type_id, "index": v.index, "capacity": v.capacity}


def route_to_json(r: Route) -> dict:
    return {
        "cluster_id": r.cluster_id,
        "vehicle": vehicle_to_json(r.vehicle),
        "stops": list(r.stops),
        "leg_paths": [list(p) for p in r.leg_paths],
        "leg_km": list(r.leg_km),
        "total_km": r.total_km,
        "demand": r.demand,
        "occupancy": r.occupancy,
    }


def solution_to_json(s: Solution) -> dict:
    return {
        "routes": [route_to_json(r) for r in s.routes],
        "total_cost_km": s.total_cost_km,
        "kpi": s.kpi(),
    }


def solution_from_json(doc: dict) -> Solution:
    routes = []
    for entry in doc["routes"]:
        v = entry.get("vehicle")
        routes.append(Route(
            vehicle=None if v is None else Vehicle(v["type_id"], v["index"], v["capacity"]),
            stops=list(entry["stops"]),
            leg_paths=[list(p) for p in entry["leg_paths"]],
            leg_km=[float(x) for x in entry["leg_km"]],
            demand=int(entry.get("demand", 0)),
            cluster_id=entry.get("cluster_id"),
        ))
    return Solution(routes)


def solution_to_csv(s: Solution) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["route_id", "seq", "vertex", "leg_km"])
    for ri, r in enumerate(s.routes):
        for seq, v in enumerate(r.stops):
            w.writerow([ri, seq, v, repr(r.leg_km[seq - 1]) if seq else "0.0"])
    return buf.getvalue()


def solution_to_geojson(s: Solution, g: RoadGraph) -> dict:
    features = []
    for ri, r in enumerate(s.routes):
        path = [r.stops[0]]
        for leg in r.leg_paths:
            path.extend(leg[1:])
        coords = []
        for v in path:
            p = g.points.get(v)
            if isinstance(p, GeoPoint):
                coords.append([p.lon, p.lat])
            elif isinstance(p, PlanarPoint):
                coords.append([p.x, p.y])
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {
                "route_id": ri,
                "cluster_id": r.cluster_id,
                "vehicle": vehicle_to_json(r.vehicle),
                "stops": list(r.stops),
                "total_km": r.total_km,
            },
        })
    return {"type": "FeatureCollection", "features": features}


def render_solution(s: Solution, fmt: str, g: Optional[RoadGraph] = None) -> str:
    if fmt == "json":
        return json.dumps(solution_to_json(s), indent=2) + "\n"
    if fmt == "csv":
        return solution_to_csv(s)
    if fmt == "geojson":
        if g is None:
            raise ValueError("geojson output needs the road graph for coordinates")
        return json.dumps(solution_to_geojson(s, g), indent=2) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")
