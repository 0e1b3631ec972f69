"""Coordinates, distance metrics and centroids.

Two metrics are provided: great-circle distance over latitude/longitude
(the default) and plain Euclidean distance for planar benchmark instances.
Both expose the same ``distance``/``centroid`` pair so clustering and
merging code does not care which one it is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

MEAN_EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    y: float


Point = Union[GeoPoint, PlanarPoint]


@dataclass(frozen=True)
class EarthModel:
    radius_km: float = MEAN_EARTH_RADIUS_KM

    def __post_init__(self) -> None:
        if not self.radius_km > 0:
            raise ValueError(f"earth radius must be positive, got {self.radius_km}")


def haversine(a: GeoPoint, b: GeoPoint, earth: EarthModel = EarthModel()) -> float:
    """Great-circle distance in kilometers between two lat/lon points."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    half_dphi = math.radians(b.lat - a.lat) / 2.0
    half_dlam = math.radians(b.lon - a.lon) / 2.0
    # squares of sines are sign-independent, so swapping a and b is bit-exact
    h = math.sin(half_dphi) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(half_dlam) ** 2
    h = min(1.0, max(0.0, h))
    return 2.0 * earth.radius_km * math.asin(math.sqrt(h))


def euclidean(a: PlanarPoint, b: PlanarPoint) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def centroid(points: Sequence[Point]) -> Point:
    """Component-wise mean of the points.

    Lat/lon degrees are averaged directly rather than through unit vectors;
    inputs are assumed not to straddle the antimeridian.
    """
    if not points:
        raise ValueError("empty point set")
    n = len(points)
    first = points[0]
    if isinstance(first, GeoPoint):
        return GeoPoint(
            lat=math.fsum(p.lat for p in points) / n,
            lon=math.fsum(p.lon for p in points) / n,
        )
    return PlanarPoint(
        x=math.fsum(p.x for p in points) / n,
        y=math.fsum(p.y for p in points) / n,
    )


class HaversineMetric:
    """Great-circle metric on a sphere of the given radius."""

    name = "geo"

    def __init__(self, earth: EarthModel = EarthModel()) -> None:
        self.earth = earth

    def distance(self, a: GeoPoint, b: GeoPoint) -> float:
        return haversine(a, b, self.earth)

    def centroid(self, points: Sequence[GeoPoint]) -> GeoPoint:
        return centroid(points)

    def __repr__(self) -> str:
        return f"HaversineMetric(radius_km={self.earth.radius_km})"


class EuclideanMetric:
    name = "planar"

    def distance(self, a: PlanarPoint, b: PlanarPoint) -> float:
        return euclidean(a, b)

    def centroid(self, points: Sequence[PlanarPoint]) -> PlanarPoint:
        return centroid(points)

    def __repr__(self) -> str:
        return "EuclideanMetric()"


Metric = Union[HaversineMetric, EuclideanMetric]


def metric_for(mode: str, radius_km: float = MEAN_EARTH_RADIUS_KM) -> Metric:
    if mode == "geo":
        return HaversineMetric(EarthModel(radius_km))
    if mode == "planar":
        return EuclideanMetric()
    raise ValueError(f"unknown distance mode {mode!r} (expected 'geo' or 'planar')")


def longitude_span(points: Sequence[GeoPoint]) -> float:
    if not points:
        return 0.0
    lons = [p.lon for p in points]
    return max(lons) - min(lons)


def point_to_json(p: Point) -> dict:
    if isinstance(p, GeoPoint):
        return {"lat": p.lat, "lon": p.lon}
    return {"x": p.x, "y": p.y}


def point_from_json(doc: dict, mode: str = "geo") -> Point:
    if mode == "planar":
        if "x" in doc:
            return PlanarPoint(float(doc["x"]), float(doc["y"]))
        return PlanarPoint(float(doc["lon"]), float(doc["lat"]))
    return GeoPoint(float(doc["lat"]), float(doc["lon"]))
