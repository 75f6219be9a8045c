"""Planar geometry in a scene-local metric frame and pedestrian walk distances.

All positions are meters east/north of a scene origin. Walk distances use the
pedestrian graph when both endpoints snap onto it, otherwise a 1.4x detour
factor over the straight-line distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

METERS_PER_DEGREE = 111_320.0
MAX_DEGREE_DELTA = 0.05
FRAME_LIMIT_M = 10_000.0
DETOUR_FACTOR = 1.4
DEFAULT_SNAP_TOLERANCE_M = 50.0

NETWORK = "network"
EUCLIDEAN_FALLBACK = "euclidean_fallback"


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")
        if abs(self.x) > FRAME_LIMIT_M or abs(self.y) > FRAME_LIMIT_M:
            raise ValueError(f"point ({self.x}, {self.y}) outside the scene-local frame")


@dataclass(frozen=True)
class Polyline:
    points: Tuple[Point, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) < 2:
            raise ValueError("polyline needs at least two points")
        for a, b in zip(self.points, self.points[1:]):
            if a == b:
                raise ValueError(f"consecutive duplicate point ({a.x}, {a.y})")

    @property
    def length(self) -> float:
        return sum(euclidean_distance(a, b) for a, b in zip(self.points, self.points[1:]))

    @property
    def is_closed(self) -> bool:
        return self.points[0] == self.points[-1]

    def point_at(self, offset: float) -> Point:
        """Point at arc length ``offset`` (clamped to the polyline)."""
        if offset <= 0:
            return self.points[0]
        walked = 0.0
        for a, b in zip(self.points, self.points[1:]):
            seg = euclidean_distance(a, b)
            if walked + seg >= offset:
                f = (offset - walked) / seg
                return Point(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
            walked += seg
        return self.points[-1]

    def distance_to(self, p: Point) -> float:
        return min(point_segment_distance(p, a, b) for a, b in zip(self.points, self.points[1:]))


@dataclass(frozen=True, eq=True)
class PedestrianGraph:
    """Undirected sidewalk graph. ``edges`` holds ``(u, v, length_m)`` triples."""

    nodes: Dict[int, Point] = field(default_factory=dict)
    edges: Tuple[Tuple[int, int, float], ...] = ()

    __hash__ = None  # type: ignore[assignment]

    @property
    def is_empty(self) -> bool:
        return not self.nodes

    @cached_property
    def _nx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for u, v, length in self.edges:
            # parallel edges: keep the shortest
            if g.has_edge(u, v) and g[u][v]["length"] <= length:
                continue
            g.add_edge(u, v, length=length)
        return g

    @cached_property
    def _all_pairs(self) -> Dict[int, Dict[int, float]]:
        return dict(nx.all_pairs_dijkstra_path_length(self._nx, weight="length"))

    def shortest_path_length(self, u: int, v: int) -> Optional[float]:
        """Network distance between two nodes, ``None`` if disconnected."""
        return self._all_pairs.get(u, {}).get(v)


@dataclass(frozen=True)
class WalkResult:
    distance: float
    method: str


@dataclass(frozen=True)
class WalkConfig:
    snap_tolerance: float = DEFAULT_SNAP_TOLERANCE_M
    detour_factor: float = DETOUR_FACTOR


def project_to_local(lat: float, lon: float, origin_lat: float, origin_lon: float) -> Point:
    """Equirectangular projection around the scene origin."""
    dlat = lat - origin_lat
    dlon = lon - origin_lon
    if abs(dlat) >= MAX_DEGREE_DELTA or abs(dlon) >= MAX_DEGREE_DELTA:
        raise ValueError(
            f"({lat}, {lon}) is more than {MAX_DEGREE_DELTA} degrees from the scene origin"
        )
    return Point(dlon * METERS_PER_DEGREE * math.cos(math.radians(origin_lat)), dlat * METERS_PER_DEGREE)


def unproject(p: Point, origin_lat: float, origin_lon: float, ndigits: int = 9) -> Tuple[float, float]:
    """Inverse of :func:`project_to_local`, rounded to ``ndigits`` decimal degrees."""
    lat = origin_lat + p.y / METERS_PER_DEGREE
    lon = origin_lon + p.x / (METERS_PER_DEGREE * math.cos(math.radians(origin_lat)))
    return round(lat, ndigits), round(lon, ndigits)


def euclidean_distance(a: Point, b: Point) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    dx, dy = b.x - a.x, b.y - a.y
    denom = dx * dx + dy * dy
    if denom == 0:
        return euclidean_distance(p, a)
    t = max(0.0, min(1.0, ((p.x - a.x) * dx + (p.y - a.y) * dy) / denom))
    return math.hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy))


def snap_to_graph(
    p: Point, g: PedestrianGraph, tolerance: float = DEFAULT_SNAP_TOLERANCE_M
) -> Optional[Tuple[int, float]]:
    """Nearest node and its distance, or ``None`` when beyond ``tolerance``.

    Equidistant nodes resolve to the lowest id.
    """
    if g.is_empty:
        raise ValueError("cannot snap to an empty pedestrian graph")
    node, dist = min(
        ((nid, euclidean_distance(p, q)) for nid, q in g.nodes.items()),
        key=lambda item: (item[1], item[0]),
    )
    if dist > tolerance:
        return None
    return node, dist


def walk_distance(
    p: Point, e: Point, g: PedestrianGraph, config: WalkConfig = WalkConfig()
) -> WalkResult:
    if not g.is_empty:
        sp = snap_to_graph(p, g, config.snap_tolerance)
        se = snap_to_graph(e, g, config.snap_tolerance)
        if sp is not None and se is not None:
            # canonical node order keeps the float sum symmetric in (p, e)
            (a, da), (b, db) = sorted((sp, se))
            path = g.shortest_path_length(a, b)
            if path is not None:
                return WalkResult(path + (da + db), NETWORK)
    return WalkResult(config.detour_factor * euclidean_distance(p, e), EUCLIDEAN_FALLBACK)


def polyline_from_xy(coords: Sequence[Tuple[float, float]]) -> Polyline:
    return Polyline(tuple(Point(x, y) for x, y in coords))


def centroid(points: List[Point]) -> Point:
    return Point(sum(p.x for p in points) / len(points), sum(p.y for p in points) / len(points))
