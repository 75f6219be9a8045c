"""Scene data model: buildings, entrances, curbs, rules, sidewalks, merchant history.

Scene files are UTF-8 JSON with geographic ``[lat, lon]`` pairs; everything is
projected to the local metric frame on load and projected back on save.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

from .geo import (
    PedestrianGraph,
    Point,
    Polyline,
    euclidean_distance,
    project_to_local,
    unproject,
)
from .rules import (
    ALL_WEEK,
    DAY_NAMES,
    RULE_SOURCES,
    STATUSES,
    TIME_LIMITED,
    LegalityRule,
    LegalityStatus,
    WeeklyWindow,
    parse_time,
)

ENTRANCE_KINDS = ("front", "side", "rear", "loading")
ENTRANCE_SOURCES = ("structured", "crowdsourced", "vlm")
MANEUVERS = ("pull_over", "lot_space", "parallel")
PARK_TIME_S = {"pull_over": 15.0, "lot_space": 30.0, "parallel": 60.0}

MAX_DESTINATION_OFFSET_M = 1000.0
ENTRANCE_BOUNDARY_TOLERANCE_M = 5.0
HEATMAP_WEIGHT_TOLERANCE = 1e-9
EDGE_LENGTH_SLACK_M = 1e-6


class SceneError(ValueError):
    pass


class SceneParseError(SceneError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SceneValidationError(SceneError):
    def __init__(self, violations: List["Violation"]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


@dataclass(frozen=True)
class Entrance:
    id: str
    position: Point
    kind: str = "front"
    confidence: float = 1.0
    source: str = "structured"


@dataclass(frozen=True)
class Building:
    id: str
    footprint: Polyline
    entrances: Tuple[Entrance, ...] = ()


@dataclass(frozen=True)
class CurbSegment:
    id: str
    geometry: Polyline
    maneuver: str
    rule_ids: Tuple[str, ...] = ()

    @property
    def park_time(self) -> float:
        return PARK_TIME_S[self.maneuver]


@dataclass(frozen=True)
class MerchantRecord:
    visit_count: int = 0
    heatmap: Tuple[Tuple[Point, float], ...] = ()
    dynamic_change_flag: bool = False


@dataclass(frozen=True)
class SignTruth:
    rule_id: str
    legible: bool
    legal_confidence: float


@dataclass(frozen=True)
class GroundTruth:
    entrances: Tuple[Entrance, ...] = ()
    signs: Tuple[SignTruth, ...] = ()


@dataclass(frozen=True)
class Violation:
    object_id: str
    invariant: str
    detail: str = ""

    def __str__(self) -> str:
        tail = f" ({self.detail})" if self.detail else ""
        return f"{self.object_id}: {self.invariant}{tail}"


@dataclass(frozen=True)
class Scene:
    origin_lat: float
    origin_lon: float
    destination: Point
    buildings: Tuple[Building, ...]
    curb_segments: Tuple[CurbSegment, ...]
    rules: Tuple[LegalityRule, ...]
    pedestrian_graph: PedestrianGraph = field(default_factory=PedestrianGraph)
    merchant: MerchantRecord = field(default_factory=MerchantRecord)
    analysis_time: int = 0
    ground_truth: Optional[GroundTruth] = None

    __hash__ = None  # type: ignore[assignment]

    @cached_property
    def _rules_by_segment(self) -> Dict[str, Tuple[LegalityRule, ...]]:
        out: Dict[str, List[LegalityRule]] = {}
        for r in self.rules:
            out.setdefault(r.segment_id, []).append(r)
        return {k: tuple(v) for k, v in out.items()}

    def rules_for(self, segment_id: str) -> Tuple[LegalityRule, ...]:
        return self._rules_by_segment.get(segment_id, ())

    def segment(self, segment_id: str) -> CurbSegment:
        for seg in self.curb_segments:
            if seg.id == segment_id:
                return seg
        raise KeyError(segment_id)

    @cached_property
    def target_building(self) -> Optional[Building]:
        """The building the destination belongs to: containing it, else nearest."""
        if not self.buildings:
            return None
        for b in self.buildings:
            if point_in_polygon(self.destination, b.footprint):
                return b
        return min(self.buildings, key=lambda b: (b.footprint.distance_to(self.destination), b.id))


def point_in_polygon(p: Point, ring: Polyline) -> bool:
    inside = False
    pts = ring.points
    for a, b in zip(pts, pts[1:] + pts[:1]):
        if (a.y > p.y) != (b.y > p.y):
            x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < x_cross:
                inside = not inside
    return inside


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_scene(scene: Scene) -> List[Violation]:
    """Every violated invariant, without short-circuiting."""
    v: List[Violation] = []
    origin = Point(0.0, 0.0)
    if euclidean_distance(scene.destination, origin) > MAX_DESTINATION_OFFSET_M:
        v.append(Violation("destination", "destination within 1 km of origin"))
    if not scene.curb_segments:
        v.append(Violation("scene", "at least one curb segment"))

    for b in scene.buildings:
        if not b.footprint.is_closed:
            v.append(Violation(b.id, "closed footprint"))
        for e in b.entrances:
            v.extend(_entrance_problems(e, b))

    seg_ids = [s.id for s in scene.curb_segments]
    rule_by_id = {r.id: r for r in scene.rules}
    for dup in sorted({i for i in seg_ids if seg_ids.count(i) > 1}):
        v.append(Violation(dup, "unique segment id"))
    if len(rule_by_id) != len(scene.rules):
        v.append(Violation("rules", "unique rule id"))
    for s in scene.curb_segments:
        if s.maneuver not in MANEUVERS:
            v.append(Violation(s.id, "known maneuver", s.maneuver))
        if not s.geometry.length > 0:
            v.append(Violation(s.id, "segment length > 0"))
        for rid in s.rule_ids:
            rule = rule_by_id.get(rid)
            if rule is None:
                v.append(Violation(s.id, "unknown rule", rid))
            elif rule.segment_id != s.id:
                v.append(Violation(s.id, "rule belongs to another segment", rid))
    for r in scene.rules:
        if r.segment_id not in seg_ids:
            v.append(Violation(r.id, "unknown segment", r.segment_id))
        for problem in r.problems():
            v.append(Violation(r.id, "well-formed rule", problem))

    g = scene.pedestrian_graph
    for u, w, length in g.edges:
        if u not in g.nodes or w not in g.nodes:
            v.append(Violation(f"edge {u}-{w}", "edge endpoints exist"))
            continue
        if length < euclidean_distance(g.nodes[u], g.nodes[w]) - EDGE_LENGTH_SLACK_M:
            v.append(Violation(f"edge {u}-{w}", "edge length >= endpoint distance"))

    m = scene.merchant
    if m.visit_count < 0:
        v.append(Violation("merchant", "visit_count >= 0"))
    if m.heatmap:
        if any(w <= 0 for _, w in m.heatmap):
            v.append(Violation("merchant", "heatmap weights positive"))
        total = math.fsum(w for _, w in m.heatmap)
        if abs(total - 1.0) > HEATMAP_WEIGHT_TOLERANCE:
            v.append(Violation("merchant", "weights not normalized", f"sum={total:.12g}"))

    if scene.ground_truth is not None:
        target = scene.target_building
        for e in scene.ground_truth.entrances:
            if target is not None:
                v.extend(_entrance_problems(e, target))
        for s in scene.ground_truth.signs:
            if s.rule_id not in rule_by_id:
                v.append(Violation(s.rule_id, "ground-truth sign references a rule"))
            if not 0 < s.legal_confidence <= 1:
                v.append(Violation(s.rule_id, "sign confidence in (0, 1]"))
    return v


def _entrance_problems(e: Entrance, b: Building) -> List[Violation]:
    out = []
    if not 0 < e.confidence <= 1:
        out.append(Violation(e.id, "confidence in (0, 1]"))
    if e.kind not in ENTRANCE_KINDS:
        out.append(Violation(e.id, "known entrance kind", e.kind))
    if e.source not in ENTRANCE_SOURCES:
        out.append(Violation(e.id, "known entrance source", e.source))
    gap = b.footprint.distance_to(e.position)
    if gap > ENTRANCE_BOUNDARY_TOLERANCE_M:
        out.append(Violation(e.id, "entrance within 5 m of footprint", f"{gap:.2f} m from {b.id}"))
    return out


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


class _Reader:
    """Typed field access that reports JSON paths on failure."""

    def __init__(self, origin: Tuple[float, float]):
        self.origin = origin

    def get(self, obj: Any, key: str, path: str, kind=None, default: Any = ...) -> Any:
        if not isinstance(obj, dict):
            raise SceneParseError(path, "expected an object")
        if key not in obj:
            if default is ...:
                raise SceneParseError(f"{path}.{key}", "missing required field")
            return default
        value = obj[key]
        if kind is not None and not _is_kind(value, kind):
            raise SceneParseError(f"{path}.{key}", f"expected {_kind_name(kind)}")
        return value

    def point(self, value: Any, path: str) -> Point:
        if (
            not isinstance(value, list)
            or len(value) != 2
            or not all(_is_kind(c, float) for c in value)
        ):
            raise SceneParseError(path, "expected a [lat, lon] pair")
        try:
            return project_to_local(float(value[0]), float(value[1]), *self.origin)
        except ValueError as exc:
            raise SceneParseError(path, str(exc)) from None

    def polyline(self, value: Any, path: str) -> Polyline:
        if not isinstance(value, list):
            raise SceneParseError(path, "expected a list of [lat, lon] pairs")
        pts = [self.point(p, f"{path}[{i}]") for i, p in enumerate(value)]
        try:
            return Polyline(tuple(pts))
        except ValueError as exc:
            raise SceneParseError(path, str(exc)) from None


def _is_kind(value: Any, kind) -> bool:
    if kind is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, kind)


def _kind_name(kind) -> str:
    return {float: "a number", int: "an integer", str: "a string", bool: "a boolean",
            list: "a list", dict: "an object"}.get(kind, str(kind))


def _parse_entrance(rd: _Reader, obj: Any, path: str) -> Entrance:
    kind = rd.get(obj, "kind", path, str, "front")
    source = rd.get(obj, "source", path, str, "structured")
    if kind not in ENTRANCE_KINDS:
        raise SceneParseError(f"{path}.kind", f"must be one of {ENTRANCE_KINDS}")
    if source not in ENTRANCE_SOURCES:
        raise SceneParseError(f"{path}.source", f"must be one of {ENTRANCE_SOURCES}")
    return Entrance(
        id=rd.get(obj, "id", path, str),
        position=rd.point(rd.get(obj, "position", path), f"{path}.position"),
        kind=kind,
        confidence=float(rd.get(obj, "confidence", path, float, 1.0)),
        source=source,
    )


def _parse_days(rd: _Reader, obj: Any, path: str) -> frozenset:
    days = rd.get(obj, "days", path, list, list(range(7)))
    out = set()
    for i, d in enumerate(days):
        if isinstance(d, str) and d[:3].lower() in DAY_NAMES:
            out.add(DAY_NAMES.index(d[:3].lower()))
        elif _is_kind(d, int) and 0 <= d < 7:
            out.add(d)
        else:
            raise SceneParseError(f"{path}.days[{i}]", "expected a weekday name or 0..6")
    return frozenset(out)


def _parse_rule(rd: _Reader, obj: Any, path: str) -> LegalityRule:
    status = rd.get(obj, "status", path, str)
    if status not in STATUSES:
        raise SceneParseError(f"{path}.status", f"must be one of {STATUSES}")
    limit = rd.get(obj, "limit_minutes", path, int, None)
    if status == TIME_LIMITED and limit is None:
        raise SceneParseError(f"{path}.limit_minutes", "required for time_limited rules")
    source = rd.get(obj, "source", path, str, "structured")
    if source not in RULE_SOURCES:
        raise SceneParseError(f"{path}.source", f"must be one of {RULE_SOURCES}")
    sched_raw = rd.get(obj, "schedule", path, list, None)
    if sched_raw is None:
        schedule = ALL_WEEK
    else:
        schedule = tuple(
            WeeklyWindow(
                _parse_days(rd, w, f"{path}.schedule[{i}]"),
                rd.get(w, "start", f"{path}.schedule[{i}]", int),
                rd.get(w, "end", f"{path}.schedule[{i}]", int),
            )
            for i, w in enumerate(sched_raw)
        )
    rate = rd.get(obj, "enforcement_rate", path, float, None)
    return LegalityRule(
        id=rd.get(obj, "id", path, str),
        segment_id=rd.get(obj, "segment_id", path, str),
        status=LegalityStatus(status, limit if status == TIME_LIMITED else None),
        fine=float(rd.get(obj, "fine", path, float, 0.0)),
        schedule=schedule,
        enforcement_rate=None if rate is None else float(rate),
        source=source,
        sign_ambiguous=rd.get(obj, "sign_ambiguous", path, bool, False),
        priority=rd.get(obj, "priority", path, int, 0),
    )


def scene_from_dict(data: Any) -> Scene:
    """Build a Scene from decoded JSON without checking invariants."""
    if not isinstance(data, dict):
        raise SceneParseError("$", "expected an object")
    bootstrap = _Reader((0.0, 0.0))
    origin = bootstrap.get(data, "origin", "$", list)
    if len(origin) != 2 or not all(_is_kind(c, float) for c in origin):
        raise SceneParseError("$.origin", "expected a [lat, lon] pair")
    olat, olon = float(origin[0]), float(origin[1])
    if not (-85 < olat < 85 and -180 <= olon <= 180):
        raise SceneParseError("$.origin", "latitude/longitude out of range")
    rd = _Reader((olat, olon))

    destination = rd.point(rd.get(data, "destination", "$"), "$.destination")

    buildings = []
    for i, b in enumerate(rd.get(data, "buildings", "$", list)):
        p = f"$.buildings[{i}]"
        buildings.append(Building(
            id=rd.get(b, "id", p, str),
            footprint=rd.polyline(rd.get(b, "footprint", p), f"{p}.footprint"),
            entrances=tuple(
                _parse_entrance(rd, e, f"{p}.entrances[{j}]")
                for j, e in enumerate(rd.get(b, "entrances", p, list, []))
            ),
        ))

    segments = []
    for i, s in enumerate(rd.get(data, "curb_segments", "$", list)):
        p = f"$.curb_segments[{i}]"
        maneuver = rd.get(s, "maneuver", p, str)
        if maneuver not in MANEUVERS:
            raise SceneParseError(f"{p}.maneuver", f"must be one of {MANEUVERS}")
        rule_ids = rd.get(s, "rule_ids", p, list, [])
        if not all(isinstance(r, str) for r in rule_ids):
            raise SceneParseError(f"{p}.rule_ids", "expected a list of strings")
        segments.append(CurbSegment(
            id=rd.get(s, "id", p, str),
            geometry=rd.polyline(rd.get(s, "geometry", p), f"{p}.geometry"),
            maneuver=maneuver,
            rule_ids=tuple(rule_ids),
        ))

    rules = tuple(
        _parse_rule(rd, r, f"$.rules[{i}]") for i, r in enumerate(rd.get(data, "rules", "$", list, []))
    )

    graph_raw = rd.get(data, "pedestrian_graph", "$", dict, {})
    nodes: Dict[int, Point] = {}
    for i, n in enumerate(rd.get(graph_raw, "nodes", "$.pedestrian_graph", list, [])):
        p = f"$.pedestrian_graph.nodes[{i}]"
        nid = rd.get(n, "id", p, int)
        if nid in nodes:
            raise SceneParseError(f"{p}.id", f"duplicate node id {nid}")
        nodes[nid] = rd.point(rd.get(n, "position", p), f"{p}.position")
    edges = []
    for i, e in enumerate(rd.get(graph_raw, "edges", "$.pedestrian_graph", list, [])):
        p = f"$.pedestrian_graph.edges[{i}]"
        if not isinstance(e, list) or len(e) not in (2, 3) or not all(_is_kind(x, int) for x in e[:2]):
            raise SceneParseError(p, "expected [u, v] or [u, v, length_m]")
        u, w = e[0], e[1]
        if u not in nodes or w not in nodes:
            raise SceneParseError(p, "edge references an unknown node")
        if len(e) == 3:
            if not _is_kind(e[2], float):
                raise SceneParseError(f"{p}[2]", "expected a number")
            length = float(e[2])
        else:
            length = euclidean_distance(nodes[u], nodes[w])
        edges.append((u, w, length))
    graph = PedestrianGraph(nodes, tuple(edges))

    m_raw = rd.get(data, "merchant", "$", dict, {})
    heatmap = tuple(
        (
            rd.point(rd.get(c, "position", f"$.merchant.heatmap[{i}]"), f"$.merchant.heatmap[{i}].position"),
            float(rd.get(c, "weight", f"$.merchant.heatmap[{i}]", float)),
        )
        for i, c in enumerate(rd.get(m_raw, "heatmap", "$.merchant", list, []))
    )
    merchant = MerchantRecord(
        visit_count=rd.get(m_raw, "visit_count", "$.merchant", int, 0),
        heatmap=heatmap,
        dynamic_change_flag=rd.get(m_raw, "dynamic_change_flag", "$.merchant", bool, False),
    )

    t_raw = rd.get(data, "analysis_time", "$", default=0)
    if _is_kind(t_raw, int):
        analysis_time = t_raw % (7 * 1440)
    elif isinstance(t_raw, str):
        try:
            analysis_time = parse_time(t_raw)
        except ValueError as exc:
            raise SceneParseError("$.analysis_time", str(exc)) from None
    else:
        raise SceneParseError("$.analysis_time", "expected weekly minutes or 'Tue 12:00'")

    gt_raw = rd.get(data, "ground_truth", "$", dict, None)
    ground_truth = None
    if gt_raw is not None:
        signs = []
        for i, s in enumerate(rd.get(gt_raw, "signs", "$.ground_truth", list, [])):
            p = f"$.ground_truth.signs[{i}]"
            signs.append(SignTruth(
                rd.get(s, "rule_id", p, str),
                rd.get(s, "legible", p, bool),
                float(rd.get(s, "legal_confidence", p, float)),
            ))
        ground_truth = GroundTruth(
            entrances=tuple(
                _parse_entrance(rd, e, f"$.ground_truth.entrances[{i}]")
                for i, e in enumerate(rd.get(gt_raw, "entrances", "$.ground_truth", list, []))
            ),
            signs=tuple(signs),
        )

    return Scene(
        origin_lat=olat,
        origin_lon=olon,
        destination=destination,
        buildings=tuple(buildings),
        curb_segments=tuple(segments),
        rules=rules,
        pedestrian_graph=graph,
        merchant=merchant,
        analysis_time=analysis_time,
        ground_truth=ground_truth,
    )


def load_scene(text: str) -> Scene:
    """Parse and validate scene file contents.

    Raises SceneParseError (with a JSON path) on schema problems and
    SceneValidationError listing every violated invariant.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError("$", f"invalid JSON: {exc}") from None
    try:
        scene = scene_from_dict(data)
    except SceneParseError:
        raise
    except ValueError as exc:
        raise SceneParseError("$", str(exc)) from None
    violations = validate_scene(scene)
    if violations:
        raise SceneValidationError(violations)
    return scene


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _entrance_dict(e: Entrance, ll) -> Dict[str, Any]:
    return {"id": e.id, "position": ll(e.position), "kind": e.kind,
            "confidence": e.confidence, "source": e.source}


def _rule_dict(r: LegalityRule) -> Dict[str, Any]:
    d: Dict[str, Any] = {"id": r.id, "segment_id": r.segment_id, "status": r.status.value}
    if r.status.value == TIME_LIMITED:
        d["limit_minutes"] = r.status.limit
    d["fine"] = r.fine
    if r.schedule != ALL_WEEK:
        d["schedule"] = [
            {"days": [DAY_NAMES[i] for i in sorted(w.days)], "start": w.start, "end": w.end}
            for w in r.schedule
        ]
    if r.enforcement_rate is not None:
        d["enforcement_rate"] = r.enforcement_rate
    d["source"] = r.source
    if r.sign_ambiguous:
        d["sign_ambiguous"] = True
    if r.priority:
        d["priority"] = r.priority
    return d


def scene_to_dict(scene: Scene) -> Dict[str, Any]:
    def ll(p: Point) -> List[float]:
        return list(unproject(p, scene.origin_lat, scene.origin_lon))

    g = scene.pedestrian_graph
    out: Dict[str, Any] = {
        "origin": [scene.origin_lat, scene.origin_lon],
        "destination": ll(scene.destination),
        "analysis_time": scene.analysis_time,
        "buildings": [
            {"id": b.id, "footprint": [ll(p) for p in b.footprint.points],
             "entrances": [_entrance_dict(e, ll) for e in b.entrances]}
            for b in scene.buildings
        ],
        "curb_segments": [
            {"id": s.id, "geometry": [ll(p) for p in s.geometry.points],
             "maneuver": s.maneuver, "rule_ids": list(s.rule_ids)}
            for s in scene.curb_segments
        ],
        "rules": [_rule_dict(r) for r in scene.rules],
        "pedestrian_graph": {
            "nodes": [{"id": nid, "position": ll(p)} for nid, p in sorted(g.nodes.items())],
            "edges": [[u, v, length] for u, v, length in g.edges],
        },
        "merchant": {
            "visit_count": scene.merchant.visit_count,
            "heatmap": [{"position": ll(p), "weight": w} for p, w in scene.merchant.heatmap],
            "dynamic_change_flag": scene.merchant.dynamic_change_flag,
        },
    }
    if scene.ground_truth is not None:
        out["ground_truth"] = {
            "entrances": [_entrance_dict(e, ll) for e in scene.ground_truth.entrances],
            "signs": [
                {"rule_id": s.rule_id, "legible": s.legible, "legal_confidence": s.legal_confidence}
                for s in scene.ground_truth.signs
            ],
        }
    return out


def dump_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=1, ensure_ascii=False) + "\n"
