from __future__ import annotations

from typing import Iterable, Optional, Sequence

from curbside.geo import PedestrianGraph, Point, polyline_from_xy
from curbside.rules import ALL_WEEK, LegalityRule, LegalityStatus
from curbside.scene import Building, CurbSegment, Entrance, GroundTruth, MerchantRecord, Scene


def square(cx: float, cy: float, half: float):
    return polyline_from_xy([(cx - half, cy - half), (cx + half, cy - half), (cx + half, cy + half),
                             (cx - half, cy + half), (cx - half, cy - half)])


def segment(sid: str, coords, maneuver: str = "pull_over") -> CurbSegment:
    return CurbSegment(sid, polyline_from_xy(coords), maneuver)


def rule(rid: str, seg: str, status: str = "legal", *, limit: Optional[int] = None, fine: float = 0.0,
         source: str = "structured", schedule=ALL_WEEK, rate: Optional[float] = None,
         ambiguous: bool = False, priority: int = 0) -> LegalityRule:
    return LegalityRule(rid, seg, LegalityStatus(status, limit), fine, schedule, rate, source, ambiguous, priority)


def make_scene(segments: Sequence[CurbSegment], rules: Iterable[LegalityRule] = (),
               entrances: Sequence[Entrance] = (Entrance("e1", Point(0.0, -10.0)),),
               graph: Optional[PedestrianGraph] = None, destination: Point = Point(0.0, 0.0),
               merchant: MerchantRecord = MerchantRecord(), t: int = 0,
               ground_truth: Optional[GroundTruth] = None) -> Scene:
    """A 20 m square building centred on the destination, plus the given curbs."""
    building = Building("b1", square(destination.x, destination.y, 10.0), tuple(entrances))
    return Scene(40.0, -74.0, destination, (building,), tuple(segments), tuple(rules),
                 graph or PedestrianGraph(), merchant, t, ground_truth)

