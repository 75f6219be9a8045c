"""Candidate parking positions sampled along curb polylines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from .geo import Point, Polyline, euclidean_distance
from .rules import LegalityStatus, illegal_all_day, legality_at, risk_of
from .scene import Scene

MIN_INTERVAL_M = 5.0
MAX_INTERVAL_M = 10.0
SEARCH_RADIUS_M = 200.0
_COINCIDENT_M = 1e-9


@dataclass(frozen=True)
class CandidateConfig:
    interval: float = 5.0
    radius: float = SEARCH_RADIUS_M
    expected_dwell: float = 10.0  # minutes
    analysis_time: Optional[int] = None  # overrides scene.analysis_time


@dataclass(frozen=True)
class ParkingCandidate:
    id: str
    position: Point
    segment_id: str
    offset: float
    maneuver: str
    park_time: float
    legality: LegalityStatus
    risk: float
    fine: float


def sample_offsets(length: float, interval: float) -> List[float]:
    if not MIN_INTERVAL_M <= interval <= MAX_INTERVAL_M:
        raise ValueError(f"sampling interval {interval} m outside [5, 10] m")
    offsets = []
    k = 0
    while k * interval <= length + _COINCIDENT_M:
        offsets.append(min(k * interval, length))
        k += 1
    if length - offsets[-1] > _COINCIDENT_M:
        offsets.append(length)
    return offsets


def sample_polyline(line: Polyline, interval: float) -> List[Point]:
    """Points every ``interval`` meters of arc length, endpoints included."""
    return [line.point_at(s) for s in sample_offsets(line.length, interval)]


def generate_candidates(scene: Scene, config: CandidateConfig = CandidateConfig(),
                        report=None) -> List[ParkingCandidate]:
    t = scene.analysis_time if config.analysis_time is None else config.analysis_time
    out: List[Tuple[Tuple[str, float], ParkingCandidate]] = []
    for seg in scene.curb_segments:
        if illegal_all_day(seg.id, scene, t):
            continue
        status = legality_at(seg.id, scene, t)
        risk, fine = risk_of(seg.id, scene, t, config.expected_dwell, report)
        line = seg.geometry
        for i, s in enumerate(sample_offsets(line.length, config.interval)):
            p = line.point_at(s)
            if euclidean_distance(p, scene.destination) > config.radius:
                continue
            cand = ParkingCandidate(
                id=f"{seg.id}#{i:03d}",
                position=p,
                segment_id=seg.id,
                offset=s,
                maneuver=seg.maneuver,
                park_time=seg.park_time,
                legality=status,
                risk=risk,
                fine=fine,
            )
            out.append(((seg.id, s), cand))
    out.sort(key=lambda item: item[0])
    return [c for _, c in out]
