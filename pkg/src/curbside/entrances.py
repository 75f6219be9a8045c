"""Entrance inference and crowdsourced-vs-analyzer dispatch."""
from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .candidates import sample_offsets
from .geo import Point, euclidean_distance, unproject
from .rules import legality_at
from .scene import Entrance, GroundTruth, MerchantRecord, Scene

FREQUENT_VISITS = 10
DEDUP_RADIUS_M = 3.0
FALLBACK_ENTRANCE_ID = "fallback@destination"
FALLBACK_CONFIDENCE = 0.1
ILLEGIBLE_CONFIDENCE = 0.5

CROWDSOURCED = "crowdsourced"
ANALYZER = "analyzer"


class AnalyzerUnavailable(RuntimeError):
    """The analyzer could not produce a report (no data, bad response, timeout)."""


@dataclass(frozen=True)
class SignReading:
    rule_id: str
    legible: bool
    confidence: float  # analyzer confidence in the "legal" reading


@dataclass(frozen=True)
class AnalyzerReport:
    entrances: Tuple[Entrance, ...] = ()
    sign_readings: Tuple[SignReading, ...] = ()
    passes_used: int = 0

    def reading_for(self, rule_id: str) -> Optional[SignReading]:
        for r in self.sign_readings:
            if r.rule_id == rule_id:
                return r
        return None


@dataclass(frozen=True)
class DispatchDecision:
    route: str
    reason: str


@dataclass(frozen=True)
class AnalyzerNoise:
    position_sigma: float = 0.0
    miss_rate: float = 0.0
    misread_rate: float = 0.0


def dispatch(merchant: MerchantRecord) -> DispatchDecision:
    if merchant.dynamic_change_flag:
        return DispatchDecision(ANALYZER, "dynamic_change")
    if merchant.visit_count >= FREQUENT_VISITS and merchant.heatmap:
        return DispatchDecision(CROWDSOURCED, "frequent")
    if merchant.visit_count == 0:
        return DispatchDecision(ANALYZER, "cold_start")
    return DispatchDecision(ANALYZER, "long_tail")


def heatmap_recommend(merchant: MerchantRecord, scene: Scene, t: Optional[int] = None,
                      k: int = 3, interval: float = 5.0) -> List[Tuple[Point, float]]:
    """Top-k heatmap cells whose nearest curb sample is not illegal at ``t``."""
    if not merchant.heatmap:
        raise ValueError("merchant has no heatmap")
    t = scene.analysis_time if t is None else t
    samples = [
        (seg.geometry.point_at(s), seg.id)
        for seg in scene.curb_segments
        for s in sample_offsets(seg.geometry.length, interval)
    ]
    ranked = sorted(enumerate(merchant.heatmap), key=lambda item: (-item[1][1], item[0]))
    out = []
    for _, (cell, weight) in ranked:
        _, seg_id = min(samples, key=lambda s: euclidean_distance(s[0], cell))
        if legality_at(seg_id, scene, t).allowed:
            out.append((cell, weight))
            if len(out) == k:
                break
    return out


def mock_analyze(ground_truth: Optional[GroundTruth], noise: AnalyzerNoise = AnalyzerNoise(),
                 seed: int = 0, passes: int = 2) -> AnalyzerReport:
    """Annotation-driven stand-in for a vision-language analyzer."""
    if ground_truth is None:
        raise AnalyzerUnavailable("scene has no ground-truth block")
    rng = random.Random(seed)
    confidence = 1.0 / (1.0 + noise.position_sigma / 10.0)
    entrances = []
    for e in ground_truth.entrances:
        # draws are made unconditionally so one entrance's miss never shifts the next's noise
        missed = rng.random() < noise.miss_rate
        dx = rng.gauss(0.0, noise.position_sigma) if noise.position_sigma > 0 else 0.0
        dy = rng.gauss(0.0, noise.position_sigma) if noise.position_sigma > 0 else 0.0
        if missed:
            continue
        entrances.append(Entrance(
            id=e.id,
            position=Point(e.position.x + dx, e.position.y + dy),
            kind=e.kind,
            confidence=confidence,
            source="vlm",
        ))
    readings = []
    for s in ground_truth.signs:
        legible = s.legible != (rng.random() < noise.misread_rate)
        readings.append(SignReading(s.rule_id, legible, s.legal_confidence if legible else ILLEGIBLE_CONFIDENCE))
    return AnalyzerReport(tuple(entrances), tuple(readings), passes)


class MockAnalyzer:
    def __init__(self, noise: AnalyzerNoise = AnalyzerNoise(), seed: int = 0):
        self.noise = noise
        self.seed = seed

    def __call__(self, scene: Scene) -> AnalyzerReport:
        return mock_analyze(scene.ground_truth, self.noise, self.seed)


def _dedupe(entrances: Sequence[Entrance]) -> List[Entrance]:
    source_rank = {"structured": 0, "crowdsourced": 1, "vlm": 2}
    kept: List[Entrance] = []
    for e in sorted(entrances, key=lambda e: (-e.confidence, source_rank[e.source], e.id)):
        if all(euclidean_distance(e.position, k.position) > DEDUP_RADIUS_M for k in kept):
            kept.append(e)
    return sorted(kept, key=lambda e: e.id)


def fallback_entrance(scene: Scene) -> Entrance:
    return Entrance(FALLBACK_ENTRANCE_ID, scene.destination, "front", FALLBACK_CONFIDENCE, "vlm")


def infer_entrances(scene: Scene, decision: DispatchDecision,
                    report: Optional[AnalyzerReport] = None) -> List[Entrance]:
    """Known entrances of the destination building, plus analyzer findings on that route."""
    target = scene.target_building
    found = list(target.entrances) if target is not None else []
    if decision.route == ANALYZER and report is not None:
        found.extend(report.entrances)
    merged = _dedupe(found)
    return merged or [fallback_entrance(scene)]


def run_analyzer(analyzer, scene: Scene) -> Optional[AnalyzerReport]:
    """Call ``analyzer(scene)``; an unavailable analyzer yields ``None``."""
    if analyzer is None:
        return None
    try:
        return analyzer(scene)
    except AnalyzerUnavailable:
        return None


def synthetic_merchant_population(n: int, seed: int = 0, frequent_share: float = 0.65,
                                  flag_rate: float = 0.03) -> List[MerchantRecord]:
    """One merchant record per delivery.

    ``frequent_share`` of deliveries go to merchants with at least ten visits and
    a heatmap; the rest split between cold-start (0 visits) and long-tail
    (1-9 visits). ``flag_rate`` of all records carry the dynamic-change flag.
    """
    rng = random.Random(f"merchants:{seed}")
    cell = ((Point(0.0, 0.0), 1.0),)
    out = []
    for _ in range(n):
        if rng.random() < frequent_share:
            rec = MerchantRecord(rng.randint(FREQUENT_VISITS, 500), cell)
        elif rng.random() < 0.3:
            rec = MerchantRecord(0)
        else:
            rec = MerchantRecord(rng.randint(1, FREQUENT_VISITS - 1), cell if rng.random() < 0.5 else ())
        if rng.random() < flag_rate:
            rec = replace(rec, dynamic_change_flag=True)
        out.append(rec)
    return out


def trigger_rate(merchants: Sequence[MerchantRecord]) -> float:
    if not merchants:
        return 0.0
    return sum(dispatch(m).route == ANALYZER for m in merchants) / len(merchants)


# wire format --------------------------------------------------------------


def report_to_dict(report: AnalyzerReport, origin: Tuple[float, float]) -> Dict[str, Any]:
    return {
        "entrances": [
            {"id": e.id, "position": list(unproject(e.position, *origin)), "kind": e.kind,
             "confidence": e.confidence}
            for e in report.entrances
        ],
        "sign_readings": [
            {"rule_id": r.rule_id, "legible": r.legible, "confidence": r.confidence}
            for r in report.sign_readings
        ],
        "passes_used": report.passes_used,
    }

