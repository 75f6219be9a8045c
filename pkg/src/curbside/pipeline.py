"""End-to-end recommendation for one scene."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from .candidates import CandidateConfig, ParkingCandidate, generate_candidates
from .dapp import Recommendation, SolveConfig, solve
from .entrances import (
    ANALYZER,
    AnalyzerReport,
    DispatchDecision,
    dispatch,
    heatmap_recommend,
    infer_entrances,
    run_analyzer,
)
from .geo import Point
from .scene import Entrance, Scene

Analyzer = Callable[[Scene], AnalyzerReport]


@dataclass(frozen=True)
class PlanResult:
    decision: DispatchDecision
    report: Optional[AnalyzerReport]
    entrances: List[Entrance]
    candidates: List[ParkingCandidate]
    recommendation: Recommendation
    heatmap: List[Tuple[Point, float]]
    analysis_time: int


def prepare(scene: Scene, config: SolveConfig = SolveConfig(), analyzer: Optional[Analyzer] = None,
            analysis_time: Optional[int] = None, interval: float = 5.0):
    """Dispatch, analyzer call, entrance inference and candidate generation."""
    t = scene.analysis_time if analysis_time is None else analysis_time
    decision = dispatch(scene.merchant)
    report = run_analyzer(analyzer, scene) if decision.route == ANALYZER else None
    entrances = infer_entrances(scene, decision, report)
    cand_cfg = CandidateConfig(interval=interval, expected_dwell=config.expected_dwell, analysis_time=t)
    candidates = generate_candidates(scene, cand_cfg, report)
    return decision, report, entrances, candidates, t


def plan(scene: Scene, config: SolveConfig = SolveConfig(), analyzer: Optional[Analyzer] = None,
         analysis_time: Optional[int] = None, interval: float = 5.0) -> PlanResult:
    decision, report, entrances, candidates, t = prepare(scene, config, analyzer, analysis_time, interval)
    heat = heatmap_recommend(scene.merchant, scene, t) if decision.route != ANALYZER else []
    rec = solve(scene, candidates, entrances, config)
    return PlanResult(decision, report, entrances, candidates, rec, heat, t)
