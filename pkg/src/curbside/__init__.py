"""Curbside parking recommendations for last-mile delivery drivers."""
from __future__ import annotations

from .candidates import CandidateConfig, ParkingCandidate, generate_candidates
from .dapp import HARD, INFEASIBLE, SOFT, Recommendation, SolveConfig, cost_breakdown, solve
from .entrances import AnalyzerNoise, MockAnalyzer, dispatch, infer_entrances
from .geo import Point, Polyline, PedestrianGraph, walk_distance
from .oracle import oracle_solve
from .pipeline import PlanResult, plan
from .scene import Scene, dump_scene, load_scene, validate_scene
from .synth import generate_scene

__all__ = [
    "AnalyzerNoise", "CandidateConfig", "HARD", "INFEASIBLE", "MockAnalyzer", "ParkingCandidate",
    "PedestrianGraph", "PlanResult", "Point", "Polyline", "Recommendation", "SOFT", "Scene",
    "SolveConfig", "cost_breakdown", "dispatch", "dump_scene", "generate_candidates",
    "generate_scene", "infer_entrances", "load_scene", "oracle_solve", "plan", "solve",
    "validate_scene", "walk_distance",
]
