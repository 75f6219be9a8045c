"""Monetized parking-spot selection.

Each candidate costs walking time and maneuvering time at the driver's wage
plus expected fines (violation probability x fine). The argmin runs over
legal and time-limited candidates; when none exist it falls back to candidates
whose violation probability is below ``tau`` and raises an alert.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .candidates import ParkingCandidate
from .entrances import FALLBACK_ENTRANCE_ID
from .geo import DEFAULT_SNAP_TOLERANCE_M, Point, WalkConfig, WalkResult, walk_distance
from .scene import Entrance, Scene

HARD = "hard"
SOFT = "soft"
INFEASIBLE = "infeasible"

SOFT_MODE_ALERT = "No legal parking available: showing risk-tolerant options only."


@dataclass(frozen=True)
class SolveConfig:
    wage: float = 20.0  # USD/hour
    walk_speed: float = 1.2  # m/s
    tau: float = 0.1
    expected_dwell: float = 10.0  # minutes
    top_k: Optional[int] = 5  # None keeps the full ranking
    snap_tolerance: float = DEFAULT_SNAP_TOLERANCE_M

    def __post_init__(self) -> None:
        if not self.wage > 0:
            raise ValueError("wage must be positive")
        if not self.walk_speed > 0:
            raise ValueError("walk_speed must be positive")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")

    @property
    def walk_config(self) -> WalkConfig:
        return WalkConfig(snap_tolerance=self.snap_tolerance)


@dataclass(frozen=True)
class CostBreakdown:
    c_walk: float
    c_park: float
    c_risk: float
    total: float
    walk_m: float
    walk_method: str
    nearest_entrance_id: str


@dataclass(frozen=True)
class Entry:
    candidate: ParkingCandidate
    cost: CostBreakdown

    @property
    def sort_key(self) -> Tuple[float, float, float, str]:
        return (self.cost.total, self.cost.walk_m, self.candidate.risk, self.candidate.id)


@dataclass(frozen=True)
class Recommendation:
    mode: str
    entries: Tuple[Entry, ...]
    alert: bool = False
    entrance_fallback: bool = False

    @property
    def best(self) -> Optional[Entry]:
        return self.entries[0] if self.entries else None

    @property
    def alert_message(self) -> Optional[str]:
        return SOFT_MODE_ALERT if self.alert else None


class WalkMemo:
    """Per-solve cache of walk distances keyed on endpoint positions."""

    def __init__(self, scene: Scene, config: WalkConfig):
        self.graph = scene.pedestrian_graph
        self.config = config
        self._cache: Dict[Tuple[Point, Point], WalkResult] = {}

    def __call__(self, p: Point, e: Point) -> WalkResult:
        key = (p, e)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = walk_distance(p, e, self.graph, self.config)
        return hit


def cost_breakdown(candidate: ParkingCandidate, entrances: Sequence[Entrance], scene: Scene,
                   config: SolveConfig = SolveConfig(), memo: Optional[WalkMemo] = None) -> CostBreakdown:
    if not entrances:
        raise ValueError("at least one entrance is required")
    memo = memo or WalkMemo(scene, config.walk_config)
    walk, entrance = min(
        ((memo(candidate.position, e.position), e) for e in entrances),
        key=lambda item: (item[0].distance, item[1].id),
    )
    per_second = config.wage / 3600.0
    c_walk = (walk.distance / config.walk_speed) * per_second
    c_park = candidate.park_time * per_second
    c_risk = candidate.risk * candidate.fine
    return CostBreakdown(
        c_walk=c_walk,
        c_park=c_park,
        c_risk=c_risk,
        total=c_walk + c_park + c_risk,
        walk_m=walk.distance,
        walk_method=walk.method,
        nearest_entrance_id=entrance.id,
    )


def score_all(scene: Scene, candidates: Sequence[ParkingCandidate], entrances: Sequence[Entrance],
              config: SolveConfig = SolveConfig()) -> List[Entry]:
    memo = WalkMemo(scene, config.walk_config)
    return [Entry(c, cost_breakdown(c, entrances, scene, config, memo)) for c in candidates]


def rank(entries: Sequence[Entry], config: SolveConfig) -> Tuple[str, List[Entry]]:
    """Pick the feasible set and order it; returns (mode, ranked entries)."""
    feasible = [e for e in entries if e.candidate.legality.allowed]
    mode = HARD
    if not feasible:
        feasible = [e for e in entries if e.candidate.risk < config.tau]
        mode = SOFT if feasible else INFEASIBLE
    feasible.sort(key=lambda e: e.sort_key)
    return mode, feasible


def solve(scene: Scene, candidates: Sequence[ParkingCandidate], entrances: Sequence[Entrance],
          config: SolveConfig = SolveConfig()) -> Recommendation:
    if not candidates:
        return Recommendation(INFEASIBLE, (), entrance_fallback=_is_fallback(entrances))
    mode, ranked = rank(score_all(scene, candidates, entrances, config), config)
    if config.top_k is not None:
        ranked = ranked[: config.top_k]
    return Recommendation(mode, tuple(ranked), alert=mode == SOFT,
                          entrance_fallback=_is_fallback(entrances))


def _is_fallback(entrances: Sequence[Entrance]) -> bool:
    return any(e.id == FALLBACK_ENTRANCE_ID for e in entrances)
