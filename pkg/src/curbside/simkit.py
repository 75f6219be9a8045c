"""Idle-compute windows, VLM pass scheduling, and pre-cache download timing."""
from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

DEFAULT_REQUIRED_TOPS = 60.0  # 7B INT4 VLM
DEFAULT_REQUIRED_PASSES = 2  # satellite + street view
PARKING_LOT_DURATION_CAP_S = 300.0
DRIVING_GAP_S = (20.0, 120.0)


@dataclass(frozen=True)
class PlatformSpec:
    name: str
    total_tops: float
    idle_lo: float
    idle_hi: float
    pass_lo: float
    pass_hi: float
    # upper capacity estimate when the vendor figure is itself a range
    total_tops_hi: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0 < self.idle_lo <= self.idle_hi <= 1:
            raise ValueError(f"{self.name}: need 0 < idle_lo <= idle_hi <= 1")
        if not 0 < self.pass_lo <= self.pass_hi:
            raise ValueError(f"{self.name}: need 0 < pass_lo <= pass_hi")
        if self.total_tops <= 0 or (self.total_tops_hi is not None and self.total_tops_hi < self.total_tops):
            raise ValueError(f"{self.name}: bad capacity")

    @property
    def capacity_hi(self) -> float:
        return self.total_tops if self.total_tops_hi is None else self.total_tops_hi


# Pass times for HW4 and Orin follow the published timing estimates; HW3 and
# Thor are scaled from them by relative capacity.
PLATFORMS: Dict[str, PlatformSpec] = {
    p.name: p
    for p in (
        PlatformSpec("HW3", 144.0, 0.30, 0.60, 12.0, 24.0),
        PlatformSpec("HW4", 300.0, 0.30, 0.60, 4.0, 8.0, total_tops_hi=500.0),
        PlatformSpec("Orin", 254.0, 0.30, 0.60, 6.0, 12.0),
        PlatformSpec("Thor", 2000.0, 0.30, 0.60, 2.0, 4.0),
    )
}


@dataclass(frozen=True)
class ScenarioProfile:
    kind: str
    idle_lo: float
    idle_hi: float
    duration_lo: float
    duration_hi: Optional[float]  # None: unbounded


SCENARIOS: Dict[str, ScenarioProfile] = {
    s.kind: s
    for s in (
        ScenarioProfile("deep_queue", 0.45, 0.60, 30.0, 120.0),
        ScenarioProfile("congestion", 0.40, 0.55, 60.0, 300.0),
        ScenarioProfile("front_of_queue", 0.30, 0.45, 30.0, 90.0),
        ScenarioProfile("parking_lot", 0.50, 0.65, 30.0, None),
        ScenarioProfile("left_turn_wait", 0.25, 0.40, 15.0, 45.0),
    )
}


@dataclass(frozen=True)
class ComputeWindow:
    scenario: str
    start: float
    duration: float
    idle_fraction: float

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class DriveTimeline:
    windows: Tuple[ComputeWindow, ...]
    arrival: float

    def __post_init__(self) -> None:
        prev_end = -math.inf
        for w in self.windows:
            if w.start < prev_end:
                raise ValueError("windows must be ascending and non-overlapping")
            if w.duration < 0:
                raise ValueError("negative window duration")
            prev_end = w.end
        if self.windows and prev_end > self.arrival:
            raise ValueError("windows must end before arrival")


@dataclass(frozen=True)
class PassRecord:
    start: float
    end: float
    window: int


@dataclass
class ScheduleResult:
    required_passes: int
    pass_time: float
    completed_passes: int = 0
    preempted_passes: int = 0
    passes: List[PassRecord] = field(default_factory=list)
    preempted: List[PassRecord] = field(default_factory=list)
    eligible_windows: List[int] = field(default_factory=list)

    @property
    def analysis_complete(self) -> bool:
        return self.completed_passes >= self.required_passes

    @property
    def started_passes(self) -> int:
        return self.completed_passes + self.preempted_passes

    @property
    def never_started(self) -> int:
        return self.required_passes - self.completed_passes


@dataclass(frozen=True)
class AssetManifest:
    tiers: Tuple[Tuple[str, float], ...] = (
        ("satellite+structured", 2.0),
        ("street_view", 7.5),
        ("extended", 50.0),
    )

    def __post_init__(self) -> None:
        if not self.tiers or any(size <= 0 for _, size in self.tiers):
            raise ValueError("manifest tiers need positive sizes")


def feasibility_check(platform: PlatformSpec, required_tops: float = DEFAULT_REQUIRED_TOPS
                      ) -> Tuple[float, float, str]:
    """Idle TOPS range and whether it carries a model needing ``required_tops``."""
    if required_tops <= 0:
        raise ValueError("required_tops must be positive")
    lo = platform.total_tops * platform.idle_lo
    hi = platform.capacity_hi * platform.idle_hi
    if lo < required_tops:
        verdict = "marginal" if hi >= required_tops else "no"
    elif lo / required_tops >= 10:
        verdict = "easily"
    else:
        verdict = "yes"
    return lo, hi, verdict


def pass_time_estimate(encode_latency: float, output_tokens: float, throughput: float) -> float:
    if encode_latency < 0 or output_tokens < 0 or throughput <= 0:
        raise ValueError("encode_latency, output_tokens must be >= 0 and throughput > 0")
    return encode_latency + output_tokens / throughput


def passes_in_window(window_duration: float, pass_time: float) -> int:
    if pass_time <= 0:
        raise ValueError("pass_time must be positive")
    return max(0, math.floor(window_duration / pass_time))


def schedule_passes(timeline: DriveTimeline, platform: PlatformSpec,
                    required_passes: int = DEFAULT_REQUIRED_PASSES,
                    required_tops: float = DEFAULT_REQUIRED_TOPS, seed: int = 0,
                    pass_time: Optional[float] = None) -> ScheduleResult:
    """Pack whole passes into eligible windows in time order.

    A pass that would run past its window end is killed with no credit; the next
    window starts from scratch. ``pass_time`` overrides the seeded draw.
    """
    if required_passes < 1:
        raise ValueError("required_passes must be >= 1")
    if pass_time is None:
        pass_time = random.Random(f"pass-time:{seed}").uniform(platform.pass_lo, platform.pass_hi)
    if pass_time <= 0:
        raise ValueError("pass_time must be positive")
    result = ScheduleResult(required_passes, pass_time)
    for i, w in enumerate(timeline.windows):
        if result.analysis_complete:
            break
        if w.idle_fraction * platform.total_tops < required_tops:
            continue
        result.eligible_windows.append(i)
        fit = min(passes_in_window(w.duration, pass_time), required_passes - result.completed_passes)
        for k in range(fit):
            start = w.start + k * pass_time
            result.passes.append(PassRecord(start, start + pass_time, i))
        result.completed_passes += fit
        cursor = w.start + fit * pass_time
        if not result.analysis_complete and cursor < w.end:
            result.preempted.append(PassRecord(cursor, w.end, i))
            result.preempted_passes += 1
    return result


def simulate_precache(manifest: AssetManifest, bandwidth_mbps: float,
                      cache_hit: bool = False) -> List[Tuple[str, float]]:
    """Completion time (s) of each download tier, fetched strictly in order."""
    if bandwidth_mbps <= 0:
        raise ValueError("bandwidth must be positive")
    if cache_hit:
        return [(label, 0.0) for label, _ in manifest.tiers]
    out, cumulative_mb = [], 0.0
    for label, size_mb in manifest.tiers:
        cumulative_mb += size_mb
        out.append((label, cumulative_mb * 8.0 / bandwidth_mbps))
    return out


def generate_timeline(seed: int, n_windows: int, mix: Mapping[str, float]) -> DriveTimeline:
    if abs(sum(mix.values()) - 1.0) > 1e-9:
        raise ValueError("scenario weights must sum to 1")
    unknown = set(mix) - set(SCENARIOS)
    if unknown:
        raise ValueError(f"unknown scenarios: {sorted(unknown)}")
    rng = random.Random(f"timeline:{seed}")
    kinds = [k for k in SCENARIOS if mix.get(k, 0) > 0]
    weights = [mix[k] for k in kinds]
    windows = []
    t = 0.0
    for _ in range(n_windows):
        t += rng.uniform(*DRIVING_GAP_S)
        prof = SCENARIOS[rng.choices(kinds, weights)[0]]
        hi = PARKING_LOT_DURATION_CAP_S if prof.duration_hi is None else prof.duration_hi
        duration = rng.uniform(prof.duration_lo, hi)
        idle = rng.uniform(prof.idle_lo, prof.idle_hi)
        windows.append(ComputeWindow(prof.kind, t, duration, idle))
        t += duration
    return DriveTimeline(tuple(windows), t + rng.uniform(*DRIVING_GAP_S))


def parse_mix(text: str) -> Dict[str, float]:
    """``"deep_queue=0.5,congestion=0.5"`` -> weights."""
    out = {}
    for part in text.split(","):
        name, _, weight = part.partition("=")
        out[name.strip()] = float(weight) if weight else 1.0
    total = sum(out.values())
    return {k: v / total for k, v in out.items()}


def timeline_to_dict(timeline: DriveTimeline) -> dict:
    return {"windows": [asdict(w) for w in timeline.windows], "arrival": timeline.arrival}


def timeline_from_dict(data: dict) -> DriveTimeline:
    windows = []
    for w in data["windows"]:
        if w["scenario"] not in SCENARIOS:
            raise ValueError(f"unknown scenario {w['scenario']!r}")
        windows.append(ComputeWindow(w["scenario"], float(w["start"]), float(w["duration"]),
                                     float(w["idle_fraction"])))
    return DriveTimeline(tuple(windows), float(data["arrival"]))


def load_platforms(text: str) -> Dict[str, PlatformSpec]:
    """Platform registry from a JSON list of PlatformSpec field objects."""
    return {p["name"]: PlatformSpec(**p) for p in json.loads(text)}


def completion_fraction(platform: PlatformSpec, runs: int, seed: int, n_windows: int,
                        mix: Mapping[str, float], required_passes: int = DEFAULT_REQUIRED_PASSES,
                        required_tops: float = DEFAULT_REQUIRED_TOPS,
                        pass_time: Optional[float] = None) -> float:
    done = 0
    for r in range(runs):
        tl = generate_timeline(seed * 1_000_003 + r, n_windows, mix)
        res = schedule_passes(tl, platform, required_passes, required_tops, seed * 1_000_003 + r, pass_time)
        done += res.analysis_complete
    return done / runs if runs else 0.0


def windows_summary(windows: Sequence[ComputeWindow]) -> List[str]:
    return [f"{w.scenario:<15} start={w.start:8.1f}s dur={w.duration:6.1f}s idle={w.idle_fraction:.2f}"
            for w in windows]
