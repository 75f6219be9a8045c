"""Weekly legality schedules and violation-risk fusion.

Time is a weekly minute: minutes since Monday 00:00, taken modulo one week.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, FrozenSet, Iterable, List, Optional, Tuple

if TYPE_CHECKING:
    from .entrances import AnalyzerReport
    from .scene import Scene

MINUTES_PER_DAY = 1440
MINUTES_PER_WEEK = 7 * MINUTES_PER_DAY
DAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")

LEGAL = "legal"
TIME_LIMITED = "time_limited"
ILLEGAL = "illegal"
STATUSES = (LEGAL, TIME_LIMITED, ILLEGAL)
SEVERITY = {LEGAL: 0, TIME_LIMITED: 1, ILLEGAL: 2}

STRUCTURED = "structured"
HISTORICAL = "historical"
VLM = "vlm"
RULE_SOURCES = (STRUCTURED, HISTORICAL, VLM)

DEFAULT_ENFORCEMENT_RATE = 0.5
UNKNOWN_RISK = 0.5


@dataclass(frozen=True)
class WeeklyWindow:
    days: FrozenSet[int]
    start: int
    end: int

    def covers(self, t: int) -> bool:
        t %= MINUTES_PER_WEEK
        day, minute = divmod(t, MINUTES_PER_DAY)
        return day in self.days and self.start <= minute < self.end

    def problems(self) -> List[str]:
        out = []
        if not (0 <= self.start < self.end <= MINUTES_PER_DAY):
            out.append(f"window {self.start}-{self.end} not within 0 <= start < end <= 1440")
        if not self.days or not all(0 <= d < 7 for d in self.days):
            out.append(f"window days {sorted(self.days)} not a non-empty subset of 0..6")
        return out


ALL_WEEK = (WeeklyWindow(frozenset(range(7)), 0, MINUTES_PER_DAY),)


@dataclass(frozen=True)
class LegalityStatus:
    value: str
    limit: Optional[int] = None  # minutes, time_limited only

    @property
    def severity(self) -> int:
        return SEVERITY[self.value]

    @property
    def allowed(self) -> bool:
        return self.value != ILLEGAL

    def __str__(self) -> str:
        if self.value == TIME_LIMITED:
            return f"time_limited({self.limit}min)"
        return self.value


@dataclass(frozen=True)
class LegalityRule:
    id: str
    segment_id: str
    status: LegalityStatus
    fine: float = 0.0
    schedule: Tuple[WeeklyWindow, ...] = ALL_WEEK
    enforcement_rate: Optional[float] = None
    source: str = STRUCTURED
    sign_ambiguous: bool = False
    priority: int = 0

    def covers(self, t: int) -> bool:
        return any(w.covers(t) for w in self.schedule)

    def problems(self) -> List[str]:
        out = []
        for w in self.schedule:
            out.extend(w.problems())
        if self.status.value not in STATUSES:
            out.append(f"unknown status {self.status.value!r}")
        if self.status.value == TIME_LIMITED and (self.status.limit is None or self.status.limit <= 0):
            out.append("time_limited status needs a positive limit")
        if self.fine < 0:
            out.append("fine must be >= 0")
        elif self.status.value != LEGAL and self.fine <= 0:
            out.append(f"fine must be > 0 for {self.status.value} rules")
        if self.enforcement_rate is not None and not 0 <= self.enforcement_rate <= 1:
            out.append("enforcement_rate outside [0, 1]")
        if self.source not in RULE_SOURCES:
            out.append(f"unknown source {self.source!r}")
        if self.sign_ambiguous and self.source != VLM:
            out.append("sign_ambiguous is only meaningful for vlm rules")
        return out


def top_rule(rules: Iterable[LegalityRule]) -> Optional[LegalityRule]:
    """Highest priority, then most severe; rule id only breaks exact duplicates."""
    return min(rules, key=lambda r: (-r.priority, -r.status.severity, r.id), default=None)


def covering_rules(segment_id: str, scene: "Scene", t: int) -> List[LegalityRule]:
    return [r for r in scene.rules_for(segment_id) if r.covers(t)]


def legality_at(segment_id: str, scene: "Scene", t: int) -> LegalityStatus:
    rule = top_rule(covering_rules(segment_id, scene, t))
    if rule is None:
        return LegalityStatus(LEGAL)
    return rule.status


def illegal_all_day(segment_id: str, scene: "Scene", t: int,
                    sources: Tuple[str, ...] = (STRUCTURED,)) -> bool:
    """True if rules from ``sources`` make the segment illegal all day long.

    The day is the one containing ``t``. Only structured data is consulted by
    default, since this drives the candidate pre-filter.
    """
    t %= MINUTES_PER_WEEK
    day_start = t - t % MINUTES_PER_DAY
    day = day_start // MINUTES_PER_DAY
    rules = [r for r in scene.rules_for(segment_id) if r.source in sources]
    breakpoints = {0}
    for rule in rules:
        for w in rule.schedule:
            if day in w.days:
                breakpoints.update(m for m in (w.start, w.end) if m < MINUTES_PER_DAY)
    for m in sorted(breakpoints):
        rule = top_rule(r for r in rules if r.covers(day_start + m))
        if rule is None or rule.status.value != ILLEGAL:
            return False
    return True


def governing_risk_rule(segment_id: str, scene: "Scene", t: int) -> Optional[LegalityRule]:
    """The rule risk is read from: structured beats historical beats vlm."""
    covering = covering_rules(segment_id, scene, t)
    for source in RULE_SOURCES:
        rule = top_rule(r for r in covering if r.source == source)
        if rule is not None:
            return rule
    return None


def _status_risk(rule: LegalityRule, expected_dwell: float) -> float:
    status = rule.status
    if status.value == LEGAL:
        return 0.0
    if status.value == ILLEGAL:
        return 1.0
    if expected_dwell <= status.limit:
        return 0.0
    return DEFAULT_ENFORCEMENT_RATE if rule.enforcement_rate is None else rule.enforcement_rate


def risk_of(
    segment_id: str,
    scene: "Scene",
    t: int,
    expected_dwell: float = 10.0,
    report: Optional["AnalyzerReport"] = None,
) -> Tuple[float, float]:
    """Violation probability and fine for parking on ``segment_id`` at ``t``."""
    rule = governing_risk_rule(segment_id, scene, t)
    if rule is None:
        return UNKNOWN_RISK, 0.0
    if rule.source == HISTORICAL:
        rate = rule.enforcement_rate
        return (DEFAULT_ENFORCEMENT_RATE if rate is None else rate), rule.fine
    if rule.source == VLM and rule.sign_ambiguous:
        reading = report.reading_for(rule.id) if report is not None else None
        if reading is None:
            return UNKNOWN_RISK, rule.fine
        return 1.0 - reading.confidence, rule.fine
    return _status_risk(rule, expected_dwell), rule.fine


def parse_time(text: str) -> int:
    """Parse ``"Tue 12:00"`` or a bare integer into a weekly minute."""
    text = text.strip()
    if text.lstrip("-").isdigit():
        return int(text) % MINUTES_PER_WEEK
    try:
        day_s, hm = text.split()
        h, m = hm.split(":")
        day = DAY_NAMES.index(day_s[:3].lower())
        hour, minute = int(h), int(m)
    except ValueError:
        raise ValueError(f"cannot parse time {text!r}; expected e.g. 'Tue 12:00'") from None
    if not (0 <= hour < 24 and 0 <= minute < 60):
        raise ValueError(f"cannot parse time {text!r}")
    return day * MINUTES_PER_DAY + hour * 60 + minute


def format_time(t: int) -> str:
    t %= MINUTES_PER_WEEK
    day, minute = divmod(t, MINUTES_PER_DAY)
    return f"{DAY_NAMES[day].capitalize()} {minute // 60:02d}:{minute % 60:02d}"
