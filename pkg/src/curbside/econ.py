"""Driver-income, imagery-cost and fine-exposure arithmetic. No rounding here."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

IMAGERY_RATE_PER_THOUSAND = 7.0
CAVEAT = "Assumes saved minutes convert into additional paid deliveries (enough order supply)."

# Rounded figures as quoted in the source analysis, printed next to exact values.
QUOTED_ANNUAL = {"base": 6000.0, "conservative": 3000.0, "optimistic": 8000.0}
QUOTED_DAILY = 25.0
QUOTED_PER_MINUTE = 0.33
QUOTED_IMAGERY_BAND = (0.30, 0.60)


@dataclass(frozen=True)
class EconParams:
    wage: float = 20.0
    minutes_saved_per_delivery: float = 2.5
    deliveries_per_day: float = 30.0
    working_days: float = 250.0
    fleet_size: float = 1.0

    def __post_init__(self) -> None:
        for name in ("wage", "minutes_saved_per_delivery", "deliveries_per_day", "working_days", "fleet_size"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


PRESETS = {
    "base": EconParams(),
    "conservative": EconParams(wage=20.0, minutes_saved_per_delivery=1.5, deliveries_per_day=25),
    "optimistic": EconParams(wage=25.0, minutes_saved_per_delivery=2.5, deliveries_per_day=30),
}


def per_minute_value(wage: float) -> float:
    if wage <= 0:
        raise ValueError("wage must be positive")
    return wage / 60.0


def per_driver_daily(params: EconParams) -> float:
    return params.minutes_saved_per_delivery * params.deliveries_per_day * params.wage / 60.0


def per_driver_annual(params: EconParams) -> float:
    return per_driver_daily(params) * params.working_days


def walk_time_delta(distance_delta: float, walk_speed: float = 1.2) -> float:
    if walk_speed <= 0:
        raise ValueError("walk_speed must be positive")
    return distance_delta / walk_speed


def imagery_cost(images: float, rate_per_thousand: float = IMAGERY_RATE_PER_THOUSAND) -> float:
    if images < 0:
        raise ValueError("images must be >= 0")
    return images * rate_per_thousand / 1000.0


def fleet_minutes(params: EconParams) -> float:
    """Driver-minutes freed per day across the fleet."""
    return params.fleet_size * params.minutes_saved_per_delivery * params.deliveries_per_day


def fine_exposure(choices: Iterable) -> float:
    """Expected fines over chosen spots: sum of risk x fine.

    Accepts ParkingCandidates or solver entries (anything with ``.candidate``).
    """
    total = 0.0
    for c in choices:
        cand = getattr(c, "candidate", c)
        total += cand.risk * cand.fine
    return total
