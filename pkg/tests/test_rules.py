from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from curbside.entrances import AnalyzerReport, SignReading
from curbside.rules import (
    ILLEGAL,
    LEGAL,
    MINUTES_PER_WEEK,
    TIME_LIMITED,
    WeeklyWindow,
    format_time,
    illegal_all_day,
    legality_at,
    parse_time,
    risk_of,
)
from helpers import make_scene, rule, segment

SEG = segment("s1", [(-50.0, -20.0), (50.0, -20.0)])
WEEKDAY_DAYTIME = (WeeklyWindow(frozenset(range(5)), 7 * 60, 19 * 60),)


def scene_with(*rules):
    return make_scene([SEG], rules)


def test_parse_and_format_time():
    assert parse_time("Tue 12:00") == 1440 + 720
    assert parse_time("monday 00:00") == 0
    assert parse_time("10080") == 0
    assert format_time(parse_time("Sun 23:59")) == "Sun 23:59"
    with pytest.raises(ValueError):
        parse_time("Tue 25:00")
    with pytest.raises(ValueError):
        parse_time("noon")


def test_no_rules_is_legal():
    assert legality_at("s1", scene_with(), 0).value == LEGAL


def test_weekday_window_membership():
    s = scene_with(rule("r1", "s1", ILLEGAL, fine=65, schedule=WEEKDAY_DAYTIME))
    assert legality_at("s1", s, parse_time("Tue 12:00")).value == ILLEGAL
    assert legality_at("s1", s, parse_time("Tue 20:00")).value == LEGAL
    assert legality_at("s1", s, parse_time("Sat 12:00")).value == LEGAL


def test_priority_then_severity():
    s = scene_with(rule("a", "s1", LEGAL, priority=1), rule("b", "s1", ILLEGAL, fine=65))
    assert legality_at("s1", s, 0).value == LEGAL
    s = scene_with(rule("a", "s1", LEGAL), rule("b", "s1", ILLEGAL, fine=65))
    assert legality_at("s1", s, 0).value == ILLEGAL
    s = scene_with(rule("a", "s1", TIME_LIMITED, limit=30, fine=40), rule("b", "s1", LEGAL))
    assert legality_at("s1", s, 0).value == TIME_LIMITED


def test_risk_structured_legal_and_illegal():
    assert risk_of("s1", scene_with(rule("r", "s1", LEGAL)), 0) == (0.0, 0.0)
    assert risk_of("s1", scene_with(rule("r", "s1", ILLEGAL, fine=115)), 0) == (1.0, 115)


def test_risk_historical_rate():
    s = scene_with(rule("h", "s1", ILLEGAL, fine=65, source="historical", rate=0.3))
    assert risk_of("s1", s, 0) == (0.3, 65)


def test_risk_structured_beats_historical():
    s = scene_with(rule("h", "s1", ILLEGAL, fine=65, source="historical", rate=0.3, priority=5),
                   rule("r", "s1", LEGAL))
    assert risk_of("s1", s, 0) == (0.0, 0.0)


def test_risk_time_limited_dwell():
    s = scene_with(rule("t", "s1", TIME_LIMITED, limit=15, fine=40))
    assert risk_of("s1", s, 0, expected_dwell=10) == (0.0, 40)
    assert risk_of("s1", s, 0, expected_dwell=20) == (0.5, 40)
    s = scene_with(rule("t", "s1", TIME_LIMITED, limit=15, fine=40, rate=0.2))
    assert risk_of("s1", s, 0, expected_dwell=20) == (0.2, 40)


def test_risk_ambiguous_sign():
    s = scene_with(rule("v", "s1", ILLEGAL, fine=65, source="vlm", ambiguous=True))
    assert risk_of("s1", s, 0) == (0.5, 65)
    report = AnalyzerReport(sign_readings=(SignReading("v", True, 0.95),))
    r, fine = risk_of("s1", s, 0, report=report)
    assert r == pytest.approx(0.05) and fine == 65


def test_risk_without_information():
    assert risk_of("s1", scene_with(), 0) == (0.5, 0.0)


def test_illegal_all_day_structured_only():
    full = scene_with(rule("r", "s1", ILLEGAL, fine=65))
    assert illegal_all_day("s1", full, 100)
    partial = scene_with(rule("r", "s1", ILLEGAL, fine=65, schedule=WEEKDAY_DAYTIME))
    assert not illegal_all_day("s1", partial, parse_time("Tue 12:00"))
    historical = scene_with(rule("h", "s1", ILLEGAL, fine=65, source="historical", rate=0.9))
    assert not illegal_all_day("s1", historical, 0)
    # two windows that together span the whole day
    halves = (WeeklyWindow(frozenset(range(7)), 0, 720), WeeklyWindow(frozenset(range(7)), 720, 1440))
    assert illegal_all_day("s1", scene_with(rule("r", "s1", ILLEGAL, fine=65, schedule=halves)), 0)


def test_rule_problems():
    assert rule("r", "s1", ILLEGAL, fine=0).problems()
    assert rule("r", "s1", TIME_LIMITED, fine=10).problems()
    assert WeeklyWindow(frozenset({0}), 600, 500).problems()
    assert not rule("r", "s1", ILLEGAL, fine=10).problems()


windows = st.builds(
    lambda days, a, b: WeeklyWindow(frozenset(days), min(a, b), max(a, b) + 1),
    st.sets(st.integers(0, 6), min_size=1), st.integers(0, 1438), st.integers(0, 1438),
)
rule_specs = st.lists(
    st.tuples(st.sampled_from([LEGAL, TIME_LIMITED, ILLEGAL]), windows, st.integers(0, 3),
              st.sampled_from(["structured", "historical", "vlm"]), st.floats(0, 1)),
    max_size=5,
)


def build(specs):
    return [
        rule(f"r{i}", "s1", status, limit=30 if status == TIME_LIMITED else None,
             fine=0 if status == LEGAL else 65, schedule=(w,), priority=prio, source=src, rate=rate)
        for i, (status, w, prio, src, rate) in enumerate(specs)
    ]


@given(rule_specs, st.integers(0, MINUTES_PER_WEEK - 1))
def test_week_periodicity(specs, t):
    s = scene_with(*build(specs))
    assert legality_at("s1", s, t) == legality_at("s1", s, t + MINUTES_PER_WEEK)
    assert risk_of("s1", s, t) == risk_of("s1", s, t + MINUTES_PER_WEEK)


@given(rule_specs, st.integers(0, MINUTES_PER_WEEK - 1), st.floats(0, 120))
def test_risk_in_unit_interval(specs, t, dwell):
    r, fine = risk_of("s1", scene_with(*build(specs)), t, dwell)
    assert 0.0 <= r <= 1.0 and fine >= 0


@given(rule_specs, st.integers(0, MINUTES_PER_WEEK - 1),
       st.sampled_from([LEGAL, TIME_LIMITED, ILLEGAL]))
def test_lower_priority_rule_never_overrides(specs, t, status):
    rules = build(specs)
    top = rule("top", "s1", LEGAL, priority=10)
    before = legality_at("s1", scene_with(top, *rules), t)
    extra = rule("zz", "s1", status, limit=30 if status == TIME_LIMITED else None,
                 fine=0 if status == LEGAL else 65, priority=-1)
    assert legality_at("s1", scene_with(top, extra, *rules), t) == before
