from __future__ import annotations

import pytest

from curbside.bench import HEADER, POLICIES, report_csv, report_markdown, run_bench
from curbside.entrances import MockAnalyzer
from curbside.pipeline import plan
from curbside.synth import generate_scene


def scenes(n, preset="row_shops"):
    return [(f"{preset}_{s:03d}", generate_scene(s, preset)) for s in range(n)]


def test_policies_see_identical_scene_sets():
    report = run_bench(scenes(15), analyzer=MockAnalyzer())
    assert {s.scenes for s in report.stats.values()} == {15}
    assert report.scene_names == sorted(report.scene_names)


def test_per_scene_dominance():
    # one scene at a time: fines under the solver never exceed nearest-any parking
    for name, scene in scenes(40):
        report = run_bench([(name, scene)], analyzer=MockAnalyzer())
        assert report.dominance_ok, name


def test_legal_nearest_walks_least_among_legal_policies():
    report = run_bench(scenes(30, "standalone"), analyzer=MockAnalyzer())
    assert report.stats["legal_nearest"].mean_walk_m <= report.stats["dapp"].mean_walk_m
    assert report.stats["nearest_any"].mean_walk_m <= report.stats["legal_nearest"].mean_walk_m


def test_single_policy_report():
    report = run_bench(scenes(3), policies=["dapp"])
    assert list(report.stats) == ["dapp"]
    assert report_csv(report).count("\r\n") == 2
    assert report_markdown(report).splitlines()[0] == "| " + " | ".join(HEADER) + " |"


def test_unknown_policy():
    with pytest.raises(ValueError):
        run_bench(scenes(1), policies=["teleport"])


def test_plan_end_to_end():
    result = plan(generate_scene(2, "standalone"), analyzer=MockAnalyzer())
    assert result.recommendation.mode == "hard"
    assert result.candidates and result.entrances
    assert POLICIES[0] == "dapp"
