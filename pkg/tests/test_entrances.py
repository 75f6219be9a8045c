from __future__ import annotations

import json

import httpx
import pytest

from curbside.entrances import (
    ANALYZER,
    CROWDSOURCED,
    FALLBACK_ENTRANCE_ID,
    AnalyzerNoise,
    AnalyzerReport,
    AnalyzerUnavailable,
    DispatchDecision,
    MockAnalyzer,
    dispatch,
    heatmap_recommend,
    infer_entrances,
    mock_analyze,
    report_to_dict,
    run_analyzer,
    synthetic_merchant_population,
    trigger_rate,
)
from curbside.geo import Point
from curbside.remote import RemoteAnalyzer, report_from_dict
from curbside.rules import ILLEGAL
from curbside.scene import Entrance, GroundTruth, MerchantRecord, SignTruth
from curbside.synth import PRESETS, generate_scene
from helpers import make_scene, rule, segment

CELL = ((Point(0, -20), 1.0),)


# dispatch --------------------------------------------------------------------


@pytest.mark.parametrize("merchant, route, reason", [
    (MerchantRecord(25, CELL), CROWDSOURCED, "frequent"),
    (MerchantRecord(3, CELL), ANALYZER, "long_tail"),
    (MerchantRecord(25, CELL, True), ANALYZER, "dynamic_change"),
    (MerchantRecord(0), ANALYZER, "cold_start"),
    (MerchantRecord(40), ANALYZER, "long_tail"),
    (MerchantRecord(9, CELL), ANALYZER, "long_tail"),
    (MerchantRecord(10, CELL), CROWDSOURCED, "frequent"),
])
def test_dispatch(merchant, route, reason):
    assert dispatch(merchant) == DispatchDecision(route, reason)


def test_trigger_rate_band():
    rate = trigger_rate(synthetic_merchant_population(20_000, seed=1))
    assert 0.30 <= rate <= 0.40


# heatmap ---------------------------------------------------------------------


def heat_scene(a_illegal: bool = False):
    segs = [segment("sa", [(-40, -20), (-10, -20)]), segment("sb", [(10, -20), (40, -20)])]
    rules = [rule("ra", "sa", ILLEGAL, fine=65) if a_illegal else rule("ra", "sa"), rule("rb", "sb")]
    merchant = MerchantRecord(30, ((Point(-25, -21), 0.7), (Point(25, -21), 0.3)))
    return make_scene(segs, rules, merchant=merchant)


def test_heatmap_ordered_by_weight():
    s = heat_scene()
    assert [w for _, w in heatmap_recommend(s.merchant, s, k=2)] == [0.7, 0.3]
    assert [w for _, w in heatmap_recommend(s.merchant, s, k=1)] == [0.7]


def test_heatmap_skips_illegal_cells():
    s = heat_scene(a_illegal=True)
    assert heatmap_recommend(s.merchant, s, k=2) == [(Point(25, -21), 0.3)]


# mock analyzer ---------------------------------------------------------------


TRUTH = GroundTruth(
    entrances=(Entrance("e1", Point(0, -10)), Entrance("e2", Point(10, 0), "side")),
    signs=(SignTruth("r1", True, 0.95), SignTruth("r2", False, 0.4)),
)


def test_mock_zero_noise_is_exact():
    rep = mock_analyze(TRUTH, AnalyzerNoise(), seed=5)
    assert [(e.id, e.position, e.confidence, e.source) for e in rep.entrances] == [
        ("e1", Point(0, -10), 1.0, "vlm"), ("e2", Point(10, 0), 1.0, "vlm")]
    assert rep.reading_for("r1").legible and rep.reading_for("r1").confidence == 0.95


def test_mock_full_miss():
    assert mock_analyze(TRUTH, AnalyzerNoise(miss_rate=1.0)).entrances == ()


def test_mock_sigma_confidence():
    rep = mock_analyze(TRUTH, AnalyzerNoise(position_sigma=10), seed=3)
    assert all(e.confidence == 0.5 for e in rep.entrances)
    assert rep == mock_analyze(TRUTH, AnalyzerNoise(position_sigma=10), seed=3)
    assert rep != mock_analyze(TRUTH, AnalyzerNoise(position_sigma=10), seed=4)


def test_mock_misread_flips_legibility():
    rep = mock_analyze(TRUTH, AnalyzerNoise(misread_rate=1.0))
    assert [r.legible for r in rep.sign_readings] == [False, True]


def test_mock_without_ground_truth():
    with pytest.raises(AnalyzerUnavailable):
        mock_analyze(None)
    assert run_analyzer(MockAnalyzer(), make_scene([segment("s", [(0, 20), (9, 20)])])) is None


@pytest.mark.parametrize("preset", PRESETS)
def test_mock_recovers_generated_ground_truth(preset):
    for seed in range(20):
        scene = generate_scene(seed, preset)
        rep = MockAnalyzer()(scene)
        assert [(e.id, e.position) for e in rep.entrances] == [
            (e.id, e.position) for e in scene.ground_truth.entrances]


# inference -------------------------------------------------------------------


def scene_with_entrances(entrances):
    return make_scene([segment("s", [(-20, -20), (20, -20)])], entrances=entrances)


def test_infer_structured_on_crowdsourced_route():
    s = scene_with_entrances([Entrance("e1", Point(0, -10))])
    report = AnalyzerReport((Entrance("v1", Point(10, 5), source="vlm"),))
    got = infer_entrances(s, DispatchDecision(CROWDSOURCED, "frequent"), report)
    assert [e.id for e in got] == ["e1"]


def test_infer_from_analyzer():
    s = scene_with_entrances([])
    report = AnalyzerReport((Entrance("v1", Point(0, -10), source="vlm"), Entrance("v2", Point(10, 0), source="vlm")))
    got = infer_entrances(s, DispatchDecision(ANALYZER, "cold_start"), report)
    assert [e.id for e in got] == ["v1", "v2"]


def test_infer_dedupes_within_three_meters():
    s = scene_with_entrances([Entrance("e1", Point(0, -10))])
    report = AnalyzerReport((Entrance("v1", Point(2, -10), confidence=0.6, source="vlm"),
                             Entrance("v2", Point(-10, 0), confidence=0.6, source="vlm")))
    got = infer_entrances(s, DispatchDecision(ANALYZER, "long_tail"), report)
    assert [e.id for e in got] == ["e1", "v2"]


def test_infer_fallback_at_destination():
    s = scene_with_entrances([])
    got = infer_entrances(s, DispatchDecision(ANALYZER, "cold_start"), None)
    assert len(got) == 1
    e = got[0]
    assert (e.id, e.position, e.confidence, e.source) == (FALLBACK_ENTRANCE_ID, s.destination, 0.1, "vlm")


# remote client ---------------------------------------------------------------


def sample_scene():
    return make_scene([segment("s", [(-20, -20), (20, -20)])],
                      [rule("rv", "s", ILLEGAL, fine=65, source="vlm", ambiguous=True)])


def completion(content: str) -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


def good_payload(scene) -> dict:
    rep = AnalyzerReport((Entrance("v1", Point(0, -10), "front", 0.8, "vlm"),), (), 2)
    data = report_to_dict(rep, (scene.origin_lat, scene.origin_lon))
    data["sign_readings"] = [{"rule_id": "rv", "legible": True, "confidence": 0.9}]
    return data


def analyzer_returning(handler) -> RemoteAnalyzer:
    return RemoteAnalyzer("http://analyzer.test/v1/chat/completions", "vision-7b",
                          api_key="k", transport=httpx.MockTransport(handler),
                          image_urls=["https://img.test/sat.png"])


def test_remote_parses_valid_response():
    scene = sample_scene()
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["body"] = json.loads(request.content)
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json=completion(json.dumps(good_payload(scene))))

    rep = analyzer_returning(handler)(scene)
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["model"] == "vision-7b"
    assert seen["body"]["response_format"] == {"type": "json_object"}
    user = seen["body"]["messages"][1]["content"]
    assert any(part["type"] == "image_url" for part in user)
    assert rep.passes_used == 2
    assert rep.entrances[0].position.y == pytest.approx(-10, abs=1e-3)
    assert rep.reading_for("rv").confidence == 0.9


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("passes_used"),
    lambda d: d.update(extra=1),
    lambda d: d["entrances"][0].update(confidence=1.5),
    lambda d: d["entrances"][0].update(kind="window"),
    lambda d: d["entrances"][0].update(position=[1.0]),
    lambda d: d["sign_readings"][0].update(legible="yes"),
])
def test_remote_rejects_malformed_reports(mutate):
    scene = sample_scene()
    data = good_payload(scene)
    mutate(data)
    analyzer = analyzer_returning(lambda r: httpx.Response(200, json=completion(json.dumps(data))))
    with pytest.raises(AnalyzerUnavailable):
        analyzer(scene)
    assert run_analyzer(analyzer, scene) is None


@pytest.mark.parametrize("handler", [
    lambda r: httpx.Response(500, text="boom"),
    lambda r: httpx.Response(200, text="not json"),
    lambda r: httpx.Response(200, json={"choices": []}),
    lambda r: httpx.Response(200, json=completion("here you go: {")),
])
def test_remote_transport_failures(handler):
    with pytest.raises(AnalyzerUnavailable):
        analyzer_returning(handler)(sample_scene())


def test_remote_timeout_is_unavailable():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    with pytest.raises(AnalyzerUnavailable):
        analyzer_returning(handler)(sample_scene())


def test_report_dict_round_trip():
    rep = AnalyzerReport((Entrance("v1", Point(3, -10), "rear", 0.7, "vlm"),), (), 1)
    back = report_from_dict(report_to_dict(rep, (40.0, -74.0)), (40.0, -74.0))
    assert back.entrances[0].kind == "rear"
    assert back.entrances[0].position.x == pytest.approx(3, abs=1e-3)
