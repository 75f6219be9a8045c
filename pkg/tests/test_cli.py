from __future__ import annotations

import csv
import io
import json

import pytest

from curbside.cli import main
from curbside.dapp import SolveConfig
from curbside.entrances import MockAnalyzer
from curbside.oracle import oracle_solve
from curbside.pipeline import prepare
from curbside.rules import ILLEGAL
from curbside.scene import dump_scene, load_scene
from curbside.synth import generate_scene
from helpers import make_scene, rule, segment


def run(capsys, *argv):
    code = main(["--no-timestamp" if a == "@" else a for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# gen -------------------------------------------------------------------------


def test_gen_writes_named_files(tmp_path, capsys):
    code, out, _ = run(capsys, "gen", "--seed", "1", "--preset", "standalone", "--count", "3",
                       "--out", str(tmp_path), "@")
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["standalone_seed00001.json", "standalone_seed00002.json", "standalone_seed00003.json"]
    first = (tmp_path / names[0]).read_bytes()
    run(capsys, "gen", "--seed", "1", "--preset", "standalone", "--count", "1", "--out", str(tmp_path / "again"), "@")
    assert (tmp_path / "again" / names[0]).read_bytes() == first


def test_gen_unknown_preset(capsys):
    with pytest.raises(SystemExit) as info:
        main(["gen", "--preset", "castle"])
    assert info.value.code == 2


def test_gen_unwritable(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "gen", "--out", str(blocker / "sub"), "@")
    assert code == 2 and "cannot write" in err


def test_timestamp_header_toggle(tmp_path, capsys):
    _, with_ts, _ = run(capsys, "econ")
    _, without, _ = run(capsys, "econ", "@")
    assert with_ts.startswith("# curbside econ @")
    assert with_ts.split("\n", 1)[1] == without


# solve -----------------------------------------------------------------------


def write_scene(path, scene):
    path.write_text(dump_scene(scene), encoding="utf-8")
    return str(path)


def test_solve_generated_matches_oracle(tmp_path, capsys):
    scene = generate_scene(1, "standalone")
    path = write_scene(tmp_path / "s.json", scene)
    code, out, _ = run(capsys, "solve", path, "@")
    assert code == 0 and "mode: hard" in out
    loaded = load_scene(open(path).read())
    _, _, ents, cands, _ = prepare(loaded, SolveConfig(), MockAnalyzer())
    best = oracle_solve(loaded, cands, ents).best.candidate.id
    first_row = next(line for line in out.splitlines() if line.strip().startswith("1 "))
    assert best in first_row


def soft_scene():
    segs = [segment("s1", [(-40, -20), (40, -20)]), segment("s2", [(-40, 20), (40, 20)])]
    rules = [rule("h1", "s1", ILLEGAL, fine=65, source="historical", rate=0.05),
             rule("h2", "s2", ILLEGAL, fine=65, source="historical", rate=0.6)]
    return make_scene(segs, rules)


def test_solve_soft_mode_alert(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", write_scene(tmp_path / "s.json", soft_scene()), "@")
    assert code == 0
    assert "mode: soft" in out and "ALERT:" in out
    assert "s2#" not in out


def test_solve_infeasible_exits_zero(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", write_scene(tmp_path / "s.json", soft_scene()), "--tau", "0.01", "@")
    assert code == 0 and "mode: infeasible" in out


def totals(csv_text):
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    return [r["candidate"] for r in rows], [float(r["total"]) for r in rows]


def test_solve_wage_doubles_totals(tmp_path, capsys):
    scene = make_scene([segment("s1", [(-60, -20), (60, -20)])], [rule("r1", "s1")])
    path = write_scene(tmp_path / "s.json", scene)
    run(capsys, "solve", path, "--csv", str(tmp_path / "a.csv"), "--all", "@")
    run(capsys, "solve", path, "--csv", str(tmp_path / "b.csv"), "--all", "--wage", "40", "@")
    ids_a, tot_a = totals((tmp_path / "a.csv").read_text())
    ids_b, tot_b = totals((tmp_path / "b.csv").read_text())
    assert ids_a == ids_b
    assert tot_b == pytest.approx([2 * t for t in tot_a], rel=1e-12)


def test_solve_geojson(tmp_path, capsys):
    scene = generate_scene(4, "row_shops")
    out = tmp_path / "r.geojson"
    code, _, _ = run(capsys, "solve", write_scene(tmp_path / "s.json", scene), "--geojson", str(out), "@")
    assert code == 0
    fc = json.loads(out.read_text())
    assert fc["type"] == "FeatureCollection"
    roles = [f["properties"]["role"] for f in fc["features"]]
    assert roles[0] == "destination" and "entrance" in roles and "candidate" in roles
    lon, lat = fc["features"][0]["geometry"]["coordinates"]
    assert abs(lat - scene.origin_lat) < 0.05 and abs(lon - scene.origin_lon) < 0.05
    cands = [f["properties"] for f in fc["features"] if f["properties"]["role"] == "candidate"]
    for p in cands:
        assert p["c_walk"] + p["c_park"] + p["c_risk"] == p["total"]
    assert sum(p["top1"] for p in cands) == 1


def test_solve_rejects_invalid_scene(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"origin": [40, -74]}')
    code, _, err = run(capsys, "solve", str(bad), "@")
    assert code == 2 and "invalid scene" in err
    code, _, _ = run(capsys, "solve", str(tmp_path / "missing.json"), "@")
    assert code == 2


def test_solve_remote_requires_endpoint(tmp_path, capsys):
    path = write_scene(tmp_path / "s.json", soft_scene())
    code, _, err = run(capsys, "solve", path, "--analyzer", "remote", "@")
    assert code == 2 and "--endpoint" in err


def test_config_file_sets_defaults(tmp_path, capsys):
    path = write_scene(tmp_path / "s.json", soft_scene())
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tau": 0.01}))
    code, out, _ = run(capsys, "solve", path, "--config", str(cfg), "@")
    assert code == 0 and "mode: infeasible" in out
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, "solve", path, "--config", str(cfg), "@")
    assert code == 2 and "bogus" in err


def test_solve_deterministic_output(tmp_path, capsys):
    path = write_scene(tmp_path / "s.json", generate_scene(9, "strip_mall"))
    assert run(capsys, "solve", path, "@")[1] == run(capsys, "solve", path, "@")[1]


# feasibility -----------------------------------------------------------------


def verdicts(out):
    rows = [line.split() for line in out.splitlines() if line.split() and line.split()[0] in ("HW3", "HW4", "Orin", "Thor")]
    return {r[0]: r[3] for r in rows}


def test_feasibility_default(capsys):
    code, out, _ = run(capsys, "feasibility", "@")
    assert code == 0
    assert verdicts(out) == {"HW3": "marginal", "HW4": "yes", "Orin": "yes", "Thor": "easily"}


def test_feasibility_lower_requirement(capsys):
    assert verdicts(run(capsys, "feasibility", "--required-tops", "30", "@")[1])["HW3"] == "yes"


def test_feasibility_platform_file(tmp_path, capsys):
    f = tmp_path / "p.json"
    f.write_text(json.dumps([{"name": "Edge", "total_tops": 100, "idle_lo": 0.2, "idle_hi": 0.4,
                              "pass_lo": 5, "pass_hi": 9}]))
    code, out, _ = run(capsys, "feasibility", "--platform-file", str(f), "@")
    assert code == 0 and "Edge" in out and "HW4" not in out


# simulate --------------------------------------------------------------------


def test_simulate_single_window_complete(capsys):
    code, out, _ = run(capsys, "simulate", "--window", "deep_queue:60:0.5", "--pass-time", "8", "--passes", "2", "@")
    assert code == 0 and "analysis complete" in out
    assert "ready at     4.0 s" in out


def test_simulate_eight_passes_incomplete(capsys):
    _, out, _ = run(capsys, "simulate", "--window", "deep_queue:30:0.5", "--pass-time", "8", "--passes", "8", "@")
    assert "completed 3/8" in out and "incomplete" in out


def test_simulate_runs_deterministic(capsys):
    a = run(capsys, "simulate", "--runs", "1000", "--seed", "7", "--mix", "left_turn_wait=1", "@")[1]
    b = run(capsys, "simulate", "--runs", "1000", "--seed", "7", "--mix", "left_turn_wait=1", "@")[1]
    assert a == b and "runs: 1000" in a


def test_simulate_unknown_platform(capsys):
    code, _, err = run(capsys, "simulate", "--platform", "Cray", "@")
    assert code == 2 and "unknown platform" in err


def test_simulate_timeline_file(tmp_path, capsys):
    from curbside.simkit import generate_timeline, timeline_to_dict

    f = tmp_path / "tl.json"
    f.write_text(json.dumps(timeline_to_dict(generate_timeline(2, 3, {"congestion": 1.0}))))
    code, out, _ = run(capsys, "simulate", "--timeline", str(f), "@")
    assert code == 0 and out.count("window ") == 3


# econ ------------------------------------------------------------------------


def test_econ_defaults(capsys):
    code, out, _ = run(capsys, "econ", "@")
    assert code == 0
    assert "$25.00" in out and "$6,250.00" in out and "$6,000" in out and "caveat" in out


def test_econ_images_and_custom(capsys):
    assert "$0.28" in run(capsys, "econ", "--images", "40", "@")[1]
    out = run(capsys, "econ", "--wage", "15", "--minutes", "1.5", "--deliveries", "20", "--days", "250", "@")[1]
    assert "per-driver annual:   $1,875.00" in out


@pytest.mark.parametrize("flag", ["--wage", "--minutes", "--deliveries", "--days"])
def test_econ_non_positive(flag, capsys):
    code, _, err = run(capsys, "econ", flag, "0", "@")
    assert code == 2 and "positive" in err


# bench -----------------------------------------------------------------------


def test_bench_row_shops(tmp_path, capsys):
    run(capsys, "gen", "--preset", "row_shops", "--count", "12", "--out", str(tmp_path), "@")
    code, out, _ = run(capsys, "bench", str(tmp_path), "--csv", str(tmp_path / "b.csv"),
                       "--markdown", str(tmp_path / "b.md"), "@")
    assert code == 0 and "dominance (dapp <= nearest_any): PASS" in out
    rows = list(csv.DictReader(io.StringIO((tmp_path / "b.csv").read_text())))
    assert [r["policy"] for r in rows] == ["dapp", "legal_nearest", "nearest_any"]
    assert (tmp_path / "b.csv").read_bytes().count(b"\r\n") == 4


def test_bench_single_policy(tmp_path, capsys):
    run(capsys, "gen", "--count", "2", "--out", str(tmp_path), "@")
    _, out, _ = run(capsys, "bench", str(tmp_path), "--policies", "dapp", "@")
    assert sum(line.startswith("| dapp") for line in out.splitlines()) == 1
    assert "| nearest_any" not in out


def test_bench_empty_dir(tmp_path, capsys):
    code, _, err = run(capsys, "bench", str(tmp_path), "@")
    assert code == 2 and "no scene files" in err
