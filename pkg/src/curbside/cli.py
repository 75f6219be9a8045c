"""``curbside`` command line: gen, solve, feasibility, simulate, econ, bench."""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import econ
from .bench import POLICIES, report_csv, report_markdown, run_bench
from .dapp import SolveConfig, score_all
from .entrances import AnalyzerNoise, MockAnalyzer
from .geo import Point, unproject
from .pipeline import PlanResult, plan
from .rules import format_time, parse_time
from .scene import SceneError, dump_scene, load_scene
from .simkit import (
    DEFAULT_REQUIRED_PASSES,
    DEFAULT_REQUIRED_TOPS,
    PLATFORMS,
    SCENARIOS,
    AssetManifest,
    ComputeWindow,
    DriveTimeline,
    completion_fraction,
    feasibility_check,
    generate_timeline,
    load_platforms,
    parse_mix,
    schedule_passes,
    simulate_precache,
    timeline_from_dict,
)
from .synth import PRESETS, generate_scene

EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _out(text: str = "") -> None:
    sys.stdout.write(text + "\n")


# gen -------------------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for i in range(args.count):
            seed = args.seed + i
            path = out / f"{args.preset}_seed{seed:05d}.json"
            path.write_text(dump_scene(generate_scene(seed, args.preset, args.jitter)), encoding="utf-8")
            _out(str(path))
    except OSError as exc:
        raise UsageError(f"cannot write scenes to {out}: {exc}") from None
    return 0


# solve -----------------------------------------------------------------------


def _solve_config(args: argparse.Namespace) -> SolveConfig:
    try:
        return SolveConfig(wage=args.wage, walk_speed=args.walk_speed, tau=args.tau,
                           expected_dwell=args.dwell, top_k=None if args.all else args.top_k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _analyzer(args: argparse.Namespace):
    if args.analyzer == "none":
        return None
    if args.analyzer == "remote":
        if not args.endpoint:
            raise UsageError("--analyzer remote requires --endpoint URL")
        from .remote import RemoteAnalyzer

        return RemoteAnalyzer(args.endpoint, args.model, timeout=args.timeout)
    noise = AnalyzerNoise(args.noise_sigma, args.miss_rate, args.misread_rate)
    return MockAnalyzer(noise, args.seed)


def _read_scene(path: str):
    try:
        return load_scene(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except SceneError as exc:
        raise UsageError(f"invalid scene {path}: {exc}") from None


def _money(x: float) -> str:
    return f"{x:.2f}"


def cmd_solve(args: argparse.Namespace) -> int:
    scene = _read_scene(args.scene)
    config = _solve_config(args)
    t = None
    if args.time is not None:
        try:
            t = parse_time(args.time)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    result = plan(scene, config, _analyzer(args), t, args.interval)
    rec = result.recommendation

    _out(f"analysis time: {format_time(result.analysis_time)}")
    _out(f"dispatch: {result.decision.route} ({result.decision.reason})")
    ents = ", ".join(f"{e.id}[{e.source}]" for e in result.entrances)
    _out(f"entrances: {ents}" + ("  (fallback at destination, low confidence)" if rec.entrance_fallback else ""))
    _out(f"candidates: {len(result.candidates)}")
    for cell, weight in result.heatmap:
        _out(f"fleet heatmap cell: ({cell.x:.1f}, {cell.y:.1f}) weight {weight:.3f}")
    _out(f"mode: {rec.mode}")
    if rec.alert:
        _out(f"ALERT: {rec.alert_message}")
    if rec.entries:
        _out(f"{'rank':>4}  {'candidate':<12} {'status':<20} {'walk_m':>8} {'method':<18} "
             f"{'c_walk':>7} {'c_park':>7} {'c_risk':>7} {'total':>7}")
        for i, e in enumerate(rec.entries, 1):
            c, k = e.candidate, e.cost
            _out(f"{i:>4}  {c.id:<12} {str(c.legality):<20} {k.walk_m:>8.1f} {k.walk_method:<18} "
                 f"{_money(k.c_walk):>7} {_money(k.c_park):>7} {_money(k.c_risk):>7} {_money(k.total):>7}")

    if args.geojson or args.csv:
        scored = score_all(scene, result.candidates, result.entrances, config)
        if args.geojson:
            _write(args.geojson, json.dumps(recommendation_geojson(scene, result, scored), indent=1) + "\n")
        if args.csv:
            _write(args.csv, recommendation_csv(result, scored))
    return 0


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def recommendation_geojson(scene, result: PlanResult, scored) -> Dict[str, Any]:
    """RFC 7946 FeatureCollection: destination, entrances, scored candidates."""

    def coords(p: Point) -> List[float]:
        lat, lon = unproject(p, scene.origin_lat, scene.origin_lon)
        return [lon, lat]

    rec = result.recommendation
    ranks = {e.candidate.id: i for i, e in enumerate(rec.entries, 1)}
    features = [{
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": coords(scene.destination)},
        "properties": {"role": "destination", "mode": rec.mode, "alert": rec.alert},
    }]
    for e in result.entrances:
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": coords(e.position)},
            "properties": {"role": "entrance", "id": e.id, "kind": e.kind,
                           "confidence": e.confidence, "source": e.source},
        })
    for entry in scored:
        c, k = entry.candidate, entry.cost
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": coords(c.position)},
            "properties": {
                "role": "candidate", "id": c.id, "segment_id": c.segment_id,
                "maneuver": c.maneuver, "legality": str(c.legality), "risk": c.risk, "fine": c.fine,
                "walk_m": k.walk_m, "walk_method": k.walk_method, "entrance": k.nearest_entrance_id,
                "c_walk": k.c_walk, "c_park": k.c_park, "c_risk": k.c_risk, "total": k.total,
                "rank": ranks.get(c.id), "top1": ranks.get(c.id) == 1,
            },
        })
    return {"type": "FeatureCollection", "features": features}


def recommendation_csv(result: PlanResult, scored) -> str:
    ranks = {e.candidate.id: i for i, e in enumerate(result.recommendation.entries, 1)}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["rank", "candidate", "segment", "legality", "risk", "fine", "walk_m", "walk_method",
                "c_walk", "c_park", "c_risk", "total"])
    for entry in sorted(scored, key=lambda e: (ranks.get(e.candidate.id, 10**9), e.sort_key)):
        c, k = entry.candidate, entry.cost
        # full repr precision so totals survive a CSV round trip
        w.writerow([ranks.get(c.id, ""), c.id, c.segment_id, str(c.legality), c.risk, c.fine,
                    k.walk_m, k.walk_method, k.c_walk, k.c_park, k.c_risk, k.total])
    return buf.getvalue()


# feasibility -----------------------------------------------------------------


def _platforms(args: argparse.Namespace):
    if getattr(args, "platform_file", None):
        try:
            return load_platforms(Path(args.platform_file).read_text(encoding="utf-8"))
        except (OSError, ValueError, TypeError, KeyError) as exc:
            raise UsageError(f"bad platform file {args.platform_file}: {exc}") from None
    return PLATFORMS


VERDICT_LABELS = {"no": "no", "marginal": "marginal (7B not dependable)", "yes": "yes", "easily": "easily"}


def cmd_feasibility(args: argparse.Namespace) -> int:
    if args.required_tops <= 0:
        raise UsageError("--required-tops must be positive")
    _out(f"model requirement: {args.required_tops:g} TOPS")
    _out(f"{'platform':<10} {'capacity':>14} {'idle TOPS':>16}  verdict")
    for p in _platforms(args).values():
        lo, hi, verdict = feasibility_check(p, args.required_tops)
        cap = f"{p.total_tops:g}" if p.total_tops_hi is None else f"{p.total_tops:g}-{p.total_tops_hi:g}"
        _out(f"{p.name:<10} {cap:>14} {lo:>7.1f}-{hi:<8.1f}  {VERDICT_LABELS[verdict]}")
    return 0


# simulate --------------------------------------------------------------------


def _parse_window_spec(specs: Sequence[str]) -> DriveTimeline:
    windows, t = [], 0.0
    for spec in specs:
        try:
            kind, duration, idle = spec.split(":")
            duration_f, idle_f = float(duration), float(idle)
        except ValueError:
            raise UsageError(f"--window expects KIND:SECONDS:IDLE, got {spec!r}") from None
        if kind not in SCENARIOS:
            raise UsageError(f"unknown scenario {kind!r}")
        windows.append(ComputeWindow(kind, t, duration_f, idle_f))
        t += duration_f + 30.0
    return DriveTimeline(tuple(windows), t)


def cmd_simulate(args: argparse.Namespace) -> int:
    platforms = _platforms(args)
    if args.platform not in platforms:
        raise UsageError(f"unknown platform {args.platform!r}; choose from {sorted(platforms)}")
    platform = platforms[args.platform]
    if args.bandwidth <= 0 or args.passes < 1:
        raise UsageError("--bandwidth must be positive and --passes >= 1")
    try:
        mix = parse_mix(args.mix)
        if set(mix) - set(SCENARIOS):
            raise ValueError(f"unknown scenarios in --mix: {sorted(set(mix) - set(SCENARIOS))}")
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    _out("pre-cache:")
    for label, t in simulate_precache(AssetManifest(), args.bandwidth, args.cache_hit):
        _out(f"  {label:<22} ready at {t:7.1f} s")

    if args.runs:
        frac = completion_fraction(platform, args.runs, args.seed, args.windows, mix, args.passes,
                                   args.required_tops, args.pass_time)
        _out(f"runs: {args.runs}  analysis complete in {frac:.4f} of runs")
        return 0

    if args.window:
        timeline = _parse_window_spec(args.window)
    elif args.timeline:
        try:
            timeline = timeline_from_dict(json.loads(Path(args.timeline).read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"bad timeline {args.timeline}: {exc}") from None
    else:
        timeline = generate_timeline(args.seed, args.windows, mix)

    res = schedule_passes(timeline, platform, args.passes, args.required_tops, args.seed, args.pass_time)
    _out(f"platform: {platform.name}  pass time: {res.pass_time:.2f} s  required passes: {res.required_passes}")
    for i, w in enumerate(timeline.windows):
        idle_tops = w.idle_fraction * platform.total_tops
        done = sum(1 for p in res.passes if p.window == i)
        cut = sum(1 for p in res.preempted if p.window == i)
        flag = "eligible" if i in res.eligible_windows else (
            "skipped" if idle_tops >= args.required_tops else "ineligible")
        _out(f"  window {i}: {w.scenario:<15} t={w.start:7.1f}s dur={w.duration:6.1f}s "
             f"idle={idle_tops:6.1f} TOPS {flag:<10} passes={done} preempted={cut}")
    verdict = "complete" if res.analysis_complete else "incomplete"
    _out(f"completed {res.completed_passes}/{res.required_passes} passes, "
         f"{res.preempted_passes} preempted: analysis {verdict}")
    return 0


# econ ------------------------------------------------------------------------


def cmd_econ(args: argparse.Namespace) -> int:
    if args.preset:
        params = econ.PRESETS[args.preset]
    else:
        values = [args.wage, args.minutes, args.deliveries, args.days, args.fleet]
        if any(v <= 0 for v in values):
            raise UsageError("economic parameters must be positive")
        params = econ.EconParams(args.wage, args.minutes, args.deliveries, args.days, args.fleet)
    if args.images < 0:
        raise UsageError("--images must be >= 0")
    daily = econ.per_driver_daily(params)
    annual = econ.per_driver_annual(params)
    _out(f"wage ${params.wage:g}/h, {params.minutes_saved_per_delivery:g} min saved x "
         f"{params.deliveries_per_day:g} deliveries/day, {params.working_days:g} days/year")
    _out(f"value of one minute: ${econ.per_minute_value(params.wage):.4f}")
    _out(f"per-driver daily:    ${daily:,.2f}")
    _out(f"per-driver annual:   ${annual:,.2f}")
    if params == econ.PRESETS["base"]:
        _out(f"  quoted figure: ${econ.QUOTED_ANNUAL['base']:,.0f}/year (exact arithmetic gives ${annual:,.2f})")
    for name in ("conservative", "optimistic"):
        _out(f"  {name} preset: ${econ.per_driver_annual(econ.PRESETS[name]):,.2f}/year "
             f"(quoted ${econ.QUOTED_ANNUAL[name]:,.0f})")
    _out(f"imagery cost ({args.images:g} images): ${econ.imagery_cost(args.images):.2f}")
    _out(f"fleet minutes/day ({params.fleet_size:,.0f} drivers): {econ.fleet_minutes(params):,.0f}")
    _out(f"caveat: {econ.CAVEAT}")
    return 0


# bench -----------------------------------------------------------------------


def cmd_bench(args: argparse.Namespace) -> int:
    root = Path(args.scene_dir)
    files = sorted(root.glob("*.json")) if root.is_dir() else []
    if not files:
        raise UsageError(f"no scene files in {root}")
    scenes = [(f.name, _read_scene(str(f))) for f in files]
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    if not policies or set(policies) - set(POLICIES):
        raise UsageError(f"--policies must be a subset of {','.join(POLICIES)}")
    noise = AnalyzerNoise(args.noise_sigma, args.miss_rate, args.misread_rate)
    report = run_bench(scenes, policies, _solve_config(args), MockAnalyzer(noise, args.seed))
    md = report_markdown(report)
    sys.stdout.write(md)
    if args.csv:
        _write(args.csv, report_csv(report))
    if args.markdown:
        _write(args.markdown, md)
    return 0


# parser ----------------------------------------------------------------------


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--wage", type=float, default=20.0, help="USD per hour")
    p.add_argument("--walk-speed", type=float, default=1.2, help="m/s")
    p.add_argument("--tau", type=float, default=0.1, help="soft-mode risk threshold")
    p.add_argument("--dwell", type=float, default=10.0, help="expected dwell, minutes")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--all", action="store_true", help="print the full ranking")


def _noise_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise-sigma", type=float, default=0.0, help="mock analyzer position noise, m")
    p.add_argument("--miss-rate", type=float, default=0.0)
    p.add_argument("--misread-rate", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", metavar="FILE", help="JSON file of flag defaults")
    common.add_argument("--no-timestamp", action="store_true", help="omit the run-time header")

    parser = argparse.ArgumentParser(prog="curbside", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write synthetic scene files")
    p.add_argument("--preset", choices=PRESETS, default="standalone")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default="scenes")
    p.add_argument("--jitter", type=float, default=0.0, help="destination jitter, m (max 50)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", parents=[common], help="rank parking candidates for a scene")
    p.add_argument("scene")
    p.add_argument("--time", help="weekly time override, e.g. 'Tue 12:00'")
    p.add_argument("--interval", type=float, default=5.0, help="curb sampling interval, m")
    _solver_flags(p)
    p.add_argument("--analyzer", choices=("mock", "remote", "none"), default="mock")
    p.add_argument("--endpoint", help="chat-completions URL for --analyzer remote")
    p.add_argument("--model", default="qwen2-vl-7b-instruct")
    p.add_argument("--timeout", type=float, default=10.0)
    _noise_flags(p)
    p.add_argument("--geojson", metavar="OUT")
    p.add_argument("--csv", metavar="OUT")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("feasibility", parents=[common], help="compute budget per platform")
    p.add_argument("--required-tops", type=float, default=DEFAULT_REQUIRED_TOPS)
    p.add_argument("--platform-file", metavar="FILE")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("simulate", parents=[common], help="pre-cache and pass scheduling")
    p.add_argument("--platform", default="HW4")
    p.add_argument("--platform-file", metavar="FILE")
    p.add_argument("--passes", type=int, default=DEFAULT_REQUIRED_PASSES)
    p.add_argument("--pass-time", type=float, help="fixed seconds per pass")
    p.add_argument("--required-tops", type=float, default=DEFAULT_REQUIRED_TOPS)
    p.add_argument("--window", action="append", metavar="KIND:SECONDS:IDLE",
                   help="explicit window (repeatable)")
    p.add_argument("--timeline", metavar="FILE")
    p.add_argument("--windows", type=int, default=3, help="generated windows per run")
    p.add_argument("--mix", default="deep_queue=0.3,congestion=0.2,front_of_queue=0.3,left_turn_wait=0.2")
    p.add_argument("--bandwidth", type=float, default=4.0, help="Mbps")
    p.add_argument("--cache-hit", action="store_true")
    p.add_argument("--runs", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("econ", parents=[common], help="driver and platform economics")
    p.add_argument("--wage", type=float, default=20.0)
    p.add_argument("--minutes", type=float, default=2.5)
    p.add_argument("--deliveries", type=float, default=30.0)
    p.add_argument("--days", type=float, default=250.0)
    p.add_argument("--fleet", type=float, default=1.0)
    p.add_argument("--images", type=float, default=60.0)
    p.add_argument("--preset", choices=sorted(econ.PRESETS))
    p.set_defaults(func=cmd_econ)

    p = sub.add_parser("bench", parents=[common], help="compare parking policies over scenes")
    p.add_argument("scene_dir")
    p.add_argument("--policies", default=",".join(POLICIES))
    _solver_flags(p)
    _noise_flags(p)
    p.add_argument("--csv", metavar="OUT")
    p.add_argument("--markdown", metavar="OUT")
    p.set_defaults(func=cmd_bench)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str], args: argparse.Namespace):
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
    known = {a.dest for a in sub._actions}
    unknown = set(k.replace("-", "_") for k in data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in data.items()})
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        if not args.no_timestamp:
            _out(f"# curbside {args.command} @ {dt.datetime.now().isoformat(timespec='seconds')}")
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"curbside: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
