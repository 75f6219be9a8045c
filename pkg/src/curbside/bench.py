"""Compare parking policies over a set of scenes."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .dapp import INFEASIBLE, SOFT, Entry, SolveConfig, rank, score_all
from .econ import fine_exposure
from .pipeline import Analyzer, prepare
from .scene import Scene

POLICIES = ("dapp", "legal_nearest", "nearest_any")


@dataclass
class PolicyStats:
    policy: str
    scenes: int = 0
    choices: List[Optional[Entry]] = field(default_factory=list)
    soft: int = 0

    @property
    def chosen(self) -> List[Entry]:
        return [c for c in self.choices if c is not None]

    @property
    def mean_walk_m(self) -> float:
        ch = self.chosen
        return sum(e.cost.walk_m for e in ch) / len(ch) if ch else float("nan")

    @property
    def mean_total_usd(self) -> float:
        ch = self.chosen
        return sum(e.cost.total for e in ch) / len(ch) if ch else float("nan")

    @property
    def fine_exposure_usd(self) -> float:
        return fine_exposure(self.chosen)

    @property
    def soft_rate(self) -> float:
        return self.soft / self.scenes if self.scenes else 0.0

    @property
    def infeasible_rate(self) -> float:
        return sum(c is None for c in self.choices) / self.scenes if self.scenes else 0.0


@dataclass
class BenchReport:
    stats: Dict[str, PolicyStats]
    scene_names: List[str]

    @property
    def dominance_ok(self) -> bool:
        """Expected fines under the solver never exceed those of nearest-any parking."""
        if "dapp" not in self.stats or "nearest_any" not in self.stats:
            return True
        return self.stats["dapp"].fine_exposure_usd <= self.stats["nearest_any"].fine_exposure_usd

    def rows(self) -> List[Tuple]:
        return [
            (s.policy, s.scenes, len(s.chosen), s.mean_walk_m, s.mean_total_usd,
             s.fine_exposure_usd, s.soft_rate, s.infeasible_rate)
            for s in self.stats.values()
        ]


HEADER = ("policy", "scenes", "chosen", "mean_walk_m", "mean_total_usd", "fine_exposure_usd",
          "soft_rate", "infeasible_rate")


def _pick_nearest(entries: Sequence[Entry]) -> Optional[Entry]:
    return min(entries, key=lambda e: (e.cost.walk_m, e.candidate.id), default=None)


def run_bench(scenes: Sequence[Tuple[str, Scene]], policies: Sequence[str] = POLICIES,
              config: SolveConfig = SolveConfig(), analyzer: Optional[Analyzer] = None) -> BenchReport:
    unknown = set(policies) - set(POLICIES)
    if unknown:
        raise ValueError(f"unknown policies: {sorted(unknown)}")
    stats = {p: PolicyStats(p) for p in policies}
    names = []
    for name, scene in sorted(scenes, key=lambda item: item[0]):
        names.append(name)
        _, _, entrances, candidates, _ = prepare(scene, config, analyzer)
        entries = score_all(scene, candidates, entrances, config)
        for p in policies:
            st = stats[p]
            st.scenes += 1
            if p == "dapp":
                mode, ranked = rank(entries, config)
                st.choices.append(ranked[0] if mode != INFEASIBLE else None)
                st.soft += mode == SOFT
            elif p == "legal_nearest":
                st.choices.append(_pick_nearest([e for e in entries if e.candidate.legality.allowed]))
            else:
                st.choices.append(_pick_nearest(entries))
    return BenchReport(stats, names)


def _fmt(v) -> str:
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def report_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(HEADER)
    for row in report.rows():
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def report_markdown(report: BenchReport) -> str:
    lines = ["| " + " | ".join(HEADER) + " |", "|" + "---|" * len(HEADER)]
    for row in report.rows():
        lines.append("| " + " | ".join(_fmt(v) for v in row) + " |")
    verdict = "PASS" if report.dominance_ok else "FAIL"
    lines.append("")
    lines.append(f"fine-exposure dominance (dapp <= nearest_any): {verdict}")
    return "\n".join(lines) + "\n"
