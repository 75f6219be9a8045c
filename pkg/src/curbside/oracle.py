"""Brute-force reference solver used to cross-check :func:`curbside.dapp.solve`.

Shares no distance or cost code with the production path: snapping is a plain
scan, network distances come from enumerating every simple path, and costs
are re-derived from the objective.
Floating-point evaluation order follows the written formulas, so candidates
that tie exactly in the solver also tie exactly here.
"""
from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence, Tuple

from .candidates import ParkingCandidate
from .dapp import HARD, INFEASIBLE, SOFT, CostBreakdown, Entry, Recommendation, SolveConfig
from .entrances import FALLBACK_ENTRANCE_ID
from .geo import Point
from .scene import Entrance, Scene

MAX_ENUMERATION_NODES = 8
MAX_CANDIDATES = 500


def _dist(a: Point, b: Point) -> float:
    # hypot, not a hand-rolled sqrt: both must round identically for ulp-level ties
    return math.hypot(b.x - a.x, b.y - a.y)


def enumerate_shortest_path(adjacency: Dict[int, List[Tuple[int, float]]], a: int, b: int) -> Optional[float]:
    """Minimum length over all simple paths from ``a`` to ``b`` (``None`` if unreachable)."""
    best: Optional[float] = None

    def extend(node: int, length: float, visited: frozenset) -> None:
        nonlocal best
        if node == b:
            if best is None or length < best:
                best = length
            return
        for nxt, w in adjacency.get(node, ()):
            if nxt not in visited:
                extend(nxt, length + w, visited | {nxt})

    extend(a, 0.0, frozenset([a]))
    return best


class _OracleWalk:
    def __init__(self, scene: Scene, config: SolveConfig):
        g = scene.pedestrian_graph
        if len(g.nodes) > MAX_ENUMERATION_NODES:
            raise ValueError(
                f"oracle enumerates paths only on graphs with <= {MAX_ENUMERATION_NODES} nodes"
            )
        self.nodes = g.nodes
        self.adjacency: Dict[int, List[Tuple[int, float]]] = {n: [] for n in g.nodes}
        for u, v, length in g.edges:
            self.adjacency[u].append((v, length))
            self.adjacency[v].append((u, length))
        self.tolerance = config.snap_tolerance
        self._paths: Dict[Tuple[int, int], Optional[float]] = {}

    def _snap(self, p: Point) -> Optional[Tuple[int, float]]:
        best = None
        for nid in sorted(self.nodes):
            d = _dist(p, self.nodes[nid])
            if best is None or d < best[1]:
                best = (nid, d)
        if best is None or best[1] > self.tolerance:
            return None
        return best

    def __call__(self, p: Point, e: Point) -> Tuple[float, str]:
        sp, se = self._snap(p), self._snap(e)
        if sp is not None and se is not None:
            # walk = path + (snap legs), path taken from the lower node id: the
            # canonical evaluation order, so exact ties stay exact
            (a, da), (b, db) = sorted((sp, se))
            if (a, b) not in self._paths:
                self._paths[(a, b)] = enumerate_shortest_path(self.adjacency, a, b)
            path = self._paths[(a, b)]
            if path is not None:
                return path + (da + db), "network"
        return 1.4 * _dist(p, e), "euclidean_fallback"


def oracle_solve(scene: Scene, candidates: Sequence[ParkingCandidate], entrances: Sequence[Entrance],
                 config: SolveConfig = SolveConfig()) -> Recommendation:
    if len(candidates) > MAX_CANDIDATES:
        raise ValueError(f"oracle handles at most {MAX_CANDIDATES} candidates")
    fallback = any(e.id == FALLBACK_ENTRANCE_ID for e in entrances)
    if not candidates:
        return Recommendation(INFEASIBLE, (), entrance_fallback=fallback)
    walk = _OracleWalk(scene, config)

    scored = []
    for c in candidates:
        options = [(walk(c.position, e.position), e.id) for e in entrances]
        (walk_m, method), eid = options[0]
        for (d, m), i in options[1:]:
            if d < walk_m or (d == walk_m and i < eid):
                walk_m, method, eid = d, m, i
        c_walk = (walk_m / config.walk_speed) * (config.wage / 3600.0)
        c_park = c.park_time * (config.wage / 3600.0)
        c_risk = c.risk * c.fine
        cost = CostBreakdown(c_walk, c_park, c_risk, c_walk + c_park + c_risk, walk_m, method, eid)
        scored.append(Entry(c, cost))

    legal = [s for s in scored if s.candidate.legality.value in ("legal", "time_limited")]
    if legal:
        mode, pool = HARD, legal
    else:
        pool = [s for s in scored if s.candidate.risk < config.tau]
        mode = SOFT if pool else INFEASIBLE

    # selection sort: repeatedly take the minimum under the full tie-break chain
    ordered: List[Entry] = []
    remaining = list(pool)
    limit = len(remaining) if config.top_k is None else min(config.top_k, len(remaining))
    while len(ordered) < limit:
        best = remaining[0]
        for s in remaining[1:]:
            a = (s.cost.total, s.cost.walk_m, s.candidate.risk, s.candidate.id)
            b = (best.cost.total, best.cost.walk_m, best.candidate.risk, best.candidate.id)
            if a < b:
                best = s
        ordered.append(best)
        remaining.remove(best)
    return Recommendation(mode, tuple(ordered), alert=mode == SOFT, entrance_fallback=fallback)
