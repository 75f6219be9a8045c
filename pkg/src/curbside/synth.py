"""Seeded synthetic destination scenes.

Three layouts: a standalone building ringed by streets, a row of storefronts on
one street, and a strip mall with a parking lot between the stores and the road.
Scenes are assembled in local meters, written out as a scene-file dict (so the
result round-trips through the file format exactly) and then loaded.
"""
from __future__ import annotations

import math
import random
from typing import Any, Dict, List, Sequence, Tuple

from .geo import Point, unproject
from .scene import Scene, scene_from_dict

PRESETS = ("standalone", "row_shops", "strip_mall")

CITY_CENTERS = (
    (40.7541, -73.9862),  # NYC
    (37.7880, -122.4075),  # SF
    (34.0470, -118.2560),  # LA
    (41.8827, -87.6298),  # Chicago
    (29.7580, -95.3670),  # Houston
)

WEEKDAYS = ["mon", "tue", "wed", "thu", "fri"]
MON_SAT = WEEKDAYS + ["sat"]

FINE_STANDARD = 65.0
FINE_SEVERE = 115.0
FINE_ACCESSIBLE = 250.0

MAX_GRAPH_NODES = 8
EMPTY_GRAPH_RATE = 0.25


class _Frame:
    """Rotated local frame: ``(u, v)`` building coordinates to scene meters."""

    def __init__(self, cx: float, cy: float, theta: float):
        self.cx, self.cy = cx, cy
        self.c, self.s = math.cos(theta), math.sin(theta)

    def __call__(self, u: float, v: float) -> Point:
        return Point(self.cx + self.c * u - self.s * v, self.cy + self.s * u + self.c * v)


class _Builder:
    def __init__(self, rng: random.Random, preset: str):
        self.rng = rng
        self.preset = preset
        self.buildings: List[Dict[str, Any]] = []
        self.segments: List[Dict[str, Any]] = []
        self.rules: List[Dict[str, Any]] = []
        self.signs: List[Dict[str, Any]] = []
        self.truth_entrances: List[Dict[str, Any]] = []
        self.nodes: List[Point] = []
        self.edges: List[Tuple[int, int]] = []
        self.legal_points: List[Point] = []
        self.target_id = ""

    # geometry ------------------------------------------------------------

    def building(self, bid: str, corners: Sequence[Point], entrances: Sequence[Tuple[str, Point, str]],
                 target: bool = False) -> None:
        ring = list(corners) + [corners[0]]
        ents = [{"id": eid, "pos": p, "kind": kind} for eid, p, kind in entrances]
        if target:
            self.truth_entrances = ents
            self.target_id = bid
        self.buildings.append({"id": bid, "footprint": ring, "entrances": ents})

    def forget_target_entrances(self) -> None:
        for bd in self.buildings:
            if bd["id"] == self.target_id:
                bd["entrances"] = []

    def curb(self, a: Point, b: Point, maneuver: str, profiles: Sequence[str],
             min_piece: float = 8.0) -> None:
        """Split the straight curb a->b into one piece per profile."""
        length = math.hypot(b.x - a.x, b.y - a.y)
        n = len(profiles)
        if length < n * min_piece:
            profiles, n = profiles[:1], 1
        cuts = sorted(self.rng.uniform(0.0, 1.0) for _ in range(n - 1))
        # keep every piece at least min_piece long
        fractions = [0.0]
        for c in cuts:
            fractions.append(max(c, fractions[-1] + min_piece / length))
        fractions.append(1.0)
        for i in range(n - 1, 0, -1):
            fractions[i] = min(fractions[i], fractions[i + 1] - min_piece / length)
        for (f0, f1), profile in zip(zip(fractions, fractions[1:]), profiles):
            p0 = Point(a.x + f0 * (b.x - a.x), a.y + f0 * (b.y - a.y))
            p1 = Point(a.x + f1 * (b.x - a.x), a.y + f1 * (b.y - a.y))
            self._segment([p0, p1], maneuver, profile)

    def _segment(self, points: List[Point], maneuver: str, profile: str) -> None:
        sid = f"s{len(self.segments) + 1:02d}"
        rules = self._rules(sid, profile)
        self.segments.append({"id": sid, "geometry": points, "maneuver": maneuver,
                              "rule_ids": [r["id"] for r in rules]})
        self.rules.extend(rules)
        if profile == "free":
            self.legal_points.extend(points)

    def _rules(self, sid: str, profile: str) -> List[Dict[str, Any]]:
        rng = self.rng

        def rule(k: int, **kw) -> Dict[str, Any]:
            d = {"id": f"{sid}/r{k}", "segment_id": sid, "source": "structured"}
            d.update(kw)
            return d

        if profile == "free":
            return [rule(1, status="legal", fine=0.0)]
        if profile == "no_standing_day":
            return [rule(1, status="illegal", fine=FINE_SEVERE,
                         schedule=[{"days": WEEKDAYS, "start": 420, "end": 1140}])]
        if profile == "metered":
            limit = rng.choice([30, 60, 120])
            return [rule(1, status="time_limited", limit_minutes=limit, fine=FINE_STANDARD,
                         schedule=[{"days": MON_SAT, "start": 480, "end": 1200}])]
        if profile == "pickup":
            return [rule(1, status="time_limited", limit_minutes=15, fine=FINE_STANDARD)]
        if profile == "loading":
            return [rule(1, status="illegal", fine=FINE_SEVERE, priority=1,
                         schedule=[{"days": MON_SAT, "start": 420, "end": 1080}])]
        if profile == "no_stopping":
            return [rule(1, status="illegal", fine=FINE_SEVERE)]
        if profile == "accessible":
            return [rule(1, status="illegal", fine=FINE_ACCESSIBLE)]
        if profile == "enforced":
            return [rule(1, status="illegal", fine=FINE_STANDARD, source="historical",
                         enforcement_rate=round(rng.uniform(0.02, 0.6), 3),
                         schedule=[{"days": WEEKDAYS, "start": 480, "end": 1080}])]
        if profile == "ambiguous":
            r = rule(1, status="illegal", fine=FINE_STANDARD, source="vlm", sign_ambiguous=True)
            self.signs.append({"rule_id": r["id"], "legible": rng.random() < 0.85,
                               "legal_confidence": round(rng.uniform(0.5, 0.97), 3)})
            return [r]
        raise ValueError(profile)

    def sidewalk(self, points: Sequence[Point], chain: bool = True) -> List[int]:
        start = len(self.nodes)
        self.nodes.extend(points)
        ids = list(range(start, len(self.nodes)))
        if chain:
            self.edges.extend(zip(ids, ids[1:]))
        return ids

    # output --------------------------------------------------------------

    def to_dict(self, origin: Tuple[float, float], destination: Point, merchant: Dict[str, Any],
                analysis_time: int, with_graph: bool) -> Dict[str, Any]:
        rng = self.rng

        def ll(p: Point) -> List[float]:
            return list(unproject(p, *origin))

        def ent(e: Dict[str, Any], source: str = "structured") -> Dict[str, Any]:
            return {"id": e["id"], "position": ll(e["pos"]), "kind": e["kind"],
                    "confidence": 1.0, "source": source}

        graph: Dict[str, Any] = {"nodes": [], "edges": []}
        if with_graph and self.nodes:
            assert len(self.nodes) <= MAX_GRAPH_NODES
            graph["nodes"] = [{"id": i, "position": ll(p)} for i, p in enumerate(self.nodes)]
            for u, v in self.edges:
                a, b = self.nodes[u], self.nodes[v]
                # stretch slightly above straight-line; rounding up keeps length >= chord
                length = math.ceil(math.hypot(a.x - b.x, a.y - b.y) * rng.uniform(1.01, 1.12) * 1000) / 1000
                graph["edges"].append([u, v, length])

        return {
            "origin": list(origin),
            "destination": ll(destination),
            "analysis_time": analysis_time,
            "buildings": [
                {"id": b["id"], "footprint": [ll(p) for p in b["footprint"]],
                 "entrances": [ent(e) for e in b["entrances"]]}
                for b in self.buildings
            ],
            "curb_segments": [
                {"id": s["id"], "geometry": [ll(p) for p in s["geometry"]], "maneuver": s["maneuver"],
                 "rule_ids": s["rule_ids"]}
                for s in self.segments
            ],
            "rules": self.rules,
            "pedestrian_graph": graph,
            "merchant": merchant,
            "ground_truth": {
                "entrances": [ent(e, "vlm") for e in self.truth_entrances],
                "signs": self.signs,
            },
        }


def _analysis_time(rng: random.Random) -> int:
    if rng.random() < 0.75:
        day = rng.randrange(5)
        minute = rng.randrange(8 * 60, 18 * 60)
    else:
        day = rng.randrange(7)
        minute = rng.randrange(1440)
    return day * 1440 + minute


def _merchant(rng: random.Random, b: _Builder, origin) -> Tuple[Dict[str, Any], bool]:
    """Merchant record and whether the target's entrances are already on file."""
    roll = rng.random()
    if roll < 0.5:
        visits = rng.randint(10, 400)
    elif roll < 0.7:
        visits = 0
    else:
        visits = rng.randint(1, 9)
    heatmap = []
    if visits and b.legal_points:
        cells = [rng.choice(b.legal_points) for _ in range(rng.randint(1, 4))]
        raw = [rng.uniform(0.1, 1.0) for _ in cells]
        total = sum(raw)
        weights = [w / total for w in raw]
        weights[-1] = 1.0 - sum(weights[:-1])
        heatmap = [{"position": list(unproject(p, *origin)), "weight": w} for p, w in zip(cells, weights)]
    record = {"visit_count": visits, "heatmap": heatmap, "dynamic_change_flag": rng.random() < 0.05}
    known = visits >= 10 or rng.random() < 0.4
    return record, known


def _graph_wanted(rng: random.Random) -> bool:
    return rng.random() >= EMPTY_GRAPH_RATE


def _standalone(rng: random.Random, b: _Builder) -> Point:
    w, d = rng.uniform(15, 40), rng.uniform(15, 35)
    f = _Frame(rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(-0.5, 0.5))
    corners = [f(-w / 2, -d / 2), f(w / 2, -d / 2), f(w / 2, d / 2), f(-w / 2, d / 2)]

    u_front = rng.uniform(-w / 3, w / 3)
    doors = [("e1", f(u_front, -d / 2), "front", (u_front, -d / 2 - 3))]
    if rng.random() < 0.5:
        if rng.random() < 0.5:
            v_side = rng.uniform(-d / 3, d / 3)
            doors.append(("e2", f(w / 2, v_side), "side", (w / 2 + 3, v_side)))
        else:
            u_rear = rng.uniform(-w / 3, w / 3)
            doors.append(("e2", f(u_rear, d / 2), "rear", (u_rear, d / 2 + 3)))
    b.building("b1", corners, [(eid, p, kind) for eid, p, kind, _ in doors], target=True)

    # perimeter streets; the front street always exists and carries the always-legal stretch
    sides = ["front"] + [s for s in ("right", "back", "left") if rng.random() < 0.8]
    for side in sides:
        setback = rng.uniform(8, 14)
        e1, e2 = rng.uniform(30, 65), rng.uniform(30, 65)
        if side in ("front", "back"):
            v = -(d / 2 + setback) if side == "front" else d / 2 + setback
            a, z = f(-w / 2 - e1, v), f(w / 2 + e2, v)
        else:
            u = w / 2 + setback if side == "right" else -(w / 2 + setback)
            a, z = f(u, -d / 2 - e1), f(u, d / 2 + e2)
        pool = ["metered", "no_standing_day", "loading", "enforced", "ambiguous", "no_stopping", "free"]
        profiles = [rng.choice(pool) for _ in range(rng.randint(1, 3))]
        if side == "front":
            profiles[rng.randrange(len(profiles))] = "free"
        maneuver = rng.choice(["parallel", "pull_over"])
        b.curb(a, z, maneuver, profiles)

    ring_offset = 3.0
    ring = [(-w / 2 - ring_offset, -d / 2 - ring_offset), (w / 2 + ring_offset, -d / 2 - ring_offset),
            (w / 2 + ring_offset, d / 2 + ring_offset), (-w / 2 - ring_offset, d / 2 + ring_offset)]
    perim: List[Tuple[float, Tuple[float, float]]] = []
    for i, (u, v) in enumerate(ring):
        perim.append((float(i), (u, v)))
    for _, _, kind, (u, v) in doors:
        if kind == "front":
            t = (u - ring[0][0]) / (ring[1][0] - ring[0][0])
        elif kind == "side":
            t = 1 + (v - ring[1][1]) / (ring[2][1] - ring[1][1])
        else:
            t = 2 + (ring[2][0] - u) / (ring[2][0] - ring[3][0])
        perim.append((t, (u, v)))
    perim.sort()
    ids = b.sidewalk([f(u, v) for _, (u, v) in perim])
    b.edges.append((ids[-1], ids[0]))
    # front sidewalk spurs toward the street ends
    spur_l = b.sidewalk([f(-w / 2 - rng.uniform(15, 30), -d / 2 - ring_offset)], chain=False)[0]
    spur_r = b.sidewalk([f(w / 2 + rng.uniform(15, 30), -d / 2 - ring_offset)], chain=False)[0]
    b.edges.append((ids[0], spur_l))
    front_right = ids[[t for t, _ in perim].index(1.0)]
    b.edges.append((front_right, spur_r))
    return f(0, 0)


def _row_shops(rng: random.Random, b: _Builder) -> Point:
    f = _Frame(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-0.5, 0.5))
    n = rng.randint(4, 8)
    widths = [rng.uniform(6, 12) for _ in range(n)]
    depth = rng.uniform(15, 25)
    total = sum(widths)
    target = rng.randrange(n)
    x = -total / 2
    destination = f(0, 0)
    target_span = (0.0, 0.0)
    target_door = 0.0
    for i, wi in enumerate(widths):
        corners = [f(x, 0), f(x + wi, 0), f(x + wi, depth), f(x, depth)]
        u_door = x + rng.uniform(0.25, 0.75) * wi
        doors = [(f"e{i + 1}a", f(u_door, 0), "front")]
        if i == target:
            destination = f(x + wi / 2, depth / 2)
            target_span = (x, x + wi)
            target_door = u_door
            if rng.random() < 0.5:
                doors.append((f"e{i + 1}b", f(x + rng.uniform(0.2, 0.8) * wi, depth), "loading"))
        b.building(f"b{i + 1}", corners, doors, target=i == target)
        x += wi

    sidewalk = rng.uniform(4, 7)
    street = rng.uniform(10, 16)
    ext_l, ext_r = rng.uniform(25, 55), rng.uniform(25, 55)
    x0, x1 = -total / 2 - ext_l, total / 2 + ext_r

    # near curb: restricted stretch right in front of the target shop
    t0, t1 = target_span
    front_zone = rng.choice(["loading", "no_standing_day", "enforced"])
    left_pool = ["metered", "free", "no_stopping", "ambiguous", "metered"]
    right_pool = ["metered", "free", "no_stopping", "enforced", "metered"]
    left = [rng.choice(left_pool) for _ in range(rng.randint(1, 2))]
    right = [rng.choice(right_pool) for _ in range(rng.randint(1, 2))]
    zone_lo, zone_hi = t0 - rng.uniform(3, 8), t1 + rng.uniform(3, 8)
    v_near = -sidewalk
    maneuver = "parallel"
    if zone_lo - x0 >= 8:
        b.curb(f(x0, v_near), f(zone_lo, v_near), maneuver, left)
    b._segment([f(zone_lo, v_near), f(zone_hi, v_near)], maneuver, front_zone)
    if x1 - zone_hi >= 8:
        b.curb(f(zone_hi, v_near), f(x1, v_near), maneuver, right)

    v_far = -sidewalk - street
    far = [rng.choice(["free", "metered", "no_standing_day", "enforced"]) for _ in range(rng.randint(2, 3))]
    far[rng.randrange(len(far))] = "free"
    b.curb(f(x0, v_far), f(x1, v_far), maneuver, far)

    if rng.random() < 0.6:
        v_alley = depth + rng.uniform(4, 8)
        alley = [rng.choice(["loading", "enforced", "ambiguous", "pickup"]) for _ in range(rng.randint(1, 2))]
        b.curb(f(-total / 2 - 10, v_alley), f(total / 2 + 10, v_alley), "pull_over", alley)

    # front sidewalk chain, including the target's front door
    v_walk = -sidewalk / 2
    xs = sorted({round(x0 + 10, 3), round(-total / 2, 3), round(total / 2, 3), round(x1 - 10, 3),
                 round(target_door, 3)})
    xs += [] if rng.random() < 0.5 else [round(rng.uniform(x0 + 12, x1 - 12), 3)]
    xs = sorted(set(xs))
    b.sidewalk([f(u, v_walk) for u in xs])
    return destination


def _strip_mall(rng: random.Random, b: _Builder) -> Point:
    f = _Frame(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-0.5, 0.5))
    n = rng.randint(3, 6)
    widths = [rng.uniform(12, 22) for _ in range(n)]
    depth = rng.uniform(20, 35)
    total = sum(widths)
    target = rng.randrange(n)
    x = -total / 2
    destination = f(0, 0)
    door_us = []
    for i, wi in enumerate(widths):
        corners = [f(x, 0), f(x + wi, 0), f(x + wi, depth), f(x, depth)]
        u_door = x + rng.uniform(0.3, 0.7) * wi
        door_us.append(u_door)
        doors = [(f"e{i + 1}a", f(u_door, 0), "front")]
        if i == target:
            destination = f(x + wi / 2, depth / 2)
            if rng.random() < 0.4:
                doors.append((f"e{i + 1}b", f(x + wi, depth * rng.uniform(0.3, 0.7)), "side"))
        b.building(f"b{i + 1}", corners, doors, target=i == target)
        x += wi

    # fire lane along the storefronts
    b.curb(f(-total / 2, -4), f(total / 2, -4), "pull_over",
           [rng.choice(["no_stopping", "pickup"]) for _ in range(rng.randint(1, 2))])

    rows = rng.randint(2, 3)
    row_len = min(total, rng.uniform(45, 80))
    row_x0 = rng.uniform(-total / 2, total / 2 - row_len)
    for r in range(rows):
        v = -12 - 14 * r
        profiles = ["free"] + [rng.choice(["free", "free", "accessible", "pickup"]) for _ in range(rng.randint(0, 2))]
        rng.shuffle(profiles)
        if r == 0:
            profiles[0] = "accessible" if rng.random() < 0.5 else profiles[0]
            if "free" not in profiles:
                profiles.append("free")
        b.curb(f(row_x0, v), f(row_x0 + row_len, v), "lot_space", profiles)

    v_road = -12 - 14 * (rows - 1) - rng.uniform(12, 18)
    ext = rng.uniform(10, 30)
    b.curb(f(-total / 2 - ext, v_road), f(total / 2 + ext, v_road), rng.choice(["parallel", "pull_over"]),
           [rng.choice(["metered", "no_standing_day", "enforced", "free"]) for _ in range(rng.randint(1, 2))])

    # storefront sidewalk plus a walkway down the central aisle
    aisle_u = row_x0 + row_len / 2
    front_us = sorted({round(-total / 2, 3), round(total / 2, 3),
                       round(door_us[target], 3), round(aisle_u, 3)})
    ids = b.sidewalk([f(u, -2) for u in front_us])
    aisle_node = ids[front_us.index(round(aisle_u, 3))]
    walkway = b.sidewalk([f(aisle_u, -12 - 14 * r + 6) for r in range(rows)] + [f(aisle_u, v_road + 3)])
    b.edges.append((aisle_node, walkway[0]))
    return destination


_LAYOUTS = {"standalone": _standalone, "row_shops": _row_shops, "strip_mall": _strip_mall}


def generate_scene(seed: int, preset: str = "standalone", jitter: float = 0.0) -> Scene:
    """Deterministic synthetic scene for ``(seed, preset)``.

    ``jitter`` (0-50 m) displaces the stored destination point to mimic
    geocoding error; the true building stays put.
    """
    if preset not in _LAYOUTS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    if not 0 <= jitter <= 50:
        raise ValueError("jitter must be within [0, 50] m")
    return scene_from_dict(generate_scene_dict(seed, preset, jitter))


def generate_scene_dict(seed: int, preset: str = "standalone", jitter: float = 0.0) -> Dict[str, Any]:
    rng = random.Random(f"{preset}:{seed}")
    lat, lon = rng.choice(CITY_CENTERS)
    origin = (round(lat + rng.uniform(-0.01, 0.01), 6), round(lon + rng.uniform(-0.01, 0.01), 6))
    b = _Builder(rng, preset)
    destination = _LAYOUTS[preset](rng, b)
    merchant, known = _merchant(rng, b, origin)
    if not known:
        b.forget_target_entrances()
    if jitter > 0:
        r, a = jitter * math.sqrt(rng.random()), rng.uniform(0, 2 * math.pi)
        destination = Point(destination.x + r * math.cos(a), destination.y + r * math.sin(a))
    with_graph = _graph_wanted(rng)
    return b.to_dict(origin, destination, merchant, _analysis_time(rng), with_graph)
