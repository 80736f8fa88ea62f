"""Search-efficiency rates, overall search rate and path-length ratios.

All metrics are computed from a finished :class:`~godhs.search.SearchTrace`
(plus the scene for denominators), never from engine internals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_WEIGHTS = (0.2, 0.3, 0.5)
CLUSTER_SIZE = 0.2  # meters; edge of the bins that group feature points into placements
MAX_TOUR_WAYPOINTS = 10


class MetricsError(ValueError):
    pass


# ------------------------------------------------------------------ placements


def placement_clusters(points, size: float = CLUSTER_SIZE) -> np.ndarray:
    """Cluster label per feature point: points sharing a ``size`` bin form one placement."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64)
    bins = np.floor(pts / size + 1e-9).astype(np.int64)
    _, labels = np.unique(bins, axis=0, return_inverse=True)
    return labels.reshape(-1)


def cluster_representatives(points, size: float = CLUSTER_SIZE) -> np.ndarray:
    """Index of one point per cluster: the point nearest its cluster mean (lowest index on ties)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    labels = placement_clusters(pts, size)
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64)
    k = int(labels.max()) + 1
    sums = np.zeros((k, 3))
    np.add.at(sums, labels, pts)
    means = sums / np.bincount(labels, minlength=k)[:, None]
    d = np.linalg.norm(pts - means[labels], axis=1)
    order = np.lexsort((np.arange(len(pts)), d, labels))
    first = np.ones(len(order), dtype=bool)
    first[1:] = labels[order][1:] != labels[order][:-1]
    return order[first]


def searchable_features(carrier) -> list[str]:
    """Features that can hold an item: non-empty maps, and inside only when openable."""
    from godhs.geometry import FEATURES

    return [
        f for f in FEATURES
        if len(carrier.feature_maps[f]) and (f != "inside" or carrier.openable)
    ]


def total_placements(scene, size: float = CLUSTER_SIZE) -> int:
    n = 0
    for c in scene.carriers:
        for f in searchable_features(c):
            n += int(placement_clusters(c.feature_maps[f].points, size).max()) + 1
    return n


# ------------------------------------------------------------------ rates


@dataclass(frozen=True)
class SearchRates:
    room: float
    carrier: float
    item: float
    counts: dict = field(default_factory=dict)  # name -> (numerator, denominator)
    found: bool = True

    def __post_init__(self):
        for name in ("room", "carrier", "item"):
            v = getattr(self, name)
            if not 0.0 <= v <= 100.0:
                raise MetricsError(f"{name} rate {v} outside [0, 100]")

    def as_tuple(self) -> tuple:
        return (self.room, self.carrier, self.item)


def compute_rates(trace, scene, size: float = CLUSTER_SIZE) -> SearchRates:
    """Percent of rooms, carriers and placements searched before the target was found.

    Only search-phase room entries count. A trace that ends without the
    target reports 100 on every rate.
    """
    n_rooms = len(scene.rooms)
    n_carriers = len(scene.carriers)
    n_place = total_placements(scene, size)
    if min(n_rooms, n_carriers, n_place) <= 0:
        raise MetricsError("scene has an empty rate denominator")
    if not trace.found:
        counts = {"room": (n_rooms, n_rooms), "carrier": (n_carriers, n_carriers), "item": (n_place, n_place)}
        return SearchRates(100.0, 100.0, 100.0, counts, found=False)
    rooms, carriers, placements = set(), set(), set()
    for ev in trace.events:
        kind = ev["type"]
        if kind == "room-entered" and ev["phase"] == "search":
            rooms.add(ev["room"])
        elif kind == "carrier-inspected":
            carriers.add(ev["carrier"])
        elif kind == "detection-check":
            placements.update((ev["carrier"], ev["feature"], c) for c in ev["clusters"])
    counts = {
        "room": (len(rooms), n_rooms),
        "carrier": (len(carriers), n_carriers),
        "item": (len(placements), n_place),
    }
    return SearchRates(*(100.0 * a / b for a, b in counts.values()), counts=counts, found=True)


def check_weights(weights) -> tuple:
    w = tuple(float(v) for v in weights)
    if len(w) != 3 or any(v < 0 or not math.isfinite(v) for v in w):
        raise MetricsError("weights must be three non-negative numbers")
    if abs(sum(w) - 1.0) > 1e-9:
        raise MetricsError(f"weights must sum to 1 (got {sum(w)!r})")
    return w


def compute_osr(rates, weights=DEFAULT_WEIGHTS) -> float:
    """Weighted mean of the room, carrier and item rates."""
    w1, w2, w3 = check_weights(weights)
    r, c, i = rates.as_tuple() if isinstance(rates, SearchRates) else tuple(rates)
    return w1 * r + w2 * c + w3 * i


# ------------------------------------------------------------------ tours


def optimal_tour_length(waypoints, start) -> float:
    """Shortest open path from ``start`` through every waypoint (exact, Held-Karp)."""
    pts = np.asarray(waypoints, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(0, len(start)) if pts.size == 0 else pts.reshape(1, -1)
    n = len(pts)
    if n > MAX_TOUR_WAYPOINTS:
        raise MetricsError(
            f"{n} waypoints exceed the exact-tour cap of {MAX_TOUR_WAYPOINTS}; lower max_ee_poses in the planner config"
        )
    if n == 0:
        return 0.0
    s = np.asarray(start, dtype=float)
    d0 = np.linalg.norm(pts - s, axis=1)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    bit = 1 << np.arange(n)
    masks = np.arange(1 << n)
    size = np.array([bin(m).count("1") for m in range(1 << n)])
    # best[mask, j]: shortest path from start through ``mask`` ending at j
    best = np.full((1 << n, n), math.inf)
    best[bit, np.arange(n)] = d0
    for layer in range(1, n):
        m = masks[size == layer]
        # extend every path in this layer by one unvisited waypoint
        ext = (best[m][:, :, None] + d[None, :, :]).min(axis=1)
        free = (m[:, None] & bit[None, :]) == 0
        rows, ks = np.nonzero(free)
        np.minimum.at(best, (m[rows] | bit[ks], ks), ext[rows, ks])
    return float(best[-1].min())


def polyline_length(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


# ------------------------------------------------------------------ path stats


@dataclass(frozen=True)
class PathStats:
    ee_ratio: float
    ch_ratio: float
    time_ratio: float | None
    ee_length: float  # executed, meters
    ee_optimal: float
    ch_length: float
    ch_optimal: float
    time: float  # seconds
    flags: tuple = ()


def _ratio(a: float, b: float) -> float:
    if b <= 0:
        return 1.0 if a <= 0 else math.inf
    return a / b


def path_stats(trace, paired=None) -> PathStats:
    """Executed versus optimal travel during pose execution.

    Within one feature visit the optimum is a chassis tour through every
    distinct chassis pose, starting where the robot stood when the visit
    began, plus one arm tour per chassis pose from that pose's arm home
    through the camera poses taken there. Stow moves count as executed
    arm travel. ``paired`` is the same trial with sorting disabled and
    gives the time ratio.
    """
    ee_len = ee_opt = ch_len = ch_opt = 0.0
    ch_start = None
    stops: dict = {}  # chassis pose -> (arm home, camera waypoints)
    current = None

    def close():
        nonlocal ee_opt, ch_opt
        if stops:
            ch_opt += optimal_tour_length([k[:2] for k in stops], ch_start)
            for home, pts in stops.values():
                ee_opt += optimal_tour_length(pts, home) if pts else 0.0
        stops.clear()

    for ev in trace.events:
        kind = ev["type"]
        if kind == "feature-inspected":
            close()
            ch_start = ev["start"]
        elif kind == "chassis-move" and ev["phase"] == "pose":
            ch_len += ev["length"]
            current = tuple(ev["to"])
            stops.setdefault(current, (ev["home"], []))
        elif kind == "ee-move":
            ee_len += ev["length"]
            if not ev.get("stow"):
                stops[current][1].append(ev["to"][:3])
    close()
    flags = ()
    time_ratio = None
    if paired is None:
        flags = ("no-paired-run",)
    else:
        time_ratio = _ratio(trace.time, paired.time)
    return PathStats(
        _ratio(ee_len, ee_opt), _ratio(ch_len, ch_opt), time_ratio, ee_len, ee_opt, ch_len, ch_opt, trace.time, flags
    )


def time_ratio(trace, paired) -> float:
    return _ratio(trace.time, paired.time)
