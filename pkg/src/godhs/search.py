"""Hierarchical object search over a scene, plus the two baseline strategies.

A trial explores every room first (breadth-first over the door graph),
then descends room -> carrier -> feature -> pose. The order at each level
comes from a ranker (semantic search), a fixed sweep (coverage search) or
a seeded random draw (random walk). Each feature is covered by a pose plan
executed chassis stop by chassis stop, with a detection check at every
camera pose.

Everything that happens is recorded as events in a :class:`SearchTrace`;
metrics are computed from the trace alone.
"""

from __future__ import annotations

import json
import math
import weakref
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from godhs import geometry
from godhs.metrics import CLUSTER_SIZE, cluster_representatives, searchable_features
from godhs.planner import (
    CameraModel,
    ChassisPose,
    EEPose,
    PlannerConfig,
    PosePlan,
    RobotModel,
    coverage_matrix,
    occlusion_grid,
    plan_feature,
)
from godhs.sorting import sort_ch_polar, sort_ee_lexicographic

STRATEGIES = ("godhs", "coverage", "random")
SORTING_MODES = ("none", "ee", "ch", "both")
COVERAGE_FEATURE_ORDER = ("top", "sides", "bottom", "inside")
TRACE_VERSION = 1


class SearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeModel:
    base_speed: float = 0.5  # m/s
    ee_speed: float = 0.2  # m/s
    inspect_seconds: float = 2.0  # per camera pose
    open_seconds: float = 3.0  # per open-action

    def __post_init__(self):
        if self.base_speed <= 0 or self.ee_speed <= 0:
            raise ValueError("speeds must be positive")
        if self.inspect_seconds < 0 or self.open_seconds < 0:
            raise ValueError("durations must be non-negative")


@dataclass(frozen=True)
class StrategyConfig:
    strategy: str = "godhs"
    seed: int = 0
    sorting: str = "both"
    noise: float = 0.0  # probability that a visible target is missed
    time: TimeModel = field(default_factory=TimeModel)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.sorting not in SORTING_MODES:
            raise ValueError(f"unknown sorting mode {self.sorting!r}")
        if not 0.0 <= self.noise < 1.0:
            raise ValueError("noise must lie in [0, 1)")


@dataclass(frozen=True)
class SearchSetup:
    """Robot, camera and planner parameters shared by every trial."""

    robot: RobotModel = field(default_factory=RobotModel)
    camera: CameraModel = field(default_factory=CameraModel)
    planner: PlannerConfig = field(default_factory=PlannerConfig)


# ------------------------------------------------------------------ trace


@dataclass
class SearchTrace:
    header: dict
    events: list = field(default_factory=list)
    found: bool = False
    time: float = 0.0
    chassis_length: float = 0.0
    ee_length: float = 0.0
    ee_poses: int = 0
    opens: int = 0

    def to_jsonl(self) -> str:
        lines = [json.dumps({"type": "header", **self.header})]
        lines += [json.dumps(ev) for ev in self.events]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "SearchTrace":
        recs = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not recs or recs[0].get("type") != "header":
            raise SearchError("trace must start with a header record")
        header = {k: v for k, v in recs[0].items() if k != "type"}
        trace = cls(header, recs[1:])
        end = recs[-1] if len(recs) > 1 else {}
        if end.get("type") in ("target-found", "target-not-found"):
            trace.found = end["type"] == "target-found"
            trace.time = end["time"]
            trace.chassis_length = end["chassis_length"]
            trace.ee_length = end["ee_length"]
            trace.ee_poses = end["ee_poses"]
            trace.opens = end["opens"]
        return trace

    def of_type(self, kind: str) -> list:
        return [e for e in self.events if e["type"] == kind]

    def summary(self) -> dict:
        return {
            "scene": self.header.get("scene"),
            "strategy": self.header.get("strategy"),
            "target": self.header.get("target"),
            "found": self.found,
            "rooms_searched": [e["room"] for e in self.events if e["type"] == "room-entered" and e["phase"] == "search"],
            "carriers_inspected": [e["carrier"] for e in self.of_type("carrier-inspected")],
            "features_inspected": [f"{e['carrier']}:{e['feature']}" for e in self.of_type("feature-inspected")],
            "ee_poses": self.ee_poses,
            "opens": self.opens,
            "chassis_length": round(self.chassis_length, 6),
            "ee_length": round(self.ee_length, 6),
            "time": round(self.time, 6),
        }


# ------------------------------------------------------------------ scene map


@dataclass
class SceneMap:
    """Maps built during exploration.

    ``global_cells`` is the scene occupancy, ``room_cells`` the per-room
    occupancy, ``room_index`` maps room ids to their order of integration
    and ``carrier_index`` does the same for discovered carrier clouds.
    """

    global_cells: set = field(default_factory=set)
    room_cells: dict = field(default_factory=dict)
    room_index: dict = field(default_factory=dict)
    carrier_index: dict = field(default_factory=dict)
    carrier_clouds: list = field(default_factory=list)
    room_types: dict = field(default_factory=dict)
    observed: dict = field(default_factory=dict)
    order: list = field(default_factory=list)

    def integrate(self, room_id: str, cells) -> int:
        """Merge a room's occupancy into the global map; returns the number of new cells."""
        fresh = set(cells) - self.global_cells
        self.global_cells |= fresh
        self.room_cells[room_id] = set(self.room_cells.get(room_id, set())) | set(cells)
        if room_id not in self.room_index:
            self.room_index[room_id] = len(self.room_index)
        return len(fresh)

    def add_carrier(self, carrier) -> None:
        if carrier.id not in self.carrier_index:
            self.carrier_index[carrier.id] = len(self.carrier_clouds)
            self.carrier_clouds.append(carrier.point_cloud)


def door_position(scene, a: str, b: str) -> tuple:
    for d in scene.doors:
        if set(d.rooms) == {a, b}:
            return tuple(d.position)
    raise SearchError(f"no door between {a!r} and {b!r}")


def room_path(scene, start: str, goal: str) -> list:
    """Fewest-doors room sequence from ``start`` to ``goal`` (door order breaks ties)."""
    if start == goal:
        return [start]
    prev = {start: None}
    queue = deque([start])
    while queue:
        r = queue.popleft()
        for nb in scene.door_graph[r]:
            if nb not in prev:
                prev[nb] = r
                if nb == goal:
                    path = [goal]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return path[::-1]
                queue.append(nb)
    raise SearchError(f"room {goal!r} unreachable from {start!r}")


def exploration_order(scene, rng: np.random.Generator) -> list:
    """Breadth-first room order from the entry room; neighbours expand in a seeded order."""
    start = scene.rooms[0].id
    seen, order = {start}, []
    queue = deque([start])
    while queue:
        r = queue.popleft()
        order.append(r)
        nbs = [n for n in scene.door_graph[r] if n not in seen]
        for k in rng.permutation(len(nbs)):
            seen.add(nbs[k])
            queue.append(nbs[k])
    if len(order) != len(scene.rooms):
        raise SearchError("scene has rooms unreachable from the entry room")
    return order


# ------------------------------------------------------------------ plan cache


@dataclass
class FeatureView:
    """A pose plan plus, per camera pose, the placement clusters it sees."""

    plan: PosePlan
    clusters: dict  # EEPose -> sorted cluster ids


_PLAN_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def feature_view(scene, carrier, feature: str, setup: SearchSetup, cluster_size: float = CLUSTER_SIZE) -> FeatureView:
    """Plan a feature once per (scene, setup) and remember the result."""
    per_scene = _PLAN_CACHE.setdefault(scene, {})
    key = (carrier.id, feature, setup, cluster_size)
    if key not in per_scene:
        plan = plan_feature(scene, carrier, feature, setup.robot, setup.camera, setup.planner)
        clusters = {}
        fm = carrier.feature_maps[feature]
        if not plan.empty and len(fm):
            # a placement counts as checked when its representative point is in view
            reps = cluster_representatives(fm.points, cluster_size)
            cov = coverage_matrix(plan.ee_poses, setup.camera, fm.points[reps], occlusion_grid(scene, carrier, feature))
            for ee, row in zip(plan.ee_poses, cov):
                clusters[ee] = np.flatnonzero(row).tolist()
        per_scene[key] = FeatureView(plan, clusters)
    return per_scene[key]


def clear_plan_cache() -> None:
    _PLAN_CACHE.clear()


def order_entries(plan: PosePlan, sorting: str, start) -> list:
    """Execution order as chassis stops, each with the camera poses taken there.

    Unsorted execution walks the (chassis, camera) pairs in selection order,
    so a chassis pose can be visited more than once. Camera sorting orders
    the pairs by camera key; chassis sorting sweeps each chassis pose once.
    """
    if sorting not in SORTING_MODES:
        raise SearchError(f"unknown sorting mode {sorting!r}")
    if sorting in ("ch", "both") and plan.entries:
        chs = plan.ch_poses
        ordered, _ = sort_ch_polar(chs, plan.center, start) if len(chs) > 1 else (chs, [])
        by_ch = dict(plan.entries)
        stops = [(ch, list(by_ch[ch])) for ch in ordered]
        if sorting == "both":
            stops = [(ch, sort_ee_lexicographic(ees)) for ch, ees in stops]
        return stops
    pairs = list(plan.pairs) or [(ch, ee) for ch, ees in plan.entries for ee in ees]
    if sorting == "ee":
        rank = {id(ee): k for k, ee in enumerate(sort_ee_lexicographic([ee for _, ee in pairs]))}
        pairs.sort(key=lambda pe: rank[id(pe[1])])
    stops: list = []
    for ch, ee in pairs:
        if stops and stops[-1][0] == ch:
            stops[-1][1].append(ee)
        else:
            stops.append((ch, [ee]))
    return stops


# ------------------------------------------------------------------ detection


def detect_target(ee: EEPose, cam: CameraModel, scene, opened, target: str = "orange", room: str | None = None,
                  rng: np.random.Generator | None = None, noise: float = 0.0) -> bool:
    """True when a ``target`` item is in view from ``ee`` with a clear line of sight.

    Items inside a carrier are visible only once that carrier has been
    opened. With ``room`` given, only items in that room count. A visible
    item is missed with probability ``noise`` (drawn from ``rng``).
    """
    opened = set(opened)
    for item in scene.items_labeled(target):
        carrier = scene.carrier_by_id[item.carrier]
        home = scene.room_of[carrier.id]
        if room is not None and home != room:
            continue
        if item.feature == "inside" and carrier.id not in opened:
            continue
        grid = scene.room_grid(home)
        for cid in opened:
            c = scene.carrier_by_id[cid]
            if scene.room_of[cid] == home and c.door is not None:
                grid = grid.without(c.door_grid)
        pos = item.position(carrier)
        if not coverage_matrix([ee], cam, pos[None, :], grid)[0, 0]:
            continue
        if noise > 0:
            if rng is None:
                raise ValueError("detection noise needs a random generator")
            if rng.random() < noise:
                continue
        return True
    return False


# ------------------------------------------------------------------ engine


def _r(v: float) -> float:
    return float(v)


def _xy(p) -> list:
    return [_r(p[0]), _r(p[1])]


class _Trial:
    """Mutable state of one trial: robot position, clock and event log."""

    def __init__(self, scene, target: str, setup: SearchSetup, cfg: StrategyConfig, ranker_name: str | None,
                 start=None, start_room: str | None = None):
        self.scene = scene
        self.target = target
        self.setup = setup
        self.cfg = cfg
        self.noise_rng = np.random.Generator(np.random.PCG64([cfg.seed, 1]))
        self.choice_rng = np.random.Generator(np.random.PCG64([cfg.seed, 2]))
        self.explore_rng = np.random.Generator(np.random.PCG64([cfg.seed, 3]))
        first = scene.rooms[0]
        self.room = start_room or first.id
        self.pos = tuple(start) if start is not None else scene.room_by_id[self.room].center
        self.opened: set = set()
        self.map = SceneMap()
        self.trace = SearchTrace(
            {
                "version": TRACE_VERSION,
                "scene": scene.name,
                "target": target,
                "strategy": cfg.strategy,
                "ranker": ranker_name,
                "seed": cfg.seed,
                "sorting": cfg.sorting,
                "noise": cfg.noise,
                "time_model": asdict(cfg.time),
                "planner": _planner_snapshot(setup),
                "start": _xy(self.pos),
            }
        )
        self.visited_rooms: set = set()
        self.visited_carriers: set = set()
        self.visited_features: set = set()

    # --- bookkeeping

    def emit(self, kind: str, **fields) -> dict:
        ev = {"i": len(self.trace.events), "type": kind, **fields, "time": _r(self.trace.time)}
        self.trace.events.append(ev)
        return ev

    def _drive(self, waypoints, phase: str, to, room: str, **extra) -> None:
        pts = [self.pos] + [tuple(w) for w in waypoints]
        length = sum(math.dist(a, b) for a, b in zip(pts[:-1], pts[1:]))
        self.trace.chassis_length += length
        self.trace.time += length / self.cfg.time.base_speed
        self.pos = tuple(waypoints[-1]) if waypoints else self.pos
        self.room = room
        self.emit("chassis-move", phase=phase, to=to, length=_r(length), via=[_xy(w) for w in waypoints[:-1]], **extra)

    def travel(self, room: str, xy, phase: str, to=None, **extra) -> None:
        """Drive to ``xy`` in ``room``, passing through doors on the way."""
        hops = room_path(self.scene, self.room, room)
        via = [door_position(self.scene, a, b) for a, b in zip(hops[:-1], hops[1:])]
        self._drive(via + [tuple(xy)], phase, to if to is not None else _xy(xy), room, **extra)

    # --- exploration

    def explore(self) -> SceneMap:
        for rid in exploration_order(self.scene, self.explore_rng):
            room = self.scene.room_by_id[rid]
            self.travel(rid, room.center, "explore")
            self.emit("room-entered", room=rid, phase="explore")
            cells = map(tuple, self.scene.room_grid(rid).cells.tolist())
            new = self.map.integrate(rid, cells)
            observed = self.scene.observable_objects(rid)
            self.map.observed[rid] = observed
            self.map.order.append(rid)
            for cid in room.carriers:
                self.map.add_carrier(self.scene.carrier_by_id[cid])
            inferred = self.infer_room(observed)
            self.map.room_types[rid] = inferred
            self.emit("room-type-inferred", room=rid, observed=observed, inferred=inferred, new_cells=new)
        return self.map

    def infer_room(self, observed) -> str:
        raise NotImplementedError

    # --- search levels

    def enter_room(self, rid: str) -> None:
        if rid in self.visited_rooms:
            raise SearchError(f"room {rid!r} entered twice")
        self.visited_rooms.add(rid)
        self.travel(rid, self.scene.room_by_id[rid].center, "search")
        self.emit("room-entered", room=rid, phase="search")

    def begin_carrier(self, cid: str) -> None:
        if cid in self.visited_carriers:
            raise SearchError(f"carrier {cid!r} inspected twice")
        self.visited_carriers.add(cid)
        c = self.scene.carrier_by_id[cid]
        self.emit("carrier-inspected", carrier=cid, label=c.label)

    def inspect_feature(self, carrier, feature: str) -> bool:
        """Open if needed, plan and execute one feature; True when the target was seen."""
        key = (carrier.id, feature)
        if key in self.visited_features:
            return False
        self.visited_features.add(key)
        if feature == "inside":
            if not carrier.openable:
                self.emit("open-action", carrier=carrier.id, success=False)
                self.emit("feature-skipped", carrier=carrier.id, feature=feature, reason="not-openable")
                return False
        if len(carrier.feature_maps[feature]) == 0:
            self.emit("feature-skipped", carrier=carrier.id, feature=feature, reason="empty-feature")
            return False
        view = feature_view(self.scene, carrier, feature, self.setup)
        if view.plan.empty:
            self.emit("feature-skipped", carrier=carrier.id, feature=feature, reason="empty-plan")
            return False
        if feature == "inside" and carrier.id not in self.opened:
            self.opened.add(carrier.id)
            self.trace.opens += 1
            self.trace.time += self.cfg.time.open_seconds
            self.emit("open-action", carrier=carrier.id, success=True)
        return self.execute(carrier, feature, view)

    def execute(self, carrier, feature: str, view: FeatureView) -> bool:
        plan = view.plan
        robot, cam, tm = self.setup.robot, self.setup.camera, self.cfg.time
        room = self.scene.room_of[carrier.id]
        self.emit(
            "feature-inspected", carrier=carrier.id, feature=feature, start=_xy(self.pos),
            chassis_poses=len(plan.entries), ee_poses=len(plan.ee_poses), dropped=len(plan.dropped),
            coverage=_r(plan.coverage),
        )
        home = arm = None
        for k, (ch, ees) in enumerate(order_entries(plan, self.cfg.sorting, self.pos)):
            if arm is not None:
                # the arm folds back to its home position before the base moves
                length = float(np.linalg.norm(arm - home))
                self.trace.ee_length += length
                self.trace.time += length / tm.ee_speed
                self.emit("ee-move", to=[_r(v) for v in home], length=_r(length), stop=k - 1, stow=True)
            home = robot.home_world(ch)
            self.travel(room, (ch.x, ch.y), "pose", to=ch.to_list(), home=[_r(v) for v in home], stop=k)
            arm = home
            for ee in ees:
                length = float(np.linalg.norm(ee.position - arm))
                arm = ee.position
                self.trace.ee_length += length
                self.trace.ee_poses += 1
                self.trace.time += length / tm.ee_speed + tm.inspect_seconds
                self.emit("ee-move", to=ee.to_list(), length=_r(length), stop=k, stow=False)
                hit = detect_target(
                    ee, cam, self.scene, self.opened, self.target, room=self.room,
                    rng=self.noise_rng, noise=self.cfg.noise,
                )
                self.emit(
                    "detection-check", carrier=carrier.id, feature=feature, hit=hit,
                    clusters=view.clusters.get(ee, []),
                )
                if hit:
                    return True
        return False

    def finish(self, found: bool) -> SearchTrace:
        t = self.trace
        t.found = found
        self.emit(
            "target-found" if found else "target-not-found",
            chassis_length=_r(t.chassis_length), ee_length=_r(t.ee_length), ee_poses=t.ee_poses, opens=t.opens,
        )
        return t


def _planner_snapshot(setup: SearchSetup) -> dict:
    p = setup.planner
    return {
        "standoff": p.standoff,
        "coverage_target": p.coverage_target,
        "max_ee_poses": p.max_ee_poses,
        "max_feature_points": p.max_feature_points,
        "candidate_cap": p.candidate_cap,
        "reach": [setup.robot.reach_min, setup.robot.reach_max],
        "fov": [setup.camera.fov_h, setup.camera.fov_v],
        "range": [setup.camera.near, setup.camera.far],
    }


class _RankedTrial(_Trial):
    def __init__(self, *args, ranker=None, **kw):
        super().__init__(*args, **kw)
        self.ranker = ranker

    def infer_room(self, observed) -> str:
        resp = self.ranker.infer_room(observed)
        return resp.labels[0]


class _BlindTrial(_Trial):
    """Baselines still map rooms, but use the mock inference so exploration costs match."""

    def infer_room(self, observed) -> str:
        from godhs.semantics.kb import default_kb

        return default_kb().infer_room(observed)


def explore_scene(scene, robot: RobotModel | None = None, ranker=None, seed: int = 0) -> SceneMap:
    """Map every room in seeded breadth-first order and infer each room's type."""
    from godhs.semantics.ranker import MockRanker

    setup = SearchSetup(robot=robot or RobotModel())
    trial = _RankedTrial(scene, "", setup, StrategyConfig(seed=seed), "mock", ranker=ranker or MockRanker())
    return trial.explore()


def _log_ranking(trial: _Trial, level: str, resp, **ctx) -> None:
    trial.emit(
        "ranking", level=level, labels=list(resp.labels), valid=bool(resp.valid), fallback=bool(resp.fallback),
        retries=int(resp.retries), **ctx,
    )


def run_godhs(scene, target: str, ranker, setup: SearchSetup | None = None,
              cfg: StrategyConfig | None = None) -> SearchTrace:
    """Semantic search: rooms, carriers and features in the ranker's order."""
    setup = setup or SearchSetup()
    cfg = cfg or StrategyConfig("godhs")
    trial = _RankedTrial(scene, target, setup, cfg, getattr(ranker, "name", "custom"), ranker=ranker)
    smap = trial.explore()
    types = [smap.room_types[r] for r in smap.order]
    resp = ranker.rank_rooms(types, target)
    _log_ranking(trial, "room", resp)
    room_order = [r for t in resp.labels for r in smap.order if smap.room_types[r] == t]
    for rid in room_order:
        trial.enter_room(rid)
        rtype = smap.room_types[rid]
        room = scene.room_by_id[rid]
        observed = smap.observed[rid]
        plausible = ranker.classify_carriers(observed, target, rtype)
        _log_ranking(trial, "carrier-classify", plausible, room=rid)
        present = {scene.carrier_by_id[c].label for c in room.carriers}
        labels = [lab for lab in plausible.labels if lab in present]
        ranked = ranker.rank_carriers(labels, target, rtype) if labels else None
        if ranked is not None:
            _log_ranking(trial, "carrier-rank", ranked, room=rid)
        for label in ranked.labels if ranked is not None else []:
            for cid in room.carriers:
                carrier = scene.carrier_by_id[cid]
                if carrier.label != label:
                    continue
                trial.begin_carrier(cid)
                feats = ranker.rank_features(label, target)
                _log_ranking(trial, "feature", feats, carrier=cid)
                for feature in feats.labels:
                    if trial.inspect_feature(carrier, feature):
                        return trial.finish(True)
    return trial.finish(False)


def run_coverage(scene, target: str, setup: SearchSetup | None = None,
                 cfg: StrategyConfig | None = None) -> SearchTrace:
    """Exhaustive sweep: rooms in exploration order, carriers as listed, fixed feature order."""
    setup = setup or SearchSetup()
    cfg = cfg or StrategyConfig("coverage")
    trial = _BlindTrial(scene, target, setup, cfg, None)
    smap = trial.explore()
    for rid in smap.order:
        trial.enter_room(rid)
        for cid in scene.room_by_id[rid].carriers:
            carrier = scene.carrier_by_id[cid]
            trial.begin_carrier(cid)
            for feature in COVERAGE_FEATURE_ORDER:
                if feature in searchable_features(carrier) and trial.inspect_feature(carrier, feature):
                    return trial.finish(True)
    return trial.finish(False)


def run_random(scene, target: str, setup: SearchSetup | None = None,
               cfg: StrategyConfig | None = None) -> SearchTrace:
    """Random walk: uniform draws (PCG64 seeded by the trial seed) over unvisited rooms, carriers, features."""
    setup = setup or SearchSetup()
    cfg = cfg or StrategyConfig("random")
    trial = _BlindTrial(scene, target, setup, cfg, None)
    smap = trial.explore()
    rng = trial.choice_rng
    rooms = list(smap.order)
    while rooms:
        rid = rooms.pop(int(rng.integers(len(rooms))))
        trial.enter_room(rid)
        carriers = list(scene.room_by_id[rid].carriers)
        while carriers:
            cid = carriers.pop(int(rng.integers(len(carriers))))
            carrier = scene.carrier_by_id[cid]
            trial.begin_carrier(cid)
            feats = [f for f in COVERAGE_FEATURE_ORDER if f in searchable_features(carrier)]
            while feats:
                feature = feats.pop(int(rng.integers(len(feats))))
                if trial.inspect_feature(carrier, feature):
                    return trial.finish(True)
    return trial.finish(False)


def run_strategy(scene, target: str, cfg: StrategyConfig, setup: SearchSetup | None = None, ranker=None) -> SearchTrace:
    if cfg.strategy == "godhs":
        if ranker is None:
            from godhs.semantics.ranker import MockRanker

            ranker = MockRanker()
        return run_godhs(scene, target, ranker, setup, cfg)
    if cfg.strategy == "coverage":
        return run_coverage(scene, target, setup, cfg)
    return run_random(scene, target, setup, cfg)


def run_instance(scene, carrier_id: str, feature: str, sorting: str = "both", setup: SearchSetup | None = None,
                 time_model: TimeModel | None = None, start=None) -> SearchTrace:
    """Execute one feature's full pose plan from ``start`` (default: the room center), without stopping early.

    Used by the sorting ablation: no exploration, no detection stop, so
    paired runs differ only in execution order.
    """
    setup = setup or SearchSetup()
    cfg = StrategyConfig("coverage", sorting=sorting, time=time_model or TimeModel())
    carrier = scene.carrier_by_id[carrier_id]
    room = scene.room_of[carrier_id]
    trial = _BlindTrial(scene, "", setup, cfg, None, start=start, start_room=room)
    trial.trace.header["instance"] = {"carrier": carrier_id, "feature": feature}
    trial.visited_rooms.add(room)
    trial.begin_carrier(carrier_id)
    trial.inspect_feature(carrier, feature)
    return trial.finish(False)
