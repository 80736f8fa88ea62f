"""Viewpoint planning for one carrier feature.

Pipeline: candidate camera poses around the feature points, greedy
selection for visual coverage, chassis candidates on rings around the
carrier, greedy chassis cover under a fast reach screen, then IK validation
that assigns every kept camera pose to one chassis pose.

Camera frame convention: x forward, y left, z up. An ``EEPose`` with roll
``phi``, pitch ``theta`` and yaw ``psi`` has orientation
``Rz(psi) @ Ry(-theta) @ Rx(phi)``, so its forward axis is
``(cos theta cos psi, cos theta sin psi, sin theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Point

from godhs import geometry
from godhs.geometry import FeatureMap, VoxelGrid
from godhs.kinematics import Chain, IKParams, kuka_like_chain, rot_x, rot_y, rot_z, solve_ik

_DEDUP = 1e-6


def normalize_angle(a: float) -> float:
    """Map to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2 * math.pi)


@dataclass(frozen=True)
class ChassisPose:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def to_list(self) -> list:
        return [self.x, self.y, self.theta]


@dataclass(frozen=True)
class EEPose:
    x: float
    y: float
    z: float
    phi: float = 0.0  # roll
    theta: float = 0.0  # pitch, positive looks up
    psi: float = 0.0  # yaw

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("phi", "theta", "psi"):
            object.__setattr__(self, name, normalize_angle(float(getattr(self, name))))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def rotation(self) -> np.ndarray:
        return camera_rotation(self.phi, self.theta, self.psi)

    def to_list(self) -> list:
        return [self.x, self.y, self.z, self.phi, self.theta, self.psi]


def camera_rotation(phi: float, theta: float, psi: float) -> np.ndarray:
    return rot_z(psi) @ rot_y(-theta) @ rot_x(phi)


@dataclass(frozen=True)
class CameraModel:
    fov_h: float = math.radians(87.0)
    fov_v: float = math.radians(58.0)
    near: float = 0.05
    far: float = 3.0

    def __post_init__(self):
        if not (0 < self.fov_h < math.pi and 0 < self.fov_v < math.pi):
            raise ValueError("fields of view must lie in (0, pi)")
        if not (0 <= self.near < self.far):
            raise ValueError("camera range must satisfy 0 <= near < far")


@dataclass(frozen=True)
class RobotModel:
    chain: Chain = field(default_factory=kuka_like_chain)
    mount: tuple = (0.15, 0.0, 0.6)  # arm base in the chassis frame
    reach_min: float = 0.25
    reach_max: float = 0.75  # the full stretch is ~0.9 m but not at arbitrary orientation
    chassis_radius: float = 0.3

    def __post_init__(self):
        if not self.reach_min < self.reach_max:
            raise ValueError("reach_min must be below reach_max")
        if self.chassis_radius <= 0:
            raise ValueError("chassis radius must be positive")

    def mount_world(self, ch: ChassisPose) -> np.ndarray:
        c, s = math.cos(ch.theta), math.sin(ch.theta)
        mx, my, mz = self.mount
        return np.array([ch.x + c * mx - s * my, ch.y + s * mx + c * my, mz])

    def home_world(self, ch: ChassisPose) -> np.ndarray:
        """Camera position with all joints at zero, in the world frame."""
        p, _ = self.chain.forward(np.zeros(self.chain.dof))
        return self.mount_world(ch) + rot_z(ch.theta) @ p

    def to_local(self, ch: ChassisPose, ee: EEPose) -> tuple[np.ndarray, np.ndarray]:
        Rb = rot_z(ch.theta)
        p = Rb.T @ (ee.position - self.mount_world(ch))
        return p, Rb.T @ ee.rotation


@dataclass(frozen=True)
class PlannerConfig:
    standoff: float = 0.4
    angular_step: float = math.pi / 2
    coverage_target: float = 0.95
    candidate_cap: int = 64
    max_feature_points: int = 80
    max_ee_poses: int = 10
    ch_radial_step: float = 0.2
    ch_angular_step: float = math.pi / 8
    ch_gap: float = 0.05  # clearance between chassis disc and carrier
    oblique_pitch: float = math.pi / 4  # downward look angle of views from outside
    ik: IKParams = field(default_factory=IKParams)

    def __post_init__(self):
        if not 0 < self.coverage_target <= 1:
            raise ValueError("coverage_target must lie in (0, 1]")
        if self.standoff <= 0 or self.angular_step <= 0 or self.ch_angular_step <= 0 or self.ch_radial_step <= 0:
            raise ValueError("standoff and steps must be positive")
        if self.max_ee_poses < 1 or self.candidate_cap < 1 or self.max_feature_points < 1:
            raise ValueError("caps must be >= 1")


# ------------------------------------------------------------------ vision cone


def camera_frame_coords(ee: EEPose, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    return (pts - ee.position) @ ee.rotation


def _in_cone(local: np.ndarray, cam: CameraModel) -> np.ndarray:
    x, y, z = local[..., 0], local[..., 1], local[..., 2]
    az = np.arctan2(y, x)
    el = np.arctan2(z, x)
    rng = np.sqrt(x * x + y * y + z * z)
    return (np.abs(az) < cam.fov_h / 2) & (np.abs(el) < cam.fov_v / 2) & (rng >= cam.near) & (rng <= cam.far)


def cone_mask(ee: EEPose, cam: CameraModel, points) -> np.ndarray:
    return _in_cone(camera_frame_coords(ee, points), cam)


def cone_covers(ee: EEPose, cam: CameraModel, p) -> bool:
    return bool(cone_mask(ee, cam, p)[0])


def coverage_matrix(cands, cam: CameraModel, points, grid: VoxelGrid | None) -> np.ndarray:
    """Boolean (candidates x points): in the cone and with clear line of sight."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    n, m = len(cands), len(pts)
    if n == 0 or m == 0:
        return np.zeros((n, m), dtype=bool)
    pos = np.array([c.position for c in cands])
    rot = np.array([c.rotation for c in cands])
    local = np.einsum("nmi,nij->nmj", pts[None, :, :] - pos[:, None, :], rot)
    cov = _in_cone(local, cam)
    if grid is not None and len(grid):
        ci, pj = np.nonzero(cov)
        if len(ci):
            blocked = geometry.segment_blocked(pos[ci], pts[pj], grid)
            cov[ci[blocked], pj[blocked]] = False
    return cov


def coverage_set(ee: EEPose, cam: CameraModel, fm: FeatureMap, grid: VoxelGrid | None) -> set:
    return set(np.flatnonzero(coverage_matrix([ee], cam, fm.points, grid)[0]).tolist())


# ----------------------------------------------------------- candidate poses


def subsample(points: np.ndarray, cap: int) -> np.ndarray:
    """Deterministic stride subsample to at most ``cap`` rows."""
    n = len(points)
    if n <= cap:
        return points
    return points[:: math.ceil(n / cap)]


def _snap(angle: float, step: float) -> float:
    return normalize_angle(round(angle / step) * step)


def _outward(p, center, step) -> float:
    dx, dy = p[0] - center[0], p[1] - center[1]
    a = math.atan2(dy, dx) if math.hypot(dx, dy) > 1e-9 else 0.0
    return _snap(a, step)


def generate_ee_candidates(
    fm: FeatureMap,
    cam: CameraModel,
    standoff: float,
    angular_step: float,
    *,
    center=None,
    front_yaw: float | None = None,
    oblique_pitch: float = math.pi / 4,
    max_points: int | None = None,
    cap: int | None = None,
) -> list[EEPose]:
    """Camera poses at ``standoff`` from the feature points, looking back at them.

    top: straight down from above, plus oblique views from outside at
    ``oblique_pitch`` for surfaces too high to look down on. sides:
    horizontal, from outside along the snapped centroid-to-point direction.
    bottom: oblique views only, since a camera cannot sit under the floor.
    inside: from in front of the opening (``front_yaw``) looking in; without
    a front yaw it falls back to the sides rule.
    """
    if len(fm) == 0:
        raise geometry.GeometryError(f"empty {fm.feature} feature map")
    pts = fm.points if max_points is None else subsample(fm.points, max_points)
    if center is None:
        center = fm.points[:, :2].mean(axis=0)
    c, s = math.cos(oblique_pitch), math.sin(oblique_pitch)

    def oblique(p):
        a = _outward(p, center, angular_step)
        return EEPose(
            p[0] + standoff * c * math.cos(a),
            p[1] + standoff * c * math.sin(a),
            p[2] + standoff * s,
            0.0,
            -oblique_pitch,
            a + math.pi,
        )

    out: list[EEPose] = []
    if fm.feature == "top":
        out.extend(EEPose(p[0], p[1], p[2] + standoff, 0.0, -math.pi / 2, 0.0) for p in pts)
        out.extend(oblique(p) for p in pts)
    elif fm.feature == "bottom":
        out.extend(oblique(p) for p in pts)
    elif fm.feature == "inside" and front_yaw is not None:
        f = np.array([math.cos(front_yaw), math.sin(front_yaw)])
        face = float((fm.points[:, :2] @ f).max())
        res = _spacing(fm.points)
        for p in pts:
            d = face - float(p[:2] @ f) + res + standoff
            out.append(EEPose(p[0] + d * f[0], p[1] + d * f[1], p[2], 0.0, 0.0, front_yaw + math.pi))
    else:
        for p in pts:
            a = _outward(p, center, angular_step)
            out.append(EEPose(p[0] + standoff * math.cos(a), p[1] + standoff * math.sin(a), p[2], 0.0, 0.0, a + math.pi))
    out = dedupe_poses(out)
    if cap is not None and len(out) > cap:
        out = out[:: math.ceil(len(out) / cap)]
    return out


def _spacing(points: np.ndarray) -> float:
    """Smallest positive coordinate gap, used as the wall thickness of a cavity."""
    gaps = []
    for ax in range(3):
        v = np.unique(points[:, ax])
        if len(v) > 1:
            gaps.append(float(np.diff(v).min()))
    return min(gaps) if gaps else 0.0


def dedupe_poses(poses) -> list:
    seen, out = set(), []
    for p in poses:
        key = tuple(round(v / _DEDUP) for v in p.to_list())
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


# ------------------------------------------------------------ greedy selection


@dataclass
class Selection:
    picks: list  # indices into the candidate list, in selection order
    covered: np.ndarray  # bool per element
    saturated: bool  # stopped because nothing added coverage

    @property
    def fraction(self) -> float:
        return float(self.covered.mean()) if len(self.covered) else 1.0


def greedy_cover(matrix: np.ndarray, target: float = 1.0, max_picks: int | None = None, accept=None,
                 refine=None, refine_batch: int = 8) -> Selection:
    """Pick rows covering the most uncovered columns; ties go to the lowest row.

    ``accept(row)`` may veto a pick (it returns a bool, or a list of rows to
    veto); vetoed rows are never considered again.

    With ``refine``, rows of ``matrix`` are only upper bounds and
    ``refine(rows)`` returns their exact rows. Rows are refined (in small
    batches of the highest bounds) when one first wins the argmax; since
    refining can only lower a gain, the picks equal those of a greedy run
    on the exact matrix.
    """
    M = np.array(matrix, dtype=bool)
    exact = np.ones(len(M), dtype=bool) if refine is None else np.zeros(len(M), dtype=bool)
    n, m = M.shape if M.ndim == 2 else (0, 0)
    covered = np.zeros(m, dtype=bool)
    picks: list[int] = []
    if m == 0:
        return Selection(picks, covered, False)
    while covered.mean() < target - 1e-12:
        if max_picks is not None and len(picks) >= max_picks:
            return Selection(picks, covered, False)
        gains = (M & ~covered).sum(axis=1) if n else np.zeros(0, dtype=int)
        if n == 0 or gains.max() == 0:
            return Selection(picks, covered, True)
        best = int(np.argmax(gains))
        if not exact[best]:
            open_rows = np.flatnonzero(~exact & (gains > 0))
            batch = open_rows[np.argsort(-gains[open_rows], kind="stable")][:refine_batch]
            M[batch] = refine(batch)
            exact[batch] = True
            continue
        if accept is not None:
            verdict = accept(best)
            if verdict is not True:
                vetoed = [best] if verdict is False else list(verdict) + [best]
                M[vetoed] = False
                continue
        picks.append(best)
        covered |= M[best]
    return Selection(picks, covered, False)


@dataclass
class EESelection:
    poses: list
    coverage: float
    saturated: bool
    covered: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def greedy_select_ee(
    candidates, cam: CameraModel, fm: FeatureMap, grid: VoxelGrid | None, coverage_target: float = 0.95,
    max_poses: int | None = None, matrix: np.ndarray | None = None, accept=None, refine=None,
) -> EESelection:
    if not 0 < coverage_target <= 1:
        raise ValueError("coverage_target must lie in (0, 1]")
    M = coverage_matrix(candidates, cam, fm.points, grid) if matrix is None else matrix
    sel = greedy_cover(M, coverage_target, max_poses, accept, refine)
    return EESelection([candidates[i] for i in sel.picks], sel.fraction, sel.saturated, sel.covered)


# ------------------------------------------------------------ chassis poses


@dataclass(eq=False)
class RoomOccupancy:
    """Free space for the chassis: inside the room polygon and off carrier footprints."""

    polygon: object  # shapely Polygon
    cells: np.ndarray  # (K, 2) occupied 2D cells
    resolution: float

    def collides(self, x: float, y: float, radius: float) -> bool:
        pt = Point(x, y)
        if not self.polygon.contains(pt) or self.polygon.exterior.distance(pt) < radius:
            return True
        if len(self.cells) == 0:
            return False
        lo = self.cells * self.resolution
        hi = lo + self.resolution
        q = np.array([x, y])
        near = np.clip(q, lo, hi)
        return bool((((near - q) ** 2).sum(axis=1) < radius * radius).any())


def room_occupancy(scene, room_id: str) -> RoomOccupancy:
    room = scene.room_by_id[room_id]
    grid = scene.room_grid(room_id)
    cells = np.unique(grid.cells[:, :2], axis=0) if len(grid) else np.zeros((0, 2), dtype=np.int64)
    return RoomOccupancy(room.polygon, cells, scene.resolution)


def generate_ch_candidates(
    fp: geometry.Footprint2D,
    occupancy: RoomOccupancy,
    robot: RobotModel,
    radial_step: float,
    angular_step: float,
    *,
    center=None,
    gap: float = 0.05,
) -> list[ChassisPose]:
    """Rings around the footprint, facing its centroid, minus colliding poses.

    Ring ``k`` keeps the chassis disc ``gap + k * radial_step`` away from the
    footprint's support line in each direction; rings stop once that
    clearance exceeds ``reach_max``.
    """
    if len(fp) == 0:
        raise geometry.GeometryError("empty footprint")
    c = fp.centers().mean(axis=0) if center is None else np.asarray(center, dtype=float)
    lo = fp.origin + fp.cells * fp.resolution
    corners = np.concatenate([lo, lo + [fp.resolution, 0], lo + [0, fp.resolution], lo + fp.resolution])
    rings = []
    k = 0
    while gap + k * radial_step <= robot.reach_max + 1e-9:
        rings.append(robot.chassis_radius + gap + k * radial_step)
        k += 1
    n_ang = max(1, int(round(2 * math.pi / angular_step)))
    out = []
    for r in rings:
        for i in range(n_ang):
            a = i * 2 * math.pi / n_ang
            u = np.array([math.cos(a), math.sin(a)])
            support = float(((corners - c) @ u).max())
            x, y = c + (support + r) * u
            if occupancy.collides(x, y, robot.chassis_radius):
                continue
            out.append(ChassisPose(round(float(x), 9), round(float(y), 9), a + math.pi))
    return out


def reach_matrix(chs, ees, robot: RobotModel, grid: VoxelGrid | None) -> np.ndarray:
    """Vectorised ``reachable_fast`` over all (chassis, end-effector) pairs."""
    if not chs or not ees:
        return np.zeros((len(chs), len(ees)), dtype=bool)
    mounts = np.array([robot.mount_world(c) for c in chs])
    pos = np.array([e.position for e in ees])
    d = np.linalg.norm(pos[None, :, :] - mounts[:, None, :], axis=2)
    ok = (d >= robot.reach_min) & (d <= robot.reach_max)
    if grid is not None and len(grid):
        ci, ej = np.nonzero(ok)
        if len(ci):
            blocked = geometry.segment_blocked(mounts[ci], pos[ej], grid)
            ok[ci[blocked], ej[blocked]] = False
    return ok


def reachable_fast(ch: ChassisPose, ee: EEPose, robot: RobotModel, grid: VoxelGrid | None) -> bool:
    return bool(reach_matrix([ch], [ee], robot, grid)[0, 0])


@dataclass
class CHSelection:
    poses: list
    dropped: list  # ee indices no candidate reaches


def greedy_select_ch(ch_candidates, ee_poses, robot: RobotModel, grid, matrix: np.ndarray | None = None) -> CHSelection:
    if not ee_poses:
        raise ValueError("no end-effector poses to cover")
    M = reach_matrix(ch_candidates, ee_poses, robot, grid) if matrix is None else matrix
    coverable = M.any(axis=0) if len(ch_candidates) else np.zeros(len(ee_poses), dtype=bool)
    sel = greedy_cover(M[:, coverable], 1.0)
    return CHSelection([ch_candidates[i] for i in sel.picks], np.flatnonzero(~coverable).tolist())


# ------------------------------------------------------------ IK and plan


def ik_check(ch: ChassisPose, ee: EEPose, robot: RobotModel, params: IKParams):
    p, R = robot.to_local(ch, ee)
    return solve_ik(robot.chain, p, R, params)


@dataclass
class PosePlan:
    carrier: str
    feature: str
    entries: list  # [(ChassisPose, [EEPose, ...]), ...] in execution order
    dropped: list = field(default_factory=list)  # EEPose with no valid chassis pose
    coverage: float = 0.0  # fraction of sampled feature points seen by kept poses
    saturated: bool = False
    center: tuple = (0.0, 0.0)  # carrier cloud centroid, for polar sorting
    pairs: list = field(default_factory=list)  # (ChassisPose, EEPose) in EE selection order, i.e. unsorted

    @property
    def empty(self) -> bool:
        return not self.entries

    @property
    def ee_poses(self) -> list:
        return [e for _, ees in self.entries for e in ees]

    @property
    def ch_poses(self) -> list:
        return [c for c, _ in self.entries]

    def to_dict(self) -> dict:
        return {
            "carrier": self.carrier,
            "feature": self.feature,
            "center": list(self.center),
            "coverage": self.coverage,
            "saturated": self.saturated,
            "entries": [{"chassis": c.to_list(), "ee": [e.to_list() for e in ees]} for c, ees in self.entries],
            "pairs": [[c.to_list(), e.to_list()] for c, e in self.pairs],
            "dropped": [e.to_list() for e in self.dropped],
        }


def build_pose_plan(
    ch_poses, ee_poses, robot: RobotModel, grid, ik: IKParams | None = None, carrier: str = "", feature: str = "",
    ik_cache: dict | None = None,
) -> PosePlan:
    """Assign each EE pose to the first chassis pose that passes the reach screen and IK.

    ``ik_cache`` maps ``(ChassisPose, EEPose)`` to an earlier IK verdict.
    """
    ik = ik or IKParams()
    cache = {} if ik_cache is None else ik_cache
    assigned: dict[int, list] = {i: [] for i in range(len(ch_poses))}
    dropped, pairs = [], []
    M = reach_matrix(list(ch_poses), list(ee_poses), robot, grid)
    for j, ee in enumerate(ee_poses):
        for i, ch in enumerate(ch_poses):
            if not M[i, j]:
                continue
            if (ch, ee) not in cache:
                cache[ch, ee] = ik_check(ch, ee, robot, ik).success
            if cache[ch, ee]:
                assigned[i].append(ee)
                pairs.append((ch, ee))
                break
        else:
            dropped.append(ee)
    entries = [(ch_poses[i], assigned[i]) for i in range(len(ch_poses)) if assigned[i]]
    return PosePlan(carrier, feature, entries, dropped, pairs=pairs)


def occlusion_grid(scene, carrier, feature: str) -> VoxelGrid:
    """Voxels of the carrier's room; an inside view assumes the door is open."""
    grid = scene.room_grid(scene.room_of[carrier.id])
    if feature == "inside" and carrier.door is not None:
        return grid.without(carrier.door_grid)
    return grid


def plan_feature(scene, carrier, feature: str, robot: RobotModel, cam: CameraModel, cfg: PlannerConfig,
                 grid: VoxelGrid | None = None) -> PosePlan:
    """Full pipeline for one (carrier, feature); an empty plan when nothing is viewable."""
    fm = carrier.feature_maps[feature]
    center = tuple(float(v) for v in geometry.centroid(carrier.point_cloud))
    if len(fm) == 0:
        return PosePlan(carrier.id, feature, [], center=center)
    grid = occlusion_grid(scene, carrier, feature) if grid is None else grid
    sample = FeatureMap(feature, subsample(fm.points, cfg.max_feature_points))
    cands = generate_ee_candidates(
        sample, cam, cfg.standoff, cfg.angular_step, center=center,
        front_yaw=carrier.front_yaw if carrier.openable else None, oblique_pitch=cfg.oblique_pitch,
        cap=cfg.candidate_cap,
    )
    if cands and len(grid):
        free = ~grid.is_occupied(geometry.cell_indices(np.array([c.position for c in cands]), grid.resolution, grid.origin))
        cands = [c for c, f in zip(cands, free) if f]
    room = scene.room_of[carrier.id]
    chs = generate_ch_candidates(
        geometry.footprint(carrier.grid), room_occupancy(scene, room), robot, cfg.ch_radial_step,
        cfg.ch_angular_step, center=center, gap=cfg.ch_gap,
    )
    reach = reach_matrix(chs, cands, robot, grid)
    keep = np.flatnonzero(reach.any(axis=0)) if len(chs) else np.zeros(0, dtype=int)
    cands = [cands[j] for j in keep]
    reach = reach[:, keep]
    # cone-only rows bound the coverage; sight lines are traced lazily per row
    cone = coverage_matrix(cands, cam, sample.points, None)
    rows: dict = {}

    def refine(js):
        out = coverage_matrix([cands[j] for j in js], cam, sample.points, grid)
        rows.update(zip(js.tolist(), out))
        return out

    ik_cache: dict = {}
    accept = _ik_validator(chs, cands, reach, robot, cfg, ik_cache)
    sel = greedy_select_ee(
        cands, cam, sample, grid, cfg.coverage_target, cfg.max_ee_poses, matrix=cone, accept=accept, refine=refine
    )
    if not sel.poses:
        return PosePlan(carrier.id, feature, [], coverage=0.0, saturated=True, center=center)
    picked = [cands.index(p) for p in sel.poses]
    # chassis cover under the reach screen minus known IK failures; a dropped
    # pose teaches new failures, so re-cover until nothing new is learned
    while True:
        ch_cover = reach[:, picked].copy()
        for i, ch in enumerate(chs):
            for k, j in enumerate(picked):
                v = ik_cache.get((ch, cands[j]))
                if v is False:
                    ch_cover[i, k] = False
        known = len(ik_cache)
        ch_sel = greedy_select_ch(chs, sel.poses, robot, grid, matrix=ch_cover)
        plan = build_pose_plan(ch_sel.poses, sel.poses, robot, grid, cfg.ik, carrier.id, feature, ik_cache)
        if not plan.dropped or len(ik_cache) == known:
            break
    kept = {id(e) for e in plan.ee_poses}
    seen = [rows[i] for i, c in enumerate(cands) if id(c) in kept]
    plan.coverage = float(np.any(seen, axis=0).mean()) if seen else 0.0
    plan.saturated = sel.saturated or bool(plan.dropped)
    plan.center = center
    return plan


def _ik_validator(chs, cands, reach, robot, cfg, cache, tries: int = 2):
    """Veto callback for greedy EE selection.

    A pick is accepted once IK succeeds from one of its ``tries`` reachable
    chassis candidates (closest to mid-reach first). On failure, candidates
    at the same height with the same orientation are vetoed as well, since
    their feasibility is governed by the same arm posture.
    """
    mid = (robot.reach_min + robot.reach_max) / 2
    mounts = np.array([robot.mount_world(c) for c in chs]) if chs else np.zeros((0, 3))
    groups: dict = {}
    for j, c in enumerate(cands):
        groups.setdefault((round(c.z, 6), c.phi, c.theta, c.psi), []).append(j)

    def accept(j):
        ee = cands[j]
        rows = np.flatnonzero(reach[:, j])
        d = np.abs(np.linalg.norm(mounts[rows] - ee.position, axis=1) - mid)
        for i in rows[np.argsort(d, kind="stable")][:tries]:
            ch = chs[i]
            if (ch, ee) not in cache:
                cache[ch, ee] = ik_check(ch, ee, robot, cfg.ik).success
            if cache[ch, ee]:
                return True
        return groups[(round(ee.z, 6), ee.phi, ee.theta, ee.psi)]

    return accept
