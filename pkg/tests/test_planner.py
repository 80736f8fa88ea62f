from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from godhs.geometry import FeatureMap, VoxelGrid, footprint
from godhs.kinematics import Chain, Joint, kuka_like_chain, solve_ik
from godhs.planner import (
    CameraModel,
    ChassisPose,
    EEPose,
    PlannerConfig,
    RobotModel,
    build_pose_plan,
    camera_rotation,
    cone_covers,
    coverage_matrix,
    coverage_set,
    generate_ch_candidates,
    generate_ee_candidates,
    greedy_cover,
    greedy_select_ch,
    greedy_select_ee,
    ik_check,
    occlusion_grid,
    plan_feature,
    reach_matrix,
    reachable_fast,
    room_occupancy,
)

from oracles import best_cover, min_cover_size, view_angles

CAM = CameraModel()
ROBOT = RobotModel()


def basis(phi, theta, psi):
    """Camera axes written out from the yaw-pitch-roll angles."""
    fwd = np.array([math.cos(theta) * math.cos(psi), math.cos(theta) * math.sin(psi), math.sin(theta)])
    left0 = np.array([-math.sin(psi), math.cos(psi), 0.0])
    up0 = np.array([-math.sin(theta) * math.cos(psi), -math.sin(theta) * math.sin(psi), math.cos(theta)])
    left = math.cos(phi) * left0 + math.sin(phi) * up0
    up = -math.sin(phi) * left0 + math.cos(phi) * up0
    return fwd, left, up


def pose_from_rotation(p, R) -> EEPose:
    theta = math.asin(max(-1.0, min(1.0, R[2, 0])))
    return EEPose(p[0], p[1], p[2], math.atan2(R[2, 1], R[2, 2]), theta, math.atan2(R[1, 0], R[0, 0]))


# ------------------------------------------------------------------ vision cone


def test_camera_rotation_matches_basis():
    rng = np.random.default_rng(0)
    for _ in range(50):
        phi, theta, psi = rng.uniform(-math.pi, math.pi), rng.uniform(-1.5, 1.5), rng.uniform(-math.pi, math.pi)
        R = camera_rotation(phi, theta, psi)
        assert np.allclose(np.column_stack(basis(phi, theta, psi)), R)


def test_cone_examples():
    ee = EEPose(0, 0, 0)
    assert cone_covers(ee, CAM, [1.0, 0.0, 0.0])
    assert not cone_covers(ee, CAM, [-1.0, 0.0, 0.0])
    assert not cone_covers(ee, CAM, [3.5, 0.0, 0.0])  # beyond far
    assert not cone_covers(ee, CAM, [0.01, 0.0, 0.0])  # inside near
    assert cone_covers(EEPose(0, 0, 1, 0, -math.pi / 2, 0), CAM, [0.0, 0.0, 0.0])  # looking down


def test_cone_edges_are_strict():
    cam = CameraModel(fov_h=math.pi / 2, fov_v=math.pi / 2)
    ee = EEPose(0, 0, 0)
    assert not cone_covers(ee, cam, [1.0, 1.0, 0.0])  # azimuth exactly fov_h / 2
    assert not cone_covers(ee, cam, [1.0, 0.0, 1.0])
    assert cone_covers(ee, cam, [1.0, 0.999, 0.0])


def test_cone_matches_angle_oracle():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        ee = EEPose(*rng.uniform(-1, 1, 3), rng.uniform(-math.pi, math.pi), rng.uniform(-1.5, 1.5), rng.uniform(-math.pi, math.pi))
        p = rng.uniform(-3, 3, 3)
        az, el, r = view_angles(*basis(ee.phi, ee.theta, ee.psi), p - ee.position)
        expect = abs(az) < CAM.fov_h / 2 and abs(el) < CAM.fov_v / 2 and CAM.near <= r <= CAM.far
        assert cone_covers(ee, CAM, p) == expect


def test_camera_validation():
    with pytest.raises(ValueError):
        CameraModel(fov_h=0)
    with pytest.raises(ValueError):
        CameraModel(near=2.0, far=1.0)


def test_occluded_point_not_covered():
    wall = VoxelGrid(np.zeros(3), 0.05, np.array([(10, j, k) for j in range(-4, 4) for k in range(-4, 4)]))
    fm = FeatureMap("sides", np.array([[1.0, 0.0, 0.0], [0.2, 0.0, 0.0]]))
    assert coverage_set(EEPose(0, 0, 0), CAM, fm, None) == {0, 1}
    assert coverage_set(EEPose(0, 0, 0), CAM, fm, wall) == {1}


# ------------------------------------------------------------------ candidates


def test_top_candidates_look_down_at_standoff():
    fm = FeatureMap("top", np.array([[0.0, 0.0, 0.5], [0.5, 0.0, 0.5]]))
    cands = generate_ee_candidates(fm, CAM, 0.4, math.pi / 2)
    down = [c for c in cands if c.theta == pytest.approx(-math.pi / 2)]
    assert {(c.x, c.y, c.z) for c in down} == {(0.0, 0.0, 0.9), (0.5, 0.0, 0.9)}


def test_sides_candidates_see_their_point():
    pts = np.array([[1.0, 0.0, 0.3], [0.0, 1.0, 0.3], [-1.0, 0.0, 0.3], [0.0, -1.0, 0.3]])
    cands = generate_ee_candidates(FeatureMap("sides", pts), CAM, 0.4, math.pi / 2, center=(0, 0))
    assert len(cands) == 4
    M = coverage_matrix(cands, CAM, pts, None)
    assert M.diagonal().all()
    assert all(math.hypot(c.x, c.y) == pytest.approx(1.4) for c in cands)


def test_empty_feature_has_no_candidates():
    from godhs.geometry import GeometryError

    with pytest.raises(GeometryError):
        generate_ee_candidates(FeatureMap("top", np.zeros((0, 3))), CAM, 0.4, math.pi / 2)


# ------------------------------------------------------------------ greedy cover


def test_greedy_cover_picks_largest_first():
    M = np.array([[1, 1, 0, 0], [1, 1, 1, 0], [0, 0, 0, 1]], dtype=bool)
    sel = greedy_cover(M, 1.0)
    assert sel.picks == [1, 2] and sel.fraction == 1.0 and not sel.saturated


def test_greedy_cover_saturates_and_caps():
    M = np.array([[1, 0, 0], [1, 0, 0]], dtype=bool)
    sel = greedy_cover(M, 1.0)
    assert sel.saturated and sel.picks == [0]
    sel = greedy_cover(np.eye(4, dtype=bool), 1.0, max_picks=2)
    assert sel.picks == [0, 1] and sel.fraction == 0.5


def test_greedy_cover_veto():
    M = np.array([[1, 1, 1], [1, 1, 0], [0, 0, 1]], dtype=bool)
    sel = greedy_cover(M, 1.0, accept=lambda j: j != 0)
    assert sel.picks == [1, 2]


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_lazy_refinement_matches_exact_greedy(seed):
    rng = np.random.default_rng(seed)
    exact = rng.random((15, 25)) < 0.3
    bound = exact | (rng.random((15, 25)) < 0.3)
    want = greedy_cover(exact, 0.9)
    got = greedy_cover(bound, 0.9, refine=lambda rows: exact[rows], refine_batch=3)
    assert got.picks == want.picks


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_greedy_within_bound_of_optimum(seed, budget):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13))
    M = rng.random((n, 20)) < rng.uniform(0.1, 0.5)
    sel = greedy_cover(M, 1.0, max_picks=budget)
    assert sel.fraction >= (1 - 1 / math.e) * best_cover(M, budget) - 1e-12


def test_greedy_select_ee_reports_coverage():
    pts = np.array([[1.0, 0.0, 0.3], [0.0, 1.0, 0.3], [-1.0, 0.0, 0.3], [0.0, -1.0, 0.3]])
    fm = FeatureMap("sides", pts)
    cands = generate_ee_candidates(fm, CAM, 0.4, math.pi / 2, center=(0, 0))
    sel = greedy_select_ee(cands, CAM, fm, None, 1.0)
    assert sel.coverage == 1.0 and len(sel.poses) <= 4
    with pytest.raises(ValueError):
        greedy_select_ee(cands, CAM, fm, None, 0.0)


# ------------------------------------------------------------------ chassis


def test_reachable_fast_distance_band():
    ch = ChassisPose(0, 0, 0)
    mount = ROBOT.mount_world(ch)
    assert reachable_fast(ch, EEPose(mount[0] + 0.5, 0, mount[2]), ROBOT, None)
    assert not reachable_fast(ch, EEPose(mount[0] + 0.1, 0, mount[2]), ROBOT, None)
    assert not reachable_fast(ch, EEPose(mount[0] + 0.9, 0, mount[2]), ROBOT, None)


def test_reachable_fast_blocked_by_obstacle():
    ch = ChassisPose(0, 0, 0)
    mount = ROBOT.mount_world(ch)
    cell = np.floor((mount + [0.3, 0, 0]) / 0.05).astype(int)
    wall = VoxelGrid(np.zeros(3), 0.05, np.array([cell + [0, dy, dz] for dy in (-1, 0, 1) for dz in (-1, 0, 1)]))
    assert not reachable_fast(ch, EEPose(mount[0] + 0.6, mount[1], mount[2]), ROBOT, wall)


def test_chassis_candidates_are_free_and_face_the_carrier(flat):
    table = flat.carrier_by_id["living_coffee_table"]
    occ = room_occupancy(flat, "living")
    chs = generate_ch_candidates(footprint(table.grid), occ, ROBOT, 0.2, math.pi / 8)
    assert chs
    c = table.point_cloud[:, :2].mean(axis=0)
    for ch in chs:
        assert not occ.collides(ch.x, ch.y, ROBOT.chassis_radius)
        facing = math.atan2(c[1] - ch.y, c[0] - ch.x)
        assert abs(math.remainder(facing - ch.theta, 2 * math.pi)) < 1e-6


def test_two_far_apart_clusters_need_two_chassis_poses():
    chs = [ChassisPose(x, 0, 0) for x in np.linspace(-3, 3, 13)]
    ees = [EEPose(-2.0, 0, 0.6), EEPose(-2.1, 0, 0.6), EEPose(2.5, 0, 0.6)]
    sel = greedy_select_ch(chs, ees, ROBOT, None)
    assert len(sel.poses) >= 2 and sel.dropped == []


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_chassis_cover_is_complete_and_small(seed):
    rng = np.random.default_rng(seed)
    chs = [ChassisPose(*rng.uniform(-1.5, 1.5, 2), rng.uniform(-math.pi, math.pi)) for _ in range(int(rng.integers(1, 11)))]
    ees = [EEPose(*rng.uniform(-1.5, 1.5, 2), rng.uniform(0.3, 1.2)) for _ in range(int(rng.integers(1, 12)))]
    sel = greedy_select_ch(chs, ees, ROBOT, None)
    for j, ee in enumerate(ees):
        coverable = any(reachable_fast(ch, ee, ROBOT, None) for ch in chs)
        covered = any(reachable_fast(ch, ee, ROBOT, None) for ch in sel.poses)
        assert covered == coverable
        assert (j in sel.dropped) == (not coverable)
    M = reach_matrix(chs, ees, ROBOT, None)
    opt = min_cover_size(M)
    assert len(sel.poses) <= opt * (math.log(len(ees)) + 1) + 1e-9


# ------------------------------------------------------------------ pose plan


def _feasible_ees(ch, n, seed):
    """``n`` poses reached by forward kinematics that also fall inside the reach band."""
    rng = np.random.default_rng(seed)
    chain = ROBOT.chain
    Rb = np.array([[math.cos(ch.theta), -math.sin(ch.theta), 0], [math.sin(ch.theta), math.cos(ch.theta), 0], [0, 0, 1]])
    out = []
    while len(out) < n:
        p, R = chain.forward(rng.uniform(chain.lower * 0.8, chain.upper * 0.8))
        ee = pose_from_rotation(ROBOT.mount_world(ch) + Rb @ p, Rb @ R)
        if reachable_fast(ch, ee, ROBOT, None):
            out.append(ee)
    return out


def test_pose_from_rotation_round_trip():
    R = camera_rotation(0.3, -0.4, 1.2)
    ee = pose_from_rotation(np.zeros(3), R)
    assert (ee.phi, ee.theta, ee.psi) == pytest.approx((0.3, -0.4, 1.2))


def test_single_pair_plan():
    ch = ChassisPose(0, 0, 0)
    (ee,) = _feasible_ees(ch, 1, 1)
    plan = build_pose_plan([ch], [ee], ROBOT, None)
    assert plan.entries == [(ch, [ee])] and plan.dropped == [] and plan.pairs == [(ch, ee)]


def test_every_ee_assigned_once_and_reverified():
    ch1, ch2 = ChassisPose(0, 0, 0), ChassisPose(3, 0, math.pi)
    ees = _feasible_ees(ch1, 2, 2) + _feasible_ees(ch2, 1, 3)
    plan = build_pose_plan([ch1, ch2], ees, ROBOT, None)
    placed = [e for _, es in plan.entries for e in es] + plan.dropped
    assert sorted(map(id, placed)) == sorted(map(id, ees))
    for ch, es in plan.entries:
        for e in es:
            assert reachable_fast(ch, e, ROBOT, None)
            assert ik_check(ch, e, ROBOT, PlannerConfig().ik).success


def test_joint_limit_failure_is_dropped():
    # a wrist that cannot move: positions stay in reach but orientations become impossible
    base = kuka_like_chain()
    stiff = Chain(
        tuple(Joint(j.offset, j.axis, -0.01, 0.01) if i >= 4 else j for i, j in enumerate(base.joints)),
        base.tool_offset, base.tool_rotation,
    )
    robot = RobotModel(chain=stiff)
    ch = ChassisPose(0, 0, 0)
    mount = robot.mount_world(ch)
    ee = EEPose(mount[0] + 0.5, mount[1], mount[2] + 0.1, 0.0, -1.2, math.pi)  # looking back at the robot
    assert reachable_fast(ch, ee, robot, None)
    plan = build_pose_plan([ch], [ee], robot, None)
    assert plan.empty and plan.dropped == [ee]
    # the same pose is solvable once the wrist is free, and that solution breaks the stiff limits
    p, R = robot.to_local(ch, ee)
    free = solve_ik(base, p, R)
    assert free.success and not stiff.within_limits(free.q)


def test_plan_feature_on_fixture(flat):
    fridge = flat.carrier_by_id["kitchen_fridge"]
    plan = plan_feature(flat, fridge, "inside", ROBOT, CAM, PlannerConfig())
    assert not plan.empty and plan.coverage > 0.5 and plan.dropped == []
    assert len(plan.pairs) == len(plan.ee_poses)
    grid = occlusion_grid(flat, fridge, "inside")
    for ch, ees in plan.entries:
        assert not room_occupancy(flat, "kitchen").collides(ch.x, ch.y, ROBOT.chassis_radius)
        for e in ees:
            assert reachable_fast(ch, e, ROBOT, grid)
    d = plan.to_dict()
    assert d["carrier"] == "kitchen_fridge" and len(d["pairs"]) == len(plan.pairs)


def test_planner_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(coverage_target=0)
    with pytest.raises(ValueError):
        PlannerConfig(max_ee_poses=0)
