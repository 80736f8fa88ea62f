"""Serial-chain forward kinematics and damped least-squares IK.

A chain is a list of revolute joints. Joint ``i`` sits at ``offset_i``
(expressed in the frame of joint ``i-1`` after its rotation) and turns about
its own local ``axis_i``. A fixed tool transform follows the last joint; the
tool frame is the camera frame (x forward, y left, z up).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


def axis_rotation(axis, angle: float) -> np.ndarray:
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    C = 1.0 - c
    return np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )


def rot_x(a: float) -> np.ndarray:
    return axis_rotation((1.0, 0.0, 0.0), a)


def rot_y(a: float) -> np.ndarray:
    return axis_rotation((0.0, 1.0, 0.0), a)


def rot_z(a: float) -> np.ndarray:
    return axis_rotation((0.0, 0.0, 1.0), a)


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector ``w`` with ``exp([w]x) = R``."""
    c = float(np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0))
    th = math.acos(c)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if th < 1e-9:
        return v / 2.0
    if math.pi - th < 1e-6:
        A = (R + np.eye(3)) / 2.0
        i = int(np.argmax(np.diag(A)))
        ax = A[:, i] / math.sqrt(A[i, i])
        return ax * th
    return v * th / (2.0 * math.sin(th))


def _matmul3(A, B):
    (a00, a01, a02), (a10, a11, a12), (a20, a21, a22) = A
    (b00, b01, b02), (b10, b11, b12), (b20, b21, b22) = B
    return (
        (a00 * b00 + a01 * b10 + a02 * b20, a00 * b01 + a01 * b11 + a02 * b21, a00 * b02 + a01 * b12 + a02 * b22),
        (a10 * b00 + a11 * b10 + a12 * b20, a10 * b01 + a11 * b11 + a12 * b21, a10 * b02 + a11 * b12 + a12 * b22),
        (a20 * b00 + a21 * b10 + a22 * b20, a20 * b01 + a21 * b11 + a22 * b21, a20 * b02 + a21 * b12 + a22 * b22),
    )


@dataclass(frozen=True)
class Joint:
    offset: tuple  # translation from the previous joint frame
    axis: tuple  # unit rotation axis in the local frame
    lower: float
    upper: float


@dataclass(frozen=True)
class Chain:
    joints: tuple
    tool_offset: tuple = (0.0, 0.0, 0.0)
    tool_rotation: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def __post_init__(self):
        if len(self.joints) < 2:
            raise ValueError("chain needs at least two joints")
        for j in self.joints:
            if not j.lower < j.upper:
                raise ValueError("joint limits must satisfy lower < upper")

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def lower(self) -> np.ndarray:
        return np.array([j.lower for j in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([j.upper for j in self.joints])

    def max_extent(self) -> float:
        """Upper bound on the tool distance from the chain base."""
        return sum(float(np.linalg.norm(j.offset)) for j in self.joints) + float(np.linalg.norm(self.tool_offset))

    def within_limits(self, q, tol: float = 1e-12) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))

    @cached_property
    def _lists(self):
        offs = [tuple(map(float, j.offset)) for j in self.joints]
        axes = [tuple(map(float, j.axis)) for j in self.joints]
        tool_R = tuple(tuple(map(float, r)) for r in self.tool_rotation)
        return offs, axes, tuple(map(float, self.tool_offset)), tool_R

    def forward(self, q, jacobian: bool = False):
        """Tool ``(position, rotation)``; with ``jacobian`` also the 6xN geometric Jacobian."""
        out = self._forward(q, jacobian)
        if not jacobian:
            return np.array(out[0]), np.array(out[1])
        return np.array(out[0]), np.array(out[1]), out[2]

    def _forward(self, q, jacobian: bool):
        # plain floats: numpy call overhead dominates on 3x3 products
        offs, local_axes, tool_p, tool_R = self._lists
        R = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
        p = [0.0, 0.0, 0.0]
        axes, origins = [], []
        for (ox, oy, oz), (ax, ay, az), qi in zip(offs, local_axes, q):
            r0, r1, r2 = R
            p = [
                p[0] + r0[0] * ox + r0[1] * oy + r0[2] * oz,
                p[1] + r1[0] * ox + r1[1] * oy + r1[2] * oz,
                p[2] + r2[0] * ox + r2[1] * oy + r2[2] * oz,
            ]
            c, s_ = math.cos(qi), math.sin(qi)
            C = 1.0 - c
            J = (
                (c + ax * ax * C, ax * ay * C - az * s_, ax * az * C + ay * s_),
                (ay * ax * C + az * s_, c + ay * ay * C, ay * az * C - ax * s_),
                (az * ax * C - ay * s_, az * ay * C + ax * s_, c + az * az * C),
            )
            R = _matmul3(R, J)
            r0, r1, r2 = R
            axes.append((r0[0] * ax + r0[1] * ay + r0[2] * az, r1[0] * ax + r1[1] * ay + r1[2] * az, r2[0] * ax + r2[1] * ay + r2[2] * az))
            origins.append(p)
        tx, ty, tz = tool_p
        pe = [p[r] + R[r][0] * tx + R[r][1] * ty + R[r][2] * tz for r in range(3)]
        Re = _matmul3(R, tool_R)
        if not jacobian:
            return pe, Re, None
        n = len(axes)
        Jm = np.empty((6, n))
        for i, (z, o) in enumerate(zip(axes, origins)):
            bx, by, bz = pe[0] - o[0], pe[1] - o[1], pe[2] - o[2]
            Jm[0, i] = z[1] * bz - z[2] * by
            Jm[1, i] = z[2] * bx - z[0] * bz
            Jm[2, i] = z[0] * by - z[1] * bx
            Jm[3, i], Jm[4, i], Jm[5, i] = z
        return pe, Re, Jm


def kuka_like_chain() -> Chain:
    """Seven-joint arm with alternating z/y axes and 0.4 m links."""
    lim = (2.96, 2.09, 2.96, 2.09, 2.96, 2.09, 3.05)
    offsets = ((0, 0, 0.15), (0, 0, 0), (0, 0, 0.4), (0, 0, 0), (0, 0, 0.4), (0, 0, 0), (0, 0, 0))
    axes = ((0, 0, 1), (0, 1, 0)) * 3 + ((0, 0, 1),)
    joints = tuple(Joint(tuple(map(float, o)), tuple(map(float, a)), -l, l) for o, a, l in zip(offsets, axes, lim))
    # camera looks along the last link
    tool_rot = tuple(map(tuple, rot_y(-math.pi / 2).round(15).tolist()))
    return Chain(joints, (0.0, 0.0, 0.1), tool_rot)


@dataclass(frozen=True)
class IKParams:
    tol: float = 1e-3  # meters
    tol_rot: float = 1e-2  # radians
    max_iters: int = 200
    restarts: int = 4
    seed: int = 12345
    orientation_weight: float = 1.0  # 0 solves for position only
    damping: float = 1e-2
    patience: int = 20  # window for the stall test that triggers a restart
    stall_ratio: float = 0.9  # required error shrink factor over that window

    def __post_init__(self):
        if not self.tol > 0 or not self.tol_rot > 0:
            raise ValueError("IK tolerances must be positive")
        if self.max_iters < 1 or self.restarts < 0:
            raise ValueError("max_iters >= 1 and restarts >= 0 required")


@dataclass
class IKResult:
    success: bool
    q: np.ndarray
    position_error: float
    rotation_error: float
    iterations: int = 0
    attempts: int = 0


def initial_guesses(chain: Chain, params: IKParams) -> list[np.ndarray]:
    rng = np.random.default_rng(params.seed)
    lo, hi = chain.lower, chain.upper
    start = np.clip(np.zeros(chain.dof), lo, hi)
    return [start] + [rng.uniform(lo, hi) for _ in range(params.restarts)]


def _log_floats(R) -> tuple:
    """``rotation_log`` on a nested-tuple rotation, in plain floats."""
    c = (R[0][0] + R[1][1] + R[2][2] - 1.0) / 2.0
    th = math.acos(min(1.0, max(-1.0, c)))
    v = (R[2][1] - R[1][2], R[0][2] - R[2][0], R[1][0] - R[0][1])
    if th < 1e-9:
        return (v[0] / 2.0, v[1] / 2.0, v[2] / 2.0)
    if math.pi - th < 1e-6:
        w = rotation_log(np.array(R))
        return (float(w[0]), float(w[1]), float(w[2]))
    k = th / (2.0 * math.sin(th))
    return (v[0] * k, v[1] * k, v[2] * k)


def _error(chain, q, p_t, R_t, w):
    """Weighted error vector, Jacobian, position and rotation error norms.

    ``p_t`` is a float triple and ``R_t`` a nested tuple (or None).
    """
    p, R, J = chain._forward(q, True)
    ex, ey, ez = p_t[0] - p[0], p_t[1] - p[1], p_t[2] - p[2]
    pe = math.sqrt(ex * ex + ey * ey + ez * ez)
    if w > 0:
        # R_t @ R.T
        D = tuple(tuple(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] for b in R) for a in R_t)
        rx, ry, rz = _log_floats(D)
        e = np.array((ex, ey, ez, w * rx, w * ry, w * rz))
        return e, J, pe, math.sqrt(rx * rx + ry * ry + rz * rz)
    return np.array((ex, ey, ez)), J[:3], pe, 0.0


def solve_ik(chain: Chain, target_position, target_rotation=None, params: IKParams | None = None) -> IKResult:
    """Levenberg-Marquardt on the weighted 6D pose error, joints clamped to limits.

    ``target_rotation=None`` (or weight 0) solves for position only. Failure is
    reported in the result, never raised.
    """
    params = params or IKParams()
    p_t = np.asarray(target_position, dtype=float)
    w = params.orientation_weight if target_rotation is not None else 0.0
    R_t = tuple(map(tuple, np.asarray(target_rotation, dtype=float).tolist())) if w > 0 else None
    pt = tuple(p_t.tolist())
    lo, hi = chain.lower, chain.upper
    best = None
    total = 0

    def ok(pe, re):
        return pe < params.tol and (w == 0 or re < params.tol_rot)

    # cheap reject: farther than the chain can ever stretch
    if float(np.linalg.norm(p_t - np.asarray(chain.joints[0].offset))) > chain.max_extent() - float(
        np.linalg.norm(chain.joints[0].offset)
    ) + 1e-9:
        q = np.zeros(chain.dof)
        p, _ = chain.forward(q)
        return IKResult(False, q, float(np.linalg.norm(p_t - p)), math.inf, 0, 0)

    eye = np.eye(6 if w > 0 else 3)
    for attempt, q0 in enumerate(initial_guesses(chain, params), start=1):
        q = q0.copy()
        lam = params.damping
        e, J, pe, re = _error(chain, q, pt, R_t, w)
        E = float(e @ e)
        it = 0
        history = [E]
        while it < params.max_iters and not ok(pe, re):
            # give up on a start that barely improved over the last `patience` iterations
            if len(history) > params.patience and E > params.stall_ratio * history[-params.patience - 1]:
                break
            it += 1
            Jw = J.copy()
            if w > 0:
                Jw[3:] *= w
            dq = Jw.T @ np.linalg.solve(Jw @ Jw.T + lam * eye, e)
            # joints pinned at a limit and pushed outward drop out of the step
            pinned = ((q <= lo) & (dq < 0)) | ((q >= hi) & (dq > 0))
            if pinned.any():
                Jw[:, pinned] = 0.0
                dq = Jw.T @ np.linalg.solve(Jw @ Jw.T + lam * eye, e)
            qn = np.minimum(np.maximum(q + dq, lo), hi)
            en, Jn, pen, ren = _error(chain, qn, pt, R_t, w)
            En = float(en @ en)
            if En < E:
                q, e, J, pe, re, E = qn, en, Jn, pen, ren, En
                lam *= 0.5
            else:
                lam *= 2.0
            history.append(E)
        total += it
        if best is None or (pe, re) < (best.position_error, best.rotation_error):
            best = IKResult(False, q, pe, re, total, attempt)
        if ok(pe, re) and chain.within_limits(q):
            return IKResult(True, q, pe, re, total, attempt)
    best.iterations = total
    return best
