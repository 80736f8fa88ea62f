"""Execution order for planned poses.

End-effector poses visited under one chassis pose are sorted
lexicographically by (z, y, x, yaw, pitch, roll); chassis poses around a
carrier are swept clockwise by polar angle about the carrier centroid.
"""

from __future__ import annotations

import math

import numpy as np

COINCIDENT_EPS = 1e-9


def ee_key(p) -> tuple:
    return (p.z, p.y, p.x, p.psi, p.theta, p.phi)


def sort_ee_lexicographic(poses) -> list:
    """Ascending by (z, y, x, psi, theta, phi); ties keep input order."""
    return sorted(poses, key=ee_key)


def polar_angle(pose, center) -> float:
    return math.atan2(pose.y - center[1], pose.x - center[0])


def sort_ch_polar(poses, center, start_hint=None) -> tuple[list, list]:
    """Clockwise sweep around ``center`` beginning at the pose nearest ``start_hint``.

    Returns ``(ordered, flagged)``; poses sitting on the center have no angle,
    are appended last and also listed in ``flagged``.
    """
    poses = list(poses)
    if not poses:
        raise ValueError("no chassis poses to sort")
    cx, cy = float(center[0]), float(center[1])
    ring, flagged = [], []
    for i, p in enumerate(poses):
        r = math.hypot(p.x - cx, p.y - cy)
        if r <= COINCIDENT_EPS:
            flagged.append(p)
        else:
            ring.append((-math.atan2(p.y - cy, p.x - cx), r, i, p))
    ring.sort(key=lambda t: t[:3])
    ordered = [t[3] for t in ring]
    if ordered and start_hint is not None:
        hx, hy = (start_hint.x, start_hint.y) if hasattr(start_hint, "x") else start_hint[:2]
        d = [math.hypot(p.x - hx, p.y - hy) for p in ordered]
        k = int(np.argmin(d))
        ordered = ordered[k:] + ordered[:k]
    return ordered + flagged, flagged
