"""Independent reference implementations used as test oracles.

These are deliberately naive (pure Python loops, sets, explicit
enumeration) and share no code with the package under test.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np

RES = 0.05


def random_carrier_cloud(rng: np.random.Generator, res: float = RES, max_points: int = 10_000,
                         extent: int = 10) -> np.ndarray:
    """Voxel-center cloud of 1-4 random boxes, sometimes a closed shell with a cavity.

    ``extent`` bounds box edges in cells; shells get up to ``extent + 2``.
    """
    while True:
        cells = set()
        if rng.random() < 0.4:
            # hollow shell: walls one cell thick around an empty interior
            nx, ny, nz = (int(v) for v in rng.integers(3, extent + 2, size=3))
            ox, oy = (int(v) for v in rng.integers(-20, 20, size=2))
            for i in range(nx):
                for j in range(ny):
                    for k in range(nz):
                        if i in (0, nx - 1) or j in (0, ny - 1) or k in (0, nz - 1):
                            cells.add((ox + i, oy + j, k))
            if rng.random() < 0.3:  # punch a hole so the cavity leaks
                cells.discard((ox, oy + ny // 2, nz // 2))
        for _ in range(int(rng.integers(1, 5))):
            lo = rng.integers(-20, 20, size=2)
            size = rng.integers(1, extent, size=3)
            z0 = int(rng.integers(0, 8))
            for i in range(int(size[0])):
                for j in range(int(size[1])):
                    for k in range(int(size[2])):
                        cells.add((int(lo[0]) + i, int(lo[1]) + j, z0 + k))
        if 0 < len(cells) <= max_points:
            arr = np.array(sorted(cells), dtype=float)
            return (arr + 0.5) * res


def cells_of(points, res: float = RES) -> set:
    return {tuple(int(math.floor(v / res)) for v in p) for p in np.asarray(points).tolist()}


def columns(points, res: float = RES) -> dict:
    """(ix, iy) -> highest z of the points in that column."""
    out: dict = {}
    for x, y, z in np.asarray(points).tolist():
        key = (int(math.floor(x / res)), int(math.floor(y / res)))
        if key not in out or z > out[key]:
            out[key] = z
    return out


def center(i: int, res: float = RES) -> float:
    return 0.0 + (i + 0.5) * res


def top_oracle(points, res: float = RES) -> set:
    return {(center(i, res), center(j, res), z) for (i, j), z in columns(points, res).items()}


def boundary_oracle(cols) -> set:
    cols = set(cols)
    return {
        (i, j) for (i, j) in cols
        if any(n not in cols for n in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)))
    }


def side_levels(zmax: float, res: float) -> list:
    levels = []
    k = 0
    while k * res < zmax - 1e-9 * max(1.0, zmax):
        levels.append(k * res)
        k += 1
    levels.append(zmax)
    return levels


def sides_oracle(points, res: float = RES) -> set:
    cols = columns(points, res)
    out = set()
    for (i, j) in boundary_oracle(cols):
        for z in side_levels(cols[i, j], res):
            out.add((center(i, res), center(j, res), z))
    return out


def bottom_oracle(points, z0: float, res: float = RES) -> set:
    return {(center(i, res), center(j, res), float(z0)) for (i, j) in columns(points, res)}


def flood_fill_cavity(occupied: set) -> set:
    """Empty cells in the padded bounding box that the outside cannot reach (6-connectivity)."""
    if not occupied:
        return set()
    lo = [min(c[a] for c in occupied) - 1 for a in range(3)]
    hi = [max(c[a] for c in occupied) + 1 for a in range(3)]
    start = tuple(lo)
    seen = {start}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        for a in range(3):
            for s in (-1, 1):
                n = list(c)
                n[a] += s
                n = tuple(n)
                if n in seen or n in occupied:
                    continue
                if not all(lo[k] <= n[k] <= hi[k] for k in range(3)):
                    continue
                seen.add(n)
                queue.append(n)
    box = itertools.product(*(range(lo[a], hi[a] + 1) for a in range(3)))
    return {c for c in box if c not in occupied and c not in seen}


def point_set(fm_points) -> set:
    return set(map(tuple, np.asarray(fm_points).tolist()))


def brute_tour(points, start) -> float:
    """Shortest open path from ``start`` through all points by trying every order."""
    pts = [tuple(map(float, p)) for p in points]
    if not pts:
        return 0.0
    best = math.inf
    for perm in itertools.permutations(pts):
        d = math.dist(start, perm[0]) + sum(math.dist(a, b) for a, b in zip(perm[:-1], perm[1:]))
        best = min(best, d)
    return best


def best_cover(matrix: np.ndarray, budget: int) -> float:
    """Largest fraction of columns covered by any ``budget`` rows (exhaustive)."""
    m = np.asarray(matrix, dtype=bool)
    rows, cols = m.shape
    best = 0
    for k in range(1, min(budget, rows) + 1):
        for combo in itertools.combinations(range(rows), k):
            best = max(best, int(m[list(combo)].any(axis=0).sum()))
    return best / cols if cols else 1.0


def min_cover_size(matrix: np.ndarray) -> int | None:
    """Fewest rows covering every coverable column (exhaustive)."""
    m = np.asarray(matrix, dtype=bool)
    need = m.any(axis=0)
    if not need.any():
        return 0
    for k in range(1, m.shape[0] + 1):
        for combo in itertools.combinations(range(m.shape[0]), k):
            if np.array_equal(m[list(combo)].any(axis=0), need):
                return k
    return None


def two_link_ik(x: float, y: float, l1: float = 1.0, l2: float = 1.0) -> list:
    """Closed-form joint pairs (shoulder, elbow) of a planar two-link arm."""
    c2 = (x * x + y * y - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    if abs(c2) > 1 + 1e-12:
        return []
    c2 = max(-1.0, min(1.0, c2))
    out = []
    for s2 in (math.sqrt(1 - c2 * c2), -math.sqrt(1 - c2 * c2)):
        q2 = math.atan2(s2, c2)
        q1 = math.atan2(y, x) - math.atan2(l2 * s2, l1 + l2 * c2)
        out.append((q1, q2))
    return out


def view_angles(forward, left, up, p_rel) -> tuple:
    """(azimuth, elevation, range) of a point in the camera frame given its basis vectors."""
    f = float(np.dot(p_rel, forward))
    l = float(np.dot(p_rel, left))
    u = float(np.dot(p_rel, up))
    return math.atan2(l, f), math.atan2(u, f), math.sqrt(f * f + l * l + u * u)
