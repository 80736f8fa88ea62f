"""Voxel geometry and carrier feature extraction.

A carrier point cloud is binned into a voxel grid; its 2D projection is the
footprint. From those, four feature maps are derived: ``top`` (per-column
maximum), ``sides`` (vertical columns over the footprint rim), ``bottom``
(footprint at a fixed height) and ``inside`` (enclosed cavity cells).

All emitted feature points sit at cell centers in x/y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

FEATURES = ("top", "bottom", "sides", "inside")

_EPS = 1e-9


class GeometryError(ValueError):
    pass


def _as_cloud(cloud) -> np.ndarray:
    pts = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise GeometryError("empty point cloud")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("point cloud contains non-finite values")
    return pts


def cell_indices(points, resolution: float, origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Floor-binned integer cell index of each point (lower bound inclusive)."""
    pts = np.asarray(points, dtype=float)
    org = np.asarray(origin, dtype=float)[: pts.shape[-1]]
    return np.floor((pts - org) / resolution).astype(np.int64)


@dataclass(eq=False)
class VoxelGrid:
    """Sparse set of occupied voxels with a lazily built dense lookup."""

    origin: np.ndarray
    resolution: float
    cells: np.ndarray  # (N, 3) unique int64 rows, lexicographically sorted

    def __post_init__(self):
        if not self.resolution > 0:
            raise GeometryError("resolution must be positive")
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 3)
        self.cells = np.unique(cells, axis=0) if len(cells) else cells

    @property
    def occupied(self) -> frozenset:
        return frozenset(map(tuple, self.cells.tolist()))

    def __len__(self) -> int:
        return len(self.cells)

    @cached_property
    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """``(lo, mask)`` where ``mask[i - lo]`` is True for occupied cell ``i``."""
        if len(self.cells) == 0:
            return np.zeros(3, dtype=np.int64), np.zeros((1, 1, 1), dtype=bool)
        lo = self.cells.min(axis=0)
        hi = self.cells.max(axis=0)
        mask = np.zeros(tuple(hi - lo + 1), dtype=bool)
        rel = self.cells - lo
        mask[rel[:, 0], rel[:, 1], rel[:, 2]] = True
        return lo, mask

    def is_occupied(self, idx: np.ndarray) -> np.ndarray:
        """Vectorised occupancy lookup for an (..., 3) array of cell indices."""
        lo, mask = self.dense
        rel = np.asarray(idx, dtype=np.int64) - lo
        inside = np.all((rel >= 0) & (rel < mask.shape), axis=-1)
        out = np.zeros(rel.shape[:-1], dtype=bool)
        r = rel[inside]
        out[inside] = mask[r[..., 0], r[..., 1], r[..., 2]]
        return out

    def cell_center(self, idx) -> np.ndarray:
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    def without(self, other: "VoxelGrid") -> "VoxelGrid":
        """Grid with every cell of ``other`` removed (same origin/resolution)."""
        if len(other) == 0 or len(self) == 0:
            return VoxelGrid(self.origin, self.resolution, self.cells)
        drop = other.occupied
        keep = [c for c in map(tuple, self.cells.tolist()) if c not in drop]
        return VoxelGrid(self.origin, self.resolution, np.array(keep, dtype=np.int64).reshape(-1, 3))

    def crop_xy(self, lo, hi) -> "VoxelGrid":
        """Cells whose xy cell box meets the rectangle ``[lo, hi]``."""
        lo_i = np.floor((np.asarray(lo, dtype=float) - self.origin[:2]) / self.resolution - 1e-9)
        hi_i = np.floor((np.asarray(hi, dtype=float) - self.origin[:2]) / self.resolution + 1e-9)
        xy = self.cells[:, :2]
        keep = np.all((xy >= lo_i) & (xy <= hi_i), axis=1)
        return VoxelGrid(self.origin, self.resolution, self.cells[keep])

    @staticmethod
    def union(grids, resolution: float, origin=(0.0, 0.0, 0.0)) -> "VoxelGrid":
        parts = [g.cells for g in grids if len(g)]
        cells = np.concatenate(parts) if parts else np.zeros((0, 3), dtype=np.int64)
        return VoxelGrid(np.asarray(origin, dtype=float), resolution, cells)


def voxelize(cloud, resolution: float, origin=(0.0, 0.0, 0.0)) -> VoxelGrid:
    if not resolution > 0:
        raise GeometryError("resolution must be positive")
    pts = _as_cloud(cloud)
    return VoxelGrid(np.asarray(origin, dtype=float), resolution, cell_indices(pts, resolution, origin))


@dataclass(eq=False)
class Footprint2D:
    cells: np.ndarray  # (M, 2) unique int64 rows, sorted
    resolution: float
    origin: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(-1)[:2]
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 2)
        self.cells = np.unique(cells, axis=0) if len(cells) else cells

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def cell_set(self) -> frozenset:
        return frozenset(map(tuple, self.cells.tolist()))

    def centers(self) -> np.ndarray:
        return self.origin + (self.cells + 0.5) * self.resolution


def footprint(grid: VoxelGrid) -> Footprint2D:
    """Project occupied voxels onto the xy plane."""
    fp = Footprint2D(grid.cells[:, :2], grid.resolution, grid.origin[:2])
    if len(fp) == 0:
        raise GeometryError("empty footprint")
    return fp


@dataclass(eq=False)
class FeatureMap:
    feature: str
    points: np.ndarray  # (N, 3)

    def __post_init__(self):
        if self.feature not in FEATURES:
            raise GeometryError(f"unknown feature {self.feature!r}")
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise GeometryError("feature map contains non-finite points")

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {"feature": self.feature, "points": self.points.tolist()}


def _column_max(cloud: np.ndarray, fp: Footprint2D) -> dict[tuple[int, int], float]:
    ixy = cell_indices(cloud[:, :2], fp.resolution, fp.origin)
    keys, inverse = np.unique(ixy, axis=0, return_inverse=True)
    zmax = np.full(len(keys), -np.inf)
    np.maximum.at(zmax, inverse.reshape(-1), cloud[:, 2])
    return {tuple(k): z for k, z in zip(keys.tolist(), zmax.tolist())}


def extract_top(cloud, fp: Footprint2D) -> FeatureMap:
    """One point per footprint cell at the highest z found in that column."""
    pts = _as_cloud(cloud)
    colmax = _column_max(pts, fp)
    centers = fp.centers()
    out = np.empty((len(fp), 3))
    for i, cell in enumerate(map(tuple, fp.cells.tolist())):
        if cell not in colmax:
            raise GeometryError(f"footprint cell {cell} has no cloud point")
        out[i] = (centers[i, 0], centers[i, 1], colmax[cell])
    return FeatureMap("top", out)


def footprint_boundary(fp: Footprint2D) -> Footprint2D:
    """Occupied cells with at least one unoccupied 4-neighbour."""
    if len(fp) == 0:
        raise GeometryError("empty footprint")
    lo = fp.cells.min(axis=0) - 1
    hi = fp.cells.max(axis=0) + 1
    occ = np.zeros(tuple(hi - lo + 1), dtype=bool)
    rel = fp.cells - lo
    occ[rel[:, 0], rel[:, 1]] = True
    full = (
        occ[:-2, 1:-1] & occ[2:, 1:-1] & occ[1:-1, :-2] & occ[1:-1, 2:]
    )
    interior = np.zeros_like(occ)
    interior[1:-1, 1:-1] = full
    rim = occ & ~interior
    return Footprint2D(np.argwhere(rim) + lo, fp.resolution, fp.origin)


def side_heights(zmax: float, resolution: float) -> list[float]:
    """0, res, 2*res, ... up to and including ``zmax``."""
    if zmax <= _EPS:
        return [0.0]
    n = int(math.floor(zmax / resolution + _EPS))
    zs = [k * resolution for k in range(n + 1)]
    if abs(zs[-1] - zmax) <= 1e-9 * max(1.0, zmax):
        zs[-1] = zmax
    else:
        zs.append(zmax)
    return zs


def extract_sides(cloud, boundary: Footprint2D) -> FeatureMap:
    pts = _as_cloud(cloud)
    colmax = _column_max(pts, boundary)
    centers = boundary.centers()
    out = []
    for i, cell in enumerate(map(tuple, boundary.cells.tolist())):
        if cell not in colmax:
            raise GeometryError(f"boundary cell {cell} has no cloud point")
        x, y = centers[i]
        out.extend((x, y, z) for z in side_heights(colmax[cell], boundary.resolution))
    return FeatureMap("sides", np.array(out, dtype=float).reshape(-1, 3))


def extract_bottom(fp: Footprint2D, z0: float) -> FeatureMap:
    if z0 < 0:
        raise GeometryError("bottom height must be non-negative")
    if len(fp) == 0:
        raise GeometryError("empty footprint")
    c = fp.centers()
    return FeatureMap("bottom", np.column_stack([c, np.full(len(c), float(z0))]))


def _shift(mask: np.ndarray, axis: int, step: int) -> np.ndarray:
    out = np.zeros_like(mask)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    if step > 0:
        src[axis], dst[axis] = slice(None, -step), slice(step, None)
    else:
        src[axis], dst[axis] = slice(-step, None), slice(None, step)
    out[tuple(dst)] = mask[tuple(src)]
    return out


def cavity_cells(grid: VoxelGrid) -> np.ndarray:
    """Empty cells of the grid's bounding box not 6-connected to its exterior."""
    if len(grid) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    lo = grid.cells.min(axis=0) - 1
    hi = grid.cells.max(axis=0) + 1
    occ = np.zeros(tuple(hi - lo + 1), dtype=bool)
    rel = grid.cells - lo
    occ[rel[:, 0], rel[:, 1], rel[:, 2]] = True
    free = ~occ
    # the one-cell padding shell is the exterior seed
    reached = np.zeros_like(occ)
    reached[0, :, :] = reached[-1, :, :] = True
    reached[:, 0, :] = reached[:, -1, :] = True
    reached[:, :, 0] = reached[:, :, -1] = True
    reached &= free
    while True:
        grown = reached.copy()
        for axis in range(3):
            grown |= _shift(reached, axis, 1) | _shift(reached, axis, -1)
        grown &= free
        if np.array_equal(grown, reached):
            break
        reached = grown
    return np.argwhere(free & ~reached) + lo


def extract_inside(grid: VoxelGrid) -> FeatureMap:
    cells = cavity_cells(grid)
    return FeatureMap("inside", grid.cell_center(cells) if len(cells) else np.zeros((0, 3)))


def centroid(cloud) -> np.ndarray:
    pts = _as_cloud(cloud)
    return pts[:, :2].mean(axis=0)


def feature_maps(cloud, resolution: float, bottom_height: float) -> dict[str, FeatureMap]:
    """All four feature maps of one carrier cloud, keyed by feature name."""
    grid = voxelize(cloud, resolution)
    fp = footprint(grid)
    return {
        "top": extract_top(cloud, fp),
        "bottom": extract_bottom(fp, bottom_height),
        "sides": extract_sides(cloud, footprint_boundary(fp)),
        "inside": extract_inside(grid),
    }


def segment_blocked(starts, ends, grid: VoxelGrid) -> np.ndarray:
    """For each segment, whether an occupied voxel lies strictly between its ends.

    Voxels containing either endpoint are excluded. Traversal is exact: the
    segment is split at every grid-plane crossing and each piece's midpoint
    names one traversed voxel (zero-length pieces at edge/corner crossings
    are skipped).
    """
    a = np.asarray(starts, dtype=float).reshape(-1, 3)
    b = np.asarray(ends, dtype=float).reshape(-1, 3)
    a, b = np.broadcast_arrays(a, b)
    n = len(a)
    out = np.zeros(n, dtype=bool)
    if n == 0 or len(grid) == 0:
        return out
    res = grid.resolution
    ga = (a - grid.origin) / res
    gb = (b - grid.origin) / res
    ca = np.floor(ga).astype(np.int64)
    cb = np.floor(gb).astype(np.int64)
    span = np.abs(cb - ca).max(axis=1)
    # chunk by crossing count so padding stays small
    order = np.argsort(span, kind="stable")
    start = 0
    while start < n:
        m = int(span[order[start]])
        stop = start
        budget = max(1, 400_000 // (3 * max(m, 1) + 2))
        while stop < n and stop - start < budget and span[order[stop]] <= max(m, 1) * 2:
            stop += 1
        idx = order[start:stop]
        out[idx] = _blocked_chunk(ga[idx], gb[idx], ca[idx], cb[idx], int(span[idx].max()), grid)
        start = stop
    return out


def _blocked_chunk(ga, gb, ca, cb, m, grid):
    k = len(ga)
    m = max(m, 1)
    d = gb - ga
    j = np.arange(1, m + 1)
    ts = [np.zeros((k, 1)), np.ones((k, 1))]
    with np.errstate(divide="ignore", invalid="ignore"):
        for ax in range(3):
            da = d[:, ax : ax + 1]
            base = ca[:, ax : ax + 1]
            planes = np.where(da > 0, base + j, base - j + 1).astype(float)
            t = (planes - ga[:, ax : ax + 1]) / da
            t = np.where((da != 0) & (t > 0) & (t < 1), t, np.inf)
            ts.append(t)
    t = np.sort(np.concatenate(ts, axis=1), axis=1)
    t0, t1 = t[:, :-1], t[:, 1:]
    with np.errstate(invalid="ignore"):
        valid = np.isfinite(t1) & (t1 - t0 > 1e-12)
    mid = np.where(valid, (t0 + t1) / 2, 0.0)
    pts = ga[:, None, :] + mid[..., None] * d[:, None, :]
    cells = np.floor(pts).astype(np.int64)
    interior = valid & np.any(cells != ca[:, None, :], axis=2) & np.any(cells != cb[:, None, :], axis=2)
    hit = grid.is_occupied(cells) & interior
    return hit.any(axis=1)
