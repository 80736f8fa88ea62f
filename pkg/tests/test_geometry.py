from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from godhs import geometry
from godhs.geometry import (
    FeatureMap,
    GeometryError,
    VoxelGrid,
    cavity_cells,
    centroid,
    extract_bottom,
    extract_inside,
    extract_sides,
    extract_top,
    footprint,
    footprint_boundary,
    segment_blocked,
    side_heights,
    voxelize,
)

from oracles import (
    RES,
    boundary_oracle,
    bottom_oracle,
    cells_of,
    columns,
    flood_fill_cavity,
    point_set,
    random_carrier_cloud,
    sides_oracle,
    top_oracle,
)


def _cube(n: int, res: float = RES) -> np.ndarray:
    idx = np.stack(np.meshgrid(*(np.arange(n),) * 3, indexing="ij"), -1).reshape(-1, 3)
    return (idx + 0.5) * res


def _shell(n: int, res: float = RES) -> np.ndarray:
    idx = np.stack(np.meshgrid(*(np.arange(n),) * 3, indexing="ij"), -1).reshape(-1, 3)
    keep = np.any((idx == 0) | (idx == n - 1), axis=1)
    return (idx[keep] + 0.5) * res


def test_voxelize_unit_cube_corner_points():
    # eight corners of a 0.1 m cube at 0.05 m resolution: the far corners fall in the next cell
    pts = np.array([[x, y, z] for x in (0, 0.1) for y in (0, 0.1) for z in (0, 0.1)])
    grid = voxelize(pts, 0.05)
    assert grid.occupied == {(i, j, k) for i in (0, 2) for j in (0, 2) for k in (0, 2)}


def test_voxelize_rejects_bad_input():
    with pytest.raises(GeometryError):
        voxelize(np.zeros((0, 3)), 0.05)
    with pytest.raises(GeometryError):
        voxelize(np.array([[0.0, np.nan, 0.0]]), 0.05)
    with pytest.raises(GeometryError):
        voxelize(np.zeros((1, 3)), 0.0)


@given(st.lists(st.tuples(*(st.floats(-5, 5, allow_nan=False),) * 3), min_size=1, max_size=60))
def test_voxelize_matches_floor_binning(points):
    grid = voxelize(np.array(points), RES)
    assert grid.occupied == cells_of(points)


def test_top_of_flat_slab():
    slab = np.array([[(i + 0.5) * RES, (j + 0.5) * RES, z] for i in range(4) for j in range(3) for z in (0.025, 0.075)])
    fm = extract_top(slab, footprint(voxelize(slab, RES)))
    assert len(fm) == 12
    assert np.allclose(fm.points[:, 2], 0.075)


def test_boundary_of_filled_square_is_its_rim():
    cells = np.array([(i, j) for i in range(5) for j in range(5)])
    rim = footprint_boundary(geometry.Footprint2D(cells, RES))
    assert rim.cell_set == {(i, j) for i in range(5) for j in range(5) if i in (0, 4) or j in (0, 4)}


def test_boundary_of_single_cell():
    rim = footprint_boundary(geometry.Footprint2D(np.array([[3, 3]]), RES))
    assert rim.cell_set == {(3, 3)}


def test_sides_levels_include_top():
    assert side_heights(0.12, 0.05) == [0.0, 0.05, 0.1, 0.12]
    assert side_heights(0.1, 0.05)[-1] == 0.1
    assert side_heights(0.0, 0.05) == [0.0]


def test_bottom_height_and_negative_rejected():
    cube = _cube(3)
    fp = footprint(voxelize(cube, RES))
    fm = extract_bottom(fp, 0.02)
    assert len(fm) == 9 and np.all(fm.points[:, 2] == 0.02)
    with pytest.raises(GeometryError):
        extract_bottom(fp, -0.1)


def test_solid_cube_has_no_inside():
    assert len(extract_inside(voxelize(_cube(4), RES))) == 0


def test_closed_shell_inside_is_its_core():
    fm = extract_inside(voxelize(_shell(5), RES))
    assert len(fm) == 27
    assert np.allclose(fm.points.min(axis=0), 1.5 * RES) and np.allclose(fm.points.max(axis=0), 3.5 * RES)


def test_leaky_shell_has_no_inside():
    pts = _shell(5)
    hole = np.array([0.5, 2.5, 2.5]) * RES
    pts = pts[~np.all(np.isclose(pts, hole), axis=1)]
    assert len(cavity_cells(voxelize(pts, RES))) == 0


def test_centroid_of_symmetric_cloud():
    assert np.allclose(centroid(_cube(4)), [2 * RES, 2 * RES])


def test_feature_map_validation():
    with pytest.raises(GeometryError):
        FeatureMap("front", np.zeros((1, 3)))
    with pytest.raises(GeometryError):
        FeatureMap("top", np.array([[0.0, math.inf, 0.0]]))


def test_feature_maps_of_a_carrier_are_consistent(flat):
    fridge = flat.carrier_by_id["kitchen_fridge"]
    maps = fridge.feature_maps
    assert set(maps) == {"top", "bottom", "sides", "inside"}
    assert len(maps["inside"]) > 0
    top_z = maps["top"].points[:, 2].max()
    assert top_z == pytest.approx(fridge.point_cloud[:, 2].max())


@pytest.mark.parametrize("seed", range(10))
def test_extractors_match_oracles(seed):
    rng = np.random.default_rng(1000 + seed)
    cloud = random_carrier_cloud(rng)
    grid = voxelize(cloud, RES)
    fp = footprint(grid)
    assert point_set(extract_top(cloud, fp).points) == top_oracle(cloud)
    assert footprint_boundary(fp).cell_set == boundary_oracle(columns(cloud))
    assert point_set(extract_sides(cloud, footprint_boundary(fp)).points) == sides_oracle(cloud)
    assert point_set(extract_bottom(fp, 0.025).points) == bottom_oracle(cloud, 0.025)
    assert set(map(tuple, cavity_cells(grid).tolist())) == flood_fill_cavity(cells_of(cloud))


def test_segment_blocked_wall():
    wall = VoxelGrid(np.zeros(3), RES, np.array([(10, j, k) for j in range(-5, 5) for k in range(0, 10)]))
    starts = np.array([[0.0, 0.0, 0.2], [0.0, 0.0, 0.2]])
    ends = np.array([[1.0, 0.0, 0.2], [0.4, 0.0, 0.2]])
    assert segment_blocked(starts, ends, wall).tolist() == [True, False]


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_segment_blocked_matches_dense_sampling(seed):
    rng = np.random.default_rng(seed)
    cells = rng.integers(0, 8, size=(12, 3))
    grid = VoxelGrid(np.zeros(3), RES, cells)
    a = rng.uniform(-0.05, 0.45, size=(20, 3))
    b = rng.uniform(-0.05, 0.45, size=(20, 3))
    got = segment_blocked(a, b, grid)
    occ = {tuple(c) for c in cells.tolist()}
    ts = np.linspace(0, 1, 4001)[1:-1, None]
    for k in range(20):
        end_cells = {tuple(np.floor(a[k] / RES).astype(int)), tuple(np.floor(b[k] / RES).astype(int))}
        passed = {tuple(c) for c in np.floor((a[k] + ts * (b[k] - a[k])) / RES).astype(int).tolist()}
        hit = bool((passed - end_cells) & occ)
        # dense sampling can only miss a grazed corner, never invent a hit
        assert got[k] or not hit
