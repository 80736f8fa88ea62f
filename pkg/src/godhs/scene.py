"""World model: rooms, carriers, items and their JSON scene files.

Carriers are unions of axis-aligned boxes (world frame, meters). Their point
cloud is the set of voxel centers covered by the boxes at the scene
resolution, so geometry is reproducible without mesh assets.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from shapely.geometry import Polygon, box as shapely_box

from godhs import geometry
from godhs.geometry import FEATURES

SCHEMA_VERSION = 1
DEFAULT_RESOLUTION = 0.05

Box = tuple  # (xmin, ymin, zmin, xmax, ymax, zmax)


class SceneError(ValueError):
    """Scene file could not be parsed or failed validation."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])


def box_cells(b: Box, resolution: float) -> np.ndarray:
    lo = np.rint(np.asarray(b[:3], dtype=float) / resolution).astype(np.int64)
    hi = np.rint(np.asarray(b[3:], dtype=float) / resolution).astype(np.int64)
    if np.any(hi <= lo):
        return np.zeros((0, 3), dtype=np.int64)
    axes = [np.arange(l, h) for l, h in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def sample_boxes(boxes, resolution: float) -> np.ndarray:
    """Voxel-center point cloud of a union of boxes."""
    parts = [box_cells(b, resolution) for b in boxes]
    cells = np.concatenate(parts) if parts else np.zeros((0, 3), dtype=np.int64)
    if len(cells):
        cells = np.unique(cells, axis=0)
    return (cells + 0.5) * resolution


@dataclass(frozen=True, eq=False)
class Carrier:
    id: str
    label: str
    boxes: tuple
    pose: tuple  # (x, y, yaw); yaw points out of the carrier's front
    openable: bool = False
    door: int | None = None  # index of the box removed by the open-action
    interior_region: tuple | None = None
    bottom_height: float = 0.0
    resolution: float = DEFAULT_RESOLUTION

    @cached_property
    def point_cloud(self) -> np.ndarray:
        return sample_boxes(self.boxes, self.resolution)

    @cached_property
    def grid(self) -> geometry.VoxelGrid:
        return geometry.voxelize(self.point_cloud, self.resolution)

    @cached_property
    def door_grid(self) -> geometry.VoxelGrid:
        if self.door is None:
            return geometry.VoxelGrid(np.zeros(3), self.resolution, np.zeros((0, 3)))
        return geometry.VoxelGrid(np.zeros(3), self.resolution, box_cells(self.boxes[self.door], self.resolution))

    @cached_property
    def feature_maps(self) -> dict:
        return geometry.feature_maps(self.point_cloud, self.resolution, self.bottom_height)

    @property
    def bounds(self) -> tuple:
        b = np.asarray(self.boxes, dtype=float)
        return tuple(b[:, :3].min(axis=0)) + tuple(b[:, 3:].max(axis=0))

    @property
    def front_yaw(self) -> float:
        return float(self.pose[2])


@dataclass(frozen=True)
class Room:
    id: str
    true_type: str
    footprint: tuple  # ((x, y), ...)
    carriers: tuple = ()
    objects: tuple = ()  # non-carrier object labels seen on entry

    @cached_property
    def polygon(self) -> Polygon:
        return Polygon(self.footprint)

    @property
    def center(self) -> tuple:
        c = self.polygon.centroid
        if not self.polygon.contains(c):
            c = self.polygon.representative_point()
        return (float(c.x), float(c.y))


@dataclass(frozen=True)
class Door:
    rooms: tuple  # (room id, room id)
    position: tuple  # (x, y)


@dataclass(frozen=True)
class Item:
    label: str
    carrier: str
    feature: str
    offset: tuple  # (dx, dy, z) relative to the carrier pose position

    def position(self, carrier: Carrier) -> np.ndarray:
        return np.array([carrier.pose[0] + self.offset[0], carrier.pose[1] + self.offset[1], self.offset[2]])


@dataclass(frozen=True, eq=False)
class Scene:
    name: str
    rooms: tuple
    doors: tuple
    carriers: tuple
    items: tuple
    resolution: float = DEFAULT_RESOLUTION
    version: int = SCHEMA_VERSION

    @cached_property
    def carrier_by_id(self) -> dict:
        return {c.id: c for c in self.carriers}

    @cached_property
    def room_by_id(self) -> dict:
        return {r.id: r for r in self.rooms}

    @cached_property
    def room_of(self) -> dict:
        return {cid: r.id for r in self.rooms for cid in r.carriers}

    @cached_property
    def door_graph(self) -> dict:
        adj = {r.id: [] for r in self.rooms}
        for d in self.doors:
            a, b = d.rooms
            if a in adj and b in adj:
                adj[a].append(b)
                adj[b].append(a)
        return adj

    def observable_objects(self, room_id: str) -> list[str]:
        room = self.room_by_id[room_id]
        labels = [self.carrier_by_id[c].label for c in room.carriers if c in self.carrier_by_id]
        return labels + list(room.objects)

    def items_labeled(self, label: str) -> list[Item]:
        return [it for it in self.items if it.label == label]

    @cached_property
    def grid(self) -> geometry.VoxelGrid:
        return geometry.VoxelGrid.union([c.grid for c in self.carriers], self.resolution)

    @cached_property
    def _room_grids(self) -> dict:
        return {}

    def room_grid(self, room_id: str) -> geometry.VoxelGrid:
        """Scene voxels over the room's bounding rectangle (all sight lines in a convex room stay there)."""
        if room_id not in self._room_grids:
            x0, y0, x1, y1 = self.room_by_id[room_id].polygon.bounds
            self._room_grids[room_id] = self.grid.crop_xy((x0, y0), (x1, y1))
        return self._room_grids[room_id]


# ---------------------------------------------------------------- serialization


def _floats(seq) -> list:
    return [float(v) for v in seq]


def scene_to_dict(scene: Scene) -> dict:
    return {
        "version": scene.version,
        "name": scene.name,
        "resolution": float(scene.resolution),
        "rooms": [
            {
                "id": r.id,
                "type": r.true_type,
                "footprint": [_floats(p) for p in r.footprint],
                "carriers": list(r.carriers),
                "objects": list(r.objects),
            }
            for r in scene.rooms
        ],
        "doors": [{"rooms": list(d.rooms), "position": _floats(d.position)} for d in scene.doors],
        "carriers": [
            {
                "id": c.id,
                "label": c.label,
                "pose": _floats(c.pose),
                "openable": bool(c.openable),
                "door": c.door,
                "interior": None if c.interior_region is None else _floats(c.interior_region),
                "bottom_height": float(c.bottom_height),
                "boxes": [_floats(b) for b in c.boxes],
            }
            for c in scene.carriers
        ],
        "items": [
            {"label": it.label, "carrier": it.carrier, "feature": it.feature, "offset": _floats(it.offset)}
            for it in scene.items
        ],
    }


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2) + "\n"


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(dumps_scene(scene))


def _req(d: dict, key: str, where: str):
    if key not in d:
        raise SceneError(f"{where}: missing field {key!r}")
    return d[key]


def scene_from_dict(data: dict) -> Scene:
    if not isinstance(data, dict):
        raise SceneError("scene document must be an object")
    version = _req(data, "version", "scene")
    if version != SCHEMA_VERSION:
        raise SceneError(f"unsupported scene version {version!r} (expected {SCHEMA_VERSION})")
    res = float(_req(data, "resolution", "scene"))
    try:
        rooms = tuple(
            Room(
                id=str(_req(r, "id", f"rooms[{i}]")),
                true_type=str(_req(r, "type", f"rooms[{i}]")),
                footprint=tuple(tuple(float(v) for v in p) for p in _req(r, "footprint", f"rooms[{i}]")),
                carriers=tuple(str(c) for c in r.get("carriers", [])),
                objects=tuple(str(o) for o in r.get("objects", [])),
            )
            for i, r in enumerate(_req(data, "rooms", "scene"))
        )
        doors = tuple(
            Door(
                rooms=tuple(str(x) for x in _req(d, "rooms", f"doors[{i}]")),
                position=tuple(float(v) for v in _req(d, "position", f"doors[{i}]")),
            )
            for i, d in enumerate(data.get("doors", []))
        )
        carriers = tuple(
            Carrier(
                id=str(_req(c, "id", f"carriers[{i}]")),
                label=str(_req(c, "label", f"carriers[{i}]")),
                boxes=tuple(tuple(float(v) for v in b) for b in _req(c, "boxes", f"carriers[{i}]")),
                pose=tuple(float(v) for v in _req(c, "pose", f"carriers[{i}]")),
                openable=bool(c.get("openable", False)),
                door=None if c.get("door") is None else int(c["door"]),
                interior_region=None if c.get("interior") is None else tuple(float(v) for v in c["interior"]),
                bottom_height=float(c.get("bottom_height", 0.0)),
                resolution=res,
            )
            for i, c in enumerate(_req(data, "carriers", "scene"))
        )
        items = tuple(
            Item(
                label=str(_req(it, "label", f"items[{i}]")),
                carrier=str(_req(it, "carrier", f"items[{i}]")),
                feature=str(_req(it, "feature", f"items[{i}]")),
                offset=tuple(float(v) for v in _req(it, "offset", f"items[{i}]")),
            )
            for i, it in enumerate(data.get("items", []))
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SceneError):
            raise
        raise SceneError(f"malformed field: {exc}") from exc
    return Scene(
        name=str(_req(data, "name", "scene")),
        rooms=rooms,
        doors=doors,
        carriers=carriers,
        items=items,
        resolution=res,
        version=version,
    )


def loads_scene(text: str, validate: bool = True) -> Scene:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    scene = scene_from_dict(data)
    if validate:
        report = validate_scene(scene)
        if report:
            raise SceneError("scene failed validation: " + "; ".join(report), report)
    return scene


def fixture_path(name: str) -> Path:
    ref = resources.files("godhs") / "data" / "fixtures" / f"{name}.json"
    return Path(str(ref))


def resolve_scene_path(path) -> Path:
    """Accept a file path, or the name of a bundled fixture (``flat``, ``fixtures/flat``)."""
    p = Path(path)
    if p.is_file():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    candidate = fixture_path(stem)
    if candidate.is_file():
        return candidate
    raise SceneError(f"scene file not found: {path}")


def load_scene(path, validate: bool = True) -> Scene:
    return loads_scene(resolve_scene_path(path).read_text(), validate=validate)


# ---------------------------------------------------------------- validation


def _box_contains(outer, inner, tol=1e-9) -> bool:
    return all(outer[i] <= inner[i] + tol for i in range(3)) and all(inner[i] <= outer[i] + tol for i in range(3, 6))


def validate_scene(scene: Scene) -> list[str]:
    """Return one message per violated invariant; empty when the scene is valid."""
    report: list[str] = []
    if not scene.resolution > 0:
        report.append("resolution must be positive")
        return report

    room_ids = [r.id for r in scene.rooms]
    if not room_ids:
        report.append("scene has no rooms")
    for rid in sorted({r for r in room_ids if room_ids.count(r) > 1}):
        report.append(f"duplicate room id {rid!r}")
    carrier_ids = [c.id for c in scene.carriers]
    for cid in sorted({c for c in carrier_ids if carrier_ids.count(c) > 1}):
        report.append(f"duplicate carrier id {cid!r}")

    owner: dict[str, list[str]] = {}
    for room in scene.rooms:
        if len(room.footprint) < 3:
            report.append(f"room {room.id!r}: footprint needs at least 3 vertices")
            continue
        poly = room.polygon
        if not poly.is_valid or not poly.exterior.is_simple:
            report.append(f"room {room.id!r}: footprint is not a simple polygon")
            continue
        for cid in room.carriers:
            owner.setdefault(cid, []).append(room.id)
            carrier = scene.carrier_by_id.get(cid)
            if carrier is None:
                report.append(f"room {room.id!r}: unknown carrier id {cid!r}")
                continue
            if carrier.boxes:
                b = carrier.bounds
                if not poly.buffer(1e-9).covers(shapely_box(b[0], b[1], b[3], b[4])):
                    report.append(f"carrier {cid!r}: footprint not contained in room {room.id!r}")
    for cid in carrier_ids:
        if cid not in owner:
            report.append(f"carrier {cid!r}: not assigned to any room")
        elif len(owner[cid]) > 1:
            report.append(f"carrier {cid!r}: listed in several rooms")

    for i, d in enumerate(scene.doors):
        if len(d.rooms) != 2 or any(r not in scene.room_by_id for r in d.rooms):
            report.append(f"door {i}: references unknown room")
        if len(d.position) != 2:
            report.append(f"door {i}: position must be 2D")
    if room_ids:
        seen = {room_ids[0]}
        queue = deque([room_ids[0]])
        while queue:
            for nb in scene.door_graph[queue.popleft()]:
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        for rid in room_ids:
            if rid not in seen:
                report.append(f"unreachable room {rid!r}")

    for c in scene.carriers:
        if len(c.pose) != 3 or not all(math.isfinite(v) for v in c.pose):
            report.append(f"carrier {c.id!r}: pose must be finite (x, y, yaw)")
        if any(len(b) != 6 for b in c.boxes):
            report.append(f"carrier {c.id!r}: boxes need 6 coordinates")
            continue
        if len(c.point_cloud) == 0:
            report.append(f"carrier {c.id!r}: empty point cloud")
            continue
        if c.bottom_height < 0:
            report.append(f"carrier {c.id!r}: bottom height must be >= 0")
        if c.door is not None and not 0 <= c.door < len(c.boxes):
            report.append(f"carrier {c.id!r}: door index out of range")
        if c.interior_region is not None:
            if len(c.interior_region) != 6:
                report.append(f"carrier {c.id!r}: interior region needs 6 coordinates")
            elif not _box_contains(c.bounds, c.interior_region):
                report.append(f"carrier {c.id!r}: interior region outside carrier bounds")

    for i, it in enumerate(scene.items):
        carrier = scene.carrier_by_id.get(it.carrier)
        if carrier is None:
            report.append(f"item {i} ({it.label}): unknown carrier id {it.carrier!r}")
            continue
        if it.feature not in FEATURES:
            report.append(f"item {i} ({it.label}): unknown feature {it.feature!r}")
            continue
        if it.feature == "inside" and not carrier.openable:
            report.append(f"item {i} ({it.label}): feature 'inside' on non-openable carrier {carrier.id!r}")
            continue
        if len(it.offset) != 3:
            report.append(f"item {i} ({it.label}): offset must be 3D")
            continue
        if len(carrier.point_cloud) == 0 or carrier.bottom_height < 0:
            continue
        fm = carrier.feature_maps[it.feature]
        if len(fm) == 0:
            report.append(f"item {i} ({it.label}): feature {it.feature!r} of {carrier.id!r} is empty")
            continue
        pos = it.position(carrier)
        tol = scene.resolution / 2 + 1e-9
        if np.any(pos < fm.points.min(axis=0) - tol) or np.any(pos > fm.points.max(axis=0) + tol):
            report.append(f"item {i} ({it.label}): offset outside feature {it.feature!r} of {carrier.id!r}")
    return report
