"""Procedural scenes and the bundled fixtures.

Carriers come from a small template catalog of desk-scale furniture built
from boxes. Target placement follows the shipped priors, with a configurable
fraction of uniformly random placements so that commonsense ranking is
useful but not an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from godhs.scene import DEFAULT_RESOLUTION, Carrier, Door, Item, Room, Scene, SceneError
from godhs.semantics.kb import KnowledgeBase, default_kb

T = 0.05  # wall / slab thickness


def _table(w, d, h, leg=0.05):
    boxes = [(0, 0, h - T, w, d, h)]
    for x0, y0 in ((0, 0), (w - leg, 0), (0, d - leg), (w - leg, d - leg)):
        boxes.append((x0, y0, 0, x0 + leg, y0 + leg, h - T))
    return boxes


def _solid(w, d, h):
    return [(0, 0, 0, w, d, h)]


def _cabinet(w, d, h):
    # front (door) is the y=0 face; listed last so its index is known
    return [
        (0, 0, 0, w, d, T),
        (0, 0, h - T, w, d, h),
        (0, d - T, T, w, d, h - T),
        (0, T, T, T, d - T, h - T),
        (w - T, T, T, w, d - T, h - T),
        (T, 0, T, w - T, T, h - T),
    ]


def _open_box(w, d, h):
    return [
        (0, 0, 0, w, d, T),
        (0, 0, T, w, T, h),
        (0, d - T, T, w, d, h),
        (0, T, T, T, d - T, h),
        (w - T, T, T, w, d - T, h),
    ]


def _sofa(w, d, h=0.45, back=0.85):
    return [(0, 0, 0, w, d, h), (0, d - 0.15, h, w, d, back)]


def _shelf(w, d, h):
    return [
        (0, 0, 0, T, d, h),
        (w - T, 0, 0, w, d, h),
        (T, d - T, 0, w - T, d, h),
        (T, 0, 0, w - T, d - T, T),
        (T, 0, h / 2 - T / 2, w - T, d - T, h / 2 + T / 2),
        (T, 0, h - T, w - T, d - T, h),
    ]


@dataclass(frozen=True)
class Template:
    label: str
    kind: str  # table | solid | cabinet | open | sofa | shelf
    size: tuple  # (w, d, h)
    placements: tuple  # features an item may physically occupy

    @property
    def openable(self) -> bool:
        return self.kind == "cabinet"

    def boxes(self) -> list:
        w, d, h = self.size
        return {
            "table": _table,
            "solid": _solid,
            "cabinet": _cabinet,
            "open": _open_box,
            "sofa": lambda w, d, h: _sofa(w, d),
            "shelf": _shelf,
        }[self.kind](w, d, h)


TEMPLATES = {
    t.label: t
    for t in (
        Template("fridge", "cabinet", (0.6, 0.6, 1.6), ("top", "sides", "inside")),
        Template("counter", "solid", (0.8, 0.6, 0.9), ("top", "sides")),
        Template("kitchen cabinet", "cabinet", (0.6, 0.6, 0.9), ("top", "inside")),
        Template("trash bin", "open", (0.35, 0.35, 0.4), ("top",)),
        Template("coffee table", "table", (0.8, 0.5, 0.45), ("top", "bottom")),
        Template("sofa", "sofa", (0.8, 0.6, 0.85), ("top", "sides")),
        Template("tv stand", "solid", (0.8, 0.4, 0.5), ("top", "sides")),
        Template("bookshelf", "shelf", (0.8, 0.3, 1.2), ("top", "sides")),
        Template("bed", "solid", (0.8, 0.8, 0.5), ("top", "sides")),
        Template("nightstand", "cabinet", (0.45, 0.45, 0.55), ("top", "inside")),
        Template("dressing table", "table", (0.8, 0.45, 0.75), ("top", "bottom")),
        Template("wardrobe", "cabinet", (0.8, 0.6, 1.5), ("inside", "sides")),
        Template("bathtub", "open", (0.8, 0.6, 0.5), ("top",)),
        Template("washbasin cabinet", "cabinet", (0.6, 0.45, 0.85), ("top", "inside")),
        Template("laundry basket", "open", (0.45, 0.45, 0.5), ("top",)),
        Template("dining table", "table", (0.8, 0.8, 0.75), ("top", "bottom")),
        Template("chair", "solid", (0.45, 0.45, 0.45), ("top",)),
        Template("sideboard", "cabinet", (0.8, 0.45, 0.8), ("top", "inside")),
        Template("desk", "table", (0.8, 0.6, 0.75), ("top", "bottom")),
        Template("filing cabinet", "cabinet", (0.45, 0.6, 0.7), ("top", "inside")),
        Template("shoe rack", "table", (0.8, 0.35, 0.45), ("top", "bottom")),
        Template("console table", "table", (0.8, 0.35, 0.75), ("top", "bottom")),
    )
}

ROOM_CARRIERS = {
    "kitchen": ("fridge", "counter", "kitchen cabinet", "trash bin"),
    "living room": ("coffee table", "sofa", "tv stand", "bookshelf"),
    "bedroom": ("bed", "nightstand", "dressing table", "wardrobe"),
    "bathroom": ("bathtub", "washbasin cabinet", "laundry basket"),
    "dining room": ("dining table", "sideboard", "chair"),
    "office": ("desk", "bookshelf", "filing cabinet", "chair"),
    "hallway": ("shoe rack", "console table"),
}

ROOM_DECOR = {
    "kitchen": ("stove", "sink"),
    "living room": ("tv", "rug", "lamp"),
    "bedroom": ("lamp", "curtain", "mirror"),
    "bathroom": ("toilet", "mirror"),
    "dining room": ("lamp", "plant"),
    "office": ("lamp", "plant"),
    "hallway": ("coat rack", "mirror"),
}


def _rotate_boxes(boxes, quarter_turns: int, w: float, d: float) -> list:
    """Rotate local boxes (in [0,w]x[0,d]) by k*90 deg about z; result re-anchored at the origin."""
    out = []
    for x0, y0, z0, x1, y1, z1 in boxes:
        corners = [(x0, y0), (x1, y1)]
        for _ in range(quarter_turns % 4):
            corners = [(-y, x) for x, y in corners]
        xs = [c[0] for c in corners]
        ys = [c[1] for c in corners]
        out.append((min(xs), min(ys), z0, max(xs), max(ys), z1))
    minx = min(b[0] for b in out)
    miny = min(b[1] for b in out)
    return [(b[0] - minx, b[1] - miny, b[2], b[3] - minx, b[4] - miny, b[5]) for b in out]


def _snap(v: float, res: float) -> float:
    return round(round(v / res) * res, 10)


def build_carrier(
    cid: str, label: str, center: tuple, front: str, resolution: float = DEFAULT_RESOLUTION
) -> Carrier:
    """Instantiate a template centered at ``center`` with its front facing ``front`` (+x, -x, +y, -y)."""
    tpl = TEMPLATES[label]
    w, d, h = tpl.size
    turns = {"-y": 0, "+x": 1, "+y": 2, "-x": 3}[front]
    local = _rotate_boxes(tpl.boxes(), turns, w, d)
    span_x = max(b[3] for b in local)
    span_y = max(b[4] for b in local)
    ox = _snap(center[0] - span_x / 2, resolution)
    oy = _snap(center[1] - span_y / 2, resolution)
    boxes = tuple(
        tuple(round(v, 10) for v in (b[0] + ox, b[1] + oy, b[2], b[3] + ox, b[4] + oy, b[5])) for b in local
    )
    yaw = {"-y": -math.pi / 2, "+x": 0.0, "+y": math.pi / 2, "-x": math.pi}[front]
    interior = None
    door = None
    if tpl.openable:
        door = len(boxes) - 1
        xs = (min(b[0] for b in boxes) + T, max(b[3] for b in boxes) - T)
        ys = (min(b[1] for b in boxes) + T, max(b[4] for b in boxes) - T)
        interior = tuple(round(v, 10) for v in (xs[0], ys[0], T, xs[1], ys[1], h - T))
    px = round(ox + span_x / 2, 10)
    py = round(oy + span_y / 2, 10)
    return Carrier(
        id=cid,
        label=label,
        boxes=boxes,
        pose=(px, py, yaw),
        openable=tpl.openable,
        door=door,
        interior_region=interior,
        bottom_height=resolution / 2,
        resolution=resolution,
    )


def place_item(label: str, carrier: Carrier, feature: str, point_index: int) -> Item:
    pts = carrier.feature_maps[feature].points
    p = pts[point_index % len(pts)]
    return Item(
        label=label,
        carrier=carrier.id,
        feature=feature,
        offset=(round(float(p[0]) - carrier.pose[0], 10), round(float(p[1]) - carrier.pose[1], 10), float(p[2])),
    )


@dataclass(frozen=True)
class GenerationConfig:
    rooms: tuple = (3, 5)
    carriers_per_room: tuple = (2, 3)
    target: str = "orange"
    room_size: float = 4.0
    resolution: float = DEFAULT_RESOLUTION
    distractors: tuple = ("book", "mug", "keys")
    placement_noise: float = 0.1
    columns: int = 3
    kb: KnowledgeBase | None = field(default=None, compare=False)


def _rect(x0, y0, size) -> tuple:
    return ((x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size))


def _target_weights(cands, rooms_type, target, kb) -> np.ndarray:
    w = []
    for carrier, feature in cands:
        order = kb.features_for(carrier.label, target) or []
        fw = 1.0 / (1 + order.index(feature)) if feature in order else 0.0
        w.append(kb.room_score(target, rooms_type[carrier.id]) * kb.carrier_score(target, carrier.label) * fw)
    return np.asarray(w, dtype=float)


def generate_scene(config: GenerationConfig, seed: int) -> Scene:
    """Deterministic random scene for ``(config, seed)`` with exactly one target item."""
    lo, hi = config.rooms
    clo, chi = config.carriers_per_room
    if lo < 1 or hi < lo:
        raise SceneError("room count range must satisfy 1 <= min <= max")
    if clo < 1 or chi < clo:
        raise SceneError("carriers-per-room range must satisfy 1 <= min <= max")
    if hi > len(ROOM_CARRIERS):
        raise SceneError(f"at most {len(ROOM_CARRIERS)} room types are available")
    kb = config.kb or default_kb()
    res = config.resolution
    rng = np.random.default_rng(seed)

    n_rooms = int(rng.integers(lo, hi + 1))
    types = [list(ROOM_CARRIERS)[i] for i in rng.permutation(len(ROOM_CARRIERS))[:n_rooms]]
    cols = max(1, min(config.columns, n_rooms))
    size = config.room_size
    rooms, carriers, doors = [], [], []
    room_type_of = {}
    slot_offsets = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    for k, rtype in enumerate(types):
        rid = f"room{k}"
        col, row = k % cols, k // cols
        x0, y0 = col * size, row * size
        cx, cy = x0 + size / 2, y0 + size / 2
        catalog = ROOM_CARRIERS[rtype]
        m = int(rng.integers(clo, min(chi, len(catalog)) + 1))
        labels = [catalog[i] for i in rng.permutation(len(catalog))[:m]]
        slots = rng.permutation(4)[:m]
        ids = []
        for j, (label, slot) in enumerate(zip(labels, slots)):
            sx, sy = slot_offsets[slot]
            front = rng.choice([("-x" if sx > 0 else "+x"), ("-y" if sy > 0 else "+y")])
            spot = (cx + sx * size / 4, cy + sy * size / 4)
            cid = f"{rid}_c{j}"
            carriers.append(build_carrier(cid, label, spot, str(front), res))
            room_type_of[cid] = rtype
            ids.append(cid)
        decor = list(ROOM_DECOR[rtype]) + ["wall", "window"]
        rooms.append(Room(rid, rtype, _rect(x0, y0, size), tuple(ids), tuple(decor)))
        if k > 0:
            neighbours = []
            if col > 0:
                neighbours.append((k - 1, (x0, cy)))
            if row > 0:
                neighbours.append((k - cols, (cx, y0)))
            nb, pos = neighbours[int(rng.integers(len(neighbours)))]
            doors.append(Door((f"room{nb}", rid), pos))

    cands = [
        (c, f)
        for c in carriers
        for f in TEMPLATES[c.label].placements
        if len(c.feature_maps[f]) > 0
    ]
    weights = _target_weights(cands, room_type_of, config.target, kb)
    if rng.random() < config.placement_noise or weights.sum() <= 0:
        pick = int(rng.integers(len(cands)))
    else:
        pick = int(rng.choice(len(cands), p=weights / weights.sum()))
    carrier, feature = cands[pick]
    items = [place_item(config.target, carrier, feature, int(rng.integers(len(carrier.feature_maps[feature]))))]
    for label in config.distractors:
        if label == config.target:
            continue
        c, f = cands[int(rng.integers(len(cands)))]
        items.append(place_item(label, c, f, int(rng.integers(len(c.feature_maps[f])))))

    return Scene(
        name=f"generated-{seed}",
        rooms=tuple(rooms),
        doors=tuple(doors),
        carriers=tuple(carriers),
        items=tuple(items),
        resolution=res,
    )


def build_flat(resolution: float = DEFAULT_RESOLUTION) -> Scene:
    """Synthetic seven-room flat with an orange inside the kitchen fridge."""
    size = 4.0
    layout = [
        ("hallway", "hallway", 0, 0),
        ("living", "living room", 1, 0),
        ("kitchen", "kitchen", 2, 0),
        ("dining", "dining room", 3, 0),
        ("bedroom", "bedroom", 0, 1),
        ("bathroom", "bathroom", 1, 1),
        ("office", "office", 2, 1),
    ]
    furniture = {
        "hallway": [("shoe rack", (-1, -1), "+y"), ("console table", (1, 1), "-y")],
        "living": [("coffee table", (0, 0), "-y"), ("sofa", (0, 1), "-y"), ("tv stand", (0, -1), "+y")],
        "kitchen": [("fridge", (1, 1), "-y"), ("counter", (-1, 1), "-y"), ("kitchen cabinet", (-1, -1), "+y")],
        "dining": [("dining table", (0, 0), "-y"), ("sideboard", (1, 1), "-y")],
        "bedroom": [("bed", (0, 1), "-y"), ("nightstand", (1, 1), "-y"), ("dressing table", (-1, -1), "+y")],
        "bathroom": [("bathtub", (-1, 1), "-y"), ("washbasin cabinet", (1, -1), "+y")],
        "office": [("desk", (0, 1), "-y"), ("bookshelf", (-1, -1), "+y"), ("filing cabinet", (1, -1), "+y")],
    }
    rooms, carriers = [], []
    for rid, rtype, col, row in layout:
        x0, y0 = col * size, row * size
        cx, cy = x0 + size / 2, y0 + size / 2
        ids = []
        for j, (label, (sx, sy), front) in enumerate(furniture[rid]):
            cid = f"{rid}_{label.replace(' ', '_')}"
            carriers.append(build_carrier(cid, label, (cx + sx * size / 4, cy + sy * size / 4), front, resolution))
            ids.append(cid)
        decor = list(ROOM_DECOR[rtype]) + ["wall", "window"]
        rooms.append(Room(rid, rtype, _rect(x0, y0, size), tuple(ids), tuple(decor)))
    doors = (
        Door(("hallway", "living"), (4.0, 2.0)),
        Door(("living", "kitchen"), (8.0, 2.0)),
        Door(("kitchen", "dining"), (12.0, 2.0)),
        Door(("hallway", "bedroom"), (2.0, 4.0)),
        Door(("living", "bathroom"), (6.0, 4.0)),
        Door(("kitchen", "office"), (10.0, 4.0)),
    )
    by_id = {c.id: c for c in carriers}
    fridge = by_id["kitchen_fridge"]
    inside = fridge.feature_maps["inside"].points
    # a middle shelf position, near the door
    mid = int(np.argmin(np.linalg.norm(inside - np.array([fridge.pose[0], fridge.pose[1] - 0.15, 0.8]), axis=1)))
    items = (
        place_item("orange", fridge, "inside", mid),
        place_item("book", by_id["office_bookshelf"], "top", 3),
        place_item("mug", by_id["kitchen_counter"], "top", 10),
        place_item("keys", by_id["hallway_console_table"], "top", 5),
    )
    return Scene("flat", tuple(rooms), doors, tuple(carriers), items, resolution)


def build_minimal(resolution: float = DEFAULT_RESOLUTION) -> Scene:
    """One room, one coffee table, an orange on its top."""
    table = build_carrier("table", "coffee table", (2.0, 2.0), "-y", resolution)
    room = Room("room0", "living room", _rect(0.0, 0.0, 4.0), ("table",), ("sofa", "wall"))
    return Scene("minimal", (room,), (), (table,), (place_item("orange", table, "top", 40),), resolution)
