"""Mock commonsense knowledge base backed by a shipped priors file."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from godhs.geometry import FEATURES

UNKNOWN_ROOM = "unknown"
KB_VERSION = 1


class KnowledgeBaseError(ValueError):
    pass


@dataclass(frozen=True)
class KnowledgeBase:
    room_types: tuple
    default_feature_order: tuple
    object_room_scores: dict  # object label -> {room type: score}
    room_priors: dict  # target -> {room type: score}
    carrier_priors: dict  # target -> {carrier label: score}
    carrier_features: dict  # carrier label -> {target or "*": [feature, ...]}

    @property
    def object_labels(self) -> tuple:
        return tuple(self.object_room_scores)

    @property
    def targets(self) -> tuple:
        return tuple(self.room_priors)

    def room_score(self, target: str, room_type: str) -> float:
        return float(self.room_priors.get(target, {}).get(room_type, 0.0))

    def carrier_score(self, target: str, carrier_label: str) -> float:
        return float(self.carrier_priors.get(target, {}).get(carrier_label, 0.0))

    def features_for(self, carrier_label: str, target: str) -> list[str] | None:
        """Ordered plausible features, or None when the carrier is unknown."""
        entry = self.carrier_features.get(carrier_label)
        if entry is None:
            return None
        order = entry.get(target, entry.get("*"))
        return list(order) if order else None

    def infer_room(self, observed) -> str:
        """Argmax of summed object-room association; ties go to the smaller name."""
        totals = Counter()
        for label, n in Counter(observed).items():
            for room, score in self.object_room_scores.get(label, {}).items():
                totals[room] += n * score
        best = max((s for s in totals.values()), default=0.0)
        if best <= 0:
            return UNKNOWN_ROOM
        return min(r for r, s in totals.items() if s == best)


def _check(data: dict) -> list[str]:
    problems = []
    if data.get("version") != KB_VERSION:
        problems.append(f"unsupported knowledge base version {data.get('version')!r}")
    for section in ("object_room_scores", "room_priors", "carrier_priors"):
        for key, scores in data.get(section, {}).items():
            for name, v in scores.items():
                if not isinstance(v, (int, float)) or not math.isfinite(v):
                    problems.append(f"{section}[{key}][{name}] is not a finite number")
    for carrier, entry in data.get("carrier_features", {}).items():
        for key, order in entry.items():
            if any(f not in FEATURES for f in order) or len(set(order)) != len(order):
                problems.append(f"carrier_features[{carrier}][{key}] must be distinct features")
    order = data.get("default_feature_order", [])
    if sorted(order) != sorted(FEATURES):
        problems.append("default_feature_order must list each feature once")
    return problems


def kb_from_dict(data: dict) -> KnowledgeBase:
    problems = _check(data)
    if problems:
        raise KnowledgeBaseError("; ".join(problems))
    return KnowledgeBase(
        room_types=tuple(data["room_types"]),
        default_feature_order=tuple(data["default_feature_order"]),
        object_room_scores={k: dict(v) for k, v in data["object_room_scores"].items()},
        room_priors={k: dict(v) for k, v in data["room_priors"].items()},
        carrier_priors={k: dict(v) for k, v in data["carrier_priors"].items()},
        carrier_features={k: {t: list(o) for t, o in v.items()} for k, v in data["carrier_features"].items()},
    )


@lru_cache(maxsize=None)
def default_kb() -> KnowledgeBase:
    text = (resources.files("godhs") / "data" / "kb.json").read_text()
    return kb_from_dict(json.loads(text))


def load_kb(path=None) -> KnowledgeBase:
    if path is None:
        return default_kb()
    return kb_from_dict(json.loads(Path(path).read_text()))
