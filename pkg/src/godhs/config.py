"""Run configuration: one TOML file with robot, camera, planner, time-model and semantics sections."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from godhs.kinematics import IKParams
from godhs.planner import CameraModel, PlannerConfig, RobotModel
from godhs.search import SearchSetup, TimeModel
from godhs.semantics.llm import EndpointConfig

SECTIONS = ("robot", "camera", "planner", "time-model", "semantics")
_DEGREES = {"camera": ("fov_h", "fov_v"), "planner": ("angular_step", "ch_angular_step", "oblique_pitch")}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SemanticsConfig:
    kb: str = ""
    retry_budget: int = 2
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)


@dataclass(frozen=True)
class Config:
    setup: SearchSetup = field(default_factory=SearchSetup)
    time: TimeModel = field(default_factory=TimeModel)
    semantics: SemanticsConfig = field(default_factory=SemanticsConfig)


def default_config_text() -> str:
    return resources.files("godhs").joinpath("data/default_config.toml").read_text()


def _merge(base: dict, over: dict, where: str) -> dict:
    out = dict(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown key {where}{k}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{where}{k} must be a table")
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


def _build(d: dict, kind, where: str):
    try:
        return kind(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}] {exc}") from exc


def config_from_dict(data: dict) -> Config:
    """Overlay ``data`` on the shipped defaults and build typed config objects."""
    merged = _merge(tomllib.loads(default_config_text()), data, "")
    for sec, keys in _DEGREES.items():
        for k in keys:
            merged[sec][k] = math.radians(float(merged[sec][k]))
    rb = dict(merged["robot"])
    rb["mount"] = tuple(float(v) for v in rb["mount"])
    if len(rb["mount"]) != 3:
        raise ConfigError("[robot] mount needs three coordinates")
    pl = dict(merged["planner"])
    pl["ik"] = _build(pl["ik"], IKParams, "planner.ik")
    setup = SearchSetup(
        robot=_build(rb, RobotModel, "robot"),
        camera=_build(merged["camera"], CameraModel, "camera"),
        planner=_build(pl, PlannerConfig, "planner"),
    )
    sem = dict(merged["semantics"])
    endpoint = _build(
        {"url": sem.pop("endpoint"), "model": sem.pop("model"), "timeout": sem.pop("timeout"),
         "temperature": sem.pop("temperature")},
        EndpointConfig, "semantics",
    )
    if int(sem["retry_budget"]) < 0:
        raise ConfigError("[semantics] retry_budget must be >= 0")
    return Config(setup, _build(merged["time-model"], TimeModel, "time-model"),
                  SemanticsConfig(str(sem["kb"]), int(sem["retry_budget"]), endpoint))


def load_config(path=None) -> Config:
    """Defaults, optionally overridden by the TOML file at ``path``."""
    if path is None:
        return config_from_dict({})
    try:
        data = tomllib.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}") from exc
    return config_from_dict(data)
