"""Benchmark suites: strategy comparison and the sorting ablation.

A report is a list of per-trial rows plus aggregates that are always
recomputed from those rows, so a saved CSV can be checked independently
(see :func:`aggregate_rows`).
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from godhs.generate import GenerationConfig, build_flat, build_minimal, generate_scene
from godhs.metrics import (
    CLUSTER_SIZE,
    DEFAULT_WEIGHTS,
    check_weights,
    compute_osr,
    compute_rates,
    path_stats,
    searchable_features,
)
from godhs.search import (
    SORTING_MODES,
    STRATEGIES,
    SearchSetup,
    StrategyConfig,
    TimeModel,
    feature_view,
    run_instance,
    run_strategy,
)

REPORT_VERSION = 1
FAILURE_CATEGORIES = ("hardware-reach", "common-sense-miss", "semantic-ambiguity")

COLUMNS = (
    "suite", "scene", "strategy", "ranker", "seed", "sorting", "carrier", "feature", "target", "found",
    "room_rate", "carrier_rate", "item_rate", "osr", "ee_ratio", "ch_ratio", "time_ratio",
    "time", "chassis_length", "ee_length", "ee_poses", "opens", "failure", "error",
)
_NUMERIC = (
    "room_rate", "carrier_rate", "item_rate", "osr", "ee_ratio", "ch_ratio", "time_ratio",
    "time", "chassis_length", "ee_length",
)
_INTEGER = ("seed", "ee_poses", "opens")
_SUMMARISED = ("room_rate", "carrier_rate", "item_rate", "osr", "ee_ratio", "ch_ratio", "time_ratio", "time")


class BenchError(ValueError):
    pass


@dataclass(frozen=True)
class SuiteConfig:
    """What to run. ``kind`` is "strategies" (search trials) or "ablation" (paired feature visits)."""

    name: str
    kind: str = "strategies"
    scenes: tuple = tuple(range(1, 21))  # generated-scene seeds, or fixture names
    seeds: tuple = (1, 2, 3)
    strategies: tuple = STRATEGIES
    sortings: tuple = SORTING_MODES
    target: str = "orange"
    noise: float = 0.0
    min_instances: int = 60
    generation: GenerationConfig = field(default_factory=GenerationConfig)

    def __post_init__(self):
        if self.kind not in ("strategies", "ablation"):
            raise BenchError(f"unknown suite kind {self.kind!r}")
        if self.kind == "ablation" and "none" not in self.sortings:
            raise BenchError("the ablation needs the unsorted configuration as its time reference")

    def snapshot(self) -> dict:
        gen = asdict(replace(self.generation, kb=None))
        gen.pop("kb")
        return {
            "name": self.name, "kind": self.kind, "scenes": list(self.scenes), "seeds": list(self.seeds),
            "strategies": list(self.strategies), "sortings": list(self.sortings), "target": self.target,
            "noise": self.noise, "min_instances": self.min_instances, "generation": gen,
        }


SUITES = {
    "strategies": SuiteConfig("strategies"),
    "ablation": SuiteConfig("ablation", kind="ablation"),
    "flat": SuiteConfig("flat", scenes=("flat",)),
    "smoke": SuiteConfig("smoke", scenes=(1, 2), seeds=(1,)),
    "smoke-ablation": SuiteConfig("smoke-ablation", kind="ablation", scenes=(1,), min_instances=8),
}


def suite_by_name(name: str) -> SuiteConfig:
    try:
        return SUITES[name]
    except KeyError:
        raise BenchError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None


def suite_scene(suite: SuiteConfig, key):
    if key == "flat":
        return build_flat()
    if key == "minimal":
        return build_minimal()
    return generate_scene(suite.generation, int(key))


# ------------------------------------------------------------------ failure tags


def failure_category(trace, scene, target: str) -> str:
    """Why a trial missed, judged from the trace alone ("" when found).

    semantic-ambiguity: the target's room was typed wrongly during mapping.
    hardware-reach: the target's feature was visited but could not be seen.
    common-sense-miss: the ranking never led to the target's feature.
    """
    if trace.found:
        return ""
    items = scene.items_labeled(target)
    if not items:
        return "no-target"
    inferred = {e["room"]: e["inferred"] for e in trace.of_type("room-type-inferred")}
    homes = {scene.room_of[it.carrier] for it in items}
    if all(inferred.get(r) not in (None, scene.room_by_id[r].true_type) for r in homes):
        return "semantic-ambiguity"
    spots = {(it.carrier, it.feature) for it in items}
    visited = {(e["carrier"], e["feature"]) for e in trace.events if e["type"] in ("feature-inspected", "feature-skipped")}
    if spots & visited:
        return "hardware-reach"
    return "common-sense-miss"


# ------------------------------------------------------------------ rows


def _row(suite: SuiteConfig, scene_key, **values) -> dict:
    row = {c: "" for c in COLUMNS}
    row.update(suite=suite.name, scene=str(scene_key), target=suite.target)
    row.update(values)
    return row


def _trace_values(trace) -> dict:
    return {
        "found": bool(trace.found), "time": trace.time, "chassis_length": trace.chassis_length,
        "ee_length": trace.ee_length, "ee_poses": trace.ee_poses, "opens": trace.opens,
    }


def _strategy_rows(suite, setup, time_model, weights, ranker, progress) -> list:
    rows = []
    for key in suite.scenes:
        scene = suite_scene(suite, key)
        for strategy in suite.strategies:
            for seed in suite.seeds:
                cfg = StrategyConfig(strategy, seed=seed, noise=suite.noise, time=time_model)
                rname = (getattr(ranker, "name", "custom") if ranker is not None else "mock") if strategy == "godhs" else ""
                base = dict(strategy=strategy, seed=seed, sorting=cfg.sorting, ranker=rname)
                try:
                    trace = run_strategy(scene, suite.target, cfg, setup, ranker)
                    rates = compute_rates(trace, scene, CLUSTER_SIZE)
                    stats = path_stats(trace)
                    row = _row(
                        suite, key, **base, **_trace_values(trace),
                        room_rate=rates.room, carrier_rate=rates.carrier, item_rate=rates.item,
                        osr=compute_osr(rates, weights), ee_ratio=stats.ee_ratio, ch_ratio=stats.ch_ratio,
                        failure=failure_category(trace, scene, suite.target),
                    )
                except Exception as exc:  # a crashed trial is a row, not a crashed suite
                    row = _row(suite, key, **base, found=False, failure="error", error=f"{type(exc).__name__}: {exc}")
                rows.append(row)
                if progress:
                    progress(row)
    return rows


def ablation_instances(suite: SuiteConfig, setup: SearchSetup) -> list:
    """The first ``min_instances`` (scene, carrier, feature) triples with a non-empty pose plan."""
    out = []
    for key in suite.scenes:
        scene = suite_scene(suite, key)
        for carrier in scene.carriers:
            for feature in searchable_features(carrier):
                if not feature_view(scene, carrier, feature, setup).plan.empty:
                    out.append((key, scene, carrier.id, feature))
                    if len(out) >= suite.min_instances:
                        return out
    return out


def _ablation_rows(suite, setup, time_model, progress) -> list:
    rows = []
    for key, scene, cid, feature in ablation_instances(suite, setup):
        traces = {m: run_instance(scene, cid, feature, m, setup, time_model) for m in suite.sortings}
        ref = traces["none"]
        for m in suite.sortings:
            tr = traces[m]
            st = path_stats(tr, ref)
            row = _row(
                suite, key, strategy="instance", sorting=m, carrier=cid, feature=feature, **_trace_values(tr),
                ee_ratio=st.ee_ratio, ch_ratio=st.ch_ratio, time_ratio=st.time_ratio,
            )
            row["found"] = ""
            rows.append(row)
            if progress:
                progress(row)
    return rows


# ------------------------------------------------------------------ aggregates


def _group_key(row: dict, kind: str) -> str:
    return row["sorting"] if kind == "ablation" else row["strategy"]


def _summary(values: list) -> dict:
    vals = [v for v in values if v != "" and v is not None and math.isfinite(v)]
    if not vals:
        return {"n": 0, "mean": None, "median": None}
    return {"n": len(vals), "mean": statistics.fmean(vals), "median": statistics.median(vals)}


def aggregate_rows(rows: list, kind: str) -> dict:
    """Per-strategy (or per-sorting) means and medians, in first-seen group order."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(_group_key(row, kind), []).append(row)
    out = {}
    for name, rs in groups.items():
        agg = {"rows": len(rs), "errors": sum(1 for r in rs if r["error"])}
        if kind != "ablation":
            agg["found"] = sum(1 for r in rs if r["found"] is True)
            agg["failures"] = {c: sum(1 for r in rs if r["failure"] == c) for c in FAILURE_CATEGORIES}
        for col in _SUMMARISED:
            agg[col] = _summary([r[col] for r in rs if not r["error"]])
        out[name] = agg
    return out


# ------------------------------------------------------------------ report


@dataclass
class BenchReport:
    header: dict
    rows: list
    aggregates: dict

    def to_json(self) -> str:
        return json.dumps({"header": self.header, "rows": self.rows, "aggregates": self.aggregates}, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _csv_cell(row[k]) for k in COLUMNS})
        return buf.getvalue()

    def write(self, out_dir) -> tuple:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = self.header["suite"]["name"]
        jpath, cpath = out / f"{name}-report.json", out / f"{name}-rows.csv"
        jpath.write_text(self.to_json())
        cpath.write_text(self.to_csv())
        return jpath, cpath

    def mean(self, group: str, column: str) -> float | None:
        return self.aggregates[group][column]["mean"]


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_from_csv(text: str) -> list:
    """Rows as written by :meth:`BenchReport.to_csv`, with types restored."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise BenchError("CSV columns do not match the report layout")
    rows = []
    for raw in reader:
        row = dict(raw)
        for c in _NUMERIC:
            row[c] = float(row[c]) if row[c] != "" else ""
        for c in _INTEGER:
            row[c] = int(row[c]) if row[c] != "" else ""
        row["found"] = {"true": True, "false": False}.get(row["found"], "")
        rows.append(row)
    return rows


def load_report(path) -> BenchReport:
    data = json.loads(Path(path).read_text())
    return BenchReport(data["header"], data["rows"], data["aggregates"])


def verify_aggregates(report: BenchReport) -> bool:
    return aggregate_rows(report.rows, report.header["suite"]["kind"]) == report.aggregates


def run_benchmark(suite: SuiteConfig, setup: SearchSetup | None = None, time_model: TimeModel | None = None,
                  weights=DEFAULT_WEIGHTS, ranker=None, progress=None) -> BenchReport:
    """Run every trial of ``suite`` in a fixed order and aggregate the rows."""
    setup = setup or SearchSetup()
    time_model = time_model or TimeModel()
    weights = check_weights(weights)
    if suite.kind == "ablation":
        rows = _ablation_rows(suite, setup, time_model, progress)
    else:
        rows = _strategy_rows(suite, setup, time_model, weights, ranker, progress)
    header = {
        "version": REPORT_VERSION,
        "suite": suite.snapshot(),
        "weights": list(weights),
        "time_model": asdict(time_model),
        "planner": {k: v for k, v in asdict(setup.planner).items() if k != "ik"},
        "ik": asdict(setup.planner.ik),
        "camera": asdict(setup.camera),
        "robot": {"mount": list(setup.robot.mount), "reach": [setup.robot.reach_min, setup.robot.reach_max],
                  "chassis_radius": setup.robot.chassis_radius},
        "definitions": {
            "room_rate": "percent of rooms entered in the search phase",
            "carrier_rate": "percent of carriers whose inspection began",
            "item_rate": f"percent of placements ({CLUSTER_SIZE} m feature-point bins) checked",
            "time_ratio": "trial time over the same visit executed unsorted",
        },
    }
    return BenchReport(header, rows, aggregate_rows(rows, suite.kind))
