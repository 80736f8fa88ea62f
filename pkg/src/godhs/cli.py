"""``godhs`` command line: search, bench, plan, report, validate.

Exit status is 0 on success, 1 when a command ran but failed (the first
stderr word names the failure category) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from godhs import bench
from godhs.config import ConfigError, load_config
from godhs.generate import GenerationConfig, generate_scene
from godhs.geometry import FEATURES
from godhs.metrics import DEFAULT_WEIGHTS, MetricsError, check_weights, compute_osr, compute_rates
from godhs.planner import plan_feature
from godhs.scene import SceneError, load_scene, validate_scene
from godhs.search import SORTING_MODES, STRATEGIES, SearchError, StrategyConfig, run_strategy
from godhs.semantics.kb import KnowledgeBaseError, load_kb
from godhs.semantics.llm import EndpointConfig, LLMClient, ReplayClient, Transcript, TransportError
from godhs.semantics.ranker import LLMRanker, MockRanker


class CommandError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _weights(text: str) -> tuple:
    try:
        return check_weights(float(v) for v in text.split(","))
    except (ValueError, MetricsError) as exc:
        raise argparse.ArgumentTypeError(f"bad weights {text!r}: {exc}") from exc


def _noise(text: str) -> float:
    v = float(text)
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError("noise must lie in [0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="godhs", description="Hierarchical object search simulator and benchmarks.")
    p.add_argument("--config", help="TOML file overriding the default configuration")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seeded: bool = True):
        sp.add_argument("--target", default="orange")
        if seeded:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--weights", type=_weights, default=DEFAULT_WEIGHTS, help="w1,w2,w3 summing to 1")
        sp.add_argument("--noise", type=_noise, default=0.0, help="probability a visible target is missed")
        sp.add_argument("--out", help="output file (search, plan) or directory (bench)")
        sp.add_argument("--ranker", choices=("mock", "llm"), default="mock")
        sp.add_argument("--endpoint", help="chat-completions URL for --ranker llm")
        sp.add_argument("--model", help="model name for --ranker llm")
        sp.add_argument("--transcript", help="append LLM exchanges to this JSONL file")
        sp.add_argument("--replay", help="answer LLM prompts from a recorded transcript")

    s = sub.add_parser("search", help="run one trial and print its summary")
    s.add_argument("--scene", default="flat", help="scene file, bundled fixture name, or gen:SEED")
    s.add_argument("--strategy", choices=STRATEGIES, default="godhs")
    s.add_argument("--sorting", choices=SORTING_MODES, default="both")
    common(s)

    b = sub.add_parser("bench", help="run a benchmark suite and write its report")
    b.add_argument("--suite", choices=tuple(bench.SUITES), default="strategies")
    common(b, seeded=False)  # suites carry their own seeds

    pl = sub.add_parser("plan", help="plan the camera and chassis poses for one carrier feature")
    pl.add_argument("--scene", default="flat")
    pl.add_argument("--carrier", required=True)
    pl.add_argument("--feature", choices=FEATURES, required=True)
    pl.add_argument("--out")

    r = sub.add_parser("report", help="recompute aggregates from a saved report or rows CSV")
    r.add_argument("path")
    r.add_argument("--kind", choices=("strategies", "ablation"), help="suite kind, needed for CSV input")

    v = sub.add_parser("validate", help="check a scene file")
    v.add_argument("scene")
    return p


def resolve_scene(name: str):
    if name.startswith("gen:"):
        try:
            seed = int(name[4:])
        except ValueError:
            raise CommandError("usage", f"bad generated-scene seed in {name!r}") from None
        return generate_scene(GenerationConfig(), seed)
    return load_scene(name)


def make_ranker(args, cfg):
    kb = load_kb(cfg.semantics.kb or None)
    if args.ranker == "mock":
        return MockRanker(kb)
    if args.replay:
        client = ReplayClient.from_file(args.replay)
    else:
        ep = cfg.semantics.endpoint
        client = LLMClient(EndpointConfig(args.endpoint or ep.url, args.model or ep.model, ep.timeout, ep.temperature))
    transcript = Transcript(args.transcript) if args.transcript else None
    return LLMRanker(client, kb, cfg.semantics.retry_budget, transcript)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_search(args, cfg) -> int:
    scene = resolve_scene(args.scene)
    ranker = make_ranker(args, cfg) if args.strategy == "godhs" else None
    sc = StrategyConfig(args.strategy, seed=args.seed, sorting=args.sorting, noise=args.noise, time=cfg.time)
    trace = run_strategy(scene, args.target, sc, cfg.setup, ranker)
    if args.out:
        trace.write(args.out)
    rates = compute_rates(trace, scene)
    summary = trace.summary()
    summary["rates"] = {"room": rates.room, "carrier": rates.carrier, "item": rates.item}
    summary["osr"] = compute_osr(rates, args.weights)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_bench(args, cfg) -> int:
    suite = bench.suite_by_name(args.suite)
    if args.noise != suite.noise or args.target != suite.target:
        suite = replace(suite, noise=args.noise, target=args.target)
    ranker = make_ranker(args, cfg) if args.ranker != "mock" else None

    def progress(row):
        tag = row["sorting"] if suite.kind == "ablation" else row["strategy"]
        print(f"{row['scene']:>6} {tag:<9} {row['carrier'] or row['seed']}", file=sys.stderr, flush=True)

    report = bench.run_benchmark(suite, cfg.setup, cfg.time, args.weights, ranker, progress)
    out = args.out or "."
    jpath, cpath = report.write(out)
    print(json.dumps({"report": str(jpath), "rows": str(cpath), "aggregates": report.aggregates}, indent=2))
    return 0


def cmd_plan(args, cfg) -> int:
    scene = resolve_scene(args.scene)
    try:
        carrier = scene.carrier_by_id[args.carrier]
    except KeyError:
        raise CommandError("usage", f"no carrier {args.carrier!r} in scene {scene.name!r}") from None
    plan = plan_feature(scene, carrier, args.feature, cfg.setup.robot, cfg.setup.camera, cfg.setup.planner)
    _emit(json.dumps(plan.to_dict(), indent=2) + "\n", args.out)
    return 0


def cmd_report(args, cfg) -> int:
    path = Path(args.path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CommandError("io-error", str(exc)) from exc
    if path.suffix == ".csv":
        if not args.kind:
            raise CommandError("usage", "--kind is required for CSV input")
        rows, stored = bench.rows_from_csv(text), None
        kind = args.kind
    else:
        data = json.loads(text)
        rows, stored, kind = data["rows"], data["aggregates"], data["header"]["suite"]["kind"]
    agg = bench.aggregate_rows(rows, kind)
    print(json.dumps(agg, indent=2))
    if stored is not None and stored != agg:
        raise CommandError("report-mismatch", "stored aggregates differ from the rows")
    return 0


def cmd_validate(args, cfg) -> int:
    scene = load_scene(args.scene, validate=False)
    problems = validate_scene(scene)
    if problems:
        for line in problems:
            print(line)
        raise CommandError("scene-invalid", f"{len(problems)} problem(s) in {args.scene}")
    print(f"ok: {scene.name} ({len(scene.rooms)} rooms, {len(scene.carriers)} carriers)")
    return 0


COMMANDS = {"search": cmd_search, "bench": cmd_bench, "plan": cmd_plan, "report": cmd_report, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except CommandError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return 2 if exc.category == "usage" else 1
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
    except SceneError as exc:
        print(f"scene-error: {exc}", file=sys.stderr)
    except KnowledgeBaseError as exc:
        print(f"kb-error: {exc}", file=sys.stderr)
    except TransportError as exc:
        print(f"transport-error: {exc}", file=sys.stderr)
    except (SearchError, MetricsError, bench.BenchError) as exc:
        print(f"run-error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
