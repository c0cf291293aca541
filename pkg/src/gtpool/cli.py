"""Command-line interface: train/evaluate, sampler demo, profiling, benchmarks.

Exit codes: 0 success, 1 configuration error (bad flag/key/value, missing
dataset), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench import bench_scale, profile_iterations
from .datasets import FormatError, build_features, parse_tudataset, write_tudataset
from .sampling import (
    METHODS,
    SampleSpec,
    ScoreDistribution,
    rws_intervals,
    rwsv_intervals,
    sample_points,
    select,
)
from .synth import mutag_like
from .training import ConfigError, RunConfig, cross_validate, sweep, sweep_rows

ENV_DATA_ROOT = "GTPOOL_DATA_ROOT"


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--dataset", help="dataset name under the data root")
    p.add_argument("--data-root", dest="data_root", help=f"dataset root (default ${ENV_DATA_ROOT} or ./data)")
    p.add_argument("--sampler", choices=list(METHODS))
    p.add_argument("--mu", type=float, help="pooling ratio in (0, 1]")
    p.add_argument("--lambda", dest="lam", type=float, help="global/local score weight in [0, 1]")
    p.add_argument("--layers", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--wd", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="directory for run outputs")


def build_parser() -> _Parser:
    parser = _Parser(prog="gtpool", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="k-fold cross-validation training")
    _add_run_flags(p_train)
    p_train.add_argument("--sweep", choices=("mu", "lam", "layers", "sampler"), help="sweep one axis instead of a single run")
    p_train.add_argument("--sweep-values", dest="sweep_values", help="comma-separated values for --sweep")

    p_prof = sub.add_parser("profile", help="forward/backward time per training iteration")
    _add_run_flags(p_prof)
    p_prof.add_argument("--iterations", type=int, default=100)
    p_prof.add_argument("--warmup", type=int, default=10)
    p_prof.add_argument("--forward-only", action="store_true", help="(rejected) profiling requires gradients")

    p_bench = sub.add_parser("bench-scale", help="runtime on random graphs of growing size")
    p_bench.add_argument("--nodes", default="500,1000,1200", help="comma-separated node counts")
    p_bench.add_argument("--densities", default="20,40,60,80", help="edge densities (percent or fraction)")
    p_bench.add_argument("--seed", type=int, default=0)

    p_demo = sub.add_parser("sample-demo", help="print the wheel, intervals, and selections for a score vector")
    p_demo.add_argument("--scores", required=True, help="comma-separated positive scores")
    p_demo.add_argument("--mu", type=float, default=0.5)
    p_demo.add_argument("--method", choices=list(METHODS) + ["all"], default="all")

    p_synth = sub.add_parser("synth", help="write the bundled synthetic benchmark in TUDataset format")
    p_synth.add_argument("--dataset", default="MUTAG")
    p_synth.add_argument("--data-root", dest="data_root")
    p_synth.add_argument("--seed", type=int, default=0)

    return parser


# -- config assembly ---------------------------------------------------------


def load_config_file(path) -> dict:
    """Parse a flat key=value file; keys must be RunConfig field names."""
    valid = RunConfig.field_names()
    values: dict = {}
    text = Path(path).read_text()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "lambda":  # config alias for the lam field, matching the flag
            key = "lam"
        if key not in valid:
            raise ConfigError(
                f"{path}:{line_no}: unknown key {key!r}; valid keys: {', '.join(valid)}"
            )
        values[key] = raw
    return values


def _coerce(key: str, raw, target_type) -> object:
    if not isinstance(raw, str):
        return raw
    try:
        if target_type is bool:
            return raw.lower() in ("1", "true", "yes")
        return target_type(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def assemble_config(args: argparse.Namespace) -> RunConfig:
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    merged: dict = {}
    if getattr(args, "config", None):
        for key, raw in load_config_file(args.config).items():
            ftype = type(getattr(RunConfig(), key)) if fields[key].type else str
            merged[key] = _coerce(key, raw, ftype if ftype is not type(None) else str)
    for key in fields:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    config = RunConfig(**merged)
    config.validate()
    return config


def resolve_data_root(config_root: str | None) -> Path:
    return Path(config_root or os.environ.get(ENV_DATA_ROOT) or "data")


def _load_dataset(config: RunConfig):
    root = resolve_data_root(config.data_root)
    ds_dir = root / config.dataset
    if not ds_dir.is_dir():
        raise ConfigError(
            f"dataset directory not found: {ds_dir} "
            f"(set --data-root or ${ENV_DATA_ROOT}, or run 'gtpool synth')"
        )
    return build_features(parse_tudataset(ds_dir))


def _make_run_dir(base: str, tag: str) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    candidate = Path(base) / f"{tag}-{stamp}"
    suffix = 0
    while candidate.exists():  # run directories are append-only
        suffix += 1
        candidate = Path(base) / f"{tag}-{stamp}-{suffix}"
    candidate.mkdir(parents=True)
    return candidate


# -- subcommands ----------------------------------------------------------------


def cmd_train(args) -> int:
    config = assemble_config(args)
    dataset = _load_dataset(config)
    run_dir = _make_run_dir(config.out, config.dataset.lower())

    if args.sweep:
        if not args.sweep_values:
            raise ConfigError("--sweep requires --sweep-values")
        caster = str if args.sweep == "sampler" else (int if args.sweep == "layers" else float)
        values = [caster(v) for v in args.sweep_values.split(",")]
        reports = sweep(config, dataset, args.sweep, values)
        rows = sweep_rows(args.sweep, values, reports)
        (run_dir / "sweep.json").write_text(json.dumps(rows, indent=2))
        for value, report in zip(values, reports):
            (run_dir / f"report-{args.sweep}-{value}.json").write_text(report.to_json())
            print(f"{args.sweep}={value}: {_fmt_acc(report)}")
        print(f"wrote {run_dir}/sweep.json")
        return 0

    report = cross_validate(config, dataset, checkpoint_dir=run_dir)
    (run_dir / "report.json").write_text(report.to_json())
    (run_dir / "curves.csv").write_text(report.curves_csv())
    (run_dir / "config.txt").write_text(
        "".join(f"{k} = {v}\n" for k, v in config.to_dict().items())
    )
    print(f"{config.dataset}: {_fmt_acc(report)}")
    print(f"wrote {run_dir}/report.json")
    return 0


def _fmt_acc(report) -> str:
    if report.mean_accuracy is None:
        return "no successful folds"
    return (
        f"accuracy {100 * report.mean_accuracy:.2f} ± {100 * report.std_accuracy:.2f} "
        f"({len(report.accuracies)} folds)"
    )


def cmd_profile(args) -> int:
    if args.forward_only:
        raise ConfigError(
            "profiling with gradients disabled would report a backward time of 0; "
            "remove --forward-only"
        )
    config = assemble_config(args)
    dataset = _load_dataset(config)
    report = profile_iterations(
        config, dataset, iterations=args.iterations, warmup=args.warmup
    )
    print(f"parameters: {report.param_count}")
    print(f"iterations: {report.iterations} (after {report.warmup} warm-up), batch {report.batch}")
    print(f"forward  : {report.forward_ms_mean:8.2f} ± {report.forward_ms_std:.2f} ms")
    print(f"backward : {report.backward_ms_mean:8.2f} ± {report.backward_ms_std:.2f} ms")
    return 0


def cmd_bench_scale(args) -> int:
    nodes = [int(v) for v in str(args.nodes).split(",")]
    densities = []
    for v in str(args.densities).split(","):
        d = float(v)
        densities.append(d / 100.0 if d > 1.0 else d)
    cells = bench_scale(nodes, densities, seed=args.seed)
    print(f"{'nodes':>8} {'density':>8} {'time (ms)':>12}")
    for cell in cells:
        ms = cell["milliseconds"]
        shown = ms if isinstance(ms, str) else f"{ms:.2f}"
        print(f"{cell['nodes']:>8} {cell['density']:>8.0%} {shown:>12}")
    return 0


def cmd_sample_demo(args) -> int:
    try:
        raw = np.array([float(v) for v in args.scores.split(",")])
        dist = ScoreDistribution.from_scores(raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    points = sample_points(dist.n, args.mu)
    print("pmf :", _vec(dist.s))
    print("cdf :", _vec(dist.cdf))
    print(f"sample points (M={len(points)}):", _vec(points))
    methods = list(METHODS) if args.method == "all" else [args.method]
    for method in methods:
        if method != "topk":
            half_open = method == "rws"
            intervals = rws_intervals(dist) if half_open else rwsv_intervals(dist)
            left = "(" if half_open else "["
            pretty = ", ".join(
                f"{i}:{left}{lo:.4f}, {hi:.4f}]" for i, (lo, hi) in enumerate(intervals)
            )
            print(f"{method} intervals: {pretty}")
        chosen = select(dist, SampleSpec(mu=args.mu, method=method))
        print(f"{method} selects: {chosen}")
    return 0


def _vec(values) -> str:
    return "[" + ", ".join(f"{v:.4f}" for v in values) + "]"


def cmd_synth(args) -> int:
    root = resolve_data_root(args.data_root)
    dataset = mutag_like(seed=args.seed, name=args.dataset)
    target = root / dataset.name
    write_tudataset(dataset, target)
    sizes = [g.n for g in dataset.graphs]
    print(
        f"wrote {len(dataset.graphs)} graphs ({dataset.num_classes} classes, "
        f"avg {np.mean(sizes):.2f} nodes) to {target}"
    )
    return 0


_COMMANDS = {
    "train": cmd_train,
    "profile": cmd_profile,
    "bench-scale": cmd_bench_scale,
    "sample-demo": cmd_sample_demo,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ConfigError, FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 -- runtime failures map to exit 2
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
