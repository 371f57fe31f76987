"""Command-line entry point.

Subcommands: `ingest` (raw log -> canonical dataset + stats), `stats`
(dataset summary), `train` (seeded training runs + summary), `eval`
(checkpoint evaluation), `sweep` (one config key over a value grid).

`--config FILE` loads a TOML config; flags named after dotted config
keys override individual values.  Outputs land under the directory in
$FEDCONTRAST_OUT (default ./runs), or wherever --out points.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import config as config_mod
from . import datasets, experiments
from .evaluation import evaluate
from .model import load_checkpoint

OUT_ENV = "FEDCONTRAST_OUT"


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="TOML config file")
    group = parser.add_argument_group("config overrides")
    for key in config_mod.valid_keys():
        group.add_argument(f"--{key}", dest=key, metavar="V", help=argparse.SUPPRESS)


def _resolve_config(args: argparse.Namespace) -> config_mod.ExperimentConfig:
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key in set(config_mod.valid_keys()) and value is not None
    }
    return config_mod.load_config(args.config, overrides)


def _out_root(args: argparse.Namespace) -> str:
    if getattr(args, "out", None):
        return args.out
    return os.environ.get(OUT_ENV, "runs")


def cmd_ingest(args: argparse.Namespace) -> int:
    ds = datasets.ingest(args.path, args.format)
    if args.kcore > 1:
        ds = datasets.kcore_filter(ds, args.kcore)
    out_dir = os.path.join(_out_root(args), args.name)
    os.makedirs(out_dir, exist_ok=True)
    # Canonical form: dense ids with per-user positions as timestamps,
    # itself a valid tabular input, so artifacts are byte-stable.
    with open(os.path.join(out_dir, "dataset.tsv"), "w", encoding="utf-8") as fh:
        for u, seq in enumerate(ds.sequences):
            for pos, item in enumerate(seq):
                fh.write(f"{u}\t{int(item)}\t{pos}\n")
    datasets.write_id_maps(ds, out_dir)
    report = datasets.format_stats(datasets.stats(ds))
    with open(os.path.join(out_dir, "stats.txt"), "w", encoding="utf-8") as fh:
        fh.write(report)
    print(report, end="")
    print(f"wrote {out_dir}/dataset.tsv")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    ds = datasets.ingest(args.path, args.format)
    if args.kcore > 1:
        ds = datasets.kcore_filter(ds, args.kcore)
    print(datasets.format_stats(datasets.stats(ds)), end="")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    out_dir = os.path.join(_out_root(args), args.name)
    summary, results = experiments.run_experiment(cfg, args.seeds, out_dir)
    print(json.dumps(summary.as_dict(), sort_keys=True, indent=2))
    for r in results:
        print(f"seed {r.seed}: rounds={r.training.rounds} test {r.test_report.as_json()}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    params, kind = load_checkpoint(args.checkpoint)
    ds = experiments.build_dataset(cfg)
    split = datasets.leave_one_out_split(ds)
    report = evaluate(params, kind, split, args.phase, cfg.eval.exclude_seen)
    print(report.as_json())
    print(report.as_table())
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    values = [v for v in (s.strip() for s in args.values.split(",")) if v]
    if not values:
        raise ValueError("no sweep values given")
    out_dir = os.path.join(_out_root(args), args.name)
    rows = experiments.run_sweep(cfg, args.key, values, args.seeds, out_dir)
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    print(f"wrote {out_dir}/sweep.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedcontrast",
        description="Federated contrastive recommendation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw log into canonical artifacts")
    p.add_argument("path", help="raw interaction file")
    p.add_argument("--format", choices=("tabular", "movielens"), default="tabular")
    p.add_argument("--kcore", type=int, default=1, help="k-core filter (1 = off)")
    p.add_argument("--name", default="dataset", help="output subdirectory name")
    p.add_argument("--out", help="output root (else $FEDCONTRAST_OUT or ./runs)")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("stats", help="print dataset summary statistics")
    p.add_argument("path")
    p.add_argument("--format", choices=("tabular", "movielens"), default="tabular")
    p.add_argument("--kcore", type=int, default=1)
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("train", help="run seeded federated training")
    _add_config_flags(p)
    p.add_argument("--seeds", type=int, default=1, help="number of seed repetitions")
    p.add_argument("--name", default="train")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--phase", choices=("val", "test"), default="test")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="train across values of one config key")
    _add_config_flags(p)
    p.add_argument("--key", required=True, help="dotted config key to vary")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--name", default="sweep")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        filename = exc.filename if exc.filename else exc
        print(f"error: no such file: {filename}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
