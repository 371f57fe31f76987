"""Experiment orchestration: repeated seeded runs, summaries, sweeps.

A training experiment repeats `run_training` over several seeds
(base seed + run index), writes one directory per seed with the
metrics/timing logs and the best checkpoint, and aggregates a
mean/std summary of the final test metrics.  A sweep repeats that
per value of one config key and emits a CSV suitable for plotting.

Every metrics log starts with a provenance header: the fully resolved
config and a git-style content hash of the dataset.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, as_dict, get_key, set_key
from .datasets import Dataset, SplitDataset, ingest, kcore_filter, leave_one_out_split
from .evaluation import MetricReport, evaluate
from .federation import TrainingResult, run_training
from .model import save_checkpoint
from .synthetic import generate_synthetic

METRIC_KEYS = ("hr@5", "hr@10", "ndcg@5", "ndcg@10")


def build_dataset(cfg: ExperimentConfig) -> Dataset:
    """Materialize the configured data source (synthetic or ingested)."""
    if cfg.dataset.synthetic:
        syn = cfg.synthetic
        ds, _ = generate_synthetic(
            num_users=syn.users,
            num_items=syn.items,
            num_clusters=syn.clusters,
            min_len=syn.min_len,
            max_len=syn.max_len,
            zipf_exponent=syn.zipf_exponent,
            noise=syn.noise,
            explore=syn.explore,
            frontier=syn.frontier,
            frontier_rate=syn.frontier_rate,
            ordered=syn.ordered,
            seed=syn.seed,
        )
        return ds
    if not cfg.dataset.path:
        raise ValueError("dataset.path is required unless dataset.synthetic is true")
    ds = ingest(cfg.dataset.path, cfg.dataset.format)
    if cfg.dataset.kcore > 1:
        ds = kcore_filter(ds, cfg.dataset.kcore)
    return ds


def dataset_sha1(ds: Dataset) -> str:
    """Git-style blob hash of a canonical dataset serialization."""
    parts = [f"items={ds.num_items}".encode()]
    for u, seq in enumerate(ds.sequences):
        parts.append(f"u{u}:".encode() + seq.astype("<i8").tobytes())
    payload = b"\n".join(parts)
    return hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()


def provenance_header(cfg: ExperimentConfig, data_hash: str, seed: int) -> dict:
    # threads is an execution knob with no effect on results; keeping
    # it out of the header keeps metrics files byte-stable across it.
    config = as_dict(cfg)
    del config["federation"]["threads"]
    return {"config": config, "dataset_sha1": data_hash, "seed": seed}


def write_jsonl(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


@dataclass
class SeedRunResult:
    seed: int
    training: TrainingResult
    test_report: MetricReport


@dataclass
class ExperimentSummary:
    """Mean/std of the final test metrics over the seed repetitions."""

    num_seeds: int
    means: dict[str, float]
    stds: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "num_seeds": self.num_seeds,
            "mean": self.means,
            "std": self.stds,
        }


def run_seed(
    cfg: ExperimentConfig,
    split: SplitDataset,
    data_hash: str,
    seed: int,
    out_dir: str | None = None,
) -> SeedRunResult:
    """One full training + test evaluation at a specific seed."""
    run_cfg = copy.deepcopy(cfg)
    run_cfg.federation.seed = seed
    result = run_training(run_cfg, split)
    report = evaluate(result.params, run_cfg.model.kind, split, "test", run_cfg.eval.exclude_seen)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        header = provenance_header(run_cfg, data_hash, seed)
        write_jsonl(os.path.join(out_dir, "metrics.jsonl"), [header] + result.metrics)
        write_jsonl(os.path.join(out_dir, "timings.jsonl"), result.timings)
        save_checkpoint(os.path.join(out_dir, "checkpoint.bin"), result.params, run_cfg.model.kind)
        with open(os.path.join(out_dir, "test_report.json"), "w", encoding="utf-8") as fh:
            fh.write(report.as_json() + "\n")
    return SeedRunResult(seed=seed, training=result, test_report=report)


def summarize(results: list[SeedRunResult]) -> ExperimentSummary:
    per_metric = {k: [] for k in METRIC_KEYS}
    for r in results:
        d = r.test_report.as_dict()
        for k in METRIC_KEYS:
            per_metric[k].append(d[k])
    means = {k: float(np.mean(v)) for k, v in per_metric.items()}
    stds = {k: float(np.std(v)) for k, v in per_metric.items()}
    return ExperimentSummary(num_seeds=len(results), means=means, stds=stds)


def run_experiment(
    cfg: ExperimentConfig, num_seeds: int, out_dir: str | None = None
) -> tuple[ExperimentSummary, list[SeedRunResult]]:
    """Repeat training over seeds base, base+1, ... and summarize."""
    if num_seeds < 1:
        raise ValueError("need at least one seed")
    ds = build_dataset(cfg)
    split = leave_one_out_split(ds)
    data_hash = dataset_sha1(ds)
    base = cfg.federation.seed
    results = []
    for i in range(num_seeds):
        seed_dir = os.path.join(out_dir, f"seed_{base + i}") if out_dir else None
        results.append(run_seed(cfg, split, data_hash, base + i, seed_dir))
    summary = summarize(results)
    if out_dir is not None:
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary.as_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    return summary, results


def run_sweep(
    cfg: ExperimentConfig,
    key: str,
    values: list,
    num_seeds: int,
    out_dir: str | None = None,
) -> list[dict]:
    """One experiment per value of `key`; rows of value + metric mean/std."""
    get_key(cfg, key)  # validate the key (raises with the full list)
    rows = []
    for value in values:
        point_cfg = copy.deepcopy(cfg)
        set_key(point_cfg, key, value)
        point_dir = os.path.join(out_dir, f"{key.replace('.', '_')}_{value}") if out_dir else None
        summary, _ = run_experiment(point_cfg, num_seeds, point_dir)
        row: dict = {"value": get_key(point_cfg, key)}
        for metric in METRIC_KEYS:
            row[f"{metric} mean"] = summary.means[metric]
            row[f"{metric} std"] = summary.stds[metric]
        rows.append(row)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "sweep.csv"), "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return rows
