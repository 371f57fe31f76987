"""Semi-hard negative retrieval from cluster centroids.

The server scores the whole item pool against a client's cluster
centroid, keeps the hardest R percent, and samples T of those uniformly
without replacement.  Randomizing within the hard subset keeps the
negatives informative while making it unlikely that any one client's
true interests are singled out; taking the globally hardest items
instead (an ablation mode) tends to saturate on false negatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SamplerConfig:
    """Hard-subset ratio R (percent) and per-client sample count T."""

    hard_ratio_percent: float = 25.0
    num_semi_hard: int = 20

    def __post_init__(self):
        if not 0 < self.hard_ratio_percent <= 100:
            raise ValueError(
                f"hard_ratio_percent must be in (0, 100], got {self.hard_ratio_percent}"
            )
        if self.num_semi_hard < 1:
            raise ValueError(f"num_semi_hard must be >= 1, got {self.num_semi_hard}")


@dataclass(frozen=True)
class NegativeAssignment:
    """The T server-chosen negative item ids for one client."""

    client_id: int
    item_ids: np.ndarray


def difficulty_rank(centroid: np.ndarray, item_table: np.ndarray) -> np.ndarray:
    """All item indices, hardest first.

    Difficulty is the raw dot product with the centroid, matching the
    scores used by the training loss.  Ties go to the lower item index.
    Brute force over the full pool.
    """
    centroid = np.asarray(centroid, dtype=float)
    item_table = np.asarray(item_table, dtype=float)
    if item_table.ndim != 2 or item_table.shape[0] == 0:
        raise ValueError("item table must be a non-empty (num_items, d) matrix")
    if item_table.shape[1] != centroid.shape[0]:
        raise ValueError(
            f"dimension mismatch: centroid d={centroid.shape[0]}, "
            f"items d={item_table.shape[1]}"
        )
    scores = item_table @ centroid
    # Stable sort on negated scores: descending score, ascending index on ties.
    return np.argsort(-scores, kind="stable")


def hard_subset_size(pool_size: int, hard_ratio_percent: float) -> int:
    """ceil(R% of the pool); never empty for R > 0."""
    return math.ceil(hard_ratio_percent * pool_size / 100.0)


def semi_hard_sample(
    ranked: np.ndarray,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    client_id: int = 0,
) -> NegativeAssignment:
    """T distinct ids drawn uniformly from the hardest R% of `ranked`.

    Each client passes its own generator stream, so clients sharing a
    centroid still sample independently.
    """
    ranked = np.asarray(ranked)
    subset = ranked[: hard_subset_size(len(ranked), cfg.hard_ratio_percent)]
    if len(subset) < cfg.num_semi_hard:
        raise ValueError(
            f"hard subset has {len(subset)} items but {cfg.num_semi_hard} "
            f"samples were requested"
        )
    ids = rng.choice(subset, size=cfg.num_semi_hard, replace=False)
    return NegativeAssignment(client_id=client_id, item_ids=ids)


def hardest_sample(
    ranked: np.ndarray, cfg: SamplerConfig, client_id: int = 0
) -> NegativeAssignment:
    """The deterministic top-T: the globally-hardest ablation mode."""
    ranked = np.asarray(ranked)
    if len(ranked) < cfg.num_semi_hard:
        raise ValueError(
            f"pool has {len(ranked)} items but {cfg.num_semi_hard} "
            f"samples were requested"
        )
    return NegativeAssignment(client_id=client_id, item_ids=ranked[: cfg.num_semi_hard].copy())


def random_sample(
    num_items: int,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    client_id: int = 0,
) -> NegativeAssignment:
    """T distinct ids uniform over the whole pool (baseline mode)."""
    if num_items < cfg.num_semi_hard:
        raise ValueError(
            f"pool has {num_items} items but {cfg.num_semi_hard} "
            f"samples were requested"
        )
    ids = rng.choice(num_items, size=cfg.num_semi_hard, replace=False)
    return NegativeAssignment(client_id=client_id, item_ids=ids)
