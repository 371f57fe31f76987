"""Leave-one-out ranking metrics over the whole item set.

Each user's held-out target is ranked against every item (optionally
minus the user's already-seen items), never against a sampled candidate
subset.  HR@K checks whether the target lands in the top K; nDCG@K
gives position credit 1/log2(rank+1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .datasets import SplitDataset
from .model import EncoderKind, ModelParams, encode_user


@dataclass(frozen=True)
class MetricReport:
    hr5: float
    hr10: float
    ndcg5: float
    ndcg10: float
    num_users: int

    def as_dict(self) -> dict:
        return {
            "hr@5": self.hr5,
            "hr@10": self.hr10,
            "ndcg@5": self.ndcg5,
            "ndcg@10": self.ndcg10,
            "num_users": self.num_users,
        }

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def as_table(self) -> str:
        header = f"{'HR@5':>8} {'HR@10':>8} {'nDCG@5':>8} {'nDCG@10':>8}"
        row = f"{self.hr5:>8.4f} {self.hr10:>8.4f} {self.ndcg5:>8.4f} {self.ndcg10:>8.4f}"
        return header + "\n" + row


def rank_target(
    user_emb: np.ndarray,
    item_table: np.ndarray,
    exclusions: Iterable[int],
    target: int,
) -> int:
    """1-based rank of the target among non-excluded items.

    An item tied with the target counts as ranked above it iff its
    index is smaller, so ranking is deterministic even when embeddings
    coincide.
    """
    excluded = set(int(i) for i in exclusions)
    if target in excluded:
        raise ValueError(f"target item {target} is in the exclusion set")
    scores = item_table @ user_emb
    s_t = scores[target]
    viable = np.ones(len(scores), dtype=bool)
    if excluded:
        viable[list(excluded)] = False
    viable[target] = False
    idx = np.arange(len(scores))
    above = int((viable & (scores > s_t)).sum())
    tied_before = int((viable & (scores == s_t) & (idx < target)).sum())
    return 1 + above + tied_before


def hr_at_k(rank: int, k: int) -> float:
    return 1.0 if rank <= k else 0.0


def ndcg_at_k(rank: int, k: int) -> float:
    return 1.0 / math.log2(rank + 1) if rank <= k else 0.0


def evaluate(
    params: ModelParams,
    kind: EncoderKind,
    split: SplitDataset,
    phase: str = "val",
    exclude_seen: bool = True,
) -> MetricReport:
    """Mean HR@{5,10} / nDCG@{5,10} over users.

    phase="val" targets the second-to-last item with the train prefix;
    phase="test" targets the last item, with the validation item folded
    into the prefix and exclusions.
    """
    if phase not in ("val", "test"):
        raise ValueError(f"phase must be 'val' or 'test', got {phase!r}")
    hr5 = hr10 = nd5 = nd10 = 0.0
    n = split.num_users
    for u in range(n):
        prefix = split.train[u]
        exclusions: np.ndarray = prefix
        if phase == "test":
            prefix = np.concatenate([prefix, [split.val[u]]])
            exclusions = prefix
            target = int(split.test[u])
        else:
            target = int(split.val[u])
        emb = encode_user(kind, params, u, prefix)
        # A target that reappears in the prefix must stay rankable.
        excl = (set(int(i) for i in exclusions) - {target}) if exclude_seen else ()
        rank = rank_target(emb, params.item_table, excl, target)
        hr5 += hr_at_k(rank, 5)
        hr10 += hr_at_k(rank, 10)
        nd5 += ndcg_at_k(rank, 5)
        nd10 += ndcg_at_k(rank, 10)
    return MetricReport(
        hr5=hr5 / n, hr10=hr10 / n, ndcg5=nd5 / n, ndcg10=nd10 / n, num_users=n
    )
