"""Planted-cluster synthetic benchmark.

Users belong to one of a few interest clusters; each cluster owns a
dedicated block of the item vocabulary.  With a frontier (the
benchmark default), the first few items of each block are its trending
set: every member samples a couple of them while working through the
catalog, and each sequence ends on two more, so the held-out items are
exactly the block's current hits that the user had not reached yet.
The rest of the block is a catalog ordered from hits down to deep
cuts, and a user works through it as a discovery funnel, entering at a
popularity-weighted rank and consuming consecutively more obscure
items, with optional detours to uniform noise and to the globally
popular head items.  The planted structure gives directional
experiments (semi-hard vs. hardest negatives, clustering on or off,
privacy budget sweeps) a known signal to recover, at a scale that
trains in minutes.
"""

from __future__ import annotations

import numpy as np

from .datasets import Dataset
from .seeds import stream


def generate_synthetic(
    num_users: int = 2000,
    num_items: int = 1000,
    num_clusters: int = 8,
    min_len: int = 10,
    max_len: int = 20,
    zipf_exponent: float = 1.0,
    noise: float = 0.1,
    explore: float = 0.0,
    frontier: int = 0,
    frontier_rate: float = 0.15,
    ordered: bool = True,
    seed: int = 0,
) -> tuple[Dataset, np.ndarray]:
    """Build a Dataset of planted-interest sequences plus true labels.

    Block layout: with frontier = f > 0 the first f items of a block
    are its trending set, the remainder its catalog.  Rank within
    either zone is popularity: rank 0 is the biggest hit.

    Each user draws a length uniform on [min_len, max_len] and walks a
    funnel through the catalog: an entry rank with Zipf weight
    1/(rank+1)^zipf_exponent, then consecutively deeper items, so later
    entries are the more obscure ones.  Along the way each position
    escapes with probability noise to a uniform unseen item, or with
    probability frontier_rate to an unseen trending item (Zipf-weighted
    within the frontier, at most f-2 such draws).  The final two
    positions are always unseen trending items, which leave-one-out
    splitting then holds out as validation and test targets.

    With explore > 0 the first position instead draws from the global
    head items (every block's most popular entries, decaying twice as
    fast as within-block taste) with that probability, fading linearly
    to zero by the last position; that models users who enter through
    cross-genre hits before settling into their niche.

    With ordered=False the funnel is replaced by independent draws from
    a per-cluster Zipf-plus-uniform mixture, giving exchangeable
    sequences whose order carries no signal (the frontier is an ordered
    concept and is ignored).
    """
    if num_clusters < 1 or num_items < num_clusters:
        raise ValueError("need at least one item per cluster")
    if not 3 <= min_len <= max_len:
        raise ValueError("need min_len >= 3 (leave-one-out) and min_len <= max_len")
    if max_len > num_items:
        raise ValueError("sequences cannot exceed the vocabulary size")
    block = num_items // num_clusters
    if not 0.0 <= explore <= 1.0:
        raise ValueError("explore must be in [0, 1]")
    if not 0.0 <= frontier_rate <= 1.0:
        raise ValueError("frontier_rate must be in [0, 1]")
    if frontier < 0 or frontier == 1:
        raise ValueError("frontier needs at least 2 items (or 0 to disable)")
    funnel_budget = max_len - 2 if ordered and frontier else max_len
    if ordered and funnel_budget > block - frontier:
        raise ValueError("block too small for the frontier plus the longest funnel")

    bounds = []
    for c in range(num_clusters):
        lo = c * block
        hi = (c + 1) * block if c < num_clusters - 1 else num_items
        bounds.append((lo, hi))

    # Per-cluster mixture used by the unordered variant.
    weights = []
    for lo, hi in bounds:
        w = np.zeros(num_items)
        w[lo:hi] = 1.0 / np.arange(1, hi - lo + 1) ** zipf_exponent
        w *= (1.0 - noise) / w.sum()
        w += noise / num_items
        weights.append(w / w.sum())

    # Global popularity used for cross-genre exploration: the same
    # head-heavy profile in every block, so no cluster owns the hits.
    head = np.zeros(num_items)
    for lo, hi in bounds:
        head[lo:hi] = 1.0 / np.arange(1, hi - lo + 1) ** (2.0 * zipf_exponent)
    head /= head.sum()

    trend_weights = 1.0 / np.arange(1.0, frontier + 1.0) ** zipf_exponent

    labels = np.empty(num_users, dtype=np.int64)
    sequences = []
    for u in range(num_users):
        rng = stream(seed, "SYNTH", u)
        c = int(rng.integers(num_clusters))
        labels[u] = c
        length = int(rng.integers(min_len, max_len + 1))
        lo, hi = bounds[c]
        seq: list[int] = []

        def draw_from(profile: np.ndarray) -> int:
            w = profile.copy()
            w[seq] = 0.0
            return int(rng.choice(num_items, p=w / w.sum()))

        if not ordered:
            for _ in range(length):
                seq.append(draw_from(weights[c]))
            sequences.append(np.array(seq, dtype=np.int64))
            continue

        def draw_trending() -> int | None:
            w = trend_weights.copy()
            w[[k for k in range(frontier) if lo + k in seq]] = 0.0
            if not w.any():
                return None
            return lo + int(rng.choice(frontier, p=w / w.sum()))

        def trending_seen() -> int:
            return sum(lo <= i < lo + frontier for i in seq)

        cat_lo = lo + frontier
        steps = length - 2 if frontier else length
        starts = np.arange(hi - cat_lo - steps + 1)
        entry = 1.0 / (starts + 1.0) ** zipf_exponent
        depth = int(rng.choice(len(starts), p=entry / entry.sum()))
        uniform = np.ones(num_items)
        for t in range(steps):
            x = explore * (1.0 - t / (length - 1))
            r = rng.random()
            if r < x:
                seq.append(draw_from(head))
                continue
            r = (r - x) / (1.0 - x)  # rescale the remaining mass
            if r < noise:
                seq.append(draw_from(uniform))
                continue
            if frontier and r < noise + (1.0 - noise) * frontier_rate:
                if trending_seen() < frontier - 2:
                    item = draw_trending()
                    if item is not None:
                        seq.append(item)
                        continue
            while cat_lo + depth in seq:  # a detour may have preempted a rank
                depth += 1
            if cat_lo + depth < hi:
                seq.append(cat_lo + depth)
                depth += 1
            else:  # ran off the block's tail; pad with noise
                seq.append(draw_from(uniform))
        for _ in range(2 if frontier else 0):
            item = draw_trending()
            # Detours can eat the trending zone; pad rather than fail.
            seq.append(item if item is not None else draw_from(uniform))
        sequences.append(np.array(seq, dtype=np.int64))

    ds = Dataset(
        sequences=sequences,
        num_items=num_items,
        user_ids=[str(u) for u in range(num_users)],
        item_ids=[str(i) for i in range(num_items)],
    )
    return ds, labels
