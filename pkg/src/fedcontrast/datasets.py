"""Interaction log ingestion, k-core filtering, and the evaluation split.

Raw logs are (user, item, timestamp) triples in either a tab/comma
separated layout or the "::"-separated movielens ratings layout (every
rating is treated as an implicit positive).  Ingestion densely
re-indexes users and items and sorts each user's sequence by timestamp,
keeping file order on ties.  The standard leave-one-out protocol holds
out each user's last item for test and second-to-last for validation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Interaction:
    user_id: str
    item_id: str
    timestamp: int


@dataclass(frozen=True)
class Dataset:
    """Per-user chronological item sequences over a dense vocabulary.

    `sequences[u]` lists dense item indices for dense user u.
    `user_ids` / `item_ids` map dense indices back to raw identifiers.
    """

    sequences: list[np.ndarray]
    num_items: int
    user_ids: list[str]
    item_ids: list[str]

    @property
    def num_users(self) -> int:
        return len(self.sequences)

    @property
    def num_actions(self) -> int:
        return int(sum(len(s) for s in self.sequences))


@dataclass(frozen=True)
class SplitDataset:
    """Leave-one-out split: train prefix, validation target, test target.

    For every user, train + [val] + [test] is exactly the original
    sequence.
    """

    train: list[np.ndarray]
    val: np.ndarray
    test: np.ndarray
    num_items: int

    @property
    def num_users(self) -> int:
        return len(self.train)


@dataclass(frozen=True)
class DatasetStats:
    num_users: int
    num_items: int
    num_actions: int
    avg_length: float
    density: float


def parse_line(line: str, fmt: str, lineno: int) -> Interaction:
    if fmt == "movielens":
        parts = line.split("::")
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected user::item::rating::timestamp")
        user, item, _, ts = parts
    elif fmt == "tabular":
        parts = line.split("\t") if "\t" in line else line.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected user, item, timestamp")
        user, item, ts = parts
    else:
        raise ValueError(f"unknown format {fmt!r}, expected 'tabular' or 'movielens'")
    try:
        timestamp = int(ts.strip())
    except ValueError:
        raise ValueError(f"line {lineno}: timestamp {ts.strip()!r} is not an integer") from None
    return Interaction(user_id=user.strip(), item_id=item.strip(), timestamp=timestamp)


def ingest(path: str | os.PathLike, fmt: str = "tabular") -> Dataset:
    """Read an interaction log into dense, chronologically sorted sequences.

    Dense ids follow first appearance in the file; per-user ordering is
    a stable sort on timestamp, so equal timestamps keep file order.
    """
    records: list[tuple[str, str, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            it = parse_line(line, fmt, lineno)
            records.append((it.user_id, it.item_id, it.timestamp))
    if not records:
        raise ValueError(f"{path}: no interactions found")

    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    per_user: dict[int, list[tuple[int, int]]] = {}
    for user, item, ts in records:
        u = user_index.setdefault(user, len(user_index))
        i = item_index.setdefault(item, len(item_index))
        per_user.setdefault(u, []).append((ts, i))

    sequences = []
    for u in range(len(user_index)):
        pairs = per_user[u]
        order = sorted(range(len(pairs)), key=lambda k: pairs[k][0])
        sequences.append(np.array([pairs[k][1] for k in order], dtype=np.int64))

    return Dataset(
        sequences=sequences,
        num_items=len(item_index),
        user_ids=list(user_index),
        item_ids=list(item_index),
    )


def write_id_maps(d: Dataset, directory: str | os.PathLike) -> None:
    """Persist the dense-id remapping as two-column text files."""
    os.makedirs(directory, exist_ok=True)
    for name, ids in (("user_map.txt", d.user_ids), ("item_map.txt", d.item_ids)):
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            for dense, raw in enumerate(ids):
                fh.write(f"{raw}\t{dense}\n")


def kcore_filter(d: Dataset, k: int) -> Dataset:
    """Drop users and items with fewer than k interactions, to fixpoint.

    Counts are interaction occurrences, so repeated items in one
    sequence count each time.  The surviving users and items keep their
    relative order and are re-indexed densely.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if d.num_users == 0 or d.num_actions == 0:
        raise ValueError("cannot filter an empty dataset")
    users = np.concatenate([np.full(len(s), u, dtype=np.int64) for u, s in enumerate(d.sequences)])
    items = np.concatenate(d.sequences)
    keep = np.ones(len(users), dtype=bool)
    while True:
        user_deg = np.bincount(users[keep], minlength=d.num_users)
        drop = keep & (user_deg[users] < k)
        keep &= ~drop
        item_deg = np.bincount(items[keep], minlength=d.num_items)
        drop_items = keep & (item_deg[items] < k)
        keep &= ~drop_items
        if not drop.any() and not drop_items.any():
            break
    if not keep.any():
        raise ValueError(f"{k}-core filtering removed every interaction")

    kept_users = np.unique(users[keep])
    kept_items = np.unique(items[keep])
    item_remap = np.full(d.num_items, -1, dtype=np.int64)
    item_remap[kept_items] = np.arange(len(kept_items))

    # `users` is nondecreasing (built per user in order), so surviving
    # sequences can be sliced out by boundary search.
    u_kept = users[keep]
    i_kept = item_remap[items[keep]]
    starts = np.searchsorted(u_kept, kept_users, side="left")
    ends = np.searchsorted(u_kept, kept_users, side="right")
    sequences = [i_kept[s:e].copy() for s, e in zip(starts, ends)]
    return Dataset(
        sequences=sequences,
        num_items=len(kept_items),
        user_ids=[d.user_ids[u] for u in kept_users],
        item_ids=[d.item_ids[i] for i in kept_items],
    )


def leave_one_out_split(d: Dataset) -> SplitDataset:
    """Last item per user → test, second-to-last → validation."""
    train, val, test = [], [], []
    for u, seq in enumerate(d.sequences):
        if len(seq) < 3:
            raise ValueError(
                f"user {d.user_ids[u]!r} (index {u}) has {len(seq)} interactions; "
                f"need at least 3 to split"
            )
        train.append(seq[:-2])
        val.append(int(seq[-2]))
        test.append(int(seq[-1]))
    return SplitDataset(
        train=train,
        val=np.array(val, dtype=np.int64),
        test=np.array(test, dtype=np.int64),
        num_items=d.num_items,
    )


def stats(d: Dataset) -> DatasetStats:
    """Summary counts; density is a plain ratio, not a percentage."""
    if d.num_users == 0:
        raise ValueError("empty dataset")
    actions = d.num_actions
    return DatasetStats(
        num_users=d.num_users,
        num_items=d.num_items,
        num_actions=actions,
        avg_length=actions / d.num_users,
        density=actions / (d.num_users * d.num_items),
    )


def format_stats(s: DatasetStats) -> str:
    """key=value lines, one per field."""
    return (
        f"num_users={s.num_users}\n"
        f"num_items={s.num_items}\n"
        f"num_actions={s.num_actions}\n"
        f"avg_length={s.avg_length:.4f}\n"
        f"density={s.density:.6f}\n"
    )
