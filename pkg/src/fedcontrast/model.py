"""Model parameters and the two user encoders.

Shared parameters (item embedding table and the sequence-encoder
projection) live on the server and are distributed each round.  Private
per-user ID vectors never leave their client; they exist only when the
ID encoder is in use.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np


class EncoderKind(Enum):
    """User encoder variants."""

    ID = "id"                # private per-user vector, history-independent
    MEAN_SEQ = "mean_seq"    # projection @ mean of history item embeddings


@dataclass
class ModelParams:
    """Item table, sequence projection, and optional private user vectors."""

    item_table: np.ndarray                  # (num_items, d)
    projection: np.ndarray                  # (d, d)
    user_vectors: Optional[np.ndarray] = None   # (num_users, d), client-private

    @property
    def num_items(self) -> int:
        return self.item_table.shape[0]

    @property
    def dim(self) -> int:
        return self.item_table.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.item_table.copy(),
            self.projection.copy(),
            None if self.user_vectors is None else self.user_vectors.copy(),
        )


def init_params(seed: int, num_items: int, d: int, num_users: int = 0) -> ModelParams:
    """Draw all parameters i.i.d. uniform on [-1/sqrt(d), +1/sqrt(d)].

    The same seed always yields bit-identical tables.  `num_users` > 0
    additionally allocates private ID-encoder vectors.
    """
    if num_items < 1:
        raise ValueError(f"num_items must be >= 1, got {num_items}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d)
    item_table = rng.uniform(-bound, bound, size=(num_items, d))
    projection = rng.uniform(-bound, bound, size=(d, d))
    user_vectors = None
    if num_users > 0:
        user_vectors = rng.uniform(-bound, bound, size=(num_users, d))
    return ModelParams(item_table, projection, user_vectors)


def encode_user(
    kind: EncoderKind,
    params: ModelParams,
    client: int,
    history_prefix: Sequence[int],
) -> np.ndarray:
    """Produce the user embedding scored against items.

    ID encoder: the client's private vector, independent of the prefix.
    Mean-sequence encoder: projection @ element-wise mean of the prefix's
    item embeddings; an empty prefix maps to the zero vector.
    """
    if kind is EncoderKind.ID:
        if params.user_vectors is None or not 0 <= client < len(params.user_vectors):
            raise ValueError(f"no private vector for client {client}")
        return params.user_vectors[client].copy()
    prefix = np.asarray(history_prefix, dtype=np.intp)
    if prefix.size == 0:
        return np.zeros(params.dim)
    if prefix.min() < 0 or prefix.max() >= params.num_items:
        raise ValueError("history contains an item index outside the vocabulary")
    return params.projection @ params.item_table[prefix].mean(axis=0)


def score(u: np.ndarray, item: np.ndarray) -> float:
    """Dot-product relevance of a user embedding and an item embedding."""
    u = np.asarray(u, dtype=float)
    item = np.asarray(item, dtype=float)
    if u.shape != item.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {item.shape}")
    return float(np.dot(u, item))


# Checkpoint layout (all little-endian):
#   magic   8 bytes  b"FEDEMB01"
#   version u32      currently 1
#   num_items u64, d u32, encoder kind u8 (0 = id, 1 = mean_seq)
#   item_table  num_items*d float64, row-major
#   projection  d*d float64, row-major
#   num_private u64, then per entry: client id u64 + d float64
_MAGIC = b"FEDEMB01"
_VERSION = 1
_KIND_CODE = {EncoderKind.ID: 0, EncoderKind.MEAN_SEQ: 1}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def save_checkpoint(path, params: ModelParams, kind: EncoderKind) -> None:
    """Write params to `path` in the documented binary layout."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQIB", _VERSION, params.num_items, params.dim,
                             _KIND_CODE[kind]))
        fh.write(np.ascontiguousarray(params.item_table, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(params.projection, dtype="<f8").tobytes())
        if params.user_vectors is None:
            fh.write(struct.pack("<Q", 0))
        else:
            fh.write(struct.pack("<Q", len(params.user_vectors)))
            for cid, vec in enumerate(params.user_vectors):
                fh.write(struct.pack("<Q", cid))
                fh.write(np.ascontiguousarray(vec, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ModelParams, EncoderKind]:
    """Read a checkpoint written by `save_checkpoint`."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError(f"not a model checkpoint: bad magic {magic!r}")
        version, num_items, d, kind_code = struct.unpack("<IQIB", fh.read(17))
        if version != _VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        if kind_code not in _CODE_KIND:
            raise ValueError(f"unknown encoder kind code {kind_code}")
        item_table = np.frombuffer(fh.read(num_items * d * 8), dtype="<f8")
        item_table = item_table.reshape(num_items, d).astype(float)
        projection = np.frombuffer(fh.read(d * d * 8), dtype="<f8")
        projection = projection.reshape(d, d).astype(float)
        (num_private,) = struct.unpack("<Q", fh.read(8))
        user_vectors = None
        if num_private:
            user_vectors = np.empty((num_private, d))
            for _ in range(num_private):
                (cid,) = struct.unpack("<Q", fh.read(8))
                user_vectors[cid] = np.frombuffer(fh.read(d * 8), dtype="<f8")
    return ModelParams(item_table, projection, user_vectors), _CODE_KIND[kind_code]
