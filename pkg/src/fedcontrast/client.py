"""Simulated on-device training for one client.

Each positive item p_j in the client's history is scored against a
mixed negative list (other history items as in-batch negatives, a
sample from the device's local negative pool, and the server's
semi-hard assignment).  The per-client loss is

    L_i = -sum_j log( exp(u_j . p_j) / (exp(u_j . p_j) + sum_n exp(u_j . n)) )

computed with log-sum-exp stabilization.  Gradients are analytic:
softmax weights are computed once per example and pushed into the
touched item rows, the projection matrix (sequence encoder), and the
private user vector (ID encoder, kept on device).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import EncoderKind, ModelParams, encode_user


@dataclass
class ClientState:
    """One simulated device: history, fixed local pool, round inputs."""

    client_id: int
    history: np.ndarray
    local_negative_pool: np.ndarray
    semi_hard: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    rng: Optional[np.random.Generator] = None


@dataclass(frozen=True)
class TrainingExample:
    """One Eq.-style softmax term: positive index j plus its inputs."""

    position: int
    user_embedding: np.ndarray
    positive: int
    negatives: np.ndarray


@dataclass
class LocalUpdate:
    """The payload a client uploads: gradients of its loss and the loss value.

    `item_grads` holds rows for items this client's loss actually
    touched; `projection_grad` is dense (zero for the ID encoder, which
    never uses the projection).
    """

    client_id: int
    item_grads: dict[int, np.ndarray]
    projection_grad: np.ndarray
    loss: float


def make_client(
    client_id: int,
    history: np.ndarray,
    num_items: int,
    pool_size: int,
    rng: np.random.Generator,
) -> ClientState:
    """Set up a client with a fixed local negative pool.

    The pool simulates the device's local item store: `pool_size` items
    drawn uniformly from outside the user's full history, fixed for the
    whole run.
    """
    history = np.asarray(history, dtype=np.int64)
    outside = np.setdiff1d(np.arange(num_items, dtype=np.int64), history)
    if pool_size > len(outside):
        raise ValueError(
            f"client {client_id}: pool size {pool_size} exceeds the "
            f"{len(outside)} items outside its history"
        )
    pool = rng.choice(outside, size=pool_size, replace=False) if pool_size else np.array([], dtype=np.int64)
    return ClientState(
        client_id=client_id,
        history=history,
        local_negative_pool=np.asarray(pool, dtype=np.int64),
    )


def build_inbatch_negatives(history: np.ndarray, j: int, kind: EncoderKind) -> np.ndarray:
    """All history items except position j (1-based), deduplicated.

    ID-encoder clients get an empty list: with a prefix-independent
    user embedding, other positives are indistinguishable from the
    current one and cannot serve as negatives.
    """
    if kind is EncoderKind.ID:
        return np.array([], dtype=np.int64)
    if not 1 <= j <= len(history):
        raise ValueError(f"position {j} outside history of length {len(history)}")
    rest = np.concatenate([history[: j - 1], history[j:]])
    return _dedup(rest)


def sample_local_negatives(pool: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """K distinct pool items, re-drawn per positive per round."""
    if k > len(pool):
        raise ValueError(f"requested {k} local negatives from a pool of {len(pool)}")
    if k == 0:
        return np.array([], dtype=np.int64)
    return np.asarray(rng.choice(pool, size=k, replace=False), dtype=np.int64)


def _dedup(ids: np.ndarray) -> np.ndarray:
    seen: set[int] = set()
    out = []
    for i in ids:
        i = int(i)
        if i not in seen:
            seen.add(i)
            out.append(i)
    return np.array(out, dtype=np.int64)


def mix_negatives(
    inbatch: np.ndarray,
    local: np.ndarray,
    semi_hard: np.ndarray,
    history: np.ndarray,
    positive: int,
    filter_semi_hard: bool = True,
) -> np.ndarray:
    """Unified negative list for one positive.

    Semi-hard arrivals that collide with the client's history are
    dropped (the server cannot pre-filter them without seeing the
    history); the concatenation is deduplicated keeping first
    occurrence; the current positive never appears.
    """
    hist = set(int(i) for i in history)
    semi = [int(i) for i in semi_hard if not (filter_semi_hard and int(i) in hist)]
    merged = list(inbatch) + list(local) + semi
    out = _dedup(np.array(merged, dtype=np.int64)) if merged else np.array([], dtype=np.int64)
    return out[out != positive]


def example_loss(example: TrainingExample, params: ModelParams) -> float:
    """One softmax term; 0 when the negative list is empty."""
    loss, _, _ = _softmax_stats(example, params)
    return loss


def _softmax_stats(
    example: TrainingExample, params: ModelParams
) -> tuple[float, float, np.ndarray]:
    """Loss plus softmax weights (positive weight, negative weights)."""
    u = example.user_embedding
    s_pos = float(u @ params.item_table[example.positive])
    s_neg = params.item_table[example.negatives] @ u if len(example.negatives) else np.array([])
    scores = np.concatenate([[s_pos], s_neg])
    if not np.all(np.isfinite(scores)):
        raise FloatingPointError("non-finite score in contrastive loss")
    m = scores.max()
    lse = m + np.log(np.exp(scores - m).sum())
    loss = lse - s_pos
    z = np.exp(scores - lse)
    return float(loss), float(z[0]), z[1:]


def build_examples(
    client: ClientState,
    params: ModelParams,
    kind: EncoderKind,
    use_inbatch: bool,
    use_local: bool,
    use_semi_hard: bool,
    local_per_positive: int,
    filter_false_negatives: bool = True,
) -> list[TrainingExample]:
    """Assemble one TrainingExample per history position.

    The user embedding for position j comes from the strict prefix
    before j (sequence encoder) or the private vector (ID encoder).
    """
    examples = []
    history = client.history
    for j in range(1, len(history) + 1):
        positive = int(history[j - 1])
        inbatch = (
            build_inbatch_negatives(history, j, kind)
            if use_inbatch
            else np.array([], dtype=np.int64)
        )
        local = (
            sample_local_negatives(client.local_negative_pool, local_per_positive, client.rng)
            if use_local
            else np.array([], dtype=np.int64)
        )
        semi = client.semi_hard if use_semi_hard else np.array([], dtype=np.int64)
        negatives = mix_negatives(
            inbatch, local, semi, history, positive, filter_semi_hard=filter_false_negatives
        )
        u = encode_user(kind, params, client.client_id, history[: j - 1])
        examples.append(
            TrainingExample(position=j, user_embedding=u, positive=positive, negatives=negatives)
        )
    return examples


def local_loss(examples: list[TrainingExample], params: ModelParams) -> float:
    """Sum of the per-positive softmax terms; always >= 0."""
    return float(sum(example_loss(ex, params) for ex in examples))


def local_gradients(
    client: ClientState,
    params: ModelParams,
    kind: EncoderKind,
    examples: list[TrainingExample],
) -> tuple[LocalUpdate, Optional[np.ndarray]]:
    """Analytic gradients of the client loss.

    Returns the uploadable LocalUpdate (touched item rows + projection)
    and, for the ID encoder, the gradient of the private user vector,
    which the caller applies locally and never uploads.
    """
    d = params.dim
    item_grads: dict[int, np.ndarray] = {}
    projection_grad = np.zeros((d, d))
    private_grad = np.zeros(d) if kind is EncoderKind.ID else None
    total = 0.0

    def touch(item: int) -> np.ndarray:
        if item not in item_grads:
            item_grads[item] = np.zeros(d)
        return item_grads[item]

    for ex in examples:
        loss, z_pos, z_neg = _softmax_stats(ex, params)
        total += loss
        u = ex.user_embedding
        touch(ex.positive)[:] += (z_pos - 1.0) * u
        grad_u = (z_pos - 1.0) * params.item_table[ex.positive]
        for z, n in zip(z_neg, ex.negatives):
            touch(int(n))[:] += z * u
            grad_u = grad_u + z * params.item_table[int(n)]
        if kind is EncoderKind.ID:
            private_grad += grad_u
        else:
            prefix = client.history[: ex.position - 1]
            if len(prefix):
                pooled = params.item_table[prefix].mean(axis=0)
                projection_grad += np.outer(grad_u, pooled)
                back = params.projection.T @ grad_u / len(prefix)
                for q in prefix:
                    touch(int(q))[:] += back

    update = LocalUpdate(
        client_id=client.client_id,
        item_grads=item_grads,
        projection_grad=projection_grad,
        loss=total,
    )
    return update, private_grad
