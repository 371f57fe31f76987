"""Round orchestration: the server side of the federated pipeline.

One round = select users, collect LDP-protected embedding uploads,
cluster the embedding cache, send each selected client semi-hard
negatives from its cluster centroid, let clients compute local
contrastive gradients in parallel, aggregate the uploads, and apply a
server-side Adam step to the shared parameters.

The server's entire view of any client is what crosses the upload
channel: a PerturbedEmbedding and a LocalUpdate.  Raw histories, local
pools, and private user vectors never leave the client structs.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import clustering, negsampling
from .client import ClientState, LocalUpdate, build_examples, local_gradients, make_client
from .config import ExperimentConfig
from .datasets import SplitDataset
from .evaluation import MetricReport, evaluate
from .model import EncoderKind, ModelParams, encode_user, init_params
from .privacy import PerturbedEmbedding, l1_clip, laplace_perturb
from .seeds import stream


class Channel:
    """Client-to-server transport seam.

    The simulator delivers payloads in-process; tests substitute a
    recording double to assert what the server can observe.
    """

    def deliver(self, payload):
        return payload


def secure_upload(update: LocalUpdate) -> LocalUpdate:
    """Mock secure aggregation: identity passthrough.

    This is the single interception point where a real masking scheme
    would attach; swapping it for a masking double must leave the
    aggregate unchanged.
    """
    return update


@dataclass
class AdamState:
    m_items: np.ndarray
    v_items: np.ndarray
    m_proj: np.ndarray
    v_proj: np.ndarray
    t: int = 0


@dataclass
class AggregatedGradient:
    """Mean update over the round's clients.

    `item_rows` holds only touched rows (already divided by the client
    count); `projection` is the dense mean.
    """

    item_rows: dict[int, np.ndarray]
    projection: np.ndarray


@dataclass
class ServerState:
    params: ModelParams
    adam: AdamState
    cache: dict[int, PerturbedEmbedding] = field(default_factory=dict)
    round: int = 0


@dataclass
class ClientPool:
    """All simulated devices plus the ID encoder's private vectors."""

    clients: dict[int, ClientState]
    kind: EncoderKind
    user_vectors: Optional[np.ndarray] = None
    noise_rngs: dict[int, np.random.Generator] = field(default_factory=dict)

    def params_view(self, server_params: ModelParams) -> ModelParams:
        """Shared snapshot composed with the client-side private table."""
        return ModelParams(
            item_table=server_params.item_table,
            projection=server_params.projection,
            user_vectors=self.user_vectors,
        )


@dataclass
class TrainingResult:
    params: ModelParams
    final_params: ModelParams
    metrics: list[dict]
    timings: list[dict]
    rounds: int
    best_round: int
    best_val_hr10: float


def select_round_users(all_clients: list[int], m: int, rng: np.random.Generator) -> list[int]:
    """m distinct client ids, uniform without replacement, sorted."""
    if m > len(all_clients):
        raise ValueError(f"cannot select {m} users from a population of {len(all_clients)}")
    picked = rng.choice(np.asarray(all_clients), size=m, replace=False)
    return sorted(int(c) for c in picked)


def init_adam(num_items: int, d: int) -> AdamState:
    return AdamState(
        m_items=np.zeros((num_items, d)),
        v_items=np.zeros((num_items, d)),
        m_proj=np.zeros((d, d)),
        v_proj=np.zeros((d, d)),
    )


def aggregate(updates: list[LocalUpdate]) -> AggregatedGradient:
    """Equal-weight mean: dense projection, sparse rows summed over m.

    Clients that never touched an item contribute an implicit zero row,
    so a row present in one of m updates ends up scaled by 1/m.
    """
    if not updates:
        raise ValueError("cannot aggregate an empty update list")
    m = len(updates)
    item_rows: dict[int, np.ndarray] = {}
    for up in updates:
        for item, g in up.item_grads.items():
            if item in item_rows:
                item_rows[item] = item_rows[item] + g
            else:
                item_rows[item] = g.copy()
    for item in item_rows:
        item_rows[item] /= m
    projection = sum(up.projection_grad for up in updates) / m
    return AggregatedGradient(item_rows=item_rows, projection=projection)


def adam_step(
    params: ModelParams,
    grad: AggregatedGradient,
    adam: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> ModelParams:
    """Standard bias-corrected Adam on the shared parameters.

    The sparse item gradient is materialized densely, so untouched rows
    still see moment decay, exactly as a dense optimizer would.
    """
    g_items = np.zeros_like(params.item_table)
    for item, row in grad.item_rows.items():
        g_items[item] = row
    g_proj = grad.projection
    if not (np.all(np.isfinite(g_items)) and np.all(np.isfinite(g_proj))):
        raise FloatingPointError("non-finite aggregated gradient")

    adam.t += 1
    t = adam.t
    adam.m_items = beta1 * adam.m_items + (1 - beta1) * g_items
    adam.v_items = beta2 * adam.v_items + (1 - beta2) * g_items**2
    adam.m_proj = beta1 * adam.m_proj + (1 - beta1) * g_proj
    adam.v_proj = beta2 * adam.v_proj + (1 - beta2) * g_proj**2
    mh_items = adam.m_items / (1 - beta1**t)
    vh_items = adam.v_items / (1 - beta2**t)
    mh_proj = adam.m_proj / (1 - beta1**t)
    vh_proj = adam.v_proj / (1 - beta2**t)
    return ModelParams(
        item_table=params.item_table - lr * mh_items / (np.sqrt(vh_items) + eps),
        projection=params.projection - lr * mh_proj / (np.sqrt(vh_proj) + eps),
        user_vectors=params.user_vectors,
    )


def setup_clients(split: SplitDataset, cfg: ExperimentConfig) -> ClientPool:
    """Build every device: history, fixed local pool, private streams."""
    kind = cfg.model.kind
    clients: dict[int, ClientState] = {}
    noise_rngs: dict[int, np.random.Generator] = {}
    seed = cfg.federation.seed
    for cid in range(split.num_users):
        client = make_client(
            client_id=cid,
            history=split.train[cid],
            num_items=split.num_items,
            pool_size=cfg.client.local_pool_size,
            rng=stream(seed, "POOL", cid),
        )
        client.rng = stream(seed, "LOCALNEG", cid)
        clients[cid] = client
        noise_rngs[cid] = stream(seed, "NOISE", cid)

    user_vectors = None
    if kind is EncoderKind.ID:
        user_vectors = init_params(
            seed, num_items=split.num_items, d=cfg.model.dim, num_users=split.num_users
        ).user_vectors
    return ClientPool(clients=clients, kind=kind, user_vectors=user_vectors, noise_rngs=noise_rngs)


def _cluster_embeddings(
    embeddings: list[tuple[int, np.ndarray]], cfg: ExperimentConfig, round_idx: int
) -> clustering.ClusterModel:
    algo = cfg.cluster.algorithm
    if algo == "ward":
        return clustering.ward_cluster(embeddings, cfg.cluster.count)
    if algo == "kmeans":
        rng = stream(cfg.federation.seed, "KMEANS", round_idx)
        return clustering.kmeans_cluster(embeddings, cfg.cluster.count, rng)
    return clustering.identity_clusters(embeddings)


def run_round(
    state: ServerState,
    pool: ClientPool,
    cfg: ExperimentConfig,
    channel: Channel,
    sampler_rngs: dict[int, np.random.Generator],
    upload_hook: Callable[[LocalUpdate], LocalUpdate] = secure_upload,
) -> tuple[dict, dict]:
    """One federated round.  Returns (metrics row, timing row)."""
    t_round = time.perf_counter()
    phases: list[dict] = []

    def phase(name: str, t0: float) -> None:
        phases.append({"name": name, "ms": (time.perf_counter() - t0) * 1000.0})

    state.round += 1
    r = state.round
    seed = cfg.federation.seed
    kind = pool.kind
    view = pool.params_view(state.params)
    sampler_cfg = cfg.sampler.sampler_config()
    privacy_cfg = cfg.privacy.privacy_config()

    t0 = time.perf_counter()
    all_ids = sorted(pool.clients)
    selected = select_round_users(all_ids, cfg.federation.users_per_round, stream(seed, "SELECT", r))
    phase("select", t0)

    server_negatives_needed = cfg.client.use_semi_hard
    use_centroids = server_negatives_needed and not cfg.sampler.random

    if use_centroids:
        # Selected clients infer, clip, perturb, and upload embeddings.
        t0 = time.perf_counter()
        for cid in selected:
            client = pool.clients[cid]
            raw = _full_history_embedding(kind, view, client)
            clipped = l1_clip(raw, privacy_cfg.delta)
            perturbed = laplace_perturb(clipped, privacy_cfg, pool.noise_rngs[cid], cid)
            state.cache[cid] = channel.deliver(perturbed)
        phase("upload", t0)

        # Cluster the cache (or just this round's uploads).
        t0 = time.perf_counter()
        if cfg.cluster.population == "round":
            population = [(cid, state.cache[cid].vector) for cid in selected]
        else:
            population = [(cid, state.cache[cid].vector) for cid in sorted(state.cache)]
        cluster_model = _cluster_embeddings(population, cfg, r)
        phase("cluster", t0)

        # Rank the pool once per involved cluster, sample per client.
        t0 = time.perf_counter()
        ranked_by_cluster: dict[int, np.ndarray] = {}
        for cid in selected:
            client = pool.clients[cid]
            if cid in cluster_model.assignments:
                cidx = cluster_model.assignments[cid]
                if cidx not in ranked_by_cluster:
                    ranked_by_cluster[cidx] = negsampling.difficulty_rank(
                        cluster_model.centroids[cidx], state.params.item_table
                    )
                ranked = ranked_by_cluster[cidx]
                if cfg.sampler.globally_hardest:
                    assignment = negsampling.hardest_sample(ranked, sampler_cfg, cid)
                else:
                    assignment = negsampling.semi_hard_sample(
                        ranked, sampler_cfg, sampler_rngs[cid], cid
                    )
            else:
                # Unclustered client (possible only in exotic configs):
                # fall back to uniform sampling.
                assignment = negsampling.random_sample(
                    state.params.num_items, sampler_cfg, sampler_rngs[cid], cid
                )
            client.semi_hard = np.asarray(assignment.item_ids, dtype=np.int64)
        phase("distribute", t0)
    elif server_negatives_needed:
        t0 = time.perf_counter()
        for cid in selected:
            assignment = negsampling.random_sample(
                state.params.num_items, sampler_cfg, sampler_rngs[cid], cid
            )
            pool.clients[cid].semi_hard = np.asarray(assignment.item_ids, dtype=np.int64)
        phase("distribute", t0)

    # Local training, parallel across clients; each owns its state and
    # rng stream, so results are identical under any scheduling.
    t0 = time.perf_counter()

    def train_one(cid: int) -> tuple[int, LocalUpdate]:
        client = pool.clients[cid]
        examples = build_examples(
            client,
            view,
            kind,
            use_inbatch=cfg.client.use_inbatch,
            use_local=cfg.client.use_local,
            use_semi_hard=cfg.client.use_semi_hard,
            local_per_positive=cfg.client.local_negatives_per_positive,
            filter_false_negatives=cfg.client.filter_false_negatives,
        )
        update, private_grad = local_gradients(client, view, kind, examples)
        if private_grad is not None:
            pool.user_vectors[cid] -= cfg.federation.learning_rate * private_grad
        return cid, channel.deliver(upload_hook(update))

    if cfg.federation.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.federation.threads) as ex:
            results = dict(ex.map(train_one, selected))
    else:
        results = dict(train_one(cid) for cid in selected)
    phase("train", t0)

    t0 = time.perf_counter()
    updates = [results[cid] for cid in selected]
    agg = aggregate(updates)
    phase("aggregate", t0)

    t0 = time.perf_counter()
    state.params = adam_step(state.params, agg, state.adam, cfg.federation.learning_rate)
    phase("update", t0)

    # Publish: in-process, the new snapshot simply becomes current.
    phases.append({"name": "publish", "ms": 0.0})

    mean_loss = float(np.mean([u.loss for u in updates]))
    metrics_row = {"round": r, "mean_loss": mean_loss}
    timing_row = {
        "round": r,
        "wall_ms": (time.perf_counter() - t_round) * 1000.0,
        "phases": phases,
    }
    return metrics_row, timing_row


def _full_history_embedding(kind: EncoderKind, view: ModelParams, client: ClientState) -> np.ndarray:
    return encode_user(kind, view, client.client_id, client.history)


EvalFn = Callable[[ModelParams, EncoderKind, SplitDataset, str, bool], MetricReport]


def run_training(
    cfg: ExperimentConfig,
    split: SplitDataset,
    channel: Optional[Channel] = None,
    upload_hook: Callable[[LocalUpdate], LocalUpdate] = secure_upload,
    eval_fn: Optional[EvalFn] = None,
) -> TrainingResult:
    """Run rounds until convergence or the round budget.

    Convergence: validation HR@10 fails to improve for `patience`
    consecutive evaluations (every `eval_every` rounds).  The
    best-validation parameter snapshot is retained.
    """
    channel = channel or Channel()
    eval_fn = eval_fn or evaluate
    seed = cfg.federation.seed
    kind = cfg.model.kind

    base = init_params(seed, num_items=split.num_items, d=cfg.model.dim)
    state = ServerState(
        params=ModelParams(item_table=base.item_table, projection=base.projection),
        adam=init_adam(split.num_items, cfg.model.dim),
    )
    pool = setup_clients(split, cfg)
    sampler_rngs = {cid: stream(seed, "SAMPLER", cid) for cid in pool.clients}

    def snapshot() -> ModelParams:
        view = pool.params_view(state.params)
        return view.copy()

    metrics_rows: list[dict] = []
    timing_rows: list[dict] = []
    best_params = snapshot()
    best_hr10 = -np.inf
    best_round = 0
    misses = 0

    for _ in range(cfg.federation.max_rounds):
        metrics_row, timing_row = run_round(state, pool, cfg, channel, sampler_rngs, upload_hook)
        r = state.round
        if r % cfg.federation.eval_every == 0:
            report = eval_fn(
                pool.params_view(state.params), kind, split, "val", cfg.eval.exclude_seen
            )
            metrics_row.update(
                {
                    "hr@5": report.hr5,
                    "hr@10": report.hr10,
                    "ndcg@5": report.ndcg5,
                    "ndcg@10": report.ndcg10,
                }
            )
            if report.hr10 > best_hr10:
                best_hr10 = report.hr10
                best_params = snapshot()
                best_round = r
                misses = 0
            else:
                misses += 1
        metrics_rows.append(metrics_row)
        timing_rows.append(timing_row)
        if misses >= cfg.federation.patience:
            break

    final = snapshot()
    if not np.isfinite(best_hr10):
        best_params = final
        best_round = state.round
    return TrainingResult(
        params=best_params,
        final_params=final,
        metrics=metrics_rows,
        timings=timing_rows,
        rounds=state.round,
        best_round=best_round,
        best_val_hr10=float(best_hr10) if np.isfinite(best_hr10) else float("nan"),
    )
