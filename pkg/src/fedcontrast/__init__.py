"""Deterministic simulator of federated contrastive recommendation training.

Clients hold private interaction histories and upload only
LDP-protected user embeddings and gradient updates; the server clusters
the noisy embeddings, retrieves semi-hard negatives from cluster
centroids, aggregates client gradients, and applies Adam to the shared
item/projection parameters.  Everything is seeded and reproducible
bit-for-bit, including under thread-parallel client execution.
"""

from .client import (
    ClientState,
    LocalUpdate,
    TrainingExample,
    build_inbatch_negatives,
    local_gradients,
    local_loss,
    mix_negatives,
    sample_local_negatives,
)
from .clustering import ClusterModel, centroid_for_client, kmeans_cluster, ward_cluster
from .config import ExperimentConfig, load_config
from .datasets import (
    Dataset,
    DatasetStats,
    SplitDataset,
    ingest,
    kcore_filter,
    leave_one_out_split,
    stats,
)
from .evaluation import MetricReport, evaluate, hr_at_k, ndcg_at_k, rank_target
from .federation import (
    Channel,
    ServerState,
    TrainingResult,
    adam_step,
    aggregate,
    run_round,
    run_training,
    secure_upload,
    select_round_users,
)
from .model import EncoderKind, ModelParams, encode_user, init_params, score
from .negsampling import (
    NegativeAssignment,
    SamplerConfig,
    difficulty_rank,
    semi_hard_sample,
)
from .privacy import PerturbedEmbedding, PrivacyConfig, l1_clip, laplace_perturb
from .synthetic import generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "ClientState",
    "ClusterModel",
    "Dataset",
    "DatasetStats",
    "EncoderKind",
    "ExperimentConfig",
    "LocalUpdate",
    "MetricReport",
    "ModelParams",
    "NegativeAssignment",
    "PerturbedEmbedding",
    "PrivacyConfig",
    "SamplerConfig",
    "ServerState",
    "SplitDataset",
    "TrainingExample",
    "TrainingResult",
    "adam_step",
    "aggregate",
    "build_inbatch_negatives",
    "centroid_for_client",
    "difficulty_rank",
    "encode_user",
    "evaluate",
    "generate_synthetic",
    "hr_at_k",
    "ingest",
    "init_params",
    "kcore_filter",
    "kmeans_cluster",
    "leave_one_out_split",
    "load_config",
    "local_gradients",
    "local_loss",
    "mix_negatives",
    "ndcg_at_k",
    "rank_target",
    "run_round",
    "run_training",
    "sample_local_negatives",
    "score",
    "secure_upload",
    "select_round_users",
    "semi_hard_sample",
    "stats",
    "ward_cluster",
]
