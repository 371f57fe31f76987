"""Experiment configuration: schema, TOML loading, dotted-key overrides.

Every tunable in the simulator lives here under a dotted name
(section.key).  Configs load from a TOML file, can be overridden by
command-line flags carrying the same dotted names, and are validated
before any work starts.  `as_dict` gives the fully resolved mapping for
provenance headers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .model import EncoderKind
from .negsampling import SamplerConfig
from .privacy import PrivacyConfig


@dataclass
class DatasetConfig:
    path: str = ""
    format: str = "tabular"
    kcore: int = 5
    synthetic: bool = False


@dataclass
class SyntheticConfig:
    users: int = 2000
    items: int = 1000
    clusters: int = 8
    min_len: int = 10
    max_len: int = 20
    zipf_exponent: float = 1.0
    noise: float = 0.1
    explore: float = 0.0
    frontier: int = 6
    frontier_rate: float = 0.15
    ordered: bool = True
    seed: int = 0


@dataclass
class ModelConfig:
    encoder: str = "mean_seq"
    dim: int = 64

    @property
    def kind(self) -> EncoderKind:
        return EncoderKind(self.encoder)


@dataclass
class ClusterConfig:
    count: int = 25
    algorithm: str = "ward"
    population: str = "cache"


@dataclass
class ClientConfig:
    local_pool_size: int = 100
    local_negatives_per_positive: int = 10
    use_inbatch: bool = True
    use_local: bool = True
    use_semi_hard: bool = True
    filter_false_negatives: bool = True


@dataclass
class FederationConfig:
    users_per_round: int = 16
    learning_rate: float = 1e-3
    max_rounds: int = 1000
    eval_every: int = 100
    patience: int = 5
    seed: int = 0
    threads: int = 1


@dataclass
class EvalConfig:
    exclude_seen: bool = True


@dataclass
class SamplerSection:
    hard_ratio_percent: float = 25.0
    num_semi_hard: int = 20
    globally_hardest: bool = False
    random: bool = False

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(
            hard_ratio_percent=self.hard_ratio_percent,
            num_semi_hard=self.num_semi_hard,
        )


@dataclass
class PrivacySection:
    delta: float = 1.0
    epsilon: float = 4.0

    def privacy_config(self) -> PrivacyConfig:
        return PrivacyConfig(delta=self.delta, epsilon=self.epsilon)


@dataclass
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    privacy: PrivacySection = field(default_factory=PrivacySection)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    client: ClientConfig = field(default_factory=ClientConfig)
    federation: FederationConfig = field(default_factory=FederationConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)


def _sections(cfg: ExperimentConfig) -> dict[str, Any]:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def valid_keys() -> list[str]:
    cfg = ExperimentConfig()
    keys = []
    for name, section in _sections(cfg).items():
        keys.extend(f"{name}.{f.name}" for f in fields(section))
    return sorted(keys)


def _split_key(cfg: ExperimentConfig, key: str) -> tuple[Any, str]:
    section_name, _, field_name = key.partition(".")
    sections = _sections(cfg)
    if not field_name or section_name not in sections:
        raise KeyError(f"unknown config key {key!r}; valid keys: {', '.join(valid_keys())}")
    section = sections[section_name]
    if field_name not in {f.name for f in fields(section)}:
        raise KeyError(f"unknown config key {key!r}; valid keys: {', '.join(valid_keys())}")
    return section, field_name


def get_key(cfg: ExperimentConfig, key: str) -> Any:
    section, field_name = _split_key(cfg, key)
    return getattr(section, field_name)


def coerce(key: str, value: Any) -> Any:
    """Parse a string override to the key's declared type."""
    current_type = type(get_key(ExperimentConfig(), key))
    if not isinstance(value, str):
        return value
    if current_type is bool:
        lowered = value.strip().lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"{key}: cannot parse {value!r} as a boolean")
    if current_type is int:
        return int(value)
    if current_type is float:
        return float(value)
    return value


def set_key(cfg: ExperimentConfig, key: str, value: Any) -> None:
    section, field_name = _split_key(cfg, key)
    setattr(section, field_name, coerce(key, value))


def as_dict(cfg: ExperimentConfig) -> dict[str, dict[str, Any]]:
    """Fully resolved nested mapping, JSON-serializable."""
    out: dict[str, dict[str, Any]] = {}
    for name, section in _sections(cfg).items():
        out[name] = {f.name: getattr(section, f.name) for f in fields(section)}
    return out


def load_config(path: str | None = None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Defaults, optionally updated from a TOML file, then from overrides."""
    cfg = ExperimentConfig()
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        for section_name, body in data.items():
            if not isinstance(body, dict):
                raise KeyError(
                    f"top-level key {section_name!r} is not a section; "
                    f"valid keys: {', '.join(valid_keys())}"
                )
            for field_name, value in body.items():
                set_key(cfg, f"{section_name}.{field_name}", value)
    for key, value in (overrides or {}).items():
        set_key(cfg, key, value)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    """Check every precondition that would otherwise fail mid-run."""
    if cfg.dataset.format not in ("tabular", "movielens"):
        raise ValueError(f"dataset.format must be tabular or movielens, got {cfg.dataset.format!r}")
    if cfg.dataset.kcore < 1:
        raise ValueError("dataset.kcore must be >= 1")
    if cfg.model.encoder not in ("id", "mean_seq"):
        raise ValueError(f"model.encoder must be id or mean_seq, got {cfg.model.encoder!r}")
    if cfg.model.dim < 1:
        raise ValueError("model.dim must be >= 1")
    if cfg.cluster.algorithm not in ("ward", "kmeans", "none"):
        raise ValueError(
            f"cluster.algorithm must be ward, kmeans or none, got {cfg.cluster.algorithm!r}"
        )
    if cfg.cluster.population not in ("cache", "round"):
        raise ValueError(
            f"cluster.population must be cache or round, got {cfg.cluster.population!r}"
        )
    if cfg.cluster.count < 1:
        raise ValueError("cluster.count must be >= 1")
    if cfg.client.local_pool_size < 0:
        raise ValueError("client.local_pool_size must be >= 0")
    if not 0 <= cfg.client.local_negatives_per_positive <= cfg.client.local_pool_size:
        raise ValueError(
            "client.local_negatives_per_positive must be between 0 and client.local_pool_size"
        )
    if cfg.federation.users_per_round < 1:
        raise ValueError("federation.users_per_round must be >= 1")
    if cfg.federation.learning_rate <= 0:
        raise ValueError("federation.learning_rate must be > 0")
    if cfg.federation.max_rounds < 0:
        raise ValueError("federation.max_rounds must be >= 0")
    if cfg.federation.eval_every < 1:
        raise ValueError("federation.eval_every must be >= 1")
    if cfg.federation.patience < 1:
        raise ValueError("federation.patience must be >= 1")
    if cfg.federation.threads < 1:
        raise ValueError("federation.threads must be >= 1")
    # Constructing these runs their own validation.
    cfg.privacy.privacy_config()
    cfg.sampler.sampler_config()
