"""Local differential privacy for user embeddings.

Before upload, a user embedding is clipped to an L1-norm budget and
perturbed coordinate-wise with Laplace noise of scale 2*delta/epsilon.
Both steps run on the client; the server only ever sees the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PrivacyConfig:
    """L1 clip threshold and per-upload privacy budget."""

    delta: float = 1.0
    epsilon: float = 4.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")

    @property
    def noise_scale(self) -> float:
        """Laplace scale b = 2*delta/epsilon."""
        return 2.0 * self.delta / self.epsilon


@dataclass(frozen=True)
class PerturbedEmbedding:
    """An LDP-protected user vector, the only embedding the server sees."""

    client_id: int
    vector: np.ndarray


def l1_clip(v: np.ndarray, delta: float) -> np.ndarray:
    """Rescale `v` so its L1 norm is at most `delta`.

    Vectors already inside the budget pass through unchanged (scale 1,
    which also covers the zero vector); larger ones shrink toward the
    origin, preserving direction.
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    v = np.asarray(v, dtype=float)
    norm = np.abs(v).sum()
    scale = 1.0 if norm <= delta else delta / norm
    return v * scale


def laplace_perturb(
    v: np.ndarray,
    cfg: PrivacyConfig,
    rng: np.random.Generator,
    client_id: int = 0,
) -> PerturbedEmbedding:
    """Add i.i.d. Laplace(0, 2*delta/epsilon) noise to each coordinate.

    Sampling is by inverse CDF from the caller's generator, so a fixed
    seed reproduces the noise exactly: u ~ U(-0.5, 0.5),
    n = -b * sign(u) * ln(1 - 2|u|).  The caller is responsible for
    clipping `v` first.
    """
    v = np.asarray(v, dtype=float)
    b = cfg.noise_scale
    u = rng.random(v.shape) - 0.5
    # rng.random() can return exactly 0.0; keep the log argument positive.
    w = np.maximum(1.0 - 2.0 * np.abs(u), np.finfo(float).tiny)
    noise = -b * np.sign(u) * np.log(w)
    out = v + noise
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite perturbed embedding")
    return PerturbedEmbedding(client_id=client_id, vector=out)
