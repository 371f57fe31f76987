"""Derivation of independent, reproducible random streams.

Every source of randomness in a simulation run is a separate numpy
Generator derived from (global seed, purpose label, owner id).  Streams
never share state, so results do not depend on scheduling or on which
optional phases actually execute.
"""

from __future__ import annotations

import numpy as np

# Purpose labels; hashed into the seed entropy so adding a new stream
# never shifts an existing one.
SELECT = "select"
KMEANS = "kmeans"
POOL = "pool"
NOISE = "noise"
LOCAL_NEG = "local_neg"
SAMPLER = "sampler"


def stream(seed: int, purpose: str, owner: int = 0) -> np.random.Generator:
    """Return the generator for one (purpose, owner) slot under `seed`."""
    label = int.from_bytes(purpose.encode("utf-8"), "little")
    return np.random.default_rng(np.random.SeedSequence((seed, label, owner)))
