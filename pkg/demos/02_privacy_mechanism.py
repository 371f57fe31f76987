"""
Local differential privacy: clip, perturb, and what survives
============================================================

Every user embedding leaves the device L1-clipped to delta and carrying
Laplace noise of scale 2*delta/epsilon.  The demo shows the mechanism's
calibration and why averaging many perturbed vectors still recovers a
usable signal.
"""

import numpy as np

from fedcontrast.config import PrivacyConfig
from fedcontrast.privacy import l1_clip, laplace_perturb

rng = np.random.default_rng(0)
cfg = PrivacyConfig(delta=1.0, epsilon=4.0)
print(f"delta={cfg.delta} epsilon={cfg.epsilon} -> noise scale b={2 * cfg.delta / cfg.epsilon}")

# Clipping rescales only when the L1 norm exceeds delta.
small = np.array([0.2, -0.1, 0.05])
big = np.array([3.0, -2.0, 1.0])
print(f"small vector unchanged: {np.allclose(l1_clip(small, cfg.delta), small)}")
print(f"big vector L1 after clip: {np.abs(l1_clip(big, cfg.delta)).sum():.6f}")

# The noise matches its nominal distribution: variance 2*b^2 = 0.5 here.
draws = laplace_perturb(np.zeros(200_000), cfg, rng).vector
print(f"empirical noise mean {draws.mean():+.4f}, variance {draws.var():.4f} (nominal 0.5)")

# One upload is dominated by noise; the mean of a cluster's uploads is not.
truth = l1_clip(rng.normal(size=8), cfg.delta)
uploads = np.stack([laplace_perturb(truth, cfg, rng).vector for _ in range(64)])
single_err = np.linalg.norm(uploads[0] - truth)
mean_err = np.linalg.norm(uploads.mean(axis=0) - truth)
print(f"one upload misses the true embedding by {single_err:.3f}")
print(f"the mean of 64 uploads misses it by only {mean_err:.3f}")
