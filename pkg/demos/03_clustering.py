"""
Ward clustering of noisy uploads
================================

The server never sees clean user embeddings, only perturbed ones.
Agglomerative Ward clustering groups them anyway, and each group's
centroid averages the noise away.  The demo plants three interest
centers, perturbs 90 member vectors, and inspects what Ward recovers.
"""

import numpy as np

from fedcontrast.clustering import centroid_for_client, ward_cluster, ward_merge_sequence
from fedcontrast.config import PrivacyConfig
from fedcontrast.privacy import laplace_perturb

rng = np.random.default_rng(3)
centers = np.array([[4.0, 0.0], [-2.0, 3.5], [0.0, -4.0]])
owner = np.repeat([0, 1, 2], 30)
cfg = PrivacyConfig(delta=4.0, epsilon=16.0)
noisy = np.stack([
    laplace_perturb(centers[c], cfg, rng).vector for c in owner
])

# The merge sequence is the full dendrogram; early merges are cheap
# (nearby points), late ones expensive (cluster centers far apart).
merges = ward_merge_sequence(noisy)
costs = [cost for _, _, cost in merges]
print(f"{len(merges)} merges; first cost {costs[0]:.4f}, last cost {costs[-1]:.1f}")
# The three planted clusters survive until the last two merges, which
# join far-apart centers and cost much more than any merge before them.
print(f"cost jump at the 3-cluster cut: {costs[-2] / costs[-3]:.1f}x")

# Cutting at 3 clusters recovers the planted structure.
model = ward_cluster([(i, noisy[i]) for i in range(len(owner))], count=3)
for c in range(3):
    rep = c * 30
    label = model.assignments[rep]
    members = [i for i, lab in model.assignments.items() if lab == label]
    same = sum(owner[i] == owner[rep] for i in members)
    centroid = centroid_for_client(model, rep)
    err = np.linalg.norm(centroid - centers[owner[rep]])
    indiv = np.linalg.norm(noisy[rep] - centers[owner[rep]])
    print(
        f"cluster of user {rep:2d}: {same}/{len(members)} members correct, "
        f"centroid error {err:.3f} vs individual error {indiv:.3f}"
    )
