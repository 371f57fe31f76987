"""Server-side clustering of perturbed user embeddings.

The server groups uploaded (noisy) user vectors into C clusters and
represents each client by its cluster centroid.  Averaging over a
cluster cancels much of the per-user noise, so centroid-based retrieval
is far less distorted than retrieval from raw uploads.

Ward agglomerative clustering is the default.  Merging is exact and
greedy: start from singletons and repeatedly join the pair of clusters
whose merge least increases the total within-cluster sum of squares,
with ties broken by the lexicographically smallest pair of lowest
original point indices.  A k-means mode and a no-op mode (every client
its own centroid) exist for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

Embedding = tuple[int, np.ndarray]


@dataclass(frozen=True)
class ClusterModel:
    """Cluster assignments plus element-wise mean centroids.

    `assignments` maps client id to a cluster index in [0, C); row i of
    `centroids` is the mean of the perturbed vectors assigned to
    cluster i.  Clusters are numbered by their lowest original input
    position, so the labelling is deterministic.
    """

    assignments: dict[int, int]
    centroids: np.ndarray

    @property
    def count(self) -> int:
        return self.centroids.shape[0]


def centroid_for_client(model: ClusterModel, client: int) -> np.ndarray:
    """The centroid of the cluster `client` belongs to."""
    try:
        idx = model.assignments[client]
    except KeyError:
        raise KeyError(f"client {client} has no cluster assignment") from None
    return model.centroids[idx]


def _as_matrix(embeddings: Sequence[Embedding]) -> tuple[list[int], np.ndarray]:
    if len(embeddings) == 0:
        raise ValueError("cannot cluster an empty embedding list")
    ids = [cid for cid, _ in embeddings]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate client ids in embedding list")
    pts = np.asarray([np.asarray(v, dtype=float) for _, v in embeddings])
    if pts.ndim != 2:
        raise ValueError("embeddings must share one dimension")
    return ids, pts


def _model_from_labels(ids: list[int], pts: np.ndarray, labels: np.ndarray) -> ClusterModel:
    # Number clusters by their lowest member position for stable output.
    order: list[int] = []
    seen: set[int] = set()
    for lab in labels:
        if lab not in seen:
            seen.add(int(lab))
            order.append(int(lab))
    order.sort(key=lambda lab: int(np.nonzero(labels == lab)[0][0]))
    remap = {lab: k for k, lab in enumerate(order)}
    assignments = {cid: remap[int(lab)] for cid, lab in zip(ids, labels)}
    centroids = np.stack([pts[labels == lab].mean(axis=0) for lab in order])
    return ClusterModel(assignments=assignments, centroids=centroids)


def ward_merge_sequence(points: np.ndarray, count: int = 1) -> list[tuple[int, int, float]]:
    """Greedy Ward merges down to `count` clusters.

    Returns one (a, b, cost) triple per merge, where a < b are the
    lowest original point indices of the merged clusters and cost is
    the increase in total within-cluster sum of squares.  Each step
    takes the globally cheapest merge; among equal costs the smallest
    (a, b) pair wins.
    """
    merges, _ = _ward(points, count)
    return merges


def _rowmins(D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Per-row minimum over columns j > i.  argmin returns the first
    # (smallest) such j, which is exactly the lexicographic tie rule.
    k = D.shape[0]
    rowmin = np.full(k, np.inf)
    rowarg = np.full(k, -1, dtype=np.int64)
    for r in range(k - 1):
        seg = D[r, r + 1 :]
        j = int(np.argmin(seg))
        rowmin[r] = seg[j]
        rowarg[r] = r + 1 + j
    return rowmin, rowarg


def _ward(points: np.ndarray, count: int) -> tuple[list[tuple[int, int, float]], np.ndarray]:
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    effective = max(min(count, n), 1)
    inf = np.inf

    # Merge costs between singletons: ||xi - xj||^2 / 2.  Thereafter the
    # Lance-Williams recurrence keeps every pairwise cost exact.
    sq = np.einsum("ij,ij->i", pts, pts)
    D = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.clip(D, 0.0, None, out=D)
    D *= 0.5
    np.fill_diagonal(D, inf)

    # Matrix slots hold clusters; reps[s] is the lowest original point
    # index in slot s.  Merging into the lower slot keeps reps strictly
    # increasing, so slot order and rep order agree and the tie rule can
    # work on slot indices alone, even after compaction.
    reps = np.arange(n)
    sizes = np.ones(n, dtype=float)
    active = np.ones(n, dtype=bool)
    parent = np.arange(n)
    alive = n

    rowmin, rowarg = _rowmins(D)

    def recompute_row(r: int) -> None:
        seg = D[r, r + 1 :]
        if seg.size == 0:
            rowmin[r] = inf
            rowarg[r] = -1
            return
        k = int(np.argmin(seg))
        rowmin[r] = seg[k]
        rowarg[r] = r + 1 + k

    merges: list[tuple[int, int, float]] = []
    while alive > effective:
        a = int(np.argmin(rowmin))
        b = int(rowarg[a])
        cost = float(rowmin[a])
        merges.append((int(reps[a]), int(reps[b]), cost))
        parent[reps[b]] = reps[a]

        # Lance-Williams update of merge costs against every other
        # cluster v:  D(a+b, v) = ((na+nv) D(a,v) + (nb+nv) D(b,v)
        #                          - nv D(a,b)) / (na+nb+nv)
        # Dead slots and the a/b entries hold inf, which propagates
        # through the formula, so no masking is needed.
        na, nb = sizes[a], sizes[b]
        new = ((na + sizes) * D[a] + (nb + sizes) * D[b] - sizes * D[a, b]) / (
            na + nb + sizes
        )
        D[a, :] = new
        D[:, a] = new
        D[b, :] = inf
        D[:, b] = inf

        sizes[a] += sizes[b]
        active[b] = False
        alive -= 1

        # Refresh cached minima.  Rows below a see their column-a entry
        # change; rows whose cached argmin pointed at a or b must be
        # rescanned, others only need the cheap column-a comparison.
        if a > 0:
            ra = rowarg[:a]
            stale = (ra == a) | (ra == b)
            vals = D[:a, a]
            cur = rowmin[:a]
            better = ~stale & ((vals < cur) | ((vals == cur) & (a < ra)))
            idx = np.nonzero(better)[0]
            rowmin[idx] = vals[idx]
            rowarg[idx] = a
            for r in np.nonzero(stale)[0]:
                recompute_row(int(r))
        for r in np.nonzero(rowarg[a + 1 : b] == b)[0]:
            recompute_row(int(r) + a + 1)
        recompute_row(a)
        rowmin[b] = inf
        rowarg[b] = -1

        # Compact away dead slots once a quarter of the matrix is
        # unused, so the working set shrinks with the cluster count.
        if alive > effective and alive * 4 <= D.shape[0] * 3:
            keep = np.nonzero(active)[0]
            D = np.ascontiguousarray(D[np.ix_(keep, keep)])
            reps = reps[keep]
            sizes = sizes[keep]
            active = np.ones(alive, dtype=bool)
            rowmin, rowarg = _rowmins(D)

    # Resolve merge parents down to final representatives.
    labels = parent.copy()
    while True:
        nxt = labels[labels]
        if np.array_equal(nxt, labels):
            break
        labels = nxt
    return merges, labels


def ward_cluster(embeddings: Sequence[Embedding], count: int) -> ClusterModel:
    """Cluster (client id, vector) pairs into min(count, N) groups.

    Input order defines the point indices used by the merge tie rule,
    so callers should pass a canonical ordering (the federation layer
    sorts by client id).
    """
    ids, pts = _as_matrix(embeddings)
    _, labels = _ward(pts, count)
    return _model_from_labels(ids, pts, labels)


def kmeans_cluster(
    embeddings: Sequence[Embedding],
    count: int,
    rng: np.random.Generator,
    max_iter: int = 100,
) -> ClusterModel:
    """Lloyd's k-means with a seeded k-means++ style initialization.

    Provided for comparison runs against Ward.  Deterministic given the
    generator: ties in assignment go to the lowest center index, and an
    emptied cluster steals the point currently farthest from its center
    (from clusters that can spare one).
    """
    ids, pts = _as_matrix(embeddings)
    n = pts.shape[0]
    k = max(min(count, n), 1)

    centers = np.empty((k, pts.shape[1]))
    first = int(rng.integers(n))
    centers[0] = pts[first]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            pick = int(rng.choice(n, p=d2 / total))
        else:
            taken = {int(np.argmin(((pts - centers[j]) ** 2).sum(axis=1))) for j in range(c)}
            pick = min(i for i in range(n) if i not in taken)
        centers[c] = pts[pick]
        d2 = np.minimum(d2, ((pts - centers[c]) ** 2).sum(axis=1))

    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        dist = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(dist, axis=1)
        while True:
            counts = np.bincount(new_assign, minlength=k)
            empty = np.nonzero(counts == 0)[0]
            if empty.size == 0:
                break
            own = dist[np.arange(n), new_assign].copy()
            own[counts[new_assign] < 2] = -np.inf
            donor = int(np.argmax(own))
            new_assign[donor] = int(empty[0])
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            centers[c] = pts[assign == c].mean(axis=0)

    return _model_from_labels(ids, pts, assign)


def identity_clusters(embeddings: Sequence[Embedding]) -> ClusterModel:
    """No clustering: each client is its own centroid."""
    ids, pts = _as_matrix(embeddings)
    assignments = {cid: i for i, cid in enumerate(ids)}
    return ClusterModel(assignments=assignments, centroids=pts.copy())
