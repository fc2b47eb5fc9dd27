"""Pre-aggregation of massive point-based OD records via k-means.

Endpoint points are pooled and partitioned into ``k_clusters`` groups; each
group becomes one location at the group centroid and per-pair volumes are
summed.  Self-flows produced by the grouping (both endpoints in one group)
are dropped and their volume reported.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .dataset import FlowDataset, Location

# k-means convergence settings (documented contract: seeded, capped)
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-4


class PreaggregateResult(NamedTuple):
    dataset: FlowDataset
    dropped_self_volume: int
    n_groups: int


def preaggregate(points, k_clusters: int, seed: int) -> PreaggregateResult:
    """Aggregate point OD records into a cluster-based FlowDataset.

    ``points`` is array-like of shape (n, 5): ox, oy, dx, dy, volume
    (or (n, 4) with unit volumes).  ``k_clusters`` >= 2; when it meets or
    exceeds the number of distinct endpoint coordinates the grouping
    degenerates to one location per distinct point.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] not in (4, 5):
        raise ValueError("points must be (n, 4) or (n, 5): ox,oy,dx,dy[,volume]")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    if k_clusters < 2:
        raise ValueError("k_clusters must be >= 2")
    n = pts.shape[0]
    if n == 0:
        raise ValueError("no point records")
    volumes = pts[:, 4].astype(np.int64) if pts.shape[1] == 5 else np.ones(n, dtype=np.int64)
    if np.any(volumes < 1):
        raise ValueError("volumes must be >= 1")

    endpoints = np.vstack([pts[:, 0:2], pts[:, 2:4]])  # origins then dests
    distinct, inverse = np.unique(endpoints, axis=0, return_inverse=True)
    n_distinct = distinct.shape[0]

    if k_clusters >= n_distinct:
        labels_distinct = np.arange(n_distinct)
        centers = distinct
    else:
        from sklearn.cluster import KMeans
        km = KMeans(n_clusters=k_clusters, random_state=seed, n_init=1,
                    max_iter=KMEANS_MAX_ITER, tol=KMEANS_TOL)
        labels_distinct = km.fit_predict(distinct)
        centers = km.cluster_centers_

    labels = labels_distinct[inverse]
    o_group = labels[:n]
    d_group = labels[n:]

    keep = o_group != d_group
    dropped = int(volumes[~keep].sum())
    if not np.any(keep):
        raise ValueError("all flows collapse to self-flows after aggregation")

    used = np.unique(np.concatenate([o_group[keep], d_group[keep]]))
    width = max(4, len(str(len(centers))))
    remap = -np.ones(len(centers), dtype=np.int64)
    remap[used] = np.arange(len(used))
    locations = [Location(f"C{g:0{width}d}", float(centers[g, 0]), float(centers[g, 1]))
                 for g in used]
    dataset = FlowDataset(locations, remap[o_group[keep]], remap[d_group[keep]],
                          volumes[keep])
    return PreaggregateResult(dataset, dropped, len(used))
