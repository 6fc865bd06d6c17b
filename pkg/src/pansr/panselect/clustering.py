"""Two-cluster partitions of scalar values.

Average-linkage agglomeration is the selection rule proper; k-means and a
Gaussian mixture are kept as comparison arms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TwoClusters:
    """Labels in {0, 1}; cluster 0 has the smaller mean.

    ``degenerate`` is set when the two cluster means coincide, in which case
    the labelling carries no information.
    """

    labels: np.ndarray
    means: tuple[float, float]
    degenerate: bool


def _orient(values: np.ndarray, labels: np.ndarray) -> TwoClusters:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() == labels.max():
        # a single occupied cluster cannot be ordered
        m = float(values.mean())
        return TwoClusters(labels * 0, (m, m), True)
    m0 = float(values[labels == 0].mean())
    m1 = float(values[labels == 1].mean())
    if m1 < m0:
        labels = 1 - labels
        m0, m1 = m1, m0
    out = labels.copy()
    out.setflags(write=False)
    return TwoClusters(out, (m0, m1), m0 == m1)


def ahc_two_cluster(values) -> TwoClusters:
    """UPGMA on 1-D values, cut where two clusters remain.

    Distances are ``|v_i - v_j|``. At each step the closest pair of active
    clusters merges, ties going to the lowest (row, column) index pair;
    cluster-to-cluster distances are updated by size-weighted averaging.
    """
    v = np.asarray(values, dtype=float).ravel()
    p = v.size
    if p < 2:
        raise ValueError("need at least two values to form two clusters")
    D = np.abs(v[:, None] - v[None, :])
    upper = np.triu(np.ones((p, p), bool), 1)
    active = np.ones(p, bool)
    sizes = np.ones(p)
    owner = np.arange(p)
    for _ in range(p - 2):
        cand = np.where(upper & active[:, None] & active[None, :], D, np.inf)
        i, j = divmod(int(np.argmin(cand)), p)
        # i < j; the merged cluster keeps index i
        row = (sizes[i] * D[i] + sizes[j] * D[j]) / (sizes[i] + sizes[j])
        D[i, :] = row
        D[:, i] = row
        sizes[i] += sizes[j]
        active[j] = False
        owner[owner == j] = i
    roots = np.unique(owner)
    labels = (owner == roots[1]).astype(np.int64)
    return _orient(v, labels)


def kmeans_two_cluster(values, seed: int = 0) -> TwoClusters:
    """k-means++ with two centres (scikit-learn)."""
    from sklearn.cluster import KMeans

    v = np.asarray(values, dtype=float).ravel()
    if np.unique(v).size < 2:
        return _orient(v, np.zeros(v.size, np.int64))
    km = KMeans(n_clusters=2, init="k-means++", n_init=10, random_state=seed)
    return _orient(v, km.fit_predict(v[:, None]))


def gmm_two_cluster(values, seed: int = 0) -> TwoClusters:
    """Two-component Gaussian mixture, hard assignments (scikit-learn)."""
    from sklearn.mixture import GaussianMixture

    v = np.asarray(values, dtype=float).ravel()
    if np.unique(v).size < 2:
        return _orient(v, np.zeros(v.size, np.int64))
    gm = GaussianMixture(n_components=2, random_state=seed)
    return _orient(v, gm.fit(v[:, None]).predict(v[:, None]))


CLUSTERERS = {
    "ahc": lambda v, seed: ahc_two_cluster(v),
    "kmeans": kmeans_two_cluster,
    "gmm": gmm_two_cluster,
}
