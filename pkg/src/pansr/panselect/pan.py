"""Nonparametric pre-screening by repeated BART chains."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..bart import BartConfig, fit_bart, vip
from .clustering import CLUSTERERS
from .ranks import rank_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """Outcome of one screening run.

    Attributes
    ----------
    avg_ranks : ndarray, shape (p,)
        Mean VIP rank of each feature over the chains.
    labels : ndarray, shape (p,)
        0 for the low-mean cluster, 1 otherwise.
    cluster_means : tuple of float
        Mean average rank of cluster 0 and cluster 1.
    selected : tuple of int
        0-based indices of the retained features.
    vips : ndarray, shape (K, p)
        Per-chain VIP vectors.
    degenerate : bool
        The clusters could not be told apart and every feature was kept.
    """

    avg_ranks: np.ndarray
    labels: np.ndarray
    cluster_means: tuple[float, float]
    selected: tuple[int, ...]
    vips: np.ndarray
    K: int
    cluster_algo: str
    seed: int
    degenerate: bool = False
    elapsed: float = 0.0

    @property
    def ranks(self) -> np.ndarray:
        return rank_matrix(self.vips)

    def to_dict(self) -> dict:
        return {
            "avg_ranks": self.avg_ranks.tolist(),
            "labels": self.labels.tolist(),
            "cluster_means": list(self.cluster_means),
            "selected": list(self.selected),
            "vips": self.vips.tolist(),
            "K": self.K,
            "cluster_algo": self.cluster_algo,
            "seed": self.seed,
            "degenerate": self.degenerate,
            "elapsed": self.elapsed,
        }


def chain_seeds(seed: int, K: int) -> list[int]:
    """Independent per-chain seeds spawned from one master seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(K)]


def _chain_vip(args):
    X, y, cfg = args
    return vip(fit_bart(X, y, cfg))


def select_from_vips(vips, cluster_algo: str = "ahc", seed: int = 0) -> SelectionResult:
    """Rank, average and cluster precomputed per-chain VIP vectors."""
    if cluster_algo not in CLUSTERERS:
        raise ValueError(f"unknown clustering algorithm {cluster_algo!r}; "
                         f"choose from {sorted(CLUSTERERS)}")
    vips = np.atleast_2d(np.asarray(vips, dtype=float))
    K, p = vips.shape
    avg = rank_matrix(vips).mean(axis=1)
    if p == 1:
        return SelectionResult(avg, np.zeros(1, np.int64), (1.0, 1.0), (0,), vips, K,
                               cluster_algo, seed, degenerate=True)
    clusters = CLUSTERERS[cluster_algo](avg, seed)
    if clusters.degenerate:
        log.warning("average ranks do not separate into two clusters; keeping all %d features", p)
        selected = tuple(range(p))
    else:
        selected = tuple(int(j) for j in np.flatnonzero(clusters.labels == 0))
    return SelectionResult(avg, clusters.labels, clusters.means, selected, vips, K,
                           cluster_algo, seed, degenerate=clusters.degenerate)


def run_pan(X, y, K: int = 20, bart_cfg: BartConfig | None = None, cluster_algo: str = "ahc",
            seed: int = 0, n_jobs: int = 1) -> SelectionResult:
    """Screen features with ``K`` independent BART chains.

    Each chain's VIP vector is ranked (rank 1 = most used), ranks are
    averaged across chains, the averages are split into two clusters and the
    cluster with the smaller mean average rank is returned as the selection.

    Parameters
    ----------
    X, y : array_like
        Training data, as accepted by :func:`pansr.bart.fit_bart`.
    K : int
        Number of chains, at least 2.
    bart_cfg : BartConfig, optional
        Chain configuration; its seed is replaced per chain.
    cluster_algo : {"ahc", "kmeans", "gmm"}
    seed : int
        Master seed for the chain seeds and the clustering arms.
    n_jobs : int
        Worker processes for the chains.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    if cluster_algo not in CLUSTERERS:
        raise ValueError(f"unknown clustering algorithm {cluster_algo!r}")
    start = time.perf_counter()
    base = (bart_cfg or BartConfig()).replace(keep_trees=False)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    jobs = [(X, y, base.replace(seed=s)) for s in chain_seeds(seed, K)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            vips = list(pool.map(_chain_vip, jobs))
    else:
        vips = [_chain_vip(job) for job in jobs]
    result = select_from_vips(np.array(vips), cluster_algo, seed)
    object.__setattr__(result, "elapsed", time.perf_counter() - start)
    return result
