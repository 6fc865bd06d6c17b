"""VIP ranking and the uniform-rank diagnostic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


def rank_vips(q) -> np.ndarray:
    """Descending ranks of a VIP vector; the largest VIP gets rank 1.

    Exact ties share their midrank, so ranks always sum to p(p+1)/2.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 1:
        raise ValueError("q must be one-dimensional")
    return rankdata(-q, method="average")


def rank_matrix(vips) -> np.ndarray:
    """Stack per-chain VIP vectors (K, p) into a (p, K) rank matrix."""
    vips = np.atleast_2d(np.asarray(vips, dtype=float))
    return np.column_stack([rank_vips(v) for v in vips])


@dataclass(frozen=True)
class RankReport:
    """Observed versus uniform-model mean ranks.

    Under the model, relevant ranks are uniform on {1..p0} and irrelevant
    ranks on {p0+1..p}. Deviations are relative: (observed - expected) /
    expected.
    """

    p0: int
    p: int
    relevant_mean: float
    irrelevant_mean: float
    expected_relevant: float
    expected_irrelevant: float
    mean_ranks: tuple[float, ...]

    @property
    def relevant_deviation(self) -> float:
        return (self.relevant_mean - self.expected_relevant) / self.expected_relevant

    @property
    def irrelevant_deviation(self) -> float:
        if self.p0 == self.p:
            return 0.0
        return (self.irrelevant_mean - self.expected_irrelevant) / self.expected_irrelevant

    def to_dict(self) -> dict:
        return {
            "p0": self.p0,
            "p": self.p,
            "relevant_mean": self.relevant_mean,
            "irrelevant_mean": self.irrelevant_mean,
            "expected_relevant": self.expected_relevant,
            "expected_irrelevant": self.expected_irrelevant,
            "relevant_deviation": self.relevant_deviation,
            "irrelevant_deviation": self.irrelevant_deviation,
            "mean_ranks": list(self.mean_ranks),
        }


def rank_distribution_check(ranks, S0) -> RankReport:
    """Compare mean ranks of relevant and irrelevant features with the uniform model.

    Parameters
    ----------
    ranks : array_like, shape (p, K)
        Rank matrix, one column per chain.
    S0 : iterable of int
        0-based indices of the relevant features.
    """
    ranks = np.asarray(ranks, dtype=float)
    if ranks.ndim == 1:
        ranks = ranks[:, None]
    p = ranks.shape[0]
    S0 = sorted(set(int(j) for j in S0))
    if not S0 or S0[0] < 0 or S0[-1] >= p:
        raise ValueError("S0 must be a non-empty subset of the feature indices")
    p0 = len(S0)
    mask = np.zeros(p, bool)
    mask[S0] = True
    per_feature = ranks.mean(axis=1)
    irrelevant = float(per_feature[~mask].mean()) if p0 < p else float("nan")
    return RankReport(
        p0=p0,
        p=p,
        relevant_mean=float(per_feature[mask].mean()),
        irrelevant_mean=irrelevant,
        expected_relevant=(1 + p0) / 2,
        expected_irrelevant=(p0 + 1 + p) / 2,
        mean_ranks=tuple(float(v) for v in per_feature),
    )
