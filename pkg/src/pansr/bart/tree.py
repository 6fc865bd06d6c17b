"""Standalone regression trees.

The sampler stores its draws in flat arrays; :class:`RegressionTree` is the
inspectable form used for hand-built ensembles and debugging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RegressionTree:
    """Binary tree in pre-order array form.

    Node ``k`` is internal when ``var[k] >= 0`` and then sends rows with
    ``x[var[k]] <= threshold[k]`` to ``left[k]``, the rest to ``right[k]``.
    Leaves carry ``value[k]``; for internal nodes ``value`` is ignored.
    """

    var: tuple[int, ...]
    threshold: tuple[float, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]
    value: tuple[float, ...]

    def __post_init__(self):
        m = len(self.var)
        if m == 0 or not all(len(a) == m for a in (self.threshold, self.left, self.right, self.value)):
            raise ValueError("node arrays must be non-empty and of equal length")
        seen = set()
        for k in range(m):
            if self.var[k] >= 0:
                kids = (self.left[k], self.right[k])
                if any(not 0 < c < m for c in kids) or self.left[k] == self.right[k]:
                    raise ValueError(f"internal node {k} needs two distinct children")
                for c in kids:
                    if c in seen:
                        raise ValueError(f"node {c} has two parents")
                    seen.add(c)
            elif not np.isfinite(self.value[k]):
                raise ValueError(f"leaf {k} has a non-finite value")
        if len(seen) != m - 1:
            raise ValueError("nodes are not all reachable from the root")

    @classmethod
    def stump(cls, value: float) -> "RegressionTree":
        return cls((-1,), (0.0,), (-1,), (-1,), (float(value),))

    @classmethod
    def split(cls, var: int, threshold: float, left_value: float, right_value: float) -> "RegressionTree":
        return cls((var, -1, -1), (float(threshold), 0.0, 0.0), (1, -1, -1), (2, -1, -1),
                   (0.0, float(left_value), float(right_value)))

    @property
    def num_nodes(self) -> int:
        return len(self.var)

    @property
    def parent(self) -> tuple[int, ...]:
        out = [-1] * self.num_nodes
        for k, j in enumerate(self.var):
            if j >= 0:
                out[self.left[k]] = k
                out[self.right[k]] = k
        return tuple(out)

    def split_counts(self, p: int) -> np.ndarray:
        return np.bincount([j for j in self.var if j >= 0], minlength=p)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            k = 0
            while self.var[k] >= 0:
                k = self.left[k] if row[self.var[k]] <= self.threshold[k] else self.right[k]
            out[i] = self.value[k]
        return out
