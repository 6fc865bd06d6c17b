"""Fitting, prediction and variable inclusion proportions."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import chi2

from . import _kernel
from .config import BartConfig
from .tree import RegressionTree

MIN_ROWS = 10


class DegenerateResponseError(ValueError):
    """The response has zero variance, so there is nothing to fit."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TreeDraws:
    """Every retained tree of a chain, flattened.

    Tree ``t`` of draw ``d`` occupies ``offsets[d * num_trees + t]`` up to the
    next offset. Child indices are relative to the tree start. Leaf values
    are on the rescaled response.
    """

    var: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    offsets: np.ndarray
    num_trees: int

    @property
    def num_draws(self) -> int:
        return (len(self.offsets) - 1) // self.num_trees

    def tree(self, draw: int, t: int) -> RegressionTree:
        a = self.offsets[draw * self.num_trees + t]
        b = self.offsets[draw * self.num_trees + t + 1]
        return RegressionTree(
            tuple(int(v) for v in self.var[a:b]),
            tuple(float(v) for v in self.threshold[a:b]),
            tuple(int(v) for v in self.left[a:b]),
            tuple(int(v) for v in self.right[a:b]),
            tuple(float(v) for v in self.value[a:b]),
        )

    @classmethod
    def from_trees(cls, draws) -> "TreeDraws":
        draws = [list(d) for d in draws]
        M = len(draws[0])
        if M == 0 or any(len(d) != M for d in draws):
            raise ValueError("every draw needs the same, non-zero number of trees")
        trees = [t for d in draws for t in d]
        offsets = np.concatenate([[0], np.cumsum([t.num_nodes for t in trees])])
        cat = lambda name, dt: np.concatenate([np.asarray(getattr(t, name), dt) for t in trees])
        return cls(_frozen(cat("var", np.int32)), _frozen(cat("threshold", np.float64)),
                   _frozen(cat("left", np.int32)), _frozen(cat("right", np.int32)),
                   _frozen(cat("value", np.float64)), _frozen(offsets.astype(np.int64)), M)


@dataclass(frozen=True, eq=False)
class BartPosterior:
    """Retained draws of one chain.

    Attributes
    ----------
    sigma2 : ndarray, shape (D,)
        Noise variance per draw, in response units.
    split_counts : ndarray, shape (D, p)
        Splitting rules on each feature across the whole ensemble, per draw.
    train_predictions, test_predictions : ndarray or None
        Posterior-mean predictions on the designs seen by :func:`fit_bart`.
    y_min, y_range : float
        The response was mapped to ``(y - y_min) / y_range - 0.5``.
    trees : TreeDraws or None
        Retained trees; required by :func:`predict`.
    acceptance : dict
        Proposed and accepted counts per move type.
    """

    config: BartConfig
    n_features: int
    sigma2: np.ndarray
    split_counts: np.ndarray
    y_min: float
    y_range: float
    train_predictions: np.ndarray | None = None
    test_predictions: np.ndarray | None = None
    trees: TreeDraws | None = None
    acceptance: dict = field(default_factory=dict)

    @property
    def num_draws(self) -> int:
        return len(self.sigma2)

    @property
    def total_splits(self) -> np.ndarray:
        return self.split_counts.sum(axis=1)

    def unscale(self, f: np.ndarray) -> np.ndarray:
        return (f + 0.5) * self.y_range + self.y_min

    @classmethod
    def from_trees(cls, draws, n_features: int, y_min: float = -0.5, y_range: float = 1.0,
                   sigma2=None, config: BartConfig | None = None) -> "BartPosterior":
        """Build a posterior from explicit trees (values on the rescaled response)."""
        draws = [list(d) for d in draws]
        td = TreeDraws.from_trees(draws)
        counts = np.array([sum((t.split_counts(n_features) for t in d), np.zeros(n_features, int))
                           for d in draws])
        if sigma2 is None:
            sigma2 = np.ones(len(draws))
        cfg = config or BartConfig(num_trees=td.num_trees, num_draws=len(draws), burn_in=0)
        return cls(cfg, n_features, _frozen(np.asarray(sigma2, float)), _frozen(counts),
                   float(y_min), float(y_range), trees=td)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "n_features": self.n_features,
            "y_min": self.y_min,
            "y_range": self.y_range,
            "sigma2": self.sigma2.tolist(),
            "split_counts": self.split_counts.tolist(),
            "acceptance": self.acceptance,
        }

    def dump_json(self, path) -> None:
        """Write per-draw noise variances and split counts as JSON."""
        Path(path).write_text(json.dumps(self.to_dict()))


def _column_order(X: np.ndarray) -> np.ndarray:
    # content-addressed column order, so the chain does not depend on how columns are labelled
    keys = [hashlib.blake2b(np.ascontiguousarray(X[:, j]).tobytes(), digest_size=16).digest()
            for j in range(X.shape[1])]
    return np.array(sorted(range(X.shape[1]), key=lambda j: keys[j]), dtype=np.int64)


def _sigma_hat2(X: np.ndarray, y: np.ndarray) -> float:
    n, p = X.shape
    if n > p + 1:
        A = np.column_stack([np.ones(n), X])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        s2 = float(resid @ resid) / (n - p - 1)
        if s2 > 0:
            return s2
    return float(np.var(y, ddof=1))


def _check_design(X, y=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite entries")
    if y is None:
        return X
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite entries")
    return X, y


def fit_bart(X, y, cfg: BartConfig | None = None, X_test=None) -> BartPosterior:
    """Run one BART chain.

    Parameters
    ----------
    X : array_like, shape (n, p)
    y : array_like, shape (n,)
    cfg : BartConfig, optional
        Defaults to ``BartConfig()``.
    X_test : array_like, optional
        Extra design whose posterior-mean predictions are cached. Requires
        ``cfg.keep_trees``.

    Returns
    -------
    BartPosterior

    Raises
    ------
    DegenerateResponseError
        If ``y`` is constant.
    ValueError
        On non-finite input, fewer than 10 rows, or no columns.
    """
    cfg = cfg or BartConfig()
    X, y = _check_design(X, y)
    n, p = X.shape
    if n < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows, got {n}")
    if p < 1:
        raise ValueError("X has no columns")
    y_min = float(y.min())
    y_range = float(y.max() - y_min)
    if not y_range > 0 or not np.var(y) > 0:
        raise DegenerateResponseError("y has zero variance")
    ys = (y - y_min) / y_range - 0.5

    order = _column_order(X)
    Xc = X[:, order]
    uniq = [np.unique(Xc[:, j]) for j in range(p)]
    XrT = np.empty((p, n), np.int32)
    for j in range(p):
        XrT[j] = np.searchsorted(uniq[j], Xc[:, j])
    ncut = np.array([len(u) - 1 for u in uniq], np.int32)
    gvars = np.flatnonzero(ncut > 0).astype(np.int64)

    s2 = _sigma_hat2(Xc, ys)
    lam = s2 * chi2.ppf(1.0 - cfg.q, cfg.nu) / cfg.nu
    fixed = cfg.fixed_sigma2 is not None
    sigma2_init = cfg.fixed_sigma2 if fixed else s2
    p_grow, p_prune, _ = cfg.move_probs

    if gvars.size == 0:
        # every column is constant: no split is possible, the trees stay stumps
        gvars = np.zeros(0, np.int64)
    (sig, counts, train, proposed, accepted, s_var, s_cut, s_left, s_right, s_val,
     offsets) = _kernel.run_chain(
        XrT, ncut, gvars, ys, cfg.num_trees, cfg.burn_in, cfg.num_draws, cfg.alpha, cfg.beta,
        cfg.tau ** 2, sigma2_init, cfg.nu, lam, p_grow, p_prune, fixed, cfg.keep_trees,
        cfg.max_nodes, cfg.seed % (2 ** 32))

    split_counts = np.zeros_like(counts)
    split_counts[:, order] = counts
    names = ("grow", "prune", "change")
    acceptance = {m: {"proposed": int(proposed[i]), "accepted": int(accepted[i])}
                  for i, m in enumerate(names)}

    trees = None
    if cfg.keep_trees:
        width = max(len(u) for u in uniq)
        table = np.zeros((p, width))
        for j, u in enumerate(uniq):
            table[j, : len(u)] = u
        internal = s_var >= 0
        thr = np.zeros(len(s_var))
        thr[internal] = table[s_var[internal], s_cut[internal]]
        var = s_var.copy()
        var[internal] = order[s_var[internal]]
        trees = TreeDraws(_frozen(var), _frozen(thr), _frozen(s_left), _frozen(s_right),
                          _frozen(s_val), _frozen(offsets), cfg.num_trees)

    post = BartPosterior(cfg, p, _frozen(sig * y_range ** 2), _frozen(split_counts), y_min, y_range,
                         trees=trees, acceptance=acceptance)
    if trees is not None:
        # recompute through the prediction path so predict(X) reproduces the cache bit for bit
        train_pred = predict(post, X)
    else:
        train_pred = post.unscale(train)
    test_pred = None
    if X_test is not None:
        if trees is None:
            raise ValueError("test predictions need keep_trees=True")
        test_pred = predict(post, X_test)
    object.__setattr__(post, "train_predictions", _frozen(train_pred))
    if test_pred is not None:
        object.__setattr__(post, "test_predictions", _frozen(test_pred))
    return post


def predict(post: BartPosterior, X_new) -> np.ndarray:
    """Posterior mean of the tree sum at each row of ``X_new``, in response units."""
    if post.trees is None:
        raise ValueError("posterior was fitted with keep_trees=False")
    X_new = _check_design(X_new)
    if X_new.shape[1] != post.n_features:
        raise ValueError(f"expected {post.n_features} columns, got {X_new.shape[1]}")
    td = post.trees
    f = _kernel.predict_sum(td.var, td.threshold, td.left, td.right, td.value, td.offsets,
                            td.num_draws, td.num_trees, np.ascontiguousarray(X_new))
    return post.unscale(f)


def vip(post: BartPosterior) -> np.ndarray:
    """Variable inclusion proportions averaged over draws.

    A draw without any split contributes zero to every feature.
    """
    counts = np.asarray(post.split_counts, dtype=float)
    total = counts.sum(axis=1, keepdims=True)
    props = np.divide(counts, total, out=np.zeros_like(counts), where=total > 0)
    return props.mean(axis=0)
