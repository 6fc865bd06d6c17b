"""Accuracy, symbolic-solution and feature-usage metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import (
    Binary, Constant, Expression, Unary, Variable, evaluate_batch, simplify, variables_used,
)

DEFAULT_TOL = 1e-6
NOISY_TOL = 1e-3


def r_squared(y, yhat) -> float:
    """Coefficient of determination; negative when worse than the mean."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape or y.size < 2:
        raise ValueError("y and yhat need equal lengths of at least 2")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        raise ValueError("y has zero variance")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


@dataclass(frozen=True)
class SolutionVerdict:
    """Outcome of comparing a model with the ground truth.

    ``mode`` is ``difference`` when fhat - f0 is constant (``constant`` is
    that offset), ``ratio`` when fhat / f0 is a nonzero constant
    (``constant`` is the factor), else ``none``. ``residual`` is the
    relative range of the last quantity tested.
    """

    is_solution: bool
    mode: str
    constant: float | None
    residual: float
    nonconstant_model: bool

    def to_dict(self) -> dict:
        return {
            "is_solution": self.is_solution,
            "mode": self.mode,
            "constant": self.constant,
            "residual": self.residual,
            "nonconstant_model": self.nonconstant_model,
        }


def _relative_range(v: np.ndarray) -> float:
    return float(np.ptp(v) / (1.0 + abs(np.median(v))))


def sample_domain(bounds, n: int = 1000, seed: int = 0) -> np.ndarray:
    lo = np.array([a for a, _ in bounds], dtype=float)
    hi = np.array([b for _, b in bounds], dtype=float)
    return np.random.default_rng(seed).uniform(lo, hi, (n, len(lo)))


def is_solution(fhat: Expression, f0: Expression, bounds, tol: float = DEFAULT_TOL,
                n_samples: int = 1000, seed: int = 0) -> SolutionVerdict:
    """Decide whether ``fhat`` equals ``f0`` up to an additive or multiplicative constant.

    Both expressions are evaluated at ``n_samples`` uniform points of the box
    ``bounds`` (one ``(a, b)`` pair per column). A quantity counts as
    constant when its range is at most ``tol * (1 + |median|)``. A constant
    ``fhat`` is never a solution.

    Raises
    ------
    ValueError
        If no sample point gives finite values for both expressions.
    """
    X = sample_domain(bounds, n_samples, seed)
    a = evaluate_batch(fhat, X)
    b = evaluate_batch(f0, X)
    ok = np.isfinite(a) & np.isfinite(b)
    if not ok.any():
        raise ValueError("no sample point where both expressions are defined")
    a, b = a[ok], b[ok]

    spread = _relative_range(a)
    if spread <= tol:
        return SolutionVerdict(False, "none", None, spread, False)

    diff = simplify(Binary("-", fhat, f0))
    if isinstance(diff, Constant):
        return SolutionVerdict(True, "difference", diff.value, 0.0, True)

    d = a - b
    spread = _relative_range(d)
    if spread <= tol:
        return SolutionVerdict(True, "difference", float(np.median(d)), spread, True)

    keep = np.abs(b) > tol
    if keep.any():
        r = a[keep] / b[keep]
        spread = _relative_range(r)
        factor = float(np.median(r))
        if spread <= tol and abs(factor) > tol:
            return SolutionVerdict(True, "ratio", factor, spread, True)
    return SolutionVerdict(False, "none", None, spread, True)


@dataclass(frozen=True)
class UsageReport:
    """Confusion counts of used (or selected) features against the oracle set."""

    TP: int
    FP: int
    FN: int
    TN: int

    @property
    def TPR(self) -> float:
        pos = self.TP + self.FN
        return self.TP / pos if pos else 0.0

    @property
    def FNR(self) -> float:
        pos = self.TP + self.FN
        return self.FN / pos if pos else 0.0

    @property
    def FPR(self) -> float:
        neg = self.FP + self.TN
        return self.FP / neg if neg else 0.0

    def to_dict(self) -> dict:
        return {"TP": self.TP, "FP": self.FP, "FN": self.FN, "TN": self.TN,
                "TPR": self.TPR, "FPR": self.FPR, "FNR": self.FNR}


def feature_usage(used, S0, p: int) -> UsageReport:
    """Score a model's variables, or a selected index set, against ``S0``.

    Parameters
    ----------
    used : Expression or iterable of int
        An expression (its variables after simplification are used) or
        0-based feature indices.
    S0 : iterable of int
        0-based relevant indices.
    p : int
        Total number of features.
    """
    if isinstance(used, (Constant, Variable, Unary, Binary)):
        used = variables_used(used)
    used = {int(j) for j in used}
    S0 = {int(j) for j in S0}
    for j in used | S0:
        if not 0 <= j < p:
            raise ValueError(f"feature index {j} outside 0..{p - 1}")
    tp = len(used & S0)
    fp = len(used - S0)
    fn = len(S0 - used)
    return UsageReport(tp, fp, fn, p - tp - fp - fn)
