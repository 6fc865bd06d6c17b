"""Synthetic regression datasets with injected irrelevant features."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from ..expr import EquationSpec, evaluate_batch, get_equation

SCENARIOS = ("standard", "noisyX", "duplicatedX", "correlatedX")
MAX_RESAMPLE = 100
NOISY_X_VAR = (1.0 / 12.0) / 5.0
AR_RHO = 0.9


class GenerationError(RuntimeError):
    """The generating equation stayed undefined after repeated resampling."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DatasetSpec:
    """Recipe for one synthetic dataset.

    Parameters
    ----------
    equation : EquationSpec or str
        Ground truth, or the name of a catalogue entry.
    n : int
        Number of rows.
    snr : float
        Ratio of signal variance to noise variance; ``inf`` for noiseless.
    s : int
        Irrelevant copies drawn per relevant feature.
    seed : int
    scenario : str
        ``standard`` or one of the Friedman perturbations ``noisyX``,
        ``duplicatedX``, ``correlatedX``.
    """

    equation: EquationSpec | str
    n: int
    snr: float = math.inf
    s: int = 0
    seed: int = 0
    scenario: str = "standard"

    def __post_init__(self):
        if isinstance(self.equation, str):
            object.__setattr__(self, "equation", get_equation(self.equation))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if not self.snr > 0:
            raise ValueError("SNR must be positive")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.scenario != "standard" and self.equation.name != "friedman":
            raise ValueError("perturbation scenarios are defined for the friedman equation only")

    @property
    def p(self) -> int:
        return self.equation.p0 * (1 + self.s)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix, response and the oracle relevant set.

    ``S0`` holds 0-based column indices. ``signal`` is the noiseless f0 at
    each row. ``meta`` is JSON-serialisable.
    """

    X: np.ndarray
    y: np.ndarray
    S0: tuple[int, ...]
    signal: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(self.X))
        object.__setattr__(self, "y", _frozen(self.y))
        object.__setattr__(self, "signal", _frozen(self.signal))
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be (n, p) with one response per row")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("response contains non-finite values")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def p0(self) -> int:
        return len(self.S0)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.X[rows], self.y[rows], self.S0, self.signal[rows], dict(self.meta))

    def columns(self, cols) -> "Dataset":
        """Keep only ``cols``; ``S0`` is re-expressed in the new positions."""
        cols = [int(c) for c in cols]
        pos = {c: k for k, c in enumerate(cols)}
        S0 = tuple(pos[j] for j in self.S0 if j in pos)
        meta = dict(self.meta, columns=cols)
        return Dataset(self.X[:, cols], self.y, S0, self.signal, meta)


def _noise(rng, signal: np.ndarray, snr: float):
    n = signal.size
    sigma_f2 = float(np.var(signal, ddof=1)) if n > 1 else 0.0
    if math.isinf(snr):
        return np.zeros(n), sigma_f2, 0.0
    sigma_e2 = sigma_f2 / snr
    return rng.normal(0.0, math.sqrt(sigma_e2), n), sigma_f2, sigma_e2


def _sample_relevant(rng, eq: EquationSpec, n: int):
    lo = np.array([a for a, _ in eq.bounds])
    hi = np.array([b for _, b in eq.bounds])
    X = rng.uniform(lo, hi, (n, eq.p0))
    f = evaluate_batch(eq.expression, X)
    bad = np.flatnonzero(~np.isfinite(f))
    for _ in range(MAX_RESAMPLE):
        if bad.size == 0:
            break
        X[bad] = rng.uniform(lo, hi, (bad.size, eq.p0))
        f[bad] = evaluate_batch(eq.expression, X[bad])
        bad = bad[~np.isfinite(f[bad])]
    if bad.size:
        raise GenerationError(f"{eq.name}: {bad.size} rows undefined after {MAX_RESAMPLE} resamples")
    return X, f


def _meta(eq: EquationSpec, spec_like: dict, sigma_f2: float, sigma_e2: float) -> dict:
    return {
        "equation": eq.name,
        "expression": eq.text,
        "variables": list(eq.variables),
        "bounds": [list(b) for b in eq.bounds],
        "sigma_f2": sigma_f2,
        "sigma_eps2": sigma_e2,
        **spec_like,
    }


def generate(spec: DatasetSpec) -> Dataset:
    """Draw a dataset.

    Relevant features are uniform on their bounds and occupy the first p0
    columns. The noise variance is the sample variance of f0 divided by the
    SNR. Then come ``s`` irrelevant uniform copies of feature 1, then of
    feature 2, and so on, each on the bounds of the feature it copies.

    Raises
    ------
    GenerationError
        If f0 stays undefined on some row after 100 redraws.
    """
    if spec.scenario != "standard":
        return friedman_scenario(spec.scenario, spec.n, spec.p, spec.snr, spec.seed)
    eq = spec.equation
    rng = np.random.default_rng(spec.seed)
    X0, f = _sample_relevant(rng, eq, spec.n)
    eps, sigma_f2, sigma_e2 = _noise(rng, f, spec.snr)
    blocks = [X0]
    for a, b in eq.bounds:
        blocks.append(rng.uniform(a, b, (spec.n, spec.s)))
    X = np.hstack(blocks)
    meta = _meta(eq, {"n": spec.n, "snr": _json_snr(spec.snr), "s": spec.s, "seed": spec.seed,
                      "scenario": "standard"}, sigma_f2, sigma_e2)
    return Dataset(X, f + eps, tuple(range(eq.p0)), f, meta)


def _json_snr(snr: float):
    return None if math.isinf(snr) else float(snr)


def friedman_scenario(scenario: str, n: int, p: int, snr: float = 10.0, seed: int = 0) -> Dataset:
    """Friedman data with ``p`` columns under one of four design perturbations.

    ``standard`` (alias ``baseline``)
        Every column iid Unif(0, 1).
    ``noisyX``
        The response is computed from clean features, then every column
        gets independent N(0, (1/12)/5) noise.
    ``duplicatedX``
        Column 6 is x1 + x2; it counts toward ``p`` and is not relevant.
    ``correlatedX``
        Unif(0, 1) marginals through a Gaussian copula with
        corr(z_i, z_j) = 0.9 ** |i - j|.
    """
    if scenario == "baseline":
        scenario = "standard"
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    need = 6 if scenario == "duplicatedX" else 5
    if p < need:
        raise ValueError(f"{scenario} needs p >= {need}, got {p}")
    if not snr > 0:
        raise ValueError("SNR must be positive")
    eq = get_equation("friedman")
    rng = np.random.default_rng(seed)
    if scenario == "correlatedX":
        e = rng.standard_normal((n, p))
        z = np.empty_like(e)
        z[:, 0] = e[:, 0]
        for j in range(1, p):
            z[:, j] = AR_RHO * z[:, j - 1] + math.sqrt(1 - AR_RHO ** 2) * e[:, j]
        X = norm.cdf(z)
    elif scenario == "duplicatedX":
        base = rng.uniform(0.0, 1.0, (n, p - 1))
        X = np.insert(base, 5, base[:, 0] + base[:, 1], axis=1)
    else:
        X = rng.uniform(0.0, 1.0, (n, p))
    f = evaluate_batch(eq.expression, X[:, :5])
    eps, sigma_f2, sigma_e2 = _noise(rng, f, snr)
    if scenario == "noisyX":
        X = X + rng.normal(0.0, math.sqrt(NOISY_X_VAR), X.shape)
    meta = _meta(eq, {"n": n, "snr": _json_snr(snr), "s": None, "seed": seed, "scenario": scenario},
                 sigma_f2, sigma_e2)
    meta["p"] = p
    return Dataset(X, f + eps, tuple(range(5)), f, meta)


def split_indices(rows: int, target_n: int, train_frac: float = 0.75, seed: int = 0):
    """Row indices for an exact-size train/test split.

    The rows are shuffled and cut at ``floor(train_frac * rows)``; the train
    part is then subsampled to ``target_n`` rows and the test part to
    ``target_n // 3``.
    """
    if not 0 < train_frac < 1:
        raise ValueError("train_frac must lie in (0, 1)")
    cut = int(math.floor(train_frac * rows))
    n_test = target_n // 3
    if target_n < 1 or target_n > cut or n_test > rows - cut:
        raise ValueError(f"{rows} rows cannot supply {target_n} train and {n_test} test rows")
    rng = np.random.default_rng(seed)
    order = rng.permutation(rows)
    train, test = order[:cut], order[cut:]
    train = np.sort(rng.choice(train, target_n, replace=False))
    test = np.sort(rng.choice(test, n_test, replace=False))
    return train, test


def train_test_split(d: Dataset, target_n: int, train_frac: float = 0.75, seed: int = 0):
    """Split ``d`` into exactly ``target_n`` train and ``target_n // 3`` test rows."""
    train, test = split_indices(d.n, target_n, train_frac, seed)
    return d.subset(train), d.subset(test)


def rows_for(target_n: int, train_frac: float = 0.75) -> int:
    """Smallest row count from which :func:`split_indices` can serve ``target_n``."""
    rows = math.ceil(target_n / train_frac)
    while True:
        cut = math.floor(train_frac * rows)
        if cut >= target_n and rows - cut >= target_n // 3:
            return rows
        rows += 1
