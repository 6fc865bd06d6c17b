"""Sampler configuration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class BartConfig:
    """Hyperparameters of one BART chain.

    Parameters
    ----------
    num_trees : int
        Ensemble size M.
    burn_in, num_draws : int
        Discarded and retained Gibbs sweeps.
    alpha, beta : float
        Tree prior, P(split at depth d) = alpha * (1 + d) ** -beta.
    k : float
        Leaf prior scale; leaves are N(0, (0.5 / (k sqrt(M)))^2) on the
        response rescaled to [-0.5, 0.5].
    nu, q : float
        Noise prior: scaled inverse chi-square with ``nu`` degrees of freedom,
        calibrated so that P(sigma < sigma_hat) = q.
    move_probs : tuple of float
        Grow, prune and change proposal probabilities.
    seed : int
        Chain seed.
    keep_trees : bool
        Retain every posterior tree, needed for prediction on new data.
    fixed_sigma2 : float, optional
        Hold the noise variance fixed at this value (rescaled units) instead
        of sampling it. Diagnostic use only.
    max_nodes : int
        Node capacity per tree; grow proposals beyond it are rejected.
    """

    num_trees: int = 20
    burn_in: int = 1000
    num_draws: int = 1000
    alpha: float = 0.95
    beta: float = 2.0
    k: float = 2.0
    nu: float = 3.0
    q: float = 0.9
    move_probs: tuple[float, float, float] = (0.28, 0.28, 0.44)
    seed: int = 0
    keep_trees: bool = True
    fixed_sigma2: float | None = None
    max_nodes: int = 255

    def __post_init__(self):
        object.__setattr__(self, "move_probs", tuple(float(v) for v in self.move_probs))
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.num_draws < 1 or self.burn_in < 0:
            raise ValueError("need num_draws >= 1 and burn_in >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.k <= 0 or self.nu <= 0 or not 0.0 < self.q < 1.0:
            raise ValueError("need k > 0, nu > 0 and q in (0, 1)")
        if len(self.move_probs) != 3 or min(self.move_probs) <= 0:
            raise ValueError("move_probs must be three positive numbers")
        if not math.isclose(sum(self.move_probs), 1.0, abs_tol=1e-9):
            raise ValueError("move_probs must sum to 1")
        if self.fixed_sigma2 is not None and not self.fixed_sigma2 > 0:
            raise ValueError("fixed_sigma2 must be positive")
        if self.max_nodes < 3:
            raise ValueError("max_nodes must be >= 3")

    @property
    def tau(self) -> float:
        return 0.5 / (self.k * math.sqrt(self.num_trees))

    def replace(self, **changes) -> "BartConfig":
        return BartConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["move_probs"] = list(self.move_probs)
        return d
