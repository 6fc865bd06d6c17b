"""Bayesian additive regression trees with variable inclusion proportions."""

from .config import BartConfig
from .posterior import BartPosterior, DegenerateResponseError, TreeDraws, fit_bart, predict, vip
from .tree import RegressionTree

__all__ = [
    "BartConfig",
    "BartPosterior",
    "DegenerateResponseError",
    "RegressionTree",
    "TreeDraws",
    "fit_bart",
    "predict",
    "vip",
]
