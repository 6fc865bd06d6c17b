"""Baseline genetic-programming symbolic regression.

A generational GP over expression trees: ramped half-and-half
initialisation, tournament selection, subtree crossover, subtree, hoist and
point mutation, ephemeral random constants and a parsimony penalty on
simplified size. Selection runs on protected operators so that the search
is not starved by domain errors, while the reported best-ever individual is
scored strictly. The evaluation budget counts fitness evaluations; a
generation only starts when the budget can pay for all of it. Every scored
individual is charged, including unchanged copies; the carried-over elite is
not re-scored.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .expr import (
    Binary,
    Constant,
    Expression,
    Unary,
    Variable,
    complexity,
    depth,
    evaluate_batch,
)
from .expr.evaluate import _binary, _unary
from .expr.nodes import replace_at, subtrees

DEFAULT_UNARY = ("sqrt", "log", "exp", "sin", "cos")
DEFAULT_BINARY = ("+", "-", "*", "/")
_PROTECT_EPS = 1e-3
_EXP_CAP = 100.0


@dataclass(frozen=True)
class GPConfig:
    """Search settings.

    Variation probabilities are applied in the order crossover, subtree
    mutation, hoist mutation, point mutation; the remainder is plain
    reproduction. The run ends early once the best training MSE is at or
    below ``stop_mse``; the default 0 stops only on an exact fit.
    """

    population_size: int = 500
    generations: int = 100
    max_evaluations: int = 50_000
    tournament_size: int = 20
    p_crossover: float = 0.7
    p_subtree: float = 0.1
    p_hoist: float = 0.05
    p_point: float = 0.1
    max_depth: int = 8
    init_depth: tuple[int, int] = (2, 6)
    unary_ops: tuple[str, ...] = DEFAULT_UNARY
    binary_ops: tuple[str, ...] = DEFAULT_BINARY
    const_range: tuple[float, float] = (-5.0, 5.0)
    parsimony: float = 1e-3
    time_limit: float | None = None
    stop_mse: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("init_depth", "unary_ops", "binary_ops", "const_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        probs = (self.p_crossover, self.p_subtree, self.p_hoist, self.p_point)
        if min(probs) < 0 or sum(probs) > 1 + 1e-12:
            raise ValueError("variation probabilities must be non-negative and sum to <= 1")
        if self.population_size < 2 or self.generations < 1:
            raise ValueError("need population_size >= 2 and generations >= 1")
        if self.max_evaluations <= 0:
            raise ValueError("max_evaluations must be positive")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament_size must lie in 1..population_size")
        lo, hi = self.init_depth
        if not 0 <= lo <= hi <= self.max_depth:
            raise ValueError("init_depth must satisfy 0 <= lo <= hi <= max_depth")
        if not self.binary_ops:
            raise ValueError("at least one binary operator is required")
        if not self.stop_mse >= 0:
            raise ValueError("stop_mse must be >= 0")

    def replace(self, **changes) -> "GPConfig":
        return GPConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass(frozen=True)
class Individual:
    """A scored expression.

    ``fitness`` and ``mse`` use strict semantics and are ``inf`` when the
    expression is undefined on some training row. ``search_fitness`` uses
    protected operators and drives selection, so undefined individuals can
    still pass on useful material.
    """

    expression: Expression
    fitness: float
    mse: float
    complexity: int
    evaluations: int = 0
    search_fitness: float = math.inf

    @property
    def valid(self) -> bool:
        return math.isfinite(self.fitness)


@dataclass
class GPResult:
    best: Individual
    trace: list[float] = field(default_factory=list)
    evaluations: int = 0
    generations: int = 0
    elapsed: float = 0.0
    stopped_by: str = "generations"

    def to_dict(self) -> dict:
        return {
            "fitness": self.best.fitness,
            "mse": self.best.mse,
            "complexity": self.best.complexity,
            "trace": self.trace,
            "evaluations": self.evaluations,
            "generations": self.generations,
            "elapsed": self.elapsed,
            "stopped_by": self.stopped_by,
        }


def mse(e: Expression, X, y) -> float:
    """Mean squared error, ``inf`` if ``e`` is undefined on any row."""
    pred = evaluate_batch(e, X)
    if not np.all(np.isfinite(pred)):
        return math.inf
    with np.errstate(over="ignore"):
        err = float(np.mean((pred - y) ** 2))
    return err if math.isfinite(err) else math.inf


def _protected(e: Expression, X: np.ndarray) -> np.ndarray:
    if isinstance(e, Constant):
        return np.full(X.shape[0], e.value)
    if isinstance(e, Variable):
        return X[:, e.index]
    if isinstance(e, Unary):
        a = _protected(e.child, X)
        if e.op == "log":
            m = np.abs(a)
            return np.where(m > _PROTECT_EPS, np.log(np.where(m > _PROTECT_EPS, m, 1.0)), 0.0)
        if e.op == "sqrt":
            return np.sqrt(np.abs(a))
        if e.op == "exp":
            return np.exp(np.minimum(a, _EXP_CAP))
        if e.op in ("asin", "acos"):
            a = np.clip(a, -1.0, 1.0)
        return _unary(e.op, a)
    a = _protected(e.left, X)
    b = _protected(e.right, X)
    if e.op == "/":
        ok = np.abs(b) > _PROTECT_EPS
        return np.where(ok, a / np.where(ok, b, 1.0), 1.0)
    return _binary(e.op, a, b, e.right)


def protected_mse(e: Expression, X, y) -> float:
    """MSE under closed operators: log|x|, sqrt|x|, division returning 1
    for near-zero denominators, capped exp. Used for selection only."""
    with np.errstate(all="ignore"):
        pred = _protected(e, X)
        err = float(np.mean((pred - y) ** 2))
    return err if math.isfinite(err) else math.inf


def fitness(e: Expression, X, y, parsimony: float = 1e-3) -> float:
    """MSE plus ``parsimony`` times the simplified size; lower is better."""
    err = mse(e, X, np.asarray(y, dtype=float))
    return err + parsimony * complexity(e) if math.isfinite(err) else math.inf


class _Search:
    def __init__(self, X, y, cfg: GPConfig, names):
        self.X = X
        self.y = y
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.p = X.shape[1]
        self.names = names
        self.evaluations = 0
        self._cx: dict = {}
        self._scores: dict = {}

    # construction --------------------------------------------------------

    def terminal(self) -> Expression:
        if self.rng.random() < 1.0 / (self.p + 1):
            lo, hi = self.cfg.const_range
            return Constant(round(float(self.rng.uniform(lo, hi)), 3))
        j = int(self.rng.integers(self.p))
        return Variable(j, self.names[j])

    def random_tree(self, max_d: int, full: bool) -> Expression:
        if max_d == 0 or (not full and self.rng.random() < 0.3):
            return self.terminal()
        ops = self.cfg.unary_ops + self.cfg.binary_ops
        op = ops[int(self.rng.integers(len(ops)))]
        if op in self.cfg.unary_ops:
            return Unary(op, self.random_tree(max_d - 1, full))
        return Binary(op, self.random_tree(max_d - 1, full), self.random_tree(max_d - 1, full))

    def initial(self) -> list[Expression]:
        lo, hi = self.cfg.init_depth
        pop = []
        for k in range(self.cfg.population_size):
            d = lo + k % (hi - lo + 1)
            pop.append(self.random_tree(d, full=bool(k % 2)))
        return pop

    # scoring -------------------------------------------------------------

    def score(self, e: Expression) -> Individual:
        # every scored individual is charged to the budget; the cache only saves time
        self.evaluations += 1
        hit = self._scores.get(e)
        if hit is not None:
            return hit
        err = mse(e, self.X, self.y)
        cx = self._cx.get(e)
        if cx is None:
            cx = self._cx[e] = complexity(e)
        penalty = self.cfg.parsimony * cx
        fit = err + penalty if math.isfinite(err) else math.inf
        search = fit if math.isfinite(fit) else protected_mse(e, self.X, self.y) + penalty
        ind = Individual(e, fit, err, cx, self.evaluations, search)
        self._scores[e] = ind
        return ind

    # variation -----------------------------------------------------------

    def pick_subtree(self, e: Expression, prefer_internal: bool = True):
        nodes = subtrees(e)
        internal = [n for n in nodes if isinstance(n[1], (Unary, Binary))]
        if prefer_internal and internal and self.rng.random() < 0.9:
            nodes = internal
        return nodes[int(self.rng.integers(len(nodes)))]

    def fits(self, e: Expression) -> bool:
        return depth(e) <= self.cfg.max_depth

    def crossover(self, a: Expression, donor: Expression) -> Expression:
        for _ in range(5):
            path, _ = self.pick_subtree(a)
            _, piece = self.pick_subtree(donor)
            child = replace_at(a, path, piece)
            if self.fits(child):
                return child
        return a

    def subtree_mutation(self, a: Expression) -> Expression:
        if self.rng.random() < 0.5:
            return self.crossover(a, self.random_tree(int(self.rng.integers(0, 5)), full=False))
        # extend instead of replace: s -> s (op) random, so small fit trees can grow
        for _ in range(5):
            path, sub = self.pick_subtree(a, prefer_internal=False)
            op = self.cfg.binary_ops[int(self.rng.integers(len(self.cfg.binary_ops)))]
            extra = self.random_tree(int(self.rng.integers(0, 3)), full=False)
            child = replace_at(a, path, Binary(op, sub, extra))
            if self.fits(child):
                return child
        return a

    def hoist(self, a: Expression) -> Expression:
        path, sub = self.pick_subtree(a)
        _, inner = self.pick_subtree(sub, prefer_internal=False)
        return replace_at(a, path, inner)

    def point(self, a: Expression) -> Expression:
        path, node = self.pick_subtree(a, prefer_internal=False)
        if isinstance(node, Unary) and len(self.cfg.unary_ops) > 0:
            op = self.cfg.unary_ops[int(self.rng.integers(len(self.cfg.unary_ops)))]
            new = Unary(op, node.child)
        elif isinstance(node, Binary):
            op = self.cfg.binary_ops[int(self.rng.integers(len(self.cfg.binary_ops)))]
            new = Binary(op, node.left, node.right)
        else:
            new = self.terminal()
        return replace_at(a, path, new)

    def tournament(self, pop: list[Individual]) -> Individual:
        idx = self.rng.integers(0, len(pop), self.cfg.tournament_size)
        return min((pop[i] for i in idx), key=lambda ind: (ind.search_fitness, ind.complexity))

    def offspring(self, pop: list[Individual]) -> Expression:
        c = self.cfg
        parent = self.tournament(pop).expression
        u = self.rng.random()
        if u < c.p_crossover:
            child = self.crossover(parent, self.tournament(pop).expression)
        elif u < c.p_crossover + c.p_subtree:
            child = self.subtree_mutation(parent)
        elif u < c.p_crossover + c.p_subtree + c.p_hoist:
            child = self.hoist(parent)
        elif u < c.p_crossover + c.p_subtree + c.p_hoist + c.p_point:
            child = self.point(parent)
        else:
            return parent
        # variation that hands back the parent unchanged (typically crossover between
        # clones) is redone as a mutation, so a dominant model cannot fill the population
        if child == parent:
            child = self.subtree_mutation(parent)
        return child


def _better(a: Individual, b: Individual | None) -> bool:
    return b is None or (a.fitness, a.complexity) < (b.fitness, b.complexity)


def evolve_with_stats(X, y, cfg: GPConfig | None = None, names=None) -> GPResult:
    """Run the GP and report the best-ever individual with search statistics.

    ``trace[g]`` is the best fitness seen up to and including generation
    ``g``.

    Raises
    ------
    ValueError
        On empty or non-finite data, or a budget below one generation.
    """
    cfg = cfg or GPConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0 or X.shape[0] != y.size:
        raise ValueError("need a non-empty (n, p) design and n responses")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("data contain non-finite values")
    if cfg.max_evaluations < cfg.population_size:
        raise ValueError("evaluation budget is smaller than one generation")
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(X.shape[1])]

    start = time.perf_counter()
    search = _Search(X, y, cfg, names)
    pop = [search.score(e) for e in search.initial()]
    best = None
    for ind in pop:
        if _better(ind, best):
            best = ind
    result = GPResult(best, [best.fitness], search.evaluations, 1)

    for _ in range(1, cfg.generations):
        if best.mse <= cfg.stop_mse:
            result.stopped_by = "exact"
            break
        if search.evaluations + cfg.population_size > cfg.max_evaluations:
            result.stopped_by = "budget"
            break
        if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
            result.stopped_by = "time"
            break
        elite = min(pop, key=lambda ind: (ind.search_fitness, ind.complexity))
        pop = [elite] + [search.score(search.offspring(pop)) for _ in range(cfg.population_size - 1)]
        for ind in pop:
            if _better(ind, best):
                best = ind
        result.trace.append(best.fitness)
        result.generations += 1

    result.best = best
    result.evaluations = search.evaluations
    result.elapsed = time.perf_counter() - start
    return result


def evolve(X, y, cfg: GPConfig | None = None, names=None) -> Individual:
    """Best-ever individual of a GP run; see :func:`evolve_with_stats`."""
    return evolve_with_stats(X, y, cfg, names).best
