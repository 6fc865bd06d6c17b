"""Numerical evaluation with undefined-as-NaN semantics.

Domain violations (log of a non-positive number, square root of a negative
number, division by zero, ``asin``/``acos`` outside [-1, 1], a fractional
power of a negative base) and any non-finite intermediate value produce NaN
instead of raising. Callers filter with ``np.isfinite``.
"""

from __future__ import annotations

import numpy as np

from .nodes import Binary, Constant, Expression, Unary, Variable, arity

_MAX_REPEATED_POWER = 64


def _clean(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return v if np.isfinite(v) else np.array(np.nan)
    v[~np.isfinite(v)] = np.nan
    return v


def _int_power(base: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        out = np.ones_like(base)
        out[np.isnan(base)] = np.nan
        return out
    acc = base.copy()
    for _ in range(abs(k) - 1):
        acc = acc * base
    if k < 0:
        acc = np.where(acc == 0.0, np.nan, 1.0 / np.where(acc == 0.0, 1.0, acc))
    return acc


def _unary(op: str, a: np.ndarray) -> np.ndarray:
    if op == "neg":
        return -a
    if op == "exp":
        return np.exp(a)
    if op == "log":
        return np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), np.nan)
    if op == "sqrt":
        return np.where(a >= 0, np.sqrt(np.where(a >= 0, a, 0.0)), np.nan)
    if op == "sin":
        return np.sin(a)
    if op == "cos":
        return np.cos(a)
    if op == "tan":
        return np.tan(a)
    if op in ("asin", "acos"):
        ok = np.abs(a) <= 1.0
        f = np.arcsin if op == "asin" else np.arccos
        return np.where(ok, f(np.where(ok, a, 0.0)), np.nan)
    if op == "atan":
        return np.arctan(a)
    if op == "tanh":
        return np.tanh(a)
    if op == "abs":
        return np.abs(a)
    if op == "square":
        return a * a
    raise ValueError(f"unknown unary operator {op!r}")


def _power(base: np.ndarray, expo: np.ndarray, const_expo) -> np.ndarray:
    if const_expo is not None and float(const_expo).is_integer() and abs(const_expo) <= _MAX_REPEATED_POWER:
        return _int_power(base, int(const_expo))
    base, expo = np.broadcast_arrays(base, expo)
    int_expo = np.equal(np.mod(expo, 1.0), 0.0)
    bad = ((base < 0) & ~int_expo) | ((base == 0) & (expo < 0))
    safe_base = np.where(bad, 1.0, base)
    return np.where(bad, np.nan, np.power(safe_base, expo))


def _binary(op: str, a: np.ndarray, b: np.ndarray, right: Expression) -> np.ndarray:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return np.where(b != 0, a / np.where(b != 0, b, 1.0), np.nan)
    if op == "**":
        const = right.value if isinstance(right, Constant) else None
        return _power(a, b, const)
    raise ValueError(f"unknown binary operator {op!r}")


def _eval(e: Expression, X: np.ndarray) -> np.ndarray:
    if isinstance(e, Constant):
        return np.full(X.shape[0], e.value)
    if isinstance(e, Variable):
        return X[:, e.index].astype(float, copy=True)
    if isinstance(e, Unary):
        return _clean(_unary(e.op, _eval(e.child, X)))
    if isinstance(e, Binary):
        a = _eval(e.left, X)
        b = _eval(e.right, X)
        return _clean(_binary(e.op, a, b, e.right))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate_batch(e: Expression, X) -> np.ndarray:
    """Evaluate ``e`` on every row of ``X``; undefined rows become NaN."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if arity(e) > X.shape[1]:
        raise ValueError(f"expression needs {arity(e)} columns, got {X.shape[1]}")
    with np.errstate(all="ignore"):
        return _eval(e, X)


def evaluate(e: Expression, row) -> float:
    """Evaluate ``e`` at a single point. Returns NaN when undefined."""
    row = np.asarray(row, dtype=float).reshape(1, -1)
    return float(evaluate_batch(e, row)[0])
