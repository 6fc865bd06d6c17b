"""Bounded term rewriting.

This is not a computer algebra system. It folds constants, removes neutral
and absorbing elements, cancels double negation and ``x - x`` / ``x / x``,
and merges numeric constants inside chains of ``+``/``-`` and ``*``/``/``.
Every rewrite preserves the value at points where the input is defined.
"""

from __future__ import annotations

import math

import numpy as np

from .evaluate import _binary, _unary
from .nodes import Binary, Constant, Expression, Unary, size

MAX_PASSES = 16


def _const(e) -> bool:
    return isinstance(e, Constant)


def _is(e, value: float) -> bool:
    return isinstance(e, Constant) and e.value == value


def _fold_unary(op: str, c: Constant):
    with np.errstate(all="ignore"):
        v = float(_unary(op, np.array([c.value]))[0])
    return Constant(v) if math.isfinite(v) else None


def _fold_binary(op: str, a: Constant, b: Constant):
    with np.errstate(all="ignore"):
        v = float(_binary(op, np.array([a.value]), np.array([b.value]), b)[0])
    return Constant(v) if math.isfinite(v) else None


def _sum_terms(e, sign, out):
    if isinstance(e, Binary) and e.op in ("+", "-"):
        _sum_terms(e.left, sign, out)
        _sum_terms(e.right, sign if e.op == "+" else -sign, out)
    elif isinstance(e, Unary) and e.op == "neg":
        _sum_terms(e.child, -sign, out)
    else:
        out.append((sign, e))


def _merge_sum(e: Binary):
    terms: list = []
    _sum_terms(e, 1, terms)
    consts = [s * t.value for s, t in terms if _const(t)]
    if len(consts) < 2:
        return None
    total = math.fsum(consts)
    rest = [(s, t) for s, t in terms if not _const(t)]
    if not math.isfinite(total):
        return None
    if not rest:
        return Constant(total)
    s0, t0 = rest[0]
    out = t0 if s0 > 0 else Unary("neg", t0)
    for s, t in rest[1:]:
        out = Binary("+" if s > 0 else "-", out, t)
    if total > 0:
        out = Binary("+", out, Constant(total))
    elif total < 0:
        out = Binary("-", out, Constant(-total))
    return out


def _prod_factors(e, inv, out):
    if isinstance(e, Binary) and e.op in ("*", "/"):
        _prod_factors(e.left, inv, out)
        _prod_factors(e.right, inv if e.op == "*" else not inv, out)
    else:
        out.append((inv, e))


def _merge_product(e: Binary):
    factors: list = []
    _prod_factors(e, False, factors)
    consts = [(inv, f.value) for inv, f in factors if _const(f)]
    if len(consts) < 2:
        return None
    c = 1.0
    for inv, v in consts:
        if inv and v == 0.0:
            return None
        c = c / v if inv else c * v
    if not math.isfinite(c):
        return None
    rest = [(inv, f) for inv, f in factors if not _const(f)]
    if c == 0.0 or not rest:
        return Constant(c)
    out = None if c == 1.0 else Constant(c)
    for inv, f in rest:
        if out is None:
            out = Binary("/", Constant(1.0), f) if inv else f
        else:
            out = Binary("/" if inv else "*", out, f)
    return out


def _rewrite(e: Expression, guards: list) -> Expression:
    if isinstance(e, Unary):
        a = _rewrite(e.child, guards)
        if _const(a):
            folded = _fold_unary(e.op, a)
            if folded is not None:
                return folded
        if e.op == "neg" and isinstance(a, Unary) and a.op == "neg":
            return a.child
        return Unary(e.op, a)

    if not isinstance(e, Binary):
        return e
    a = _rewrite(e.left, guards)
    b = _rewrite(e.right, guards)
    op = e.op
    if _const(a) and _const(b):
        folded = _fold_binary(op, a, b)
        if folded is not None:
            return folded
    if op == "+":
        if _is(b, 0.0):
            return a
        if _is(a, 0.0):
            return b
        if isinstance(b, Unary) and b.op == "neg":
            return Binary("-", a, b.child)
    elif op == "-":
        if _is(b, 0.0):
            return a
        if _is(a, 0.0):
            return Unary("neg", b)
        if a == b:
            return Constant(0.0)
        if isinstance(b, Unary) and b.op == "neg":
            return Binary("+", a, b.child)
    elif op == "*":
        if _is(b, 1.0):
            return a
        if _is(a, 1.0):
            return b
        if _is(a, 0.0) or _is(b, 0.0):
            return Constant(0.0)
        if _is(a, -1.0):
            return Unary("neg", b)
        if _is(b, -1.0):
            return Unary("neg", a)
    elif op == "/":
        if _is(b, 1.0):
            return a
        if a == b and not _const(a):
            if b not in guards:
                guards.append(b)
            return Constant(1.0)
        if _is(a, 0.0) and not _const(b):
            if b not in guards:
                guards.append(b)
            return Constant(0.0)
    elif op == "**":
        if _is(b, 1.0):
            return a
        if _is(b, 0.0):
            return Constant(1.0)
        if _is(a, 1.0):
            return Constant(1.0)
    out = Binary(op, a, b)
    if op in ("+", "-"):
        merged = _merge_sum(out)
    elif op in ("*", "/"):
        merged = _merge_product(out)
    else:
        merged = None
    if merged is not None and size(merged) <= size(out):
        return merged
    return out


def simplify_with_guards(e: Expression) -> tuple[Expression, tuple]:
    """Simplify ``e`` and report the sub-expressions assumed nonzero.

    Cancelling ``x / x`` to ``1`` is only valid where ``x != 0``; every such
    ``x`` is returned in the guard tuple.
    """
    guards: list = []
    for _ in range(MAX_PASSES):
        new = _rewrite(e, guards)
        if new == e:
            break
        e = new
    return e, tuple(guards)


def simplify(e: Expression) -> Expression:
    """Rewrite ``e`` to a smaller expression with the same defined values."""
    return simplify_with_guards(e)[0]
