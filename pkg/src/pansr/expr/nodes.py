"""Immutable expression trees.

Four node kinds cover every formula handled by the package: numeric
constants, column variables, unary operator applications and binary operator
applications. Nodes are frozen dataclasses, so they hash, compare
structurally and can be shared freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Union

UNARY_OPS = (
    "neg", "exp", "log", "sqrt", "sin", "cos", "tan",
    "asin", "acos", "atan", "tanh", "abs", "square",
)
BINARY_OPS = ("+", "-", "*", "/", "**")


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError(f"constant must be finite, got {self.value!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Variable:
    """Reference to column ``index`` (0-based) of the design matrix.

    The display name does not take part in equality or hashing: two variables
    are the same variable when they read the same column.
    """

    index: int
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("variable index must be non-negative")
        if not self.name:
            object.__setattr__(self, "name", f"x{self.index + 1}")


@dataclass(frozen=True)
class Unary:
    op: str
    child: "Expression"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operator {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")


Expression = Union[Constant, Variable, Unary, Binary]


def children(e: Expression) -> tuple:
    if isinstance(e, Unary):
        return (e.child,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    return ()


def iter_nodes(e: Expression) -> Iterator[Expression]:
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def size(e: Expression) -> int:
    """Number of nodes (no simplification)."""
    return sum(1 for _ in iter_nodes(e))


def depth(e: Expression) -> int:
    """Depth of the tree; a single leaf has depth 0."""
    if isinstance(e, Unary):
        return 1 + depth(e.child)
    if isinstance(e, Binary):
        return 1 + max(depth(e.left), depth(e.right))
    return 0


def arity(e: Expression) -> int:
    """Smallest row length that can be used to evaluate ``e``."""
    idx = [n.index for n in iter_nodes(e) if isinstance(n, Variable)]
    return max(idx) + 1 if idx else 0


def variable_indices(e: Expression) -> set[int]:
    """Indices of variables occurring syntactically in ``e``."""
    return {n.index for n in iter_nodes(e) if isinstance(n, Variable)}


def remap_variables(e: Expression, mapping, names=None) -> Expression:
    """Rewrite variable ``i`` as variable ``mapping[i]``.

    Used to lift a model fitted on a column subset back to the full design
    matrix. ``names``, when given, supplies display names for the new indices.
    """
    if isinstance(e, Variable):
        j = int(mapping[e.index])
        return Variable(j, names[j] if names is not None else "")
    if isinstance(e, Unary):
        return Unary(e.op, remap_variables(e.child, mapping, names))
    if isinstance(e, Binary):
        return Binary(e.op, remap_variables(e.left, mapping, names),
                      remap_variables(e.right, mapping, names))
    return e


def subtrees(e: Expression) -> list[tuple[tuple[int, ...], Expression]]:
    """All ``(path, node)`` pairs; a path is a sequence of child positions."""
    out = []
    stack = [((), e)]
    while stack:
        path, node = stack.pop()
        out.append((path, node))
        for k, c in reversed(list(enumerate(children(node)))):
            stack.append((path + (k,), c))
    return out


def get_at(e: Expression, path) -> Expression:
    for k in path:
        e = children(e)[k]
    return e


def replace_at(e: Expression, path, new: Expression) -> Expression:
    """Return a copy of ``e`` with the node at ``path`` replaced by ``new``."""
    if not path:
        return new
    k, rest = path[0], path[1:]
    if isinstance(e, Unary):
        return Unary(e.op, replace_at(e.child, rest, new))
    if isinstance(e, Binary):
        if k == 0:
            return Binary(e.op, replace_at(e.left, rest, new), e.right)
        return Binary(e.op, e.left, replace_at(e.right, rest, new))
    raise IndexError("path descends below a leaf")
