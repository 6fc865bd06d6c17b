"""Recursive-descent parser and canonical printer for infix formulas.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom (('**' | '^') unary)?
    atom   := NUMBER | NAME | 'pi' | FUNC '(' args ')' | '(' expr ')'

so ``-x**2`` is ``-(x**2)`` and ``a**b**c`` is ``a**(b**c)``. A minus sign
directly in front of a numeric literal that is not itself raised to a power
is folded into a negative constant; the printer relies on this to keep
``parse(to_text(e)) == e``.
"""

from __future__ import annotations

import math
import re
from typing import Sequence

from .nodes import Binary, Constant, Expression, Unary, Variable

RESERVED = {"pi"}

FUNCTIONS = {
    "exp": "exp", "log": "log", "ln": "log", "sqrt": "sqrt",
    "sin": "sin", "cos": "cos", "tan": "tan",
    "asin": "asin", "arcsin": "asin", "acos": "acos", "arccos": "acos",
    "atan": "atan", "arctan": "atan", "tanh": "tanh", "abs": "abs",
    "square": "square", "neg": "neg",
}
BINARY_FUNCTIONS = {"pow": "**"}


class ExpressionError(ValueError):
    """Base class for parse failures."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown identifier {name!r} at position {position}")
        self.name = name
        self.position = position


class ArityError(ExpressionError):
    pass


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.tokens = tokenize(text)
        self.i = 0
        self.names = {n: k for k, n in enumerate(names)}

    def peek(self, offset: int = 0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {what}", pos)
        return self.advance()

    def parse(self) -> Expression:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos)
        return e

    def expr(self) -> Expression:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            e = Binary(op, e, self.term())
        return e

    def term(self) -> Expression:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            e = Binary(op, e, self.unary())
        return e

    def unary(self) -> Expression:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            nxt, after = self.peek(1), self.peek(2)
            if nxt[0] == "num" and after[1] not in ("**", "^"):
                self.advance()
                self.advance()
                return Constant(-float(nxt[1]))
            self.advance()
            return Unary("neg", self.unary())
        if kind == "op" and val == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] in ("**", "^"):
            self.advance()
            return Binary("**", base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, val, pos = self.advance()
        if kind == "num":
            return Constant(float(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            is_call = self.peek()[1] == "(" and self.peek()[0] == "op"
            if is_call and (val in FUNCTIONS or val in BINARY_FUNCTIONS):
                return self.call(val, pos)
            if val in self.names:
                return Variable(self.names[val], val)
            if val == "pi":
                return Constant(math.pi)
            raise UnknownIdentifierError(val, pos)
        if kind == "end":
            raise ExpressionSyntaxError("unexpected end of input", pos)
        raise ExpressionSyntaxError(f"unexpected token {val!r}", pos)

    def call(self, fname: str, pos: int) -> Expression:
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if fname in BINARY_FUNCTIONS:
            if len(args) != 2:
                raise ArityError(f"{fname} takes 2 arguments, got {len(args)} (position {pos})")
            return Binary(BINARY_FUNCTIONS[fname], args[0], args[1])
        if len(args) != 1:
            raise ArityError(f"{fname} takes 1 argument, got {len(args)} (position {pos})")
        return Unary(FUNCTIONS[fname], args[0])


def parse_expression(text: str, variable_names: Sequence[str]) -> Expression:
    """Parse ``text`` into an :class:`Expression`.

    Parameters
    ----------
    text : str
        Infix formula. ``**`` and ``^`` both denote power.
    variable_names : sequence of str
        Declared variable names; the k-th name becomes ``Variable(k)``.

    Raises
    ------
    ExpressionSyntaxError
        Malformed input; carries the 0-based character ``position``.
    UnknownIdentifierError
        A name that is neither declared, a function, nor ``pi``.
    ArityError
        A function called with the wrong number of arguments.
    """
    names = list(variable_names)
    clash = RESERVED.intersection(names) | set(FUNCTIONS).intersection(names)
    if clash:
        raise ValueError(f"reserved names used as variables: {sorted(clash)}")
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable names")
    return _Parser(text, names).parse()


# printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "**": 4}
_ATOM = 5


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _prec(e: Expression) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _PREC["neg"] if e.op == "neg" else _ATOM
    if isinstance(e, Constant) and e.value < 0:  # -0.0 prints as "0", an atom
        return _PREC["neg"]
    return _ATOM


def _wrap(s: str, cond: bool) -> str:
    return f"({s})" if cond else s


def to_text(e: Expression) -> str:
    """Canonical infix text, parseable by :func:`parse_expression`."""
    if isinstance(e, Constant):
        if e.value == 0:
            return "0"
        return _fmt_number(e.value)
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_text(e.child)
            # a bare literal would be folded back into a negative constant
            literal = isinstance(e.child, Constant) and _prec(e.child) == _ATOM
            return "-" + _wrap(inner, literal or _prec(e.child) < _PREC["neg"])
        return f"{e.op}({to_text(e.child)})"
    p = _PREC[e.op]
    lhs, rhs = to_text(e.left), to_text(e.right)
    if e.op == "**":
        lhs = _wrap(lhs, _prec(e.left) <= p)
        rhs = _wrap(rhs, _prec(e.right) < _PREC["neg"])
        return f"{lhs}**{rhs}"
    lhs = _wrap(lhs, _prec(e.left) < p)
    rhs = _wrap(rhs, _prec(e.right) <= p)
    return f"{lhs} {e.op} {rhs}"
