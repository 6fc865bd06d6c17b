"""Expression language: trees, parser, evaluator, simplifier, complexity."""

from .equations import EquationSpec, get_equation, load_equations
from .evaluate import evaluate, evaluate_batch
from .nodes import (
    BINARY_OPS,
    UNARY_OPS,
    Binary,
    Constant,
    Expression,
    Unary,
    Variable,
    arity,
    depth,
    remap_variables,
    size,
)
from .parser import (
    ArityError,
    ExpressionError,
    ExpressionSyntaxError,
    UnknownIdentifierError,
    parse_expression,
    to_text,
)
from .simplify import simplify, simplify_with_guards


def complexity(e: Expression) -> int:
    """Operators + variable occurrences + constant occurrences after simplification."""
    return size(simplify(e))


def variables_used(e: Expression) -> set[int]:
    """0-based column indices that survive simplification."""
    from .nodes import variable_indices

    return variable_indices(simplify(e))


__all__ = [
    "ArityError", "BINARY_OPS", "Binary", "Constant", "EquationSpec", "Expression",
    "ExpressionError", "ExpressionSyntaxError", "UNARY_OPS", "Unary",
    "UnknownIdentifierError", "Variable", "arity", "complexity", "depth",
    "evaluate", "evaluate_batch", "get_equation", "load_equations",
    "parse_expression", "remap_variables", "simplify", "simplify_with_guards",
    "size", "to_text", "variables_used",
]
