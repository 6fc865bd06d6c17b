"""Ground-truth equation specifications and their CSV catalogue.

CSV columns: ``name, expression, p0, a_1, b_1, ..., a_p0, b_p0`` plus an
optional ``variables`` column holding whitespace-separated variable names.
Without it the variables are called ``x1 .. x{p0}``. Rows may have trailing
empty bound cells when equations of different arity share one file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .nodes import Expression, arity
from .parser import parse_expression


@dataclass(frozen=True)
class EquationSpec:
    name: str
    text: str
    bounds: tuple
    variables: tuple = ()
    expression: Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        names = tuple(self.variables) or tuple(f"x{j + 1}" for j in range(len(bounds)))
        object.__setattr__(self, "variables", names)
        if len(names) != len(bounds):
            raise ValueError(f"{self.name}: {len(names)} variables but {len(bounds)} bounds")
        for j, (a, b) in enumerate(bounds):
            if not a < b:
                raise ValueError(f"{self.name}: bounds of {names[j]} are not increasing ({a}, {b})")
        e = parse_expression(self.text, names)
        if arity(e) > len(names):
            raise ValueError(f"{self.name}: expression arity exceeds p0")
        object.__setattr__(self, "expression", e)

    @property
    def p0(self) -> int:
        return len(self.bounds)


def _read_rows(handle) -> list[EquationSpec]:
    specs = []
    for row in csv.DictReader(handle):
        p0 = int(row["p0"])
        bounds = [(row[f"a_{j}"], row[f"b_{j}"]) for j in range(1, p0 + 1)]
        if any(a in (None, "") or b in (None, "") for a, b in bounds):
            raise ValueError(f"{row['name']}: missing bounds for declared p0={p0}")
        names = tuple((row.get("variables") or "").split())
        specs.append(EquationSpec(row["name"].strip(), row["expression"].strip(), tuple(bounds), names))
    return specs


def load_equations(path=None) -> dict[str, EquationSpec]:
    """Read an equation CSV; the bundled catalogue when ``path`` is None."""
    if path is None:
        with resources.files("pansr").joinpath("data/equations.csv").open("r", newline="") as fh:
            specs = _read_rows(fh)
    else:
        with open(Path(path), newline="") as fh:
            specs = _read_rows(fh)
    return {s.name: s for s in specs}


def get_equation(name: str, path=None) -> EquationSpec:
    catalogue = load_equations(path)
    try:
        return catalogue[name]
    except KeyError:
        raise KeyError(f"unknown equation {name!r}; known: {', '.join(sorted(catalogue))}") from None
