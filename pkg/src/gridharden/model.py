"""Solver-agnostic mixed-integer linear model container.

A model is a variable table (bounds + integrality), a list of tagged sparse
rows with sense/rhs, and a minimize objective. Every row carries the tag of
the constraint family it encodes, so emitted files can be audited row by
row. Construction order is deterministic; emission reuses it verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

SENSE_LE = "<="
SENSE_GE = ">="
SENSE_EQ = "=="

ROW_FEAS_TOL = 1e-6
BOUND_FEAS_TOL = 1e-9
INT_FEAS_TOL = 1e-6


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    is_integer: bool = False


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: Mapping[str, float]
    sense: str
    rhs: float
    tag: str

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.coeffs.items())

    def satisfied(self, values: Mapping[str, float], tol: float = ROW_FEAS_TOL) -> bool:
        a = self.activity(values)
        if self.sense == SENSE_LE:
            return a <= self.rhs + tol
        if self.sense == SENSE_GE:
            return a >= self.rhs - tol
        return abs(a - self.rhs) <= tol


class MilpModel:
    """Mutable while being built; treated as immutable afterwards."""

    def __init__(self, name: str = "model", metadata: dict | None = None):
        self.name = name
        self.variables: list[Variable] = []
        self.index_of: dict[str, int] = {}
        self.rows: list[Row] = []
        self.row_names: set[str] = set()
        self.objective: dict[str, float] = {}
        self.metadata: dict = metadata or {}

    # -- construction -------------------------------------------------------

    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf,
                     integer: bool = False) -> str:
        if name in self.index_of:
            raise ValueError(f"duplicate variable {name!r}")
        if any(ch.isspace() for ch in name) or not name:
            raise ValueError(f"invalid variable name {name!r}")
        if lb > ub:
            raise ValueError(f"variable {name!r}: lb {lb} > ub {ub}")
        self.index_of[name] = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), integer))
        return name

    def add_row(self, name: str, coeffs: Mapping[str, float], sense: str,
                rhs: float, tag: str) -> None:
        if name in self.row_names:
            raise ValueError(f"duplicate row {name!r}")
        if sense not in (SENSE_LE, SENSE_GE, SENSE_EQ):
            raise ValueError(f"row {name!r}: bad sense {sense!r}")
        for v in coeffs:
            if v not in self.index_of:
                raise ValueError(f"row {name!r} references undeclared variable {v!r}")
        self.row_names.add(name)
        self.rows.append(Row(name, {v: float(c) for v, c in coeffs.items() if c != 0.0},
                             sense, float(rhs), tag))

    def set_objective(self, coeffs: Mapping[str, float]) -> None:
        for v in coeffs:
            if v not in self.index_of:
                raise ValueError(f"objective references undeclared variable {v!r}")
        self.objective = {v: float(c) for v, c in coeffs.items() if c != 0.0}

    def set_bounds(self, name: str, lb: float, ub: float) -> None:
        idx = self.index_of[name]
        old = self.variables[idx]
        if lb > ub:
            raise ValueError(f"variable {name!r}: lb {lb} > ub {ub}")
        self.variables[idx] = Variable(old.name, float(lb), float(ub), old.is_integer)

    # -- views ---------------------------------------------------------------

    def variable(self, name: str) -> Variable:
        return self.variables[self.index_of[name]]

    def has_variable(self, name: str) -> bool:
        return name in self.index_of

    @property
    def binaries(self) -> list[Variable]:
        return [v for v in self.variables if v.is_integer]

    @property
    def free_binaries(self) -> list[Variable]:
        """Integer variables whose bounds leave more than one value."""
        return [v for v in self.variables if v.is_integer and v.lb != v.ub]

    @property
    def n_continuous(self) -> int:
        return sum(1 for v in self.variables if not v.is_integer)

    def objective_value(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.objective.items())

    def rows_tagged(self, tag: str) -> list[Row]:
        return [r for r in self.rows if r.tag == tag]

    # -- manipulation --------------------------------------------------------

    def copy(self) -> "MilpModel":
        dup = MilpModel(self.name, dict(self.metadata))
        dup.variables = list(self.variables)
        dup.index_of = dict(self.index_of)
        dup.rows = list(self.rows)
        dup.row_names = set(self.row_names)
        dup.objective = dict(self.objective)
        return dup

    def fixed(self, values: Mapping[str, float]) -> "MilpModel":
        """Copy with the given variables pinned via equal bounds."""
        dup = self.copy()
        for name, val in values.items():
            dup.set_bounds(name, val, val)
        return dup

    # -- verification --------------------------------------------------------

    def check_solution(self, values: Mapping[str, float],
                       row_tol: float = ROW_FEAS_TOL,
                       bound_tol: float = BOUND_FEAS_TOL,
                       int_tol: float = INT_FEAS_TOL) -> list[str]:
        """All feasibility violations of a candidate point (empty if feasible)."""
        problems: list[str] = []
        for v in self.variables:
            if v.name not in values:
                problems.append(f"missing value for {v.name}")
                continue
            x = values[v.name]
            if x < v.lb - bound_tol or x > v.ub + bound_tol:
                problems.append(f"{v.name}={x} outside bounds [{v.lb}, {v.ub}]")
            if v.is_integer and abs(x - round(x)) > int_tol:
                problems.append(f"{v.name}={x} not integral")
        if problems:
            return problems
        for row in self.rows:
            if not row.satisfied(values, row_tol):
                problems.append(
                    f"row {row.name} [{row.tag}] violated: activity "
                    f"{row.activity(values):.9g} {row.sense} {row.rhs:.9g}")
        return problems


@dataclass(frozen=True)
class BaselineReference:
    """Total and per-index vulnerable load shed of the no-budget reference run."""

    total_shed: float
    vuln_shed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vuln_shed", dict(self.vuln_shed))
        for idx, v in self.vuln_shed.items():
            if not -1e-9 <= v <= self.total_shed + 1e-9:
                raise ValueError(
                    f"vulnerable shed {idx}={v} outside [0, total={self.total_shed}]")
