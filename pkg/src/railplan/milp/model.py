"""Solver-agnostic sparse linear model and solve-result containers.

A MipModel is a minimization problem over bounded variables (optionally
integral) and sparse rows with sense <=, = or >=.  Builders append
variables and rows, then seal the model; sealed models are immutable and
cache numpy/scipy views for the solver backends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

INF = math.inf

LESS_EQUAL = "<="
EQUAL = "="
GREATER_EQUAL = ">="
SENSES = (LESS_EQUAL, EQUAL, GREATER_EQUAL)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"


class MilpError(Exception):
    """Base class for engine errors."""


class ModelSealedError(MilpError):
    pass


class ModelFormatError(MilpError):
    pass


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: float = INF
    objective: float = 0.0
    is_integer: bool = False


@dataclass
class Row:
    name: str
    coeffs: Tuple[Tuple[int, float], ...]
    sense: str
    rhs: float


@dataclass
class SolveStats:
    iterations: int = 0
    nodes: int = 0
    ip_time: float = 0.0
    total_time: float = 0.0


@dataclass
class SolveResult:
    """Outcome of an LP or MIP solve.

    duals/reduced_costs are filled by LP solves only; dual_objective is the
    bound implied by them (equal to objective at optimality).
    """

    status: str
    objective: float = math.nan
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    dual_objective: float = math.nan
    bound: float = -INF
    stats: SolveStats = field(default_factory=SolveStats)

    def value(self, index: int) -> float:
        if self.x is None:
            raise MilpError("no solution values available")
        return float(self.x[index])


class MipModel:
    """Sparse minimization model; immutable once sealed."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: List[Variable] = []
        self.rows: List[Row] = []
        self.objective_constant: float = 0.0
        self._var_index: Dict[str, int] = {}
        self._row_names: Dict[str, int] = {}
        self._sealed = False
        self._cache: Dict[str, object] = {}

    # -- construction -----------------------------------------------------

    def _check_open(self) -> None:
        if self._sealed:
            raise ModelSealedError("model is sealed")

    def add_variable(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = INF,
        objective: float = 0.0,
        integer: bool = False,
    ) -> int:
        self._check_open()
        if name in self._var_index:
            raise ModelFormatError(f"duplicate variable name {name!r}")
        if lower > upper:
            raise ModelFormatError(f"variable {name!r} has lower > upper")
        index = len(self.variables)
        self.variables.append(Variable(name, float(lower), float(upper), float(objective), integer))
        self._var_index[name] = index
        return index

    def add_row(
        self,
        name: str,
        coeffs: Iterable[Tuple[int, float]],
        sense: str,
        rhs: float,
    ) -> int:
        self._check_open()
        if sense not in SENSES:
            raise ModelFormatError(f"bad row sense {sense!r}")
        if name in self._row_names:
            raise ModelFormatError(f"duplicate row name {name!r}")
        combined: Dict[int, float] = {}
        order: List[int] = []
        for index, coef in coeffs:
            if not (0 <= index < len(self.variables)):
                raise ModelFormatError(f"row {name!r} references unknown variable {index}")
            if index not in combined:
                combined[index] = 0.0
                order.append(index)
            combined[index] += float(coef)
        row = Row(name, tuple((i, combined[i]) for i in order), sense, float(rhs))
        self._row_names[name] = len(self.rows)
        self.rows.append(row)
        return len(self.rows) - 1

    def add_objective_constant(self, value: float) -> None:
        self._check_open()
        self.objective_constant += float(value)

    def set_objective(self, index: int, coefficient: float) -> None:
        self._check_open()
        self.variables[index].objective = float(coefficient)

    def set_bounds(self, index: int, lower: float, upper: float) -> None:
        self._check_open()
        if lower > upper:
            raise ModelFormatError(f"variable {self.variables[index].name!r} lower > upper")
        self.variables[index].lower = float(lower)
        self.variables[index].upper = float(upper)

    def seal(self) -> "MipModel":
        self._sealed = True
        return self

    # -- sealed views ------------------------------------------------------

    @property
    def sealed(self) -> bool:
        return self._sealed

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def variable_index(self, name: str) -> int:
        return self._var_index[name]

    def has_variable(self, name: str) -> bool:
        return name in self._var_index

    def row_index(self, name: str) -> int:
        return self._row_names[name]

    def _cached(self, key: str, build):
        if not self._sealed:
            return build()
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def lower_bounds(self) -> np.ndarray:
        return self._cached(
            "lower", lambda: np.array([v.lower for v in self.variables], dtype=float)
        )

    def upper_bounds(self) -> np.ndarray:
        return self._cached(
            "upper", lambda: np.array([v.upper for v in self.variables], dtype=float)
        )

    def objective_vector(self) -> np.ndarray:
        return self._cached(
            "objective", lambda: np.array([v.objective for v in self.variables], dtype=float)
        )

    def integer_indices(self) -> np.ndarray:
        return self._cached(
            "integers",
            lambda: np.array(
                [i for i, v in enumerate(self.variables) if v.is_integer], dtype=int
            ),
        )

    def matrix(self) -> sparse.csr_matrix:
        def build():
            data: List[float] = []
            indices: List[int] = []
            indptr = [0]
            for row in self.rows:
                for index, coef in row.coeffs:
                    indices.append(index)
                    data.append(coef)
                indptr.append(len(indices))
            return sparse.csr_matrix(
                (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
                shape=(len(self.rows), len(self.variables)),
            )

        return self._cached("matrix", build)

    def rhs_vector(self) -> np.ndarray:
        return self._cached("rhs", lambda: np.array([r.rhs for r in self.rows], dtype=float))

    def senses(self) -> Tuple[str, ...]:
        return self._cached("senses", lambda: tuple(r.sense for r in self.rows))

    # -- evaluation --------------------------------------------------------

    def objective_value(self, x: Sequence[float]) -> float:
        return float(self.objective_vector() @ np.asarray(x, dtype=float)) + self.objective_constant

    def row_activity(self, x: Sequence[float]) -> np.ndarray:
        return self.matrix() @ np.asarray(x, dtype=float)

    def violations(self, x: Sequence[float], tol: float = 1e-6) -> List[str]:
        """Names of all rows/bounds/integralities violated by x beyond tol."""
        x = np.asarray(x, dtype=float)
        found: List[str] = []
        lower = self.lower_bounds()
        upper = self.upper_bounds()
        for i in np.where((x < lower - tol) | (x > upper + tol))[0]:
            found.append(f"bounds of {self.variables[int(i)].name}")
        activity = self.row_activity(x)
        for i, row in enumerate(self.rows):
            a = activity[i]
            if row.sense == LESS_EQUAL and a > row.rhs + tol:
                found.append(row.name)
            elif row.sense == GREATER_EQUAL and a < row.rhs - tol:
                found.append(row.name)
            elif row.sense == EQUAL and abs(a - row.rhs) > tol:
                found.append(row.name)
        for i in self.integer_indices():
            if abs(x[i] - round(x[i])) > tol:
                found.append(f"integrality of {self.variables[int(i)].name}")
        return found

    def copy_shape(self) -> "MipModel":
        """Open (unsealed) structural copy: variables, rows, objective."""
        clone = MipModel(self.name)
        for v in self.variables:
            clone.add_variable(v.name, v.lower, v.upper, v.objective, v.is_integer)
        for r in self.rows:
            clone.add_row(r.name, r.coeffs, r.sense, r.rhs)
        clone.objective_constant = self.objective_constant
        return clone
