"""Solver-agnostic MILP representation with name-stable export.

Coefficients are kept as exact rationals; the numeric backend decides
whether to solve in doubles or exactly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

BINARY = "binary"
CONTINUOUS = "continuous"

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_.#+-]*\Z")

INF = float("inf")


class NameCollision(Exception):
    pass


class ModelError(Exception):
    pass


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time_limit"


@dataclass
class Variable:
    id: int
    name: str
    kind: str
    lower: Fraction
    upper: Fraction | float  # INF marks an unbounded variable
    obj: Fraction = Fraction(0)
    tag: str | None = None


@dataclass
class LinearConstraint:
    name: str
    terms: tuple[tuple[Fraction, int], ...]
    sense: str  # "<=", ">=", "="
    rhs: Fraction


@dataclass
class MilpSolution:
    status: SolveStatus
    values: dict[int, Fraction | float]
    objective: Fraction | float
    bound: Fraction | float
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0

    def gap(self) -> float:
        scale = max(1.0, abs(float(self.objective)))
        return abs(float(self.bound) - float(self.objective)) / scale

    def value_by_name(self, model: "MilpModel", name: str):
        return self.values.get(model.var_id(name), 0)


class MilpModel:
    """Maximization MILP over binary and continuous variables."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[LinearConstraint] = []
        self._names: dict[str, int] = {}
        self._constraint_names: set[str] = set()

    # -- construction -------------------------------------------------

    def add_var(
        self,
        name: str,
        kind: str = CONTINUOUS,
        lower=0,
        upper=INF,
        obj=0,
        tag: str | None = None,
    ) -> int:
        if not _NAME_RE.match(name):
            raise ModelError(f"invalid variable name {name!r}")
        if name in self._names:
            raise NameCollision(f"variable name {name!r} already used")
        if kind == BINARY:
            lower, upper = Fraction(0), Fraction(1)
        else:
            lower = Fraction(lower)
            upper = INF if upper == INF else Fraction(upper)
            if upper != INF and lower > upper:
                raise ModelError(f"variable {name!r}: lower > upper")
        vid = len(self.variables)
        self.variables.append(Variable(vid, name, kind, lower, upper, Fraction(obj), tag))
        self._names[name] = vid
        return vid

    def add_constraint(self, name: str, terms: Iterable[tuple], sense: str, rhs) -> int:
        if sense not in ("<=", ">=", "="):
            raise ModelError(f"bad sense {sense!r}")
        merged: dict[int, Fraction] = {}
        for coef, vid in terms:
            if not 0 <= vid < len(self.variables):
                raise ModelError(f"constraint {name!r}: unknown variable id {vid}")
            merged[vid] = merged.get(vid, Fraction(0)) + Fraction(coef)
        packed = tuple((c, v) for v, c in sorted(merged.items()) if c != 0)
        if not packed:
            # trivially satisfied or trivially violated; keep violated ones visible
            rhs = Fraction(rhs)
            ok = (sense == "<=" and rhs >= 0) or (sense == ">=" and rhs <= 0) or (sense == "=" and rhs == 0)
            if ok:
                return -1
            raise ModelError(f"constraint {name!r} is empty and unsatisfiable")
        if name in self._constraint_names:
            suffix = 2
            while f"{name}.{suffix}" in self._constraint_names:
                suffix += 1
            name = f"{name}.{suffix}"
        self._constraint_names.add(name)
        self.constraints.append(LinearConstraint(name, packed, sense, Fraction(rhs)))
        return len(self.constraints) - 1

    def add_objective(self, vid: int, coef) -> None:
        self.variables[vid].obj += Fraction(coef)

    # -- queries ------------------------------------------------------

    def var_id(self, name: str) -> int:
        return self._names[name]

    def var(self, name: str) -> Variable:
        return self.variables[self._names[name]]

    def has_var(self, name: str) -> bool:
        return name in self._names

    def binaries(self) -> list[Variable]:
        return [v for v in self.variables if v.kind == BINARY]

    def n_binary(self) -> int:
        return sum(1 for v in self.variables if v.kind == BINARY)

    def n_continuous(self) -> int:
        return sum(1 for v in self.variables if v.kind == CONTINUOUS)

    def objective_value(self, values: dict[int, Fraction | float]):
        """Objective recomputed from variable values; exact if the values are."""
        total = Fraction(0)
        for v in self.variables:
            if v.obj:
                x = values.get(v.id, 0)
                total = total + v.obj * (x if isinstance(x, (int, Fraction)) else Fraction(x))
        return total

    def metadata(self) -> dict[str, str]:
        return {v.name: v.tag for v in self.variables if v.tag is not None}
