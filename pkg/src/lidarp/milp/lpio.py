"""Plain-text model export and solution import.

``export_lp`` writes the CPLEX LP text format (Maximize / Subject To /
Bounds / Binaries / End) so any external solver can consume the model;
``import_solution`` reads back a whitespace-separated ``name value`` file
and reconstructs a :class:`MilpSolution` with the objective recomputed
exactly from the model.
"""

from __future__ import annotations

import warnings
from fractions import Fraction

from lidarp.milp.model import (
    BINARY,
    INF,
    MilpModel,
    MilpSolution,
    ModelError,
    SolveStatus,
)

_BIN_TOL = 1e-6


class ValueOutOfBounds(ModelError):
    """A solution value violates a variable's declared bounds."""


def _num(x) -> str:
    f = float(x)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def _terms(pairs, model) -> str:
    parts = []
    for vid, coef in pairs:
        name = model.variables[vid].name
        c = float(coef)
        if not parts:
            if c < 0:
                parts.append(f"- {_num(-c)} {name}" if c != -1 else f"- {name}")
            else:
                parts.append(f"{_num(c)} {name}" if c != 1 else name)
        else:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            parts.append(f"{sign} {_num(mag)} {name}" if mag != 1 else f"{sign} {name}")
    return " ".join(parts) if parts else "0"


def export_lp(model: MilpModel) -> str:
    """Render ``model`` in LP text format (deterministic: variable-id order)."""
    obj_pairs = [(v.id, v.obj) for v in model.variables if v.obj != 0]
    lines = ["Maximize", f" obj: {_terms(obj_pairs, model)}", "Subject To"]
    for con in model.constraints:
        pairs = [(vid, coef) for coef, vid in con.terms]
        lines.append(f" {con.name}: {_terms(pairs, model)} {con.sense} {_num(con.rhs)}")
    bounds = []
    for v in model.variables:
        if v.kind == BINARY:
            continue
        lo, hi = v.lower, v.upper
        if lo == 0 and hi == INF:
            continue
        lo_s = "-inf" if lo == -INF else _num(lo)
        hi_s = "+inf" if hi == INF else _num(hi)
        if lo == hi:
            bounds.append(f" {v.name} = {lo_s}")
        else:
            bounds.append(f" {lo_s} <= {v.name} <= {hi_s}")
    if bounds:
        lines.append("Bounds")
        lines.extend(bounds)
    bins = model.binaries()
    if bins:
        lines.append("Binaries")
        lines.extend(f" {v.name}" for v in bins)
    lines.append("End")
    return "\n".join(lines) + "\n"


def import_solution(model: MilpModel, text: str) -> MilpSolution:
    """Parse ``name value`` lines into a solution for ``model``.

    Unknown names warn and are skipped; absent variables default to 0.
    Binary variables must sit within ``1e-6`` of 0 or 1 and are snapped.
    """
    values: dict[int, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ModelError(f"line {lineno}: expected 'name value', got {raw!r}")
        name, val_s = parts
        if not model.has_var(name):
            warnings.warn(f"solution mentions unknown variable {name!r}; ignored")
            continue
        try:
            val = Fraction(val_s)
        except ValueError as exc:
            raise ModelError(f"line {lineno}: bad number {val_s!r}") from exc
        values[model.var_id(name)] = val
    for v in model.variables:
        x = values.get(v.id, Fraction(0))
        if v.kind == BINARY:
            if abs(float(x)) <= _BIN_TOL:
                x = 0
            elif abs(float(x) - 1.0) <= _BIN_TOL:
                x = 1
            else:
                raise ValueOutOfBounds(f"{v.name}: {float(x)} is not within 1e-6 of 0 or 1")
        else:
            if float(x) < float(v.lower) - _BIN_TOL or float(x) > float(v.upper) + _BIN_TOL:
                raise ValueOutOfBounds(f"{v.name}: {float(x)} outside [{v.lower}, {v.upper}]")
        values[v.id] = x
    obj = model.objective_value(values)
    return MilpSolution(SolveStatus.FEASIBLE, values, obj, obj, 0, 0, 0.0)
