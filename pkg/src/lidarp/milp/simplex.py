"""Two-phase bounded-variable simplex over a :class:`MilpModel` relaxation.

Two numeric modes share one pivot loop: ``float`` (double precision,
numba-accelerated) and ``exact`` (rational arithmetic, zero tolerances).
Bland's rule engages after 10 * rows degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from lidarp.milp.kernels import (
    STATUS_ITER_LIMIT,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    pivot_loop_exact,
    pivot_loop_float,
)
from lidarp.milp.model import INF, MilpModel, SolveStatus

try:  # gmpy2 rationals are several times faster than Fraction
    from gmpy2 import mpq as _mpq
except ImportError:  # pragma: no cover
    _mpq = Fraction

RC_EPS = 1e-9
PIV_TOL = 1e-7
TIE_TOL = 1e-7
FEAS_TOL = 1e-7
PERT_EPS = 1e-5


class SimplexError(Exception):
    pass


@dataclass
class LpResult:
    status: SolveStatus
    objective: Fraction | float
    values: dict[int, Fraction | float]
    iterations: int = 0
    pivots_after_bland: int = 0
    rows: int = 0
    cols: int = 0


def _standardize(model: MilpModel, bounds_override):
    """Resolve per-variable bounds, split fixed variables out, shift lowers to 0."""
    free_ids = []
    shifts = {}
    uppers = {}
    fixed = {}
    for v in model.variables:
        lo, hi = v.lower, v.upper
        if bounds_override and v.id in bounds_override:
            olo, ohi = bounds_override[v.id]
            lo = max(lo, olo)
            hi = hi if ohi == INF else (min(hi, ohi) if hi != INF else ohi)
        if hi != INF and lo > hi:
            return None, None, None, None
        if hi != INF and lo == hi:
            fixed[v.id] = lo
        else:
            shifts[v.id] = lo
            uppers[v.id] = INF if hi == INF else hi - lo
            free_ids.append(v.id)
    return free_ids, shifts, uppers, fixed


def solve_lp(
    model: MilpModel,
    mode: str = "float",
    bounds_override: dict[int, tuple] | None = None,
    max_iter: int | None = None,
    _perturb: bool = True,
) -> LpResult:
    """Solve the LP relaxation (integrality dropped) of ``model``.

    ``bounds_override`` maps variable ids to tightened (lower, upper) pairs;
    branch-and-bound uses it to fix binaries without rebuilding the model.
    """
    if mode not in ("float", "exact"):
        raise SimplexError(f"unknown mode {mode!r}")
    exact = mode == "exact"
    free_ids, shifts, uppers, fixed = _standardize(model, bounds_override)
    if free_ids is None:
        return LpResult(SolveStatus.INFEASIBLE, 0, {})
    col_of = {vid: j for j, vid in enumerate(free_ids)}
    ns = len(free_ids)

    rows = []  # (coef_by_col, sense, rhs)
    for con in model.constraints:
        coefs: dict[int, Fraction] = {}
        rhs = con.rhs
        for coef, vid in con.terms:
            if vid in fixed:
                rhs -= coef * fixed[vid]
            else:
                rhs -= coef * shifts[vid]
                coefs[col_of[vid]] = coefs.get(col_of[vid], Fraction(0)) + coef
        if not coefs:
            viol = (
                (con.sense == "<=" and rhs < (0 if exact else -FEAS_TOL))
                or (con.sense == ">=" and rhs > (0 if exact else FEAS_TOL))
                or (con.sense == "=" and (rhs != 0 if exact else abs(rhs) > FEAS_TOL))
            )
            if viol:
                return LpResult(SolveStatus.INFEASIBLE, 0, {})
            continue
        if rhs < 0:  # keep b nonnegative for the identity start basis
            coefs = {j: -c for j, c in coefs.items()}
            sense = {"<=": ">=", ">=": "<=", "=": "="}[con.sense]
            rhs = -rhs
        else:
            sense = con.sense
        rows.append((coefs, sense, rhs))

    m = len(rows)
    n_slack = sum(1 for _, s, _ in rows if s in ("<=", ">="))
    n_art = sum(1 for _, s, _ in rows if s in ("=", ">="))
    n = ns + n_slack + n_art

    if exact:
        zero = _mpq(0)
        T = np.full((m, n), zero, dtype=object)
        xB = np.full(m, zero, dtype=object)
        u = np.full(n, np.inf, dtype=object)
        c2 = np.full(n, zero, dtype=object)
        c1 = np.full(n, zero, dtype=object)

        def num(x):
            return _mpq(x.numerator, x.denominator) if isinstance(x, Fraction) else _mpq(x)

    else:
        T = np.zeros((m, n))
        xB = np.zeros(m)
        u = np.full(n, np.inf)
        c2 = np.zeros(n)
        c1 = np.zeros(n)
        num = float

    for vid in free_ids:
        j = col_of[vid]
        if uppers[vid] != INF:
            u[j] = num(uppers[vid])
        if model.variables[vid].obj:
            c2[j] = num(-model.variables[vid].obj)  # maximize -> minimize

    basis = np.empty(m, dtype=np.int64)
    vstat = np.zeros(n, dtype=np.int8)
    sl = ns
    ar = ns + n_slack
    art_cols = []
    for i, (coefs, sense, rhs) in enumerate(rows):
        for j, coef in coefs.items():
            T[i, j] = num(coef)
        xB[i] = num(rhs)
        if sense == "<=":
            T[i, sl] = num(1)
            basis[i] = sl
            sl += 1
        elif sense == ">=":
            T[i, sl] = num(-1)
            sl += 1
            T[i, ar] = num(1)
            c1[ar] = num(1)
            basis[i] = ar
            art_cols.append(ar)
            ar += 1
        else:
            T[i, ar] = num(1)
            c1[ar] = num(1)
            basis[i] = ar
            art_cols.append(ar)
            ar += 1
    for i in range(m):
        vstat[basis[i]] = 2

    if max_iter is None:
        max_iter = 2000 + 200 * (m + n)
    bland_after = 10 * max(m, 1)
    total_iters = 0
    total_after_bland = 0

    # pristine float copies for periodic tableau refresh: long degenerate
    # pivot sequences accumulate roundoff, so the float path re-derives the
    # tableau from the original data between pivot chunks.  A deterministic
    # positive rhs perturbation breaks primal degeneracy during pivoting;
    # the final refresh against the true rhs recovers exact basic values
    # (the optimal objective depends only on dual feasibility, not on b).
    if not exact and m:
        A0 = T.copy()
        b0 = xB.copy()
        if _perturb:
            rng = np.random.default_rng(0x5EED)
            b_work = b0 + PERT_EPS * (1.0 + np.abs(b0)) * rng.uniform(0.5, 1.0, m)
        else:
            b_work = b0
        xB[:] = b_work

    def _refresh(rhs0=None):
        if exact or not m:
            return
        base = b_work if rhs0 is None else rhs0
        up = np.where(vstat == 1)[0]
        rhs = base - (A0[:, up] @ u[up] if len(up) else 0.0)
        B = A0[:, basis]
        try:
            Tn = np.linalg.solve(B, A0)
            xn = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError:
            return
        ub = u[basis]
        xn = np.where((xn < 0.0) & (xn > -1e-4), 0.0, xn)
        xn = np.where((xn > ub) & (xn < ub + 1e-4), ub, xn)
        T[:, :] = Tn
        xB[:] = xn

    def run(costs):
        nonlocal total_iters, total_after_bland
        if exact:
            z = costs.copy()
            for i in range(m):
                cb = costs[basis[i]]
                if cb != 0:
                    z = z - cb * T[i, :]
            status, iters, ab = pivot_loop_exact(T, xB, z, basis, vstat, u, bland_after, max_iter)
            total_iters += iters
            total_after_bland += ab
            return status
        chunk = max(4 * max(m, 1), 2000)
        done = 0
        while True:
            z = costs - (costs[basis] @ T if m else 0.0)
            status, iters, ab = pivot_loop_float(
                T,
                xB,
                z,
                basis,
                vstat,
                u,
                RC_EPS,
                PIV_TOL,
                TIE_TOL,
                bland_after,
                min(chunk, max_iter - done),
            )
            done += iters
            total_iters += iters
            total_after_bland += ab
            if status != STATUS_ITER_LIMIT or done >= max_iter:
                _refresh()
                return status
            _refresh()

    if art_cols:
        status = run(c1)
        if status == STATUS_ITER_LIMIT:
            raise SimplexError(f"phase 1 exceeded {max_iter} pivots")
        art_set = set(art_cols)
        phase1 = sum(xB[i] for i in range(m) if basis[i] in art_set)
        tol = 0 if exact else FEAS_TOL * (1.0 + float(max(xB.max() if m else 0, 1)))
        if phase1 > tol:
            if not exact and _perturb:
                # confirm without perturbation before declaring infeasible
                return solve_lp(model, mode, bounds_override, max_iter, _perturb=False)
            return LpResult(
                SolveStatus.INFEASIBLE, 0, {}, total_iters, total_after_bland, m, n
            )
        for j in art_cols:  # pin artificials at 0 for phase 2
            u[j] = num(0)

    status = run(c2)
    if status == STATUS_ITER_LIMIT:
        raise SimplexError(f"phase 2 exceeded {max_iter} pivots")
    if status == STATUS_UNBOUNDED:
        return LpResult(SolveStatus.UNBOUNDED, 0, {}, total_iters, total_after_bland, m, n)
    if not exact and _perturb:
        _refresh(b0)  # recover basic values under the true rhs

    values: dict = {}
    for vid in free_ids:
        j = col_of[vid]
        if vstat[j] == 1:
            raw = u[j]
        else:
            raw = 0
        values[vid] = raw
    for i in range(m):
        if basis[i] < ns:
            values[free_ids[basis[i]]] = xB[i]
    out = {}
    for vid in free_ids:
        raw = values[vid]
        if exact:
            out[vid] = Fraction(raw.numerator, raw.denominator) + shifts[vid]
        else:
            out[vid] = float(raw) + float(shifts[vid])
    for vid, val in fixed.items():
        out[vid] = val if exact else float(val)
    if exact:
        obj = model.objective_value(out)
    else:
        obj = float(sum(float(v.obj) * out[v.id] for v in model.variables if v.obj))
    return LpResult(SolveStatus.OPTIMAL, obj, out, total_iters, total_after_bland, m, n)
