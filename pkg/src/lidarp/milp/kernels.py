"""Dense bounded-variable simplex pivot loop.

One source function drives both numeric backends: compiled with numba for
float64 tableaus (the hot path under branch-and-bound), and executed as-is
on object-dtype arrays holding exact rationals.  Set ``LIDARP_NUMBA=0`` to
force the plain numpy path for float64 as well.

Conventions: minimization; all variable lower bounds are 0 (the driver
shifts them); ``u`` holds upper bounds with ``inf`` for unbounded; ``vstat``
is 0 for nonbasic-at-lower, 1 for nonbasic-at-upper, 2 for basic.
"""

from __future__ import annotations

import os

import numpy as np

STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_ITER_LIMIT = 2


def _pivot_loop(T, xB, z, basis, vstat, u, eps, piv_tol, tie_tol, bland_after, max_iter):
    """Run primal simplex pivots until optimality or unboundedness.

    Returns (status, iterations, pivots_after_bland).
    """
    m, n = T.shape
    iters = 0
    degenerate = 0
    after_bland = 0
    inf = np.inf
    while iters < max_iter:
        use_bland = degenerate >= bland_after
        # entering variable
        jj = -1
        best = eps
        for j in range(n):
            if vstat[j] == 2 or u[j] <= 0:
                continue
            rc = z[j]
            if vstat[j] == 0:
                score = -rc
            else:
                score = rc
            if score > eps:
                if use_bland:
                    jj = j
                    break
                if score > best:
                    best = score
                    jj = j
        if jj == -1:
            return STATUS_OPTIMAL, iters, after_bland
        sig = 1 if vstat[jj] == 0 else -1
        # ratio test; near-ties resolved toward the largest pivot magnitude
        # (numeric stability), or the smallest basis index under Bland
        limit = u[jj]
        lim_row = -1
        lim_upper = False
        best_d = piv_tol
        for i in range(m):
            d = sig * T[i, jj]
            if d > piv_tol:
                bound = xB[i] / d
                hit_upper = False
            elif d < -piv_tol:
                ub = u[basis[i]]
                if ub == inf:
                    continue
                bound = (ub - xB[i]) / (-d)
                hit_upper = True
            else:
                continue
            ad = d if d > 0 else -d
            if bound < limit - tie_tol:
                limit = bound
                lim_row = i
                lim_upper = hit_upper
                best_d = ad
            elif bound <= limit + tie_tol:
                if lim_row == -1:
                    take = bound < limit
                elif use_bland or tie_tol == 0:
                    take = basis[i] < basis[lim_row]
                else:
                    take = ad > best_d
                if bound < limit:
                    limit = bound
                if take:
                    lim_row = i
                    lim_upper = hit_upper
                    best_d = ad
        if limit == inf:
            return STATUS_UNBOUNDED, iters, after_bland
        step = limit
        if step < 0:
            step = step * 0  # clamp tiny negative drift (keeps exact types exact)
        iters += 1
        if use_bland:
            after_bland += 1
        if step <= eps:
            degenerate += 1
        if step != 0:
            for i in range(m):
                xB[i] = xB[i] - step * sig * T[i, jj]
        if lim_row == -1:
            # entering variable moved to its opposite bound; basis unchanged
            vstat[jj] = 1 - vstat[jj]
            continue
        if vstat[jj] == 0:
            val = step
        else:
            val = u[jj] - step
        lv = basis[lim_row]
        vstat[lv] = 1 if lim_upper else 0
        basis[lim_row] = jj
        vstat[jj] = 2
        xB[lim_row] = val
        piv = T[lim_row, jj]
        for c in range(n):
            T[lim_row, c] = T[lim_row, c] / piv
        for i in range(m):
            if i == lim_row:
                continue
            f = T[i, jj]
            if f != 0:
                for c in range(n):
                    T[i, c] = T[i, c] - f * T[lim_row, c]
        rc = z[jj]
        if rc != 0:
            for c in range(n):
                z[c] = z[c] - rc * T[lim_row, c]
    return STATUS_ITER_LIMIT, iters, after_bland


_NUMBA_ENABLED = os.environ.get("LIDARP_NUMBA", "1").lower() not in ("0", "false", "off")
_numba_pivot_loop = None


def _get_numba_loop():
    global _numba_pivot_loop
    if _numba_pivot_loop is None:
        from numba import njit

        _numba_pivot_loop = njit(cache=True)(_pivot_loop)
    return _numba_pivot_loop


def set_numba_enabled(flag: bool) -> bool:
    """Override the ``LIDARP_NUMBA`` default at runtime; returns the prior setting."""
    global _NUMBA_ENABLED
    prev = _NUMBA_ENABLED
    _NUMBA_ENABLED = bool(flag)
    return prev


def numba_available() -> bool:
    if not _NUMBA_ENABLED:
        return False
    try:
        _get_numba_loop()
        return True
    except Exception:
        return False


def pivot_loop_float(T, xB, z, basis, vstat, u, eps, piv_tol, tie_tol, bland_after, max_iter):
    """Float64 pivot loop; numba-compiled unless disabled or unavailable."""
    if numba_available():
        return _get_numba_loop()(
            T, xB, z, basis, vstat, u, eps, piv_tol, tie_tol, bland_after, max_iter
        )
    return _pivot_loop(T, xB, z, basis, vstat, u, eps, piv_tol, tie_tol, bland_after, max_iter)


def pivot_loop_exact(T, xB, z, basis, vstat, u, bland_after, max_iter):
    """Exact pivot loop over object-dtype arrays of rationals; zero tolerances."""
    return _pivot_loop(T, xB, z, basis, vstat, u, 0, 0, 0, bland_after, max_iter)
