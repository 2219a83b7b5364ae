"""Branch-and-bound over LP relaxations for all-binary MILPs.

Best-first on the LP bound with a depth-first plunge after every pop;
branching picks the most fractional binary, ties broken by smallest id.
Deterministic for a fixed configuration.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from fractions import Fraction

from lidarp.milp.model import BINARY, MilpModel, MilpSolution, SolveStatus
from lidarp.milp.simplex import SimplexError, solve_lp

INT_TOL = 1e-6
GAP_TOL = 1e-6
NODE_PIVOT_CAP = 30000


@dataclass
class BnbConfig:
    time_limit: float | None = None
    gap_limit: float = GAP_TOL
    node_limit: int | None = None
    mode: str = "float"  # "float" or "exact"
    log: list | None = None  # collects (node bound, incumbent) pairs when set
    priority: object = None  # optional callable Variable -> int; higher tiers branch first


@dataclass(order=True)
class _Node:
    sort_key: tuple
    bound: object = field(compare=False)  # exact rational or float; inf at the root
    fixings: dict = field(compare=False, default_factory=dict)


def _most_fractional(values, binaries, exact, priority=None):
    """Most fractional binary in the highest fractional priority tier,
    ties by smallest id; None if all integral."""
    best_vid = None
    best_key = None
    for v in binaries:
        x = values.get(v.id, 0)
        if exact:
            frac = min(x, 1 - x)
            if frac <= 0:
                continue
        else:
            frac = min(float(x), 1.0 - float(x))
            if frac <= INT_TOL:
                continue
        tier = priority(v) if priority is not None else 0
        key = (tier, frac)
        if best_key is None or key > (
            best_key if exact else (best_key[0], best_key[1] + 1e-12)
        ):
            best_key, best_vid = key, v.id
    return best_vid


def solve_bb(model: MilpModel, config: BnbConfig | None = None) -> MilpSolution:
    """Solve ``model`` to proven optimality (all integer variables binary)."""
    config = config or BnbConfig()
    exact = config.mode == "exact"
    binaries = model.binaries()
    t0 = time.monotonic()

    incumbent_obj = None
    incumbent_vals = None
    nodes = 0
    lp_iters = 0
    seq = 0
    stopped = False

    def out_of_time():
        return config.time_limit is not None and time.monotonic() - t0 > config.time_limit

    def closed(bound):
        """True if no strictly better solution can live under this bound."""
        if incumbent_obj is None:
            return False
        if exact:
            return bound <= incumbent_obj
        return float(bound) - float(incumbent_obj) <= config.gap_limit * max(
            1.0, abs(float(incumbent_obj))
        )

    heap: list[_Node] = []
    heapq.heappush(heap, _Node((float("-inf"), seq), float("inf"), {}))
    seq += 1

    while heap:
        if out_of_time() or (config.node_limit is not None and nodes >= config.node_limit):
            stopped = True
            break
        node = heapq.heappop(heap)
        if closed(node.bound):
            continue
        fixings = node.fixings
        cur_bound = node.bound
        # plunge: dive depth-first from the popped node until the dive closes
        while True:
            if out_of_time():
                stopped = True
                break
            nodes += 1
            try:
                res = solve_lp(
                    model, mode=config.mode, bounds_override=fixings, max_iter=NODE_PIVOT_CAP
                )
            except SimplexError:
                res = None
            if res is None:
                # numerically stalled LP: keep the parent bound and branch
                # blindly; fall back to exact arithmetic once fully fixed
                vid = next((v.id for v in binaries if v.id not in fixings), None)
                if vid is None:
                    res = solve_lp(model, mode="exact", bounds_override=fixings)
                else:
                    down = dict(fixings)
                    down[vid] = (Fraction(0), Fraction(0))
                    up = dict(fixings)
                    up[vid] = (Fraction(1), Fraction(1))
                    heapq.heappush(heap, _Node((-float(cur_bound), seq), cur_bound, down))
                    seq += 1
                    fixings = up
                    if config.node_limit is not None and nodes >= config.node_limit:
                        stopped = True
                        break
                    continue
            lp_iters += res.iterations
            if res.status is not SolveStatus.OPTIMAL:
                break  # infeasible subproblem; our relaxations are bounded
            bound = res.objective
            if bound > cur_bound:
                bound = cur_bound  # child can't beat its parent's relaxation
            cur_bound = bound
            if config.log is not None:
                config.log.append(
                    (float(bound), None if incumbent_obj is None else float(incumbent_obj))
                )
            if closed(bound):
                break
            vid = _most_fractional(res.values, binaries, exact, config.priority)
            if vid is None:
                incumbent_obj = res.objective
                incumbent_vals = res.values
                break
            x = res.values.get(vid, 0)
            zero = (Fraction(0), Fraction(0))
            one = (Fraction(1), Fraction(1))
            down = dict(fixings)
            down[vid] = zero
            up = dict(fixings)
            up[vid] = one
            if float(x) >= 0.5:
                child, other = up, down
            else:
                child, other = down, up
            heapq.heappush(heap, _Node((-float(bound), seq), bound, other))
            seq += 1
            fixings = child
            if config.node_limit is not None and nodes >= config.node_limit:
                stopped = True
                break
        while heap and closed(heap[0].bound):
            heapq.heappop(heap)

    wall = time.monotonic() - t0
    open_bound = None
    for n in heap:
        if open_bound is None or n.bound > open_bound:
            open_bound = n.bound

    if incumbent_vals is None:
        if stopped:
            bound = open_bound if open_bound is not None else float("inf")
            return MilpSolution(SolveStatus.TIME_LIMIT, {}, float("-inf"), bound, nodes, lp_iters, wall)
        return MilpSolution(SolveStatus.INFEASIBLE, {}, 0, 0, nodes, lp_iters, wall)

    values = dict(incumbent_vals)
    if exact:
        obj = model.objective_value(values)
    else:
        for v in binaries:
            x = float(values.get(v.id, 0))
            if abs(x - round(x)) <= 10 * INT_TOL:
                values[v.id] = round(x)
        obj = incumbent_obj
    if stopped and open_bound is not None and not closed(open_bound):
        return MilpSolution(SolveStatus.TIME_LIMIT, values, obj, open_bound, nodes, lp_iters, wall)
    return MilpSolution(SolveStatus.OPTIMAL, values, obj, obj, nodes, lp_iters, wall)
