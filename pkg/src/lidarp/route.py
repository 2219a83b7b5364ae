"""Route plans: representation, scheduling, validation, metrics, oracle.

A plan is a per-vehicle sequence of :class:`Visit` objects plus an
accepted/rejected split of the requests.  Feasibility of a fixed visit
sequence is decided by solving its difference-constraint system
(:func:`schedule_sequence`); :func:`validate` checks a fully timed plan
against every service rule; :func:`brute_force_solve` is the exhaustive
reference solver used to cross-check the MILP formulations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction

from lidarp.instance import (
    Direction,
    Instance,
    Request,
    WindowType,
    _format_number,
    _parse_number,
)
from lidarp.timewin import RequestSchedule, derive_all

VIOLATION_KINDS = (
    "Capacity",
    "TimeWindow",
    "WaitPromise",
    "RidePromise",
    "Directionality",
    "TurnWithPassengers",
    "BoardingOrder",
    "TravelTime",
    "VehicleCount",
    "TransferViolation",
)

LIDARP = "lidarp"
DARP = "darp"


class RouteError(Exception):
    pass


class TooLarge(RouteError):
    """Instance exceeds the exhaustive solver's guard."""


class DecodeError(RouteError):
    """Solver output does not describe a consistent set of routes."""


class InfeasibleSchedule(RouteError):
    """No feasible timing exists for the fixed visit sequence.

    ``chain`` names the conflicting constraints (a positive cycle in the
    temporal network, or a combinatorial ordering conflict).
    """

    def __init__(self, chain: list[str]):
        super().__init__(" -> ".join(chain))
        self.chain = chain


@dataclass(frozen=True)
class Visit:
    """One stop call: arrive, serve boardings/alightings, depart.

    ``turn_after`` marks a direction reversal between this visit and the
    next; the reversal costs the fleet's turn time.
    """

    stop: int
    arrival: Fraction | None
    departure: Fraction | None
    boards: tuple[int, ...] = ()
    alights: tuple[int, ...] = ()
    turn_after: bool = False


@dataclass(frozen=True)
class RoutePlan:
    routes: tuple[tuple[Visit, ...], ...]
    accepted: frozenset
    rejected: frozenset


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass(frozen=True)
class SolutionMetrics:
    accepted_count: int
    saved_distance: Fraction
    empty_share: Fraction
    mean_detour: Fraction
    mean_ride: Fraction
    direction_violation_count: int
    objective: Fraction

    def as_lines(self) -> str:
        keys = (
            "accepted_count",
            "saved_distance",
            "empty_share",
            "mean_detour",
            "mean_ride",
            "direction_violation_count",
            "objective",
        )
        out = []
        for k in keys:
            v = getattr(self, k)
            out.append(f"{k}={v if isinstance(v, int) else _format_number(Fraction(v))}")
        return "\n".join(out) + "\n"


# -- canonical same-stop service order ---------------------------------


def board_rank(sched: dict[int, RequestSchedule]):
    """Sort key for boarding order at a shared stop: earlier window, then id."""

    def key(rid):
        return (sched[rid].pickup_window.earliest, rid)

    return key


def alight_rank(sched: dict[int, RequestSchedule]):
    """Sort key for alighting order at a shared stop: earlier window, then id."""

    def key(rid):
        return (sched[rid].dropoff_window.earliest, rid)

    return key


def _requests_by_id(inst: Instance) -> dict[int, Request]:
    return {r.id: r for r in inst.requests}


def _visit_actions(visit: Visit, inst: Instance, sched) -> list[tuple[str, int]]:
    """Actions of one visit in service order: alights first, then boards."""
    alights = sorted(visit.alights, key=alight_rank(sched))
    boards = sorted(visit.boards, key=board_rank(sched))
    return [("A", r) for r in alights] + [("B", r) for r in boards]


def _action_offsets(visit: Visit, inst: Instance, sched) -> dict[tuple[str, int], Fraction]:
    """Service-start offset of each action relative to the visit arrival."""
    reqs = _requests_by_id(inst)
    offs = {}
    t = Fraction(0)
    for kind, rid in _visit_actions(visit, inst, sched):
        offs[(kind, rid)] = t
        t += reqs[rid].service_time
    return offs


def _service_total(visit: Visit, inst: Instance) -> Fraction:
    reqs = _requests_by_id(inst)
    return Fraction(sum(reqs[r].service_time for r in visit.alights + visit.boards))


def _leg_travel(inst: Instance, a: Visit, b: Visit) -> Fraction:
    base = Fraction(0) if a.stop == b.stop else Fraction(inst.travel(a.stop, b.stop))
    if a.turn_after:
        base += inst.fleet.t_turn
    return base


# -- difference-constraint scheduling ----------------------------------


def _solve_stn(n_vars: int, edges: list[tuple[int, int, Fraction, str]]):
    """Earliest solution of {x_v >= x_u + w}; node 0 is the zero reference.

    Returns distances, or raises :class:`InfeasibleSchedule` with the
    labels of a positive cycle.
    """
    NEG = None  # stands for -infinity
    dist: list = [NEG] * n_vars
    dist[0] = Fraction(0)
    pred = [-1] * n_vars
    for _ in range(n_vars):
        changed = False
        for ei, (u, v, w, _label) in enumerate(edges):
            if dist[u] is not NEG and (dist[v] is NEG or dist[u] + w > dist[v]):
                dist[v] = dist[u] + w
                pred[v] = ei
                changed = True
        if not changed:
            return dist
    # one more pass finds a node on or reachable from a positive cycle
    for u, v, w, _label in edges:
        if dist[u] is not NEG and dist[u] + w > dist[v]:
            node = v
            for _ in range(n_vars):
                if pred[node] < 0:
                    raise InfeasibleSchedule(["temporal constraints are inconsistent"])
                node = edges[pred[node]][0]
            chain, seen = [], set()
            cur = node
            while cur not in seen:
                seen.add(cur)
                ei = pred[cur]
                chain.append(edges[ei][3])
                cur = edges[ei][0]
            raise InfeasibleSchedule(list(reversed(chain)))
    return dist


def _check_stop_order(visits, inst, sched):
    """Same-stop service groups must follow the canonical order."""
    groups: list[list[tuple[str, int]]] = []
    for i, v in enumerate(visits):
        same = (
            groups
            and i > 0
            and visits[i - 1].stop == v.stop
            and not visits[i - 1].turn_after
        )
        acts = _visit_actions(v, inst, sched)
        if same:
            groups[-1].extend(acts)
        else:
            groups.append(list(acts))
    b_key, a_key = board_rank(sched), alight_rank(sched)
    for grp in groups:
        for (k1, r1), (k2, r2) in zip(grp, grp[1:]):
            if k1 == "B" and k2 == "A":
                return [f"alight {r2} must precede board {r1} at the shared stop"]
            if k1 == k2 == "B" and b_key(r1) > b_key(r2):
                return [f"board {r2} must precede board {r1} at the shared stop"]
            if k1 == k2 == "A" and a_key(r1) > a_key(r2):
                return [f"alight {r2} must precede alight {r1} at the shared stop"]
    return None


def schedule_sequence(
    visits: list[Visit] | tuple[Visit, ...], inst: Instance
) -> tuple[Visit, ...]:
    """Earliest feasible timing for one vehicle's fixed visit sequence.

    Existing arrival/departure values are ignored.  Raises
    :class:`InfeasibleSchedule` when the constraint system is
    inconsistent.
    """
    sched = derive_all(inst)
    reqs = _requests_by_id(inst)
    for v in visits:
        for rid in v.boards + v.alights:
            if rid not in sched:
                raise InfeasibleSchedule(
                    [f"request {rid} has no feasible service window"]
                )
    conflict = _check_stop_order(visits, inst, sched)
    if conflict:
        raise InfeasibleSchedule(conflict)

    n = len(visits)
    # variables: 0 = zero reference, 1+2i = arrival_i, 2+2i = departure_i
    A = lambda i: 1 + 2 * i
    D = lambda i: 2 + 2 * i
    edges: list[tuple[int, int, Fraction, str]] = []
    pickup_at: dict[int, tuple[int, Fraction]] = {}
    drop_at: dict[int, tuple[int, Fraction]] = {}
    for i, v in enumerate(visits):
        edges.append((0, A(i), Fraction(0), f"visit {i}: arrival >= 0"))
        edges.append(
            (A(i), D(i), _service_total(v, inst), f"visit {i}: service before departure")
        )
        if i + 1 < n:
            w = _leg_travel(inst, v, visits[i + 1])
            edges.append((D(i), A(i + 1), w, f"leg {i}->{i+1}: travel {w}"))
        offs = _action_offsets(v, inst, sched)
        for kind, rid in offs:
            win = sched[rid].pickup_window if kind == "B" else sched[rid].dropoff_window
            d = offs[(kind, rid)]
            what = "pickup" if kind == "B" else "dropoff"
            edges.append(
                (0, A(i), win.earliest - d, f"request {rid}: {what} not before {win.earliest}")
            )
            edges.append(
                (A(i), 0, -(win.latest - d), f"request {rid}: {what} not after {win.latest}")
            )
            (pickup_at if kind == "B" else drop_at)[rid] = (i, d)
    for rid, (pi, pd) in pickup_at.items():
        if rid not in drop_at:
            continue
        di, dd = drop_at[rid]
        cap = sched[rid].max_ride - reqs[rid].service_time - dd + pd
        edges.append(
            (A(di), A(pi), -cap, f"request {rid}: ride time cap {sched[rid].max_ride}")
        )
    dist = _solve_stn(1 + 2 * n, edges)
    timed = []
    for i, v in enumerate(visits):
        arr = dist[A(i)]
        timed.append(replace(v, arrival=arr, departure=arr + _service_total(v, inst)))
    return tuple(timed)


# -- validation --------------------------------------------------------


def _runs(visits):
    """Split a route at turns into maximal same-direction runs."""
    runs, cur = [], []
    for v in visits:
        cur.append(v)
        if v.turn_after:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return runs


def validate(inst: Instance, plan: RoutePlan, mode: str = LIDARP) -> list[Violation]:
    """Every service-rule breach in ``plan``; an empty list means feasible."""
    out: list[Violation] = []
    reqs = _requests_by_id(inst)
    sched = derive_all(inst)
    all_ids = frozenset(reqs)

    if plan.accepted & plan.rejected or (plan.accepted | plan.rejected) != all_ids:
        out.append(
            Violation(
                "TransferViolation",
                "accepted/rejected sets do not partition the request ids",
            )
        )
    used = sum(1 for route in plan.routes if any(v.boards or v.alights for v in route))
    if used > inst.fleet.kappa:
        out.append(Violation("VehicleCount", f"{used} vehicles used, fleet has {inst.fleet.kappa}"))

    board_at: dict[int, list] = {}
    alight_at: dict[int, list] = {}
    for k, route in enumerate(plan.routes):
        for i, v in enumerate(route):
            for r in v.boards:
                board_at.setdefault(r, []).append((k, i))
            for r in v.alights:
                alight_at.setdefault(r, []).append((k, i))
    for r in sorted(all_ids):
        b, a = board_at.get(r, []), alight_at.get(r, [])
        if r in plan.rejected:
            if b or a:
                out.append(Violation("TransferViolation", f"rejected request {r} appears in a route"))
            continue
        if len(b) != 1 or len(a) != 1:
            out.append(
                Violation("TransferViolation", f"request {r} boards {len(b)}x / alights {len(a)}x")
            )
            continue
        if b[0][0] != a[0][0]:
            out.append(Violation("TransferViolation", f"request {r} changes vehicle"))
            continue
        if b[0][1] >= a[0][1]:
            out.append(Violation("TransferViolation", f"request {r} alights before boarding"))

    for k, route in enumerate(plan.routes):
        bad_stop = any(not 1 <= v.stop <= inst.n_stops for v in route)
        if bad_stop:
            out.append(Violation("TravelTime", f"vehicle {k}: stop index outside the line"))
            continue
        load = 0
        for i, v in enumerate(route):
            low = load - sum(reqs[r].load for r in v.alights if r in reqs)
            peak = low + sum(reqs[r].load for r in v.boards if r in reqs)
            if peak > inst.fleet.q_max:
                out.append(
                    Violation("Capacity", f"vehicle {k} visit {i}: load {peak} > {inst.fleet.q_max}")
                )
            load = peak
            if mode == LIDARP and v.turn_after and load > 0:
                out.append(
                    Violation("TurnWithPassengers", f"vehicle {k} turns after visit {i} with load {load}")
                )
            if v.arrival is None or v.departure is None:
                out.append(Violation("TravelTime", f"vehicle {k} visit {i}: missing times"))
                continue
            if v.departure - v.arrival < _service_total(v, inst):
                out.append(
                    Violation("TravelTime", f"vehicle {k} visit {i}: departure before service completes")
                )
            if i + 1 < len(route):
                nxt = route[i + 1]
                if nxt.arrival is not None and nxt.arrival < v.departure + _leg_travel(inst, v, nxt):
                    out.append(
                        Violation("TravelTime", f"vehicle {k} leg {i}->{i+1}: arrival before travel completes")
                    )
        if mode == LIDARP:
            for run in _runs(route):
                deltas = [
                    b.stop - a.stop for a, b in zip(run, run[1:]) if a.stop != b.stop
                ]
                if any(d > 0 for d in deltas) and any(d < 0 for d in deltas):
                    out.append(
                        Violation("Directionality", f"vehicle {k}: stops not monotone between turns")
                    )
                stops_seen = [v.stop for a, v in zip([None] + run[:-1], run) if a is None or a.stop != v.stop]
                if len(set(stops_seen)) != len(stops_seen):
                    out.append(
                        Violation("Directionality", f"vehicle {k}: stop revisited between turns")
                    )

        # canonical order and service separation inside same-stop groups
        b_key, a_key = board_rank(sched), alight_rank(sched)
        groups: list[list[tuple[str, int, Fraction]]] = []
        for i, v in enumerate(route):
            if v.arrival is None or not all(r in sched for r in v.boards + v.alights):
                continue
            offs = _action_offsets(v, inst, sched)
            acts = [
                (kind, rid, v.arrival + offs[(kind, rid)])
                for kind, rid in _visit_actions(v, inst, sched)
            ]
            same = (
                groups
                and i > 0
                and route[i - 1].stop == v.stop
                and not route[i - 1].turn_after
            )
            if same:
                groups[-1].extend(acts)
            else:
                groups.append(acts)
        for grp in groups:
            for (k1, r1, t1), (k2, r2, t2) in zip(grp, grp[1:]):
                if t2 < t1 + reqs[r1].service_time:
                    out.append(
                        Violation("BoardingOrder", f"vehicle {k}: requests {r1},{r2} served {t2 - t1} apart")
                    )
                if k1 == "B" and k2 == "A":
                    out.append(
                        Violation("BoardingOrder", f"vehicle {k}: request {r2} alights after {r1} boards at a shared stop")
                    )
                elif k1 == k2 == "B" and b_key(r1) > b_key(r2):
                    out.append(
                        Violation("BoardingOrder", f"vehicle {k}: boards {r1},{r2} out of order")
                    )
                elif k1 == k2 == "A" and a_key(r1) > a_key(r2):
                    out.append(
                        Violation("BoardingOrder", f"vehicle {k}: alights {r1},{r2} out of order")
                    )

    # per-request window and ride promises
    times = _request_times(inst, plan, sched)
    for r in sorted(plan.accepted):
        if r in reqs and r not in sched:
            out.append(
                Violation("TimeWindow", f"request {r} has no feasible service window")
            )
            continue
        if r not in times:
            continue
        p, d = times[r]
        s = sched[r]
        req = reqs[r]
        if req.window_type is WindowType.EARLIEST_PICKUP:
            if p < s.pickup_window.earliest:
                out.append(Violation("TimeWindow", f"request {r}: pickup {p} before {s.pickup_window.earliest}"))
            if p > s.pickup_window.latest:
                out.append(Violation("WaitPromise", f"request {r}: pickup {p} after promised {s.pickup_window.latest}"))
            if d < s.dropoff_window.earliest:
                out.append(Violation("TimeWindow", f"request {r}: dropoff {d} before {s.dropoff_window.earliest}"))
        else:
            if d > s.dropoff_window.latest:
                out.append(Violation("TimeWindow", f"request {r}: dropoff {d} after {s.dropoff_window.latest}"))
            if d < s.dropoff_window.earliest:
                out.append(Violation("WaitPromise", f"request {r}: dropoff {d} before promised {s.dropoff_window.earliest}"))
            if p > s.pickup_window.latest:
                out.append(Violation("TimeWindow", f"request {r}: pickup {p} after {s.pickup_window.latest}"))
        ride = d + req.service_time - p
        if ride > s.max_ride:
            out.append(Violation("RidePromise", f"request {r}: ride {ride} exceeds cap {s.max_ride}"))
    return out


def _request_times(inst, plan, sched):
    """Service-start times (pickup, dropoff) of well-formed accepted requests."""
    times = {}
    for route in plan.routes:
        starts: dict[tuple[str, int], Fraction] = {}
        for v in route:
            if v.arrival is None or not all(r in sched for r in v.boards + v.alights):
                continue
            offs = _action_offsets(v, inst, sched)
            for key, off in offs.items():
                starts.setdefault(key, v.arrival + off)
        for (kind, rid), t in starts.items():
            if ("B", rid) in starts and ("A", rid) in starts:
                times[rid] = (starts[("B", rid)], starts[("A", rid)])
    return times


# -- metrics -----------------------------------------------------------


def metrics(inst: Instance, plan: RoutePlan) -> SolutionMetrics:
    reqs = _requests_by_id(inst)
    accepted = sorted(r for r in plan.accepted if r in reqs)
    driven = Fraction(0)
    empty = Fraction(0)
    aboard_dist = {r: Fraction(0) for r in accepted}
    away = set()
    for route in plan.routes:
        load_ids: set[int] = set()
        for a, b in zip(route, route[1:]):
            load_ids -= set(a.alights)
            load_ids |= set(a.boards)
            base = Fraction(0) if a.stop == b.stop else Fraction(inst.travel(a.stop, b.stop))
            turn = Fraction(inst.fleet.t_turn) if a.turn_after else Fraction(0)
            driven += base + turn
            if not load_ids:
                empty += base
            empty += turn
            step = b.stop - a.stop
            for r in load_ids:
                if r in aboard_dist:
                    aboard_dist[r] += base
                    req = reqs[r]
                    toward = req.destination - req.origin
                    if step != 0 and step * toward < 0:
                        away.add(r)
    direct_sum = Fraction(sum(inst.direct_time(reqs[r]) for r in accepted))
    saved = direct_sum - driven
    times = _request_times(inst, plan, derive_all(inst))
    rides = [
        times[r][1] + reqs[r].service_time - times[r][0] for r in accepted if r in times
    ]
    n_acc = len(accepted)
    mean_ride = sum(rides, Fraction(0)) / len(rides) if rides else Fraction(0)
    detours = [
        aboard_dist[r] / inst.direct_time(reqs[r]) for r in accepted
    ]
    mean_detour = sum(detours, Fraction(0)) / n_acc if n_acc else Fraction(0)
    empty_share = empty / driven if driven else Fraction(0)
    objective = inst.weights.w_accept * n_acc + inst.weights.w_dist * saved
    return SolutionMetrics(
        accepted_count=n_acc,
        saved_distance=saved,
        empty_share=empty_share,
        mean_detour=mean_detour,
        mean_ride=mean_ride,
        direction_violation_count=len(away),
        objective=objective,
    )


# -- serialization -----------------------------------------------------


def format_plan(plan: RoutePlan) -> str:
    lines = [
        "ACCEPTED " + " ".join(str(r) for r in sorted(plan.accepted)),
        "REJECTED " + " ".join(str(r) for r in sorted(plan.rejected)),
    ]
    for k, route in enumerate(plan.routes, start=1):
        for v in route:
            arr = _format_number(Fraction(v.arrival)) if v.arrival is not None else "-"
            dep = _format_number(Fraction(v.departure)) if v.departure is not None else "-"
            parts = [
                str(k),
                str(v.stop),
                arr,
                dep,
                "B:" + ",".join(str(r) for r in v.boards),
                "A:" + ",".join(str(r) for r in v.alights),
            ]
            if v.turn_after:
                parts.append("TURN")
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_plan(text: str) -> RoutePlan:
    accepted: frozenset = frozenset()
    rejected: frozenset = frozenset()
    routes: dict[int, list[Visit]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "ACCEPTED":
            accepted = frozenset(int(t) for t in toks[1:])
            continue
        if toks[0] == "REJECTED":
            rejected = frozenset(int(t) for t in toks[1:])
            continue
        if len(toks) < 6:
            raise RouteError(f"line {lineno}: malformed visit line {raw!r}")
        k = int(toks[0])
        stop = int(toks[1])
        arr = None if toks[2] == "-" else _parse_number(toks[2], lineno)
        dep = None if toks[3] == "-" else _parse_number(toks[3], lineno)
        if not toks[4].startswith("B:") or not toks[5].startswith("A:"):
            raise RouteError(f"line {lineno}: expected B:/A: fields")
        boards = tuple(int(x) for x in toks[4][2:].split(",") if x)
        alights = tuple(int(x) for x in toks[5][2:].split(",") if x)
        turn = len(toks) > 6 and toks[6] == "TURN"
        routes.setdefault(k, []).append(Visit(stop, arr, dep, boards, alights, turn))
    ordered = tuple(tuple(routes[k]) for k in sorted(routes))
    return RoutePlan(ordered, accepted, rejected)


# -- decoding dispatch -------------------------------------------------


def decode(artifact, solution) -> RoutePlan:
    """Turn a solved model back into a plan via its builder artifact."""
    return artifact.decode(solution)


# -- exhaustive reference solver ---------------------------------------


def empty_plan(inst: Instance) -> RoutePlan:
    return RoutePlan(
        tuple(() for _ in range(inst.fleet.kappa)),
        frozenset(),
        frozenset(r.id for r in inst.requests),
    )


def _sequences(inst: Instance, T: tuple[int, ...], mode: str):
    """All action orders serving exactly the requests ``T`` on one vehicle."""
    reqs = _requests_by_id(inst)
    sched = derive_all(inst)
    lidarp = mode == LIDARP

    def rec(seq, onboard, remaining, pos, last_dir, clock):
        if not onboard and not remaining:
            yield tuple(seq)
            return
        options = [("B", r) for r in remaining] + [("A", r) for r in sorted(onboard)]
        for kind, r in options:
            req = reqs[r]
            stop = req.origin if kind == "B" else req.destination
            if kind == "B" and sum(reqs[x].load for x in onboard) + req.load > inst.fleet.q_max:
                continue
            step = 0 if pos is None else stop - pos
            if lidarp and step != 0:
                ok = True
                for x in onboard:
                    toward = reqs[x].destination - reqs[x].origin
                    if step * toward < 0:
                        ok = False
                        break
                    lo, hi = sorted((pos, reqs[x].destination))
                    if not lo <= stop <= hi:
                        ok = False
                        break
                if not ok:
                    continue
            # earliest-arrival relaxation: windows alone already rule this
            # branch out when the chained lower bound passes the latest start
            win = sched[r].pickup_window if kind == "B" else sched[r].dropoff_window
            travel = Fraction(0) if step == 0 else Fraction(inst.travel(pos, stop))
            at = max(win.earliest, clock + travel)
            if at > win.latest:
                continue
            new_dir = last_dir if step == 0 else (1 if step > 0 else -1)
            seq.append((kind, r))
            nb = onboard | {r} if kind == "B" else onboard - {r}
            nr = remaining - {r} if kind == "B" else remaining
            yield from rec(seq, nb, nr, stop, new_dir, at + req.service_time)
            seq.pop()

    yield from rec([], frozenset(), frozenset(T), None, 0, Fraction(0))


def _seq_to_visits(inst: Instance, seq, mode: str = LIDARP) -> list[Visit] | None:
    """Per-action visits with direction-reversal turns placed where the
    vehicle is empty; None when no legal turn placement exists.

    DARP mode emits no turns: classical routes reverse freely at no cost.
    """
    reqs = _requests_by_id(inst)
    visits: list[Visit] = []
    loads: list[int] = []
    load = 0
    pos = None
    last_dir = 0
    for kind, r in seq:
        stop = reqs[r].origin if kind == "B" else reqs[r].destination
        if pos is not None and stop != pos:
            step = 1 if stop > pos else -1
            if mode == LIDARP and last_dir and step != last_dir:
                i = len(visits)
                j = i
                while j > 0 and visits[j - 1].stop == pos and not visits[j - 1].turn_after:
                    j -= 1
                placed = False
                for b in range(i, j - 1, -1):
                    boundary_load = loads[b - 1] if b > 0 else 0
                    if boundary_load == 0:
                        visits.insert(b, Visit(pos, None, None, (), (), True))
                        loads.insert(b, boundary_load)
                        placed = True
                        break
                if not placed:
                    return None
            last_dir = step
        load += reqs[r].load if kind == "B" else -reqs[r].load
        visits.append(
            Visit(stop, None, None, (r,) if kind == "B" else (), (r,) if kind == "A" else ())
        )
        loads.append(load)
        pos = stop
    return visits


def _route_driven(inst: Instance, visits) -> Fraction:
    total = Fraction(0)
    for a, b in zip(visits, visits[1:]):
        total += _leg_travel(inst, a, b)
    if visits and visits[-1].turn_after:
        total += inst.fleet.t_turn
    return total


def _encode_route(route) -> str:
    return ";".join(
        f"{v.stop}:{','.join(map(str, v.boards))}:{','.join(map(str, v.alights))}:{int(v.turn_after)}"
        for v in route
    )


def brute_force_solve(inst: Instance, mode: str = LIDARP):
    """Exhaustive optimum ``(objective, RoutePlan)`` for small instances.

    Enumerates accepted subsets, vehicle assignments, and service orders;
    times each candidate with :func:`schedule_sequence`.  Ties are broken
    toward more accepted requests, then the smallest plan encoding.
    Guarded to at most 6 requests and 2 vehicles.
    """
    m = len(inst.requests)
    if m > 6 or inst.fleet.kappa > 2:
        raise TooLarge(f"exhaustive guard: m={m}, kappa={inst.fleet.kappa}")
    sched = derive_all(inst)
    servable = sorted(sched)
    reqs = _requests_by_id(inst)
    all_ids = frozenset(r.id for r in inst.requests)

    best_route: dict[frozenset, tuple[Fraction, tuple[Visit, ...]] | None] = {
        frozenset(): (Fraction(0), ())
    }

    def route_for(T: frozenset):
        if T in best_route:
            return best_route[T]
        best = None
        for seq in _sequences(inst, tuple(sorted(T)), mode):
            visits = _seq_to_visits(inst, seq, mode)
            if visits is None:
                continue
            try:
                timed = schedule_sequence(visits, inst)
            except InfeasibleSchedule:
                continue
            driven = _route_driven(inst, timed)
            key = (driven, _encode_route(timed))
            if best is None or key < best[0]:
                best = (key, timed)
        best_route[T] = None if best is None else (best[0][0], best[1])
        return best_route[T]

    best = None  # (objective, accepted_count, encoding, plan)
    kappa = inst.fleet.kappa
    for size in range(len(servable) + 1):
        for S in itertools.combinations(servable, size):
            Sset = frozenset(S)
            direct = Fraction(sum(inst.direct_time(reqs[r]) for r in S))
            if kappa == 1:
                splits = [(Sset, frozenset())]
            else:
                splits = []
                members = sorted(Sset)
                for bits in itertools.product((0, 1), repeat=len(members)):
                    T1 = frozenset(r for r, b in zip(members, bits) if not b)
                    splits.append((T1, Sset - T1))
            for T1, T2 in splits:
                r1 = route_for(T1)
                r2 = route_for(T2) if kappa == 2 else (Fraction(0), ())
                if r1 is None or r2 is None:
                    continue
                driven = r1[0] + r2[0]
                obj = inst.weights.w_accept * len(S) + inst.weights.w_dist * (direct - driven)
                routes = [r1[1]] + ([r2[1]] if kappa == 2 else [])
                plan = RoutePlan(tuple(routes), Sset, all_ids - Sset)
                enc = format_plan(plan)
                cand = (obj, len(S), enc)
                if best is None or (
                    cand[0] > best[0]
                    or (cand[0] == best[0] and cand[1] > best[1])
                    or (cand[0] == best[0] and cand[1] == best[1] and cand[2] < best[2])
                ):
                    best = (obj, len(S), enc, plan)
    if best is None:
        plan = empty_plan(inst)
        return Fraction(0), plan
    return best[0], best[3]
