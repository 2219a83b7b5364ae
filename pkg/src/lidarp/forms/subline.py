"""Subline-based formulation: explicit alternating-direction segments.

A vehicle's route is modelled as up to ``sigma`` consecutive sublines of
alternating direction (odd ascending, even descending); binary variables
pick the stops, movements, and turn points of each subline, and requests
are assigned to direction-compatible sublines.  A vehicle enters the
template at subline 1 (to start ascending) or subline 2 (descending) and
may exit after any subline; every transition between consecutive
sublines is an executed turn and is charged the turn time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from lidarp.instance import Direction, Instance
from lidarp.milp.model import MilpModel, MilpSolution, SolveStatus
from lidarp.route import (
    DecodeError,
    RoutePlan,
    Visit,
    alight_rank,
    board_rank,
    schedule_sequence,
)
from lidarp.timewin import derive_all


@dataclass(frozen=True)
class PrecedenceSets:
    """Same-stop service-order relations between same-direction requests.

    ``before_board[i]`` lists requests sharing i's origin that board
    earlier; ``alight_before_board[i]`` lists requests alighting at i's
    origin before i boards; ``before_alight[i]`` lists requests sharing
    i's destination that alight earlier.  The order inside a shared stop
    is the canonical one: earlier window start first, ties by id.
    """

    before_board: dict[int, tuple[int, ...]]
    alight_before_board: dict[int, tuple[int, ...]]
    before_alight: dict[int, tuple[int, ...]]


def precedence_sets(inst: Instance) -> PrecedenceSets:
    sched = derive_all(inst)
    reqs = {r.id: r for r in inst.requests if r.id in sched}
    b_key, a_key = board_rank(sched), alight_rank(sched)
    oo: dict[int, list[int]] = {r: [] for r in reqs}
    od: dict[int, list[int]] = {r: [] for r in reqs}
    dd: dict[int, list[int]] = {r: [] for r in reqs}
    for i in reqs.values():
        for j in reqs.values():
            if i.id == j.id or j.direction is not i.direction:
                continue
            if j.origin == i.origin and b_key(j.id) < b_key(i.id):
                oo[i.id].append(j.id)
            if j.destination == i.origin:
                od[i.id].append(j.id)
            if j.destination == i.destination and a_key(j.id) < a_key(i.id):
                dd[i.id].append(j.id)
    return PrecedenceSets(
        {r: tuple(sorted(v)) for r, v in oo.items()},
        {r: tuple(sorted(v)) for r, v in od.items()},
        {r: tuple(sorted(v)) for r, v in dd.items()},
    )


@dataclass
class SublineIndexing:
    """Index helpers for the built model's variable names."""

    sigma: int
    kappa: int
    n: int
    servable: tuple[int, ...]

    def direction(self, s: int) -> Direction:
        return Direction.ASCENDING if s % 2 == 1 else Direction.DESCENDING


def build_subline_model(inst: Instance, sigma: int | None = None):
    """Build the subline MILP; returns ``(model, SublineIndexing)``."""
    sched = derive_all(inst)
    reqs = {r.id: r for r in inst.requests if r.id in sched}
    servable = tuple(sorted(reqs))
    m_srv = len(servable)
    if sigma is None:
        sigma = max(2, 2 * m_srv)
    if sigma % 2:
        sigma += 1
    n = inst.n_stops
    kappa = inst.fleet.kappa
    t_turn = Fraction(inst.fleet.t_turn)
    w_acc, w_dist = inst.weights.w_accept, inst.weights.w_dist
    prec = precedence_sets(inst)
    idx = SublineIndexing(sigma, kappa, n, servable)

    max_l = max(
        (sched[r].dropoff_window.latest + 2 * sigma * reqs[r].service_time for r in servable),
        default=Fraction(0),
    )
    M2 = max_l + sigma * t_turn  # bounds every arrival/departure variable

    model = MilpModel("subline")
    S = range(1, sigma + 1)
    K = range(1, kappa + 1)
    # only stops where some servable request boards or alights matter:
    # optimal routes stop and turn exclusively at action stops
    H = sorted(
        {reqs[r].origin for r in servable} | {reqs[r].destination for r in servable}
    )

    def asc(s):
        return s % 2 == 1

    y = {}
    x = {}
    vs = {}
    ve = {}
    z = {}
    arr = {}
    dep = {}
    for k in K:
        z[k] = model.add_var(f"z#{k}", "binary", tag=f"z#{k}")
        for i in H:
            for s0 in (1, 2):
                vs[i, s0, k] = model.add_var(
                    f"vs#{i}#{s0}#{k}", "binary", tag=f"vs#{i}#{s0}#{k}"
                )
        for s in S:
            for i in H:
                y[i, s, k] = model.add_var(f"y#{i}#{s}#{k}", "binary", tag=f"y#{i}#{s}#{k}")
                ve[i, s, k] = model.add_var(f"ve#{i}#{s}#{k}", "binary", tag=f"ve#{i}#{s}#{k}")
                arr[i, s, k] = model.add_var(f"arr#{i}#{s}#{k}", "continuous", 0, M2)
                dep[i, s, k] = model.add_var(f"dep#{i}#{s}#{k}", "continuous", 0, M2)
                if s < sigma:
                    # a turn at stop i ending subline s, charged the turn time
                    x[i, i, s, k] = model.add_var(
                        f"x#{i}#{i}#{s}#{k}",
                        "binary",
                        obj=-w_dist * t_turn,
                        tag=f"x#{i}#{i}#{s}#{k}",
                    )
            for i in H:
                for j in H:
                    if i == j:
                        continue
                    if (asc(s) and i < j) or (not asc(s) and i > j):
                        x[i, j, s, k] = model.add_var(
                            f"x#{i}#{j}#{s}#{k}",
                            "binary",
                            obj=-w_dist * inst.travel(i, j),
                            tag=f"x#{i}#{j}#{s}#{k}",
                        )

    assign = {}
    for r in servable:
        req = reqs[r]
        for k in K:
            for s in S:
                if idx.direction(s) is req.direction:
                    assign[r, s, k] = model.add_var(
                        f"assign#{r}#{s}#{k}",
                        "binary",
                        obj=w_acc + w_dist * inst.direct_time(req),
                        tag=f"assign#{r}#{s}#{k}",
                    )

    # pooled-pair indicators, only for pairs carrying a precedence relation
    pairs = set()
    for r in servable:
        for j in prec.before_board[r] + prec.alight_before_board[r] + prec.before_alight[r]:
            pairs.add((min(r, j), max(r, j)))
    w_pool = {}
    for r1, r2 in sorted(pairs):
        w_pool[r1, r2] = model.add_var(f"w#{r1}#{r2}", "binary", tag=f"w#{r1}#{r2}")

    pick = {}
    drop = {}
    for r in servable:
        s_ = sched[r]
        pick[r] = model.add_var(
            f"p#{r}", "continuous", s_.pickup_window.earliest, s_.pickup_window.latest, tag=f"p#{r}"
        )
        drop[r] = model.add_var(
            f"pbar#{r}",
            "continuous",
            s_.dropoff_window.earliest,
            s_.dropoff_window.latest,
            tag=f"pbar#{r}",
        )

    # -- vehicle and subline structure --------------------------------
    for k in K:
        starts = [(1, vs[i, s0, k]) for i in H for s0 in (1, 2)]
        model.add_constraint(f"start_once#{k}", starts, "<=", 1)
        model.add_constraint(
            f"start_end#{k}",
            [(1, ve[i, s, k]) for i in H for s in S] + [(-1, v) for _, v in starts],
            "=",
            0,
        )
        model.add_constraint(f"used#{k}", [(1, z[k])] + [(-1, v) for _, v in starts], "=", 0)
        for i in H:
            for s in S:
                inbound = (
                    [(-1, x[j, i, s, k]) for j in H if j < i]
                    if asc(s)
                    else [(-1, x[j, i, s, k]) for j in H if j > i]
                )
                entries = list(inbound)
                if s <= 2:
                    entries.append((-1, vs[i, s, k]))
                if s > 1:
                    entries.append((-1, x[i, i, s - 1, k]))
                model.add_constraint(f"in#{i}#{s}#{k}", [(1, y[i, s, k])] + entries, "=", 0)
                outbound = (
                    [(-1, x[i, j, s, k]) for j in H if j > i]
                    if asc(s)
                    else [(-1, x[i, j, s, k]) for j in H if j < i]
                )
                exits = [(-1, ve[i, s, k])] + outbound
                if s < sigma:
                    exits.append((-1, x[i, i, s, k]))
                model.add_constraint(f"out#{i}#{s}#{k}", [(1, y[i, s, k])] + exits, "=", 0)
        # capacity across each segment between consecutive relevant stops
        for s in S:
            for i in H[:-1]:
                if asc(s):
                    terms = [
                        (reqs[r].load, assign[r, s, k])
                        for r in servable
                        if (r, s, k) in assign and reqs[r].origin <= i < reqs[r].destination
                    ]
                else:
                    terms = [
                        (reqs[r].load, assign[r, s, k])
                        for r in servable
                        if (r, s, k) in assign and reqs[r].destination <= i < reqs[r].origin
                    ]
                if terms:
                    model.add_constraint(f"cap#{i}#{s}#{k}", terms, "<=", inst.fleet.q_max)
    # vehicles of smaller index start at smaller stations (cumulative form)
    for k in range(1, kappa):
        for i in H:
            model.add_constraint(
                f"sym#{i}#{k}",
                [(1, vs[j, s0, k]) for j in H if j <= i for s0 in (1, 2)]
                + [(-1, vs[j, s0, k + 1]) for j in H if j <= i for s0 in (1, 2)],
                ">=",
                0,
            )

    # -- timing -------------------------------------------------------
    for k in K:
        for s in S:
            for i in H:
                model.add_constraint(
                    f"wait#{i}#{s}#{k}", [(1, dep[i, s, k]), (-1, arr[i, s, k])], ">=", 0
                )
            for i in H:
                for j in H:
                    if (i, j, s, k) in x and i != j:
                        model.add_constraint(
                            f"drive#{i}#{j}#{s}#{k}",
                            [
                                (1, arr[j, s, k]),
                                (-1, dep[i, s, k]),
                                (-inst.travel(i, j), x[i, j, s, k]),
                            ],
                            ">=",
                            0,
                        )
            if s > 1:
                for i in H:
                    model.add_constraint(
                        f"turn_time#{i}#{s}#{k}",
                        [
                            (1, arr[i, s, k]),
                            (-1, dep[i, s - 1, k]),
                            (-t_turn, x[i, i, s - 1, k]),
                        ],
                        ">=",
                        0,
                    )

    # -- passengers ---------------------------------------------------
    for r in servable:
        req = reqs[r]
        s_ = sched[r]
        own = [(1, assign[r, s, k]) for (rr, s, k) in assign if rr == r]
        model.add_constraint(f"once#{r}", own, "<=", 1)
        for (rr, s, k), a in assign.items():
            if rr != r:
                continue
            model.add_constraint(
                f"stops_o#{r}#{s}#{k}", [(1, a), (-1, y[req.origin, s, k])], "<=", 0
            )
            model.add_constraint(
                f"stops_d#{r}#{s}#{k}", [(1, a), (-1, y[req.destination, s, k])], "<=", 0
            )
            # departure from the origin waits for the earliest pickup
            model.add_constraint(
                f"edep#{r}#{s}#{k}",
                [(1, dep[req.origin, s, k]), (-(s_.pickup_window.earliest + req.service_time), a)],
                ">=",
                0,
            )
            # arrival at the destination respects the latest dropoff
            Ml = M2 - s_.dropoff_window.latest
            model.add_constraint(
                f"larr#{r}#{s}#{k}",
                [(1, arr[req.destination, s, k]), (Ml, a)],
                "<=",
                s_.dropoff_window.latest + Ml,
            )
            # pickup/dropoff no earlier than the vehicle's arrival
            model.add_constraint(
                f"parr#{r}#{s}#{k}",
                [(1, pick[r]), (-1, arr[req.origin, s, k]), (-M2, a)],
                ">=",
                -M2,
            )
            model.add_constraint(
                f"darr#{r}#{s}#{k}",
                [(1, drop[r]), (-1, arr[req.destination, s, k]), (-M2, a)],
                ">=",
                -M2,
            )
            # vehicle leaves only after boarding/alighting completes
            Mp = s_.pickup_window.latest + req.service_time
            model.add_constraint(
                f"pdep#{r}#{s}#{k}",
                [(1, dep[req.origin, s, k]), (-1, pick[r]), (-Mp, a)],
                ">=",
                req.service_time - Mp,
            )
            Md = s_.dropoff_window.latest + req.service_time
            model.add_constraint(
                f"ddep#{r}#{s}#{k}",
                [(1, dep[req.destination, s, k]), (-1, drop[r]), (-Md, a)],
                ">=",
                req.service_time - Md,
            )
        # ride-time promise, active only when served
        cap = s_.max_ride - req.service_time
        slack = max(Fraction(0), s_.dropoff_window.latest - s_.pickup_window.earliest - cap)
        model.add_constraint(
            f"promise#{r}",
            [(1, drop[r]), (-1, pick[r])]
            + [(slack, a) for (rr, s, k), a in assign.items() if rr == r],
            "<=",
            cap + slack,
        )

    # pooled pairs and same-stop service separations
    for (r1, r2), wv in w_pool.items():
        for k in K:
            for s in S:
                if (r1, s, k) in assign and (r2, s, k) in assign:
                    model.add_constraint(
                        f"pool#{r1}#{r2}#{s}#{k}",
                        [(1, assign[r1, s, k]), (1, assign[r2, s, k]), (-1, wv)],
                        "<=",
                        1,
                    )
        model.add_constraint(
            f"poolp#{r1}#{r2}",
            [(1, wv)] + [(-1, a) for (rr, s, k), a in assign.items() if rr == r1],
            "<=",
            0,
        )
        model.add_constraint(
            f"poolq#{r1}#{r2}",
            [(1, wv)] + [(-1, a) for (rr, s, k), a in assign.items() if rr == r2],
            "<=",
            0,
        )

    def sep(first_var, first_latest, first_b, second_var, second_earliest, wv, name):
        # second >= first + b_first when pooled
        M = max(Fraction(0), first_latest + first_b - second_earliest)
        model.add_constraint(
            name, [(1, second_var), (-1, first_var), (-M, wv)], ">=", first_b - M
        )

    for i in servable:
        for j in prec.before_board[i]:
            wv = w_pool[(min(i, j), max(i, j))]
            sep(
                pick[j],
                sched[j].pickup_window.latest,
                reqs[j].service_time,
                pick[i],
                sched[i].pickup_window.earliest,
                wv,
                f"ord_bb#{j}#{i}",
            )
        for j in prec.alight_before_board[i]:
            wv = w_pool[(min(i, j), max(i, j))]
            sep(
                drop[j],
                sched[j].dropoff_window.latest,
                reqs[j].service_time,
                pick[i],
                sched[i].pickup_window.earliest,
                wv,
                f"ord_ab#{j}#{i}",
            )
        for j in prec.before_alight[i]:
            wv = w_pool[(min(i, j), max(i, j))]
            sep(
                drop[j],
                sched[j].dropoff_window.latest,
                reqs[j].service_time,
                drop[i],
                sched[i].dropoff_window.earliest,
                wv,
                f"ord_aa#{j}#{i}",
            )
    return model, idx


@dataclass
class SublineFormulation:
    inst: Instance
    idx: SublineIndexing
    model: MilpModel

    def decode(self, solution: MilpSolution) -> RoutePlan:
        if solution.status not in (
            SolveStatus.OPTIMAL,
            SolveStatus.FEASIBLE,
            SolveStatus.TIME_LIMIT,
        ):
            raise DecodeError(f"no solution to decode (status {solution.status})")
        inst = self.inst
        sched = derive_all(inst)
        reqs = {r.id: r for r in inst.requests if r.id in sched}
        b_key, a_key = board_rank(sched), alight_rank(sched)
        idx = self.idx

        def val(name):
            if not self.model.has_var(name):
                return 0
            return float(solution.values.get(self.model.var_id(name), 0))

        routes = []
        accepted = set()
        for k in range(1, idx.kappa + 1):
            if val(f"z#{k}") < 0.5:
                continue
            starts = [
                (i, s0)
                for i in range(1, idx.n + 1)
                for s0 in (1, 2)
                if val(f"vs#{i}#{s0}#{k}") > 0.5
            ]
            if len(starts) != 1:
                raise DecodeError(f"vehicle {k}: {len(starts)} start stops")
            pos, s = starts[0]
            acts: dict[int, list[tuple[str, int]]] = {ss: [] for ss in range(1, idx.sigma + 1)}
            for r in idx.servable:
                for ss in range(1, idx.sigma + 1):
                    if val(f"assign#{r}#{ss}#{k}") > 0.5:
                        acts[ss].append(("B", r))
                        acts[ss].append(("A", r))
                        accepted.add(r)
            visits: list[Visit] = []
            for _ in range(idx.sigma):
                path = [pos]
                cur = pos
                for _ in range(idx.n):
                    nxts = [
                        j
                        for j in range(1, idx.n + 1)
                        if j != cur and val(f"x#{cur}#{j}#{s}#{k}") > 0.5
                    ]
                    if not nxts:
                        break
                    if len(nxts) > 1:
                        raise DecodeError(f"vehicle {k} subline {s}: branching path")
                    cur = nxts[0]
                    path.append(cur)
                for stop in path:
                    boards = sorted(
                        (r for t, r in acts[s] if t == "B" and reqs[r].origin == stop),
                        key=b_key,
                    )
                    alights = sorted(
                        (r for t, r in acts[s] if t == "A" and reqs[r].destination == stop),
                        key=a_key,
                    )
                    if not boards and not alights:
                        visits.append(Visit(stop, None, None))
                        continue
                    for r in alights:
                        visits.append(Visit(stop, None, None, (), (r,)))
                    for r in boards:
                        visits.append(Visit(stop, None, None, (r,), ()))
                if s < idx.sigma and val(f"x#{cur}#{cur}#{s}#{k}") > 0.5:
                    visits[-1] = Visit(
                        visits[-1].stop,
                        None,
                        None,
                        visits[-1].boards,
                        visits[-1].alights,
                        True,
                    )
                    pos = cur
                    s += 1
                    continue
                if val(f"ve#{cur}#{s}#{k}") < 0.5:
                    raise DecodeError(f"vehicle {k} subline {s}: neither turn nor end at {cur}")
                break
            # trim leading/trailing empty visits carrying no actions or turns
            while visits and not visits[0].boards and not visits[0].alights and not visits[0].turn_after:
                visits.pop(0)
            while visits and not visits[-1].boards and not visits[-1].alights:
                visits.pop()
            if visits:
                routes.append(schedule_sequence(visits, inst))
        while len(routes) < inst.fleet.kappa:
            routes.append(())
        rejected = frozenset(r.id for r in inst.requests) - frozenset(accepted)
        return RoutePlan(tuple(routes), frozenset(accepted), rejected)


def branch_priority(v) -> int:
    """Branching tiers for the subline model: decide request acceptance
    first, then vehicle starts and pooling, then routing details."""
    name = v.name
    if name.startswith("assign#"):
        return 3
    if name.startswith(("vs#", "z#", "w#")):
        return 2
    return 0


def build_subline(inst: Instance, sigma: int | None = None) -> SublineFormulation:
    model, idx = build_subline_model(inst, sigma)
    return SublineFormulation(inst, idx, model)
