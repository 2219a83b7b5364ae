"""Location-based formulation: request stop copies on two direction sides.

Each servable request contributes a pickup and a dropoff node on the
side matching its direction, plus two optional turn nodes on the
opposite side: a start-turn node entered just before turning toward the
pickup, and an end-turn node left just after turning away from the
dropoff.  Vehicles route over these nodes; same-side arcs only move
forward in that side's direction, so turning is possible exclusively
through the turn arcs, which carry the turn time and require an empty
vehicle.
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
from lidarp.timewin import TimeWindow, derive_all

PICKUP = "P"
DROPOFF = "D"
START_TURN = "ST"
END_TURN = "ET"


@dataclass(frozen=True)
class LocNode:
    idx: int
    kind: str  # PICKUP, DROPOFF, START_TURN, END_TURN
    request: int
    stop: int
    side: Direction  # which direction side the node lives on
    window: TimeWindow
    service: Fraction  # service duration taken at the node
    load: int  # load change when the node's action executes


@dataclass(frozen=True)
class LocArc:
    idx: int
    tail: int  # node idx, -1 for the start depot
    head: int  # node idx, -2 for the end depot
    travel: Fraction
    turn: bool  # arc executes a turn


@dataclass
class LocationGraph:
    nodes: list[LocNode]
    arcs: list[LocArc]
    in_arcs: dict[int, list[int]]
    out_arcs: dict[int, list[int]]
    mode: str


START_DEPOT = -1
END_DEPOT = -2


def build_location_graph(inst: Instance) -> LocationGraph:
    sched = derive_all(inst)
    reqs = {r.id: r for r in inst.requests if r.id in sched}
    t_turn = Fraction(inst.fleet.t_turn)
    b_key, a_key = board_rank(sched), alight_rank(sched)

    nodes: list[LocNode] = []

    def add_node(kind, rid, stop, side, window, service, load):
        nodes.append(LocNode(len(nodes), kind, rid, stop, side, window, service, load))
        return nodes[-1]

    pick = {}
    drop = {}
    st = {}
    et = {}
    for rid in sorted(reqs):
        req = reqs[rid]
        s_ = sched[rid]
        side = req.direction
        other = (
            Direction.DESCENDING if side is Direction.ASCENDING else Direction.ASCENDING
        )
        pick[rid] = add_node(
            PICKUP, rid, req.origin, side, s_.pickup_window, req.service_time, req.load
        )
        drop[rid] = add_node(
            DROPOFF, rid, req.destination, side, s_.dropoff_window, req.service_time, -req.load
        )
        if s_.pickup_window.latest - t_turn >= 0:
            st[rid] = add_node(
                START_TURN,
                rid,
                req.origin,
                other,
                TimeWindow(
                    max(Fraction(0), s_.pickup_window.earliest - t_turn),
                    s_.pickup_window.latest - t_turn,
                ),
                Fraction(0),
                0,
            )
        et[rid] = add_node(
            END_TURN,
            rid,
            req.destination,
            other,
            TimeWindow(
                s_.dropoff_window.earliest + req.service_time,
                s_.dropoff_window.latest + req.service_time,
            ),
            Fraction(0),
            0,
        )

    arcs: list[LocArc] = []

    def reachable(u: LocNode, v: LocNode, travel) -> bool:
        return u.window.earliest + u.service + travel <= v.window.latest

    def add_arc(tail, head, travel, turn=False):
        arcs.append(LocArc(len(arcs), tail, head, Fraction(travel), turn))

    def forward(side: Direction, a: int, b: int) -> bool:
        return a < b if side is Direction.ASCENDING else a > b

    # request service arcs (pickup -> own dropoff), kept unconditionally
    for rid in sorted(reqs):
        add_arc(pick[rid].idx, drop[rid].idx, inst.travel(pick[rid].stop, drop[rid].stop))
    # turn arcs
    for rid in sorted(reqs):
        if rid in st:
            a = st[rid]
            if reachable(a, pick[rid], t_turn):
                add_arc(a.idx, pick[rid].idx, t_turn, turn=True)
        if reachable(drop[rid], et[rid], t_turn):
            add_arc(drop[rid].idx, et[rid].idx, t_turn, turn=True)

    # same-side strictly-forward travel arcs; tails carry no turning
    # passengers toward turn entries, so end-turn tails feed only pickups
    # and start-turn entries
    for u in nodes:
        if u.kind == START_TURN:
            continue  # start-turn nodes exit only through their turn arc
        for v in nodes:
            if v.idx == u.idx or v.side is not u.side:
                continue
            if u.kind == PICKUP and v.kind == DROPOFF and u.request == v.request:
                continue  # covered by the service arc
            if v.kind == END_TURN:
                continue  # end-turn nodes are entered only by their turn arc
            if v.kind == DROPOFF and u.kind in (PICKUP, DROPOFF):
                pass
            elif v.kind in (PICKUP, START_TURN) and u.kind in (DROPOFF, END_TURN):
                pass
            elif v.kind == PICKUP and u.kind == PICKUP:
                pass
            else:
                continue
            if forward(u.side, u.stop, v.stop):
                tr = inst.travel(u.stop, v.stop)
                if reachable(u, v, tr):
                    add_arc(u.idx, v.idx, tr)
            elif u.stop == v.stop:
                # same-stop service order: alights precede boards, and
                # within a family the canonical rank decides
                ok = False
                if u.kind in (DROPOFF, END_TURN) and v.kind in (PICKUP, START_TURN):
                    ok = True
                elif u.kind == PICKUP and v.kind == PICKUP:
                    ok = b_key(u.request) < b_key(v.request)
                elif u.kind == DROPOFF and v.kind == DROPOFF:
                    ok = a_key(u.request) < a_key(v.request)
                if ok and not (u.kind == END_TURN and v.kind == START_TURN):
                    if reachable(u, v, 0):
                        add_arc(u.idx, v.idx, 0)

    # depot arcs: free placement at any pickup or start-turn entry, free
    # recovery from any dropoff or end-turn exit, plus the idle arc
    add_arc(START_DEPOT, END_DEPOT, 0)
    for v in nodes:
        if v.kind in (PICKUP, START_TURN):
            add_arc(START_DEPOT, v.idx, 0)
        if v.kind in (DROPOFF, END_TURN):
            add_arc(v.idx, END_DEPOT, 0)

    in_arcs: dict[int, list[int]] = {v.idx: [] for v in nodes}
    out_arcs: dict[int, list[int]] = {v.idx: [] for v in nodes}
    in_arcs[END_DEPOT] = []
    out_arcs[START_DEPOT] = []
    for a in arcs:
        out_arcs.setdefault(a.tail, []).append(a.idx)
        in_arcs.setdefault(a.head, []).append(a.idx)
    return LocationGraph(nodes, arcs, in_arcs, out_arcs, "lidarp")


def build_location_model(inst: Instance, graph: LocationGraph | None = None):
    """Build the location MILP; returns ``(model, graph)``."""
    if graph is None:
        graph = build_location_graph(inst)
    sched = derive_all(inst)
    reqs = {r.id: r for r in inst.requests if r.id in sched}
    kappa = inst.fleet.kappa
    q_max = inst.fleet.q_max
    w_acc, w_dist = inst.weights.w_accept, inst.weights.w_dist

    pick_of = {v.request: v for v in graph.nodes if v.kind == PICKUP}

    model = MilpModel("location")
    K = range(1, kappa + 1)

    def arc_name(a: LocArc, k: int) -> str:
        return f"x#{a.tail}#{a.head}#{k}"

    x = {}
    for a in graph.arcs:
        obj = -w_dist * a.travel
        if a.tail >= 0 and graph.nodes[a.tail].kind == PICKUP:
            rid = graph.nodes[a.tail].request
            obj += w_acc + w_dist * inst.direct_time(reqs[rid])
        for k in K:
            x[a.idx, k] = model.add_var(arc_name(a, k), "binary", obj=obj, tag=f"x#{a.idx}#{k}")

    B = {}
    Q = {}
    for v in graph.nodes:
        B[v.idx] = model.add_var(
            f"B#{v.idx}", "continuous", v.window.earliest, v.window.latest, tag=f"B#{v.idx}"
        )
        if v.kind in (PICKUP, DROPOFF):
            lo = v.load if v.kind == PICKUP else 0
            Q[v.idx] = model.add_var(f"Q#{v.idx}", "continuous", lo, q_max, tag=f"Q#{v.idx}")

    z = {k: model.add_var(f"z#{k}", "binary", tag=f"z#{k}") for k in K}

    # -- flow ---------------------------------------------------------
    for k in K:
        model.add_constraint(
            f"depart#{k}", [(1, x[a, k]) for a in graph.out_arcs[START_DEPOT]], "=", 1
        )
        model.add_constraint(
            f"arrive#{k}", [(1, x[a, k]) for a in graph.in_arcs[END_DEPOT]], "=", 1
        )
        for v in graph.nodes:
            model.add_constraint(
                f"flow#{v.idx}#{k}",
                [(1, x[a, k]) for a in graph.in_arcs[v.idx]]
                + [(-1, x[a, k]) for a in graph.out_arcs[v.idx]],
                "=",
                0,
            )
        idle = next(
            a for a in graph.out_arcs[START_DEPOT] if graph.arcs[a].head == END_DEPOT
        )
        model.add_constraint(f"use#{k}", [(1, z[k]), (1, x[idle, k])], "=", 1)
    for v in graph.nodes:
        model.add_constraint(
            f"once#{v.idx}",
            [(1, x[a, k]) for a in graph.in_arcs[v.idx] for k in K],
            "<=",
            1,
        )
    for rid, pv in pick_of.items():
        dv = next(v for v in graph.nodes if v.kind == DROPOFF and v.request == rid)
        for k in K:
            model.add_constraint(
                f"pair#{rid}#{k}",
                [(1, x[a, k]) for a in graph.out_arcs[pv.idx]]
                + [(-1, x[a, k]) for a in graph.out_arcs[dv.idx]],
                "=",
                0,
            )
    for k in range(1, kappa):
        model.add_constraint(f"fleet#{k}", [(1, z[k]), (-1, z[k + 1])], ">=", 0)

    # -- time ---------------------------------------------------------
    for a in graph.arcs:
        if a.tail < 0 or a.head < 0:
            continue
        u, v = graph.nodes[a.tail], graph.nodes[a.head]
        M = max(Fraction(0), u.window.latest + u.service + a.travel - v.window.earliest)
        model.add_constraint(
            f"time#{a.idx}",
            [(1, B[v.idx]), (-1, B[u.idx])] + [(-M, x[a.idx, k]) for k in K],
            ">=",
            u.service + a.travel - M,
        )

    # -- load ---------------------------------------------------------
    for a in graph.arcs:
        if a.tail < 0 or a.head < 0:
            continue
        u, v = graph.nodes[a.tail], graph.nodes[a.head]
        qu = Q.get(u.idx)
        qv = Q.get(v.idx)
        if qv is not None:
            Mq = 2 * q_max
            terms = [(1, Q[v.idx])] + [(-Mq, x[a.idx, k]) for k in K]
            if qu is not None:
                terms.append((-1, Q[u.idx]))
            model.add_constraint(f"load#{a.idx}", terms, ">=", v.load - Mq)
        elif qu is not None:
            # head is a turn node or depot: the vehicle must be empty
            model.add_constraint(
                f"empty#{a.idx}",
                [(1, Q[u.idx])] + [(q_max, x[a.idx, k]) for k in K],
                "<=",
                q_max,
            )
    for v in graph.nodes:
        if v.kind == DROPOFF and Q.get(v.idx) is not None:
            arcs_to_end = [
                a for a in graph.out_arcs[v.idx] if graph.arcs[a].head == END_DEPOT
            ]
            for a in arcs_to_end:
                model.add_constraint(
                    f"final#{a}",
                    [(1, Q[v.idx])] + [(q_max, x[a, k]) for k in K],
                    "<=",
                    q_max,
                )

    # -- ride-time promise --------------------------------------------
    for rid, pv in pick_of.items():
        req = reqs[rid]
        dv = next(v for v in graph.nodes if v.kind == DROPOFF and v.request == rid)
        direct = inst.direct_time(req)
        cap = sched[rid].max_ride - req.service_time
        slack = max(
            Fraction(0), dv.window.latest - pv.window.earliest - cap
        )
        model.add_constraint(
            f"promise#{rid}",
            [(1, B[dv.idx]), (-1, B[pv.idx])]
            + [(slack, x[a, k]) for a in graph.out_arcs[pv.idx] for k in K],
            "<=",
            cap + slack,
        )
        # minimum ride time; also forces pickup-before-dropoff order
        floor = direct + req.service_time
        Mf = max(Fraction(0), floor - dv.window.earliest + pv.window.latest)
        model.add_constraint(
            f"ride_floor#{rid}",
            [(1, B[dv.idx]), (-1, B[pv.idx])]
            + [(-Mf, x[a, k]) for a in graph.out_arcs[pv.idx] for k in K],
            ">=",
            floor - Mf,
        )
    return model, graph


@dataclass
class LocationFormulation:
    inst: Instance
    graph: LocationGraph
    model: MilpModel

    def decode(self, solution: MilpSolution) -> RoutePlan:
        if solution.status not in (
            SolveStatus.OPTIMAL,
            SolveStatus.FEASIBLE,
            SolveStatus.TIME_LIMIT,
        ):
            raise DecodeError(f"no solution to decode (status {solution.status})")
        inst = self.inst
        graph = self.graph
        kappa = inst.fleet.kappa

        def val(name):
            return float(solution.values.get(self.model.var_id(name), 0))

        routes = []
        accepted = set()
        for k in range(1, kappa + 1):
            chosen = {
                a.idx: a
                for a in graph.arcs
                if val(f"x#{a.tail}#{a.head}#{k}") > 0.5
            }
            nxt = {}
            for a in chosen.values():
                if a.tail in nxt:
                    raise DecodeError(f"vehicle {k}: branching at node {a.tail}")
                nxt[a.tail] = a
            visits: list[Visit] = []
            cur = START_DEPOT
            used = 0
            while True:
                if cur not in nxt:
                    raise DecodeError(f"vehicle {k}: path breaks at node {cur}")
                a = nxt[cur]
                used += 1
                if a.head == END_DEPOT:
                    break
                v = graph.nodes[a.head]
                if v.kind == PICKUP:
                    visits.append(Visit(v.stop, None, None, (v.request,), ()))
                    accepted.add(v.request)
                elif v.kind == DROPOFF:
                    visits.append(Visit(v.stop, None, None, (), (v.request,)))
                elif v.kind == START_TURN:
                    visits.append(Visit(v.stop, None, None, (), (), True))
                else:  # END_TURN: the turn happens when leaving the dropoff
                    visits.append(Visit(v.stop, None, None, (), (), True))
                cur = a.head
            if used != len(chosen):
                raise DecodeError(f"vehicle {k}: {len(chosen) - used} arcs off the path")
            # an end-turn visit flags the turn after the preceding dropoff
            cleaned: list[Visit] = []
            for v in visits:
                if (
                    v.turn_after
                    and not v.boards
                    and not v.alights
                    and cleaned
                    and cleaned[-1].stop == v.stop
                    and not cleaned[-1].turn_after
                ):
                    prev = cleaned.pop()
                    cleaned.append(
                        Visit(prev.stop, None, None, prev.boards, prev.alights, True)
                    )
                else:
                    cleaned.append(v)
            if cleaned:
                routes.append(schedule_sequence(cleaned, inst))
        while len(routes) < kappa:
            routes.append(())
        rejected = frozenset(r.id for r in inst.requests) - frozenset(accepted)
        return RoutePlan(tuple(routes), frozenset(accepted), rejected)


def build_location(inst: Instance) -> LocationFormulation:
    model, graph = build_location_model(inst)
    return LocationFormulation(inst, graph, model)
