"""Event-based formulation: a circulation over (action, onboard-set) nodes.

Each node records a vehicle's last pickup/dropoff together with the set
of passengers aboard afterwards; arcs are feasible transitions.  The
line-service mode prunes nodes and arcs that would violate the
directionality rule (vehicles never reverse with passengers aboard); the
classical mode keeps reversals free and drops turn costs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from lidarp.instance import Direction, Instance
from lidarp.milp.model import MilpModel, MilpSolution, SolveStatus
from lidarp.route import (
    DARP,
    LIDARP,
    DecodeError,
    RoutePlan,
    Visit,
    alight_rank,
    board_rank,
    schedule_sequence,
)
from lidarp.timewin import TimeWindow, derive_all

PICKUP = "+"
DROPOFF = "-"


@dataclass(frozen=True)
class EventNode:
    idx: int
    kind: str  # PICKUP or DROPOFF; "0" for the depot
    request: int  # 0 for the depot
    onboard: tuple[int, ...]  # aboard after the action, ascending ids
    stop: int
    side: Direction | None

    @property
    def is_depot(self) -> bool:
        return self.kind == "0"


@dataclass(frozen=True)
class EventArc:
    idx: int
    tail: int
    head: int
    cost: Fraction  # travel plus any turn time
    turns: int


@dataclass
class EventGraph:
    nodes: list[EventNode]
    arcs: list[EventArc]
    pickups: dict[int, list[int]]  # request -> pickup node indices
    dropoffs: dict[int, list[int]]
    in_arcs: dict[int, list[int]]
    out_arcs: dict[int, list[int]]
    mode: str


def _travel0(inst: Instance, a: int, b: int) -> Fraction:
    return Fraction(0) if a == b else Fraction(inst.travel(a, b))


def _node_window(v: EventNode, inst: Instance, sched, reqs) -> TimeWindow | None:
    """The node's own service window tightened by its riders' deadlines.

    Everyone aboard around the action boarded no earlier than their pickup
    window opens and must still reach their destination in time, which
    bounds the action time from both sides.  Returns None when the
    tightened window is empty (the event can never happen).
    """
    s = sched[v.request]
    w = s.pickup_window if v.kind == PICKUP else s.dropoff_window
    lo, hi = w.earliest, w.latest
    aboard_after = v.onboard if v.kind == PICKUP else tuple(v.onboard)
    riders = set(v.onboard) | {v.request}
    for r in riders:
        lo = max(
            lo,
            sched[r].pickup_window.earliest
            + _travel0(inst, reqs[r].origin, v.stop),
        )
    for r in aboard_after:
        hi = min(
            hi,
            sched[r].dropoff_window.latest
            - _travel0(inst, v.stop, reqs[r].destination),
        )
    if lo > hi:
        return None
    return TimeWindow(lo, hi)


def _chain_ok(inst, sched, j, r, reqs) -> bool:
    """Can j be served (boarded) and then r boarded, window-wise?"""
    return (
        sched[j].pickup_window.earliest
        + reqs[j].service_time
        + _travel0(inst, reqs[j].origin, reqs[r].origin)
        <= sched[r].pickup_window.latest
    )


def enumerate_events(inst: Instance, mode: str = LIDARP) -> list[EventNode]:
    """All feasible (action, onboard) tuples, depot first.

    Shared-stop service follows the canonical boarding/alighting order,
    so tuples contradicting it are never created.
    """
    sched = derive_all(inst)
    reqs = {r.id: r for r in inst.requests}
    servable = sorted(sched)
    b_key, a_key = board_rank(sched), alight_rank(sched)
    lidarp = mode == LIDARP

    def compat(a, b):
        return _chain_ok(inst, sched, a, b, reqs) or _chain_ok(inst, sched, b, a, reqs)

    def pickup_ok(r, J):
        rr = reqs[r]
        if sum(reqs[j].load for j in J) + rr.load > inst.fleet.q_max:
            return False
        sign = 1 if rr.destination > rr.origin else -1
        for j in J:
            jj = reqs[j]
            if lidarp:
                if jj.direction is not rr.direction:
                    return False
                if sign * (rr.origin - jj.origin) < 0 or sign * (jj.destination - rr.origin) <= 0:
                    return False
            else:
                if jj.destination == rr.origin and jj.direction is rr.direction:
                    return False
            if jj.origin == rr.origin and jj.direction is rr.direction and b_key(r) < b_key(j):
                return False  # r precedes j canonically, so j cannot be aboard yet
            if not _chain_ok(inst, sched, j, r, reqs):
                return False
        return all(compat(a, b) for a, b in itertools.combinations(J, 2))

    def dropoff_ok(r, J):
        rr = reqs[r]
        if sum(reqs[j].load for j in J) + rr.load > inst.fleet.q_max:
            return False
        sign = 1 if rr.destination > rr.origin else -1
        for j in J:
            jj = reqs[j]
            if lidarp:
                if jj.direction is not rr.direction:
                    return False
                if sign * (rr.destination - jj.origin) <= 0 or sign * (jj.destination - rr.destination) < 0:
                    return False
            else:
                if jj.origin == rr.destination and jj.direction is rr.direction:
                    return False
            if (
                jj.destination == rr.destination
                and jj.direction is rr.direction
                and a_key(j) < a_key(r)
            ):
                return False  # j alights before r canonically, so j cannot stay aboard
            if not compat(j, r):
                return False
        return all(compat(a, b) for a, b in itertools.combinations(J, 2))

    nodes = [EventNode(0, "0", 0, (), 0, None)]
    for r in servable:
        rr = reqs[r]
        others = [j for j in servable if j != r]
        if lidarp:
            others = [j for j in others if reqs[j].direction is rr.direction]
        max_extra = inst.fleet.q_max - rr.load
        for size in range(0, len(others) + 1):
            for J in itertools.combinations(others, size):
                if sum(reqs[j].load for j in J) > max_extra:
                    continue
                if pickup_ok(r, J):
                    onboard = tuple(sorted(J + (r,)))
                    cand = EventNode(len(nodes), PICKUP, r, onboard, rr.origin, rr.direction)
                    if _node_window(cand, inst, sched, reqs) is not None:
                        nodes.append(cand)
                if dropoff_ok(r, J):
                    cand = EventNode(
                        len(nodes), DROPOFF, r, tuple(sorted(J)), rr.destination, rr.direction
                    )
                    if _node_window(cand, inst, sched, reqs) is not None:
                        nodes.append(cand)
    return nodes


def build_event_graph(nodes: list[EventNode], inst: Instance, mode: str = LIDARP) -> EventGraph:
    """Connect every feasible transition between events."""
    sched = derive_all(inst)
    reqs = {r.id: r for r in inst.requests}
    lidarp = mode == LIDARP
    t_turn = Fraction(inst.fleet.t_turn)

    def window(v: EventNode):
        return _node_window(v, inst, sched, reqs)

    def service(v: EventNode) -> Fraction:
        return Fraction(0) if v.is_depot else Fraction(reqs[v.request].service_time)

    # pre-action passenger set -> candidate successor nodes
    by_pre: dict[tuple, list[EventNode]] = {}
    for v in nodes:
        if v.is_depot:
            continue
        if v.kind == PICKUP:
            pre = tuple(x for x in v.onboard if x != v.request)
        else:
            pre = tuple(sorted(v.onboard + (v.request,)))
        by_pre.setdefault(pre, []).append(v)

    arcs: list[EventArc] = []
    in_arcs: dict[int, list[int]] = {v.idx: [] for v in nodes}
    out_arcs: dict[int, list[int]] = {v.idx: [] for v in nodes}

    def add(u: EventNode, v: EventNode, cost: Fraction, turns: int):
        a = EventArc(len(arcs), u.idx, v.idx, cost, turns)
        arcs.append(a)
        out_arcs[u.idx].append(a.idx)
        in_arcs[v.idx].append(a.idx)

    depot = nodes[0]
    for u in nodes:
        if u.is_depot:
            for v in by_pre.get((), []):
                if v.kind == PICKUP:
                    add(depot, v, Fraction(0), 0)
            continue
        post = u.onboard
        for v in by_pre.get(post, []):
            if v.idx == u.idx:
                continue
            if v.kind == PICKUP and v.request in post:
                continue
            if v.kind == DROPOFF and v.request not in post:
                continue
            a_stop, b_stop = u.stop, v.stop
            base = _travel0(inst, a_stop, b_stop)
            if lidarp:
                if post:
                    if v.side is not u.side:
                        continue
                    sign = 1 if u.side is Direction.ASCENDING else -1
                    if sign * (b_stop - a_stop) < 0:
                        continue
                    cost, turns = base, 0
                else:
                    if v.side is u.side:
                        sign = 1 if u.side is Direction.ASCENDING else -1
                        if sign * (b_stop - a_stop) >= 0:
                            cost, turns = base, 0
                        else:
                            cost, turns = base + 2 * t_turn, 2
                    else:
                        cost, turns = base + t_turn, 1
            else:
                cost, turns = base, 0
            if window(u).earliest + service(u) + cost > window(v).latest:
                continue
            add(u, v, cost, turns)
        if not post and u.kind == DROPOFF:
            add(u, depot, Fraction(0), 0)

    pickups: dict[int, list[int]] = {}
    dropoffs: dict[int, list[int]] = {}
    for v in nodes:
        if v.is_depot:
            continue
        (pickups if v.kind == PICKUP else dropoffs).setdefault(v.request, []).append(v.idx)
    return EventGraph(nodes, arcs, pickups, dropoffs, in_arcs, out_arcs, mode)


def build_event_model(graph: EventGraph, inst: Instance) -> MilpModel:
    """Circulation MILP over the event graph."""
    sched = derive_all(inst)
    reqs = {r.id: r for r in inst.requests}
    w_acc, w_dist = inst.weights.w_accept, inst.weights.w_dist
    model = MilpModel("event")

    def window(v: EventNode):
        return _node_window(v, inst, sched, reqs)

    x = {}
    for a in graph.arcs:
        obj = -w_dist * a.cost
        head = graph.nodes[a.head]
        if head.kind == PICKUP:
            r = head.request
            obj += w_acc + w_dist * inst.direct_time(reqs[r])
        x[a.idx] = model.add_var(
            f"xa#{a.tail}#{a.head}", "binary", obj=obj, tag=f"xa#{a.tail}#{a.head}"
        )
    B = {}
    for v in graph.nodes:
        if v.is_depot:
            continue
        w = window(v)
        B[v.idx] = model.add_var(
            f"B#{v.idx}", "continuous", w.earliest, w.latest, tag=f"B#{v.idx}"
        )

    for v in graph.nodes:
        if v.is_depot:
            continue
        ins = [(1, x[a]) for a in graph.in_arcs[v.idx]]
        outs = [(-1, x[a]) for a in graph.out_arcs[v.idx]]
        if ins or outs:
            model.add_constraint(f"flow#{v.idx}", ins + outs, "=", 0)
        if ins:
            model.add_constraint(f"once#{v.idx}", [(1, x[a]) for a in graph.in_arcs[v.idx]], "<=", 1)

    for r in sorted(graph.pickups):
        p_in = [a for v in graph.pickups[r] for a in graph.in_arcs[v]]
        d_in = [a for v in graph.dropoffs.get(r, []) for a in graph.in_arcs[v]]
        model.add_constraint(f"serve#{r}", [(1, x[a]) for a in p_in], "<=", 1)
        model.add_constraint(
            f"pair#{r}", [(1, x[a]) for a in p_in] + [(-1, x[a]) for a in d_in], "=", 0
        )

    depot_out = graph.out_arcs[0]
    if depot_out:
        model.add_constraint(
            "fleet", [(1, x[a]) for a in depot_out], "<=", inst.fleet.kappa
        )

    for a in graph.arcs:
        u, v = graph.nodes[a.tail], graph.nodes[a.head]
        if u.is_depot or v.is_depot:
            continue
        sep = Fraction(reqs[u.request].service_time) + a.cost
        M = max(Fraction(0), window(u).latest + sep - window(v).earliest)
        # B_v >= B_u + sep - M(1 - x)
        model.add_constraint(
            f"time#{a.tail}#{a.head}",
            [(1, B[v.idx]), (-1, B[u.idx]), (-M, x[a.idx])],
            ">=",
            sep - M,
        )

    # ride-time promise via request-level service-start variables
    for r in sorted(graph.pickups):
        if r not in graph.dropoffs:
            continue
        s = sched[r]
        p = model.add_var(
            f"p#{r}", "continuous", s.pickup_window.earliest, s.pickup_window.latest, tag=f"p#{r}"
        )
        pb = model.add_var(
            f"pbar#{r}",
            "continuous",
            s.dropoff_window.earliest,
            s.dropoff_window.latest,
            tag=f"pbar#{r}",
        )
        wp = s.pickup_window.width()
        wd = s.dropoff_window.width()
        for v in graph.pickups[r]:
            ins = [(1, x[a]) for a in graph.in_arcs[v]]
            if not ins:
                continue
            # p <= B_v + wp(1 - in_v)
            model.add_constraint(
                f"plink#{r}#{v}", [(1, p), (-1, B[v])] + [(wp, xv) for _, xv in ins], "<=", wp
            )
        for v in graph.dropoffs[r]:
            ins = [(1, x[a]) for a in graph.in_arcs[v]]
            if not ins:
                continue
            # pb >= B_v - wd(1 - in_v)
            model.add_constraint(
                f"dlink#{r}#{v}", [(1, pb), (-1, B[v])] + [(-wd, xv) for _, xv in ins], ">=", -wd
            )
        cap = s.max_ride - reqs[r].service_time
        slack = max(
            Fraction(0), s.dropoff_window.latest - s.pickup_window.earliest - cap
        )
        served = [(slack, x[a]) for v in graph.pickups[r] for a in graph.in_arcs[v]]
        # pb - p <= cap + slack(1 - served)
        model.add_constraint(
            f"ride#{r}", [(1, pb), (-1, p)] + served, "<=", cap + slack
        )
    return model


@dataclass
class EventFormulation:
    """Built artifacts of the event formulation, including the decoder."""

    inst: Instance
    mode: str
    graph: EventGraph
    model: MilpModel

    def decode(self, solution: MilpSolution) -> RoutePlan:
        if solution.status not in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE, SolveStatus.TIME_LIMIT):
            raise DecodeError(f"no solution to decode (status {solution.status})")
        g = self.graph
        used = [
            a
            for a in g.arcs
            if float(solution.values.get(self.model.var_id(f"xa#{a.tail}#{a.head}"), 0)) > 0.5
        ]
        succ: dict[int, list[EventArc]] = {}
        for a in used:
            succ.setdefault(a.tail, []).append(a)
        routes = []
        consumed = set()
        for start in sorted(succ.get(0, []), key=lambda a: a.head):
            visits: list[Visit] = []
            cur = start
            consumed.add(cur.idx)
            prev_node = None
            for _ in range(len(used) + 1):
                node = g.nodes[cur.head]
                if node.is_depot:
                    break
                if prev_node is not None:
                    visits.extend(_turn_visits(prev_node, node, cur))
                visits.append(
                    Visit(
                        node.stop,
                        None,
                        None,
                        (node.request,) if node.kind == PICKUP else (),
                        (node.request,) if node.kind == DROPOFF else (),
                    )
                )
                nxt = succ.get(node.idx, [])
                if len(nxt) != 1:
                    raise DecodeError(f"node {node.idx}: {len(nxt)} outgoing arcs selected")
                prev_node = node
                cur = nxt[0]
                consumed.add(cur.idx)
            else:
                raise DecodeError("vehicle chain does not return to the depot")
            routes.append(schedule_sequence(visits, self.inst))
        if len(consumed) != len(used):
            raise DecodeError("selected arcs contain a cycle detached from the depot")
        while len(routes) < self.inst.fleet.kappa:
            routes.append(())
        accepted = frozenset(
            r
            for r, vs in g.pickups.items()
            if any(
                float(solution.values.get(self.model.var_id(f"xa#{a.tail}#{a.head}"), 0)) > 0.5
                for v in vs
                for a in (g.arcs[i] for i in g.in_arcs[v])
            )
        )
        rejected = frozenset(r.id for r in self.inst.requests) - accepted
        return RoutePlan(tuple(routes), accepted, rejected)


def _turn_visits(u: EventNode, v: EventNode, arc: EventArc) -> list[Visit]:
    """Empty visits realizing the arc's turns at their physical stops."""
    if arc.turns == 0:
        return []
    if arc.turns == 2:
        return [
            Visit(u.stop, None, None, (), (), True),
            Visit(v.stop, None, None, (), (), True),
        ]
    if u.side is Direction.ASCENDING:
        spot = max(u.stop, v.stop)
    else:
        spot = min(u.stop, v.stop)
    return [Visit(spot, None, None, (), (), True)]


def build_event(inst: Instance, mode: str = LIDARP) -> EventFormulation:
    nodes = enumerate_events(inst, mode)
    graph = build_event_graph(nodes, inst, mode)
    model = build_event_model(graph, inst)
    return EventFormulation(inst, mode, graph, model)
