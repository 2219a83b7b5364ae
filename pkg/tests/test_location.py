"""Location formulation: graph construction, model, decoding."""

import pytest

from conftest import LINE8, make_instance, req
from lidarp.forms.location import (
    build_location,
    build_location_graph,
    build_location_model,
)
from lidarp.instance import generate_instance
from lidarp.milp.bnb import BnbConfig, solve_bb
from lidarp.milp.model import SolveStatus
from lidarp.route import brute_force_solve, metrics, validate
from lidarp.timewin import derive_all


class TestGraph:
    def test_single_request_nodes(self):
        inst = make_instance([req(1, 2, 6, "E", 100)])
        g = build_location_graph(inst)
        kinds = sorted(n.kind for n in g.nodes)
        assert kinds == ["D", "ET", "P", "ST"]
        st = next(n for n in g.nodes if n.kind == "ST")
        et = next(n for n in g.nodes if n.kind == "ET")
        assert (st.stop, et.stop) == (2, 6)

    def test_direct_arc_always_present(self):
        for seed in range(4):
            inst = generate_instance(
                seed=seed, n_stops=8, m_requests=5, kappa=2, q_max=3, matrix=LINE8
            )
            g = build_location_graph(inst)
            sched = derive_all(inst)
            by_req = {
                (n.kind, n.request): n.idx for n in g.nodes if n.kind in ("P", "D")
            }
            arcs = {(a.tail, a.head) for a in g.arcs}
            for rid in sched:
                assert (by_req[("P", rid)], by_req[("D", rid)]) in arcs

    def test_turn_arcs_carry_turn_time(self):
        inst = make_instance([req(1, 2, 6, "E", 100)])
        g = build_location_graph(inst)
        nodes = {n.idx: n for n in g.nodes}
        for a in g.arcs:
            if a.turn:
                assert a.travel == 3
                assert {nodes[a.tail].kind, nodes[a.head].kind} & {"ST", "ET"}

    def test_same_side_arcs_forward_only(self):
        inst = generate_instance(
            seed=1, n_stops=8, m_requests=5, kappa=2, q_max=3, matrix=LINE8
        )
        g = build_location_graph(inst)
        nodes = {n.idx: n for n in g.nodes}
        for a in g.arcs:
            u, v = nodes.get(a.tail), nodes.get(a.head)
            if u is None or v is None or a.turn:
                continue
            sign = 1 if u.side.value == "asc" else -1
            assert sign * (v.stop - u.stop) >= 0

    def test_early_start_turn_node_omitted(self):
        # a pickup right at time 0 leaves no room for a prior turn
        inst = make_instance([req(1, 2, 6, "E", 0)], beta=1)
        g = build_location_graph(inst)
        assert not any(n.kind == "ST" for n in g.nodes)


class TestModel:
    def test_single_request_optimum(self):
        inst = make_instance([req(1, 2, 6, "E", 100)])
        form = build_location(inst)
        res = solve_bb(form.model, config=BnbConfig(mode="exact"))
        assert res.objective == 10

    def test_second_vehicle_unused(self):
        inst = make_instance([req(1, 2, 6, "E", 100)], kappa=2)
        form = build_location(inst)
        res = solve_bb(form.model, config=BnbConfig(mode="exact"))
        assert res.objective == 10
        assert res.value_by_name(form.model, "z#2") == 0

    def test_matches_oracle_random(self):
        for seed in range(6):
            inst = generate_instance(
                seed=seed, n_stops=8, m_requests=3, kappa=2, q_max=3, matrix=LINE8
            )
            obj, _ = brute_force_solve(inst)
            form = build_location(inst)
            res = solve_bb(form.model, config=BnbConfig(mode="exact"))
            assert res.objective == obj, f"seed {seed}"
            plan = form.decode(res)
            assert validate(inst, plan) == []
            assert metrics(inst, plan).objective == obj

    def test_ride_floor_blocks_backward_service(self):
        # without the minimum-ride constraint the relaxable path would
        # visit this instance's dropoffs before their pickups
        inst = generate_instance(
            seed=5, n_stops=8, m_requests=3, kappa=2, q_max=3, matrix=LINE8
        )
        obj, _ = brute_force_solve(inst)
        form = build_location(inst)
        res = solve_bb(form.model, config=BnbConfig(mode="exact"))
        assert res.objective == obj == 20
        assert validate(inst, form.decode(res)) == []

    def test_infeasible_request_rejected(self):
        inst = make_instance([req(1, 1, 6, "L", 5)])
        form = build_location(inst)
        res = solve_bb(form.model, config=BnbConfig(mode="exact"))
        assert res.objective == 0
