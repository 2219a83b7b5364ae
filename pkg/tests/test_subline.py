"""Subline formulation: precedence sets, model, decoding."""

import pytest

from conftest import LINE8, make_instance, req
from lidarp.forms.subline import (
    branch_priority,
    build_subline,
    build_subline_model,
    precedence_sets,
)
from lidarp.instance import generate_instance
from lidarp.milp.bnb import BnbConfig, solve_bb
from lidarp.route import brute_force_solve, metrics, validate


def solve(form, time_limit=None):
    return solve_bb(
        form.model, config=BnbConfig(time_limit=time_limit, priority=branch_priority)
    )


class TestPrecedenceSets:
    def test_same_origin_board_order(self):
        inst = make_instance(
            [req(1, 3, 6, "E", 10), req(2, 3, 6, "E", 20)], q_max=2
        )
        ps = precedence_sets(inst)
        assert ps.before_board[2] == (1,)
        assert ps.before_board[1] == ()

    def test_opposite_directions_empty(self):
        inst = make_instance([req(1, 3, 6, "E", 10), req(2, 3, 1, "E", 20)], q_max=2)
        ps = precedence_sets(inst)
        for sets in (ps.before_board, ps.alight_before_board, ps.before_alight):
            assert sets[1] == () and sets[2] == ()

    def test_alight_before_board(self):
        # request 2's destination is request 1's origin, same direction
        inst = make_instance([req(1, 4, 7, "E", 50), req(2, 2, 4, "E", 10)], q_max=2)
        ps = precedence_sets(inst)
        assert 2 in ps.alight_before_board[1]

    def test_same_destination_alight_order(self):
        inst = make_instance([req(1, 2, 6, "E", 10), req(2, 3, 6, "E", 10)], q_max=2)
        ps = precedence_sets(inst)
        # canonical alight order: earlier dropoff-window start first
        assert ps.before_alight[2] == () or ps.before_alight[1] == ()
        assert ps.before_alight[1] == (2,) or ps.before_alight[2] == (1,)


class TestModel:
    def test_empty_instance_optimum_zero(self):
        form = build_subline(make_instance([]))
        res = solve(form)
        assert res.objective == 0

    def test_single_request_optimum(self):
        inst = make_instance([req(1, 2, 6, "E", 100)])
        form = build_subline(inst)
        res = solve(form)
        assert float(res.objective) == pytest.approx(10, abs=1e-6)
        plan = form.decode(res)
        assert validate(inst, plan) == []

    def test_counts_linear_in_sigma(self):
        inst = generate_instance(
            seed=0, n_stops=8, m_requests=3, kappa=2, q_max=3, matrix=LINE8
        )
        counts = []
        for sigma in (2, 4, 6):
            model, _ = build_subline_model(inst, sigma=sigma)
            counts.append(len(model.constraints))
        assert counts[2] - counts[1] == counts[1] - counts[0]
        assert counts[0] < counts[1] < counts[2]

    def test_counts_linear_in_kappa(self):
        counts = []
        for kappa in (1, 2, 3):
            inst = generate_instance(
                seed=0, n_stops=8, m_requests=3, kappa=kappa, q_max=3, matrix=LINE8
            )
            model, _ = build_subline_model(inst, sigma=4)
            counts.append(len(model.constraints))
        assert counts[2] - counts[1] == counts[1] - counts[0]

    def test_matches_oracle(self):
        for seed in range(3):
            inst = generate_instance(
                seed=seed, n_stops=8, m_requests=2, kappa=1, q_max=3, matrix=LINE8
            )
            obj, _ = brute_force_solve(inst)
            form = build_subline(inst)
            res = solve(form)
            assert float(res.objective) == pytest.approx(float(obj), abs=1e-6), f"seed {seed}"
            plan = form.decode(res)
            assert validate(inst, plan) == []
            assert metrics(inst, plan).objective == obj

    def test_sigma_doubling_keeps_optimum(self):
        inst = generate_instance(
            seed=1, n_stops=8, m_requests=2, kappa=1, q_max=3, matrix=LINE8
        )
        base = solve(build_subline(inst))
        doubled = solve(build_subline(inst, sigma=8))
        assert float(base.objective) == pytest.approx(float(doubled.objective), abs=1e-6)

    def test_two_vehicle_case(self):
        inst = generate_instance(
            seed=0, n_stops=8, m_requests=2, kappa=2, q_max=3, matrix=LINE8
        )
        obj, _ = brute_force_solve(inst)
        form = build_subline(inst)
        res = solve(form)
        assert float(res.objective) == pytest.approx(float(obj), abs=1e-6)
        assert validate(inst, form.decode(res)) == []
