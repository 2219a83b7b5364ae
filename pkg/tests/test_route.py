"""Route plans: scheduling, validation, metrics, serialization, oracle."""

import dataclasses
from fractions import Fraction

import pytest

from conftest import LINE8, make_instance, req
from lidarp.instance import generate_instance, line_metric_matrix
from lidarp.route import (
    DARP,
    LIDARP,
    InfeasibleSchedule,
    RoutePlan,
    TooLarge,
    Visit,
    brute_force_solve,
    empty_plan,
    format_plan,
    metrics,
    parse_plan,
    schedule_sequence,
    validate,
)


def plan_of(routes, accepted, rejected):
    return RoutePlan(tuple(tuple(r) for r in routes), frozenset(accepted), frozenset(rejected))


def shift_route(route, delta):
    return tuple(
        dataclasses.replace(v, arrival=v.arrival + delta, departure=v.departure + delta)
        for v in route
    )


# Requests 1 (1->6) and 3 (1->5) ride together; request 2 (2->5) has its
# own vehicle.  All anchors 100, so windows are generous.
BASE = make_instance(
    [req(1, 1, 6, "E", 100), req(2, 2, 5, "E", 100), req(3, 1, 5, "E", 100)],
    kappa=2,
    q_max=2,
)


def base_plan():
    r1 = schedule_sequence(
        [Visit(1, None, None, boards=(1, 3)), Visit(5, None, None, alights=(3,)), Visit(6, None, None, alights=(1,))],
        BASE,
    )
    r2 = schedule_sequence(
        [Visit(2, None, None, boards=(2,)), Visit(5, None, None, alights=(2,))], BASE
    )
    return plan_of([r1, r2], {1, 2, 3}, set())


class TestScheduleSequence:
    def test_direct_drive_earliest(self):
        inst = make_instance([req(1, 1, 6, "E", 0)])
        visits = schedule_sequence(
            [Visit(1, None, None, boards=(1,)), Visit(6, None, None, alights=(1,))], inst
        )
        assert visits[0].arrival == 0
        assert visits[0].departure == 3  # service time
        assert visits[1].arrival == visits[0].departure + 10

    def test_ride_cap_conflict_infeasible(self):
        # serving the late request inside the early one's ride blows its cap
        inst = make_instance([req(1, 1, 6, "E", 0), req(2, 2, 5, "L", 470)], q_max=2)
        with pytest.raises(InfeasibleSchedule):
            schedule_sequence(
                [
                    Visit(1, None, None, boards=(1,)),
                    Visit(2, None, None, boards=(2,)),
                    Visit(5, None, None, alights=(2,)),
                    Visit(6, None, None, alights=(1,)),
                ],
                inst,
            )

    def test_turn_adds_turn_time(self):
        inst = make_instance([req(1, 1, 6, "E", 100)])
        visits = schedule_sequence(
            [
                Visit(1, None, None, boards=(1,)),
                Visit(7, None, None, turn_after=True),
                Visit(6, None, None, alights=(1,)),
            ],
            inst,
        )
        assert visits[2].arrival >= visits[1].departure + 3 + LINE8.travel(7, 6)


class TestValidator:
    def test_base_plans_clean(self):
        assert validate(BASE, base_plan()) == []

    def test_mutant_capacity(self):
        r1 = schedule_sequence(
            [
                Visit(1, None, None, boards=(1, 3)),
                Visit(2, None, None, boards=(2,)),
                Visit(5, None, None, alights=(2, 3)),
                Visit(6, None, None, alights=(1,)),
            ],
            BASE,
        )
        bad = validate(BASE, plan_of([r1, ()], {1, 2, 3}, set()))
        assert {v.kind for v in bad} == {"Capacity"}

    def test_mutant_turn_with_passengers(self):
        r1 = schedule_sequence(
            [
                Visit(1, None, None, boards=(1, 3)),
                Visit(5, None, None, alights=(3,)),
                Visit(7, None, None, turn_after=True),
                Visit(6, None, None, alights=(1,)),
            ],
            BASE,
        )
        plan = plan_of([r1, base_plan().routes[1]], {1, 2, 3}, set())
        assert {v.kind for v in validate(BASE, plan)} == {"TurnWithPassengers"}

    def test_mutant_directionality(self):
        base = base_plan()
        # ride past the destination and come back without declaring a turn
        r1 = list(base.routes[0])
        v5, v6 = r1[1], r1[2]
        r1 = [
            r1[0],
            v5,
            Visit(7, v5.departure + 4, v5.departure + 4),
            Visit(6, v5.departure + 6, v5.departure + 9, alights=(1,)),
        ]
        plan = plan_of([r1, base.routes[1]], {1, 2, 3}, set())
        assert {v.kind for v in validate(BASE, plan)} == {"Directionality"}

    def test_mutant_travel_time(self):
        base = base_plan()
        r1 = list(base.routes[0])
        last = r1[-1]
        r1[-1] = dataclasses.replace(last, arrival=last.arrival - 1, departure=last.departure - 1)
        plan = plan_of([r1, base.routes[1]], {1, 2, 3}, set())
        assert {v.kind for v in validate(BASE, plan)} == {"TravelTime"}

    def test_mutant_time_window(self):
        base = base_plan()
        plan = plan_of([shift_route(base.routes[0], -3), base.routes[1]], {1, 2, 3}, set())
        assert {v.kind for v in validate(BASE, plan)} == {"TimeWindow"}

    def test_mutant_wait_promise(self):
        base = base_plan()
        plan = plan_of([shift_route(base.routes[0], 16), base.routes[1]], {1, 2, 3}, set())
        assert {v.kind for v in validate(BASE, plan)} == {"WaitPromise"}

    def test_mutant_ride_promise(self):
        base = base_plan()
        r1 = list(base.routes[0])
        v5 = r1[1]
        r1[1] = dataclasses.replace(v5, departure=v5.departure + 25)
        r1[2] = dataclasses.replace(
            r1[2], arrival=r1[1].departure + 2, departure=r1[1].departure + 5
        )
        plan = plan_of([r1, base.routes[1]], {1, 2, 3}, set())
        assert {v.kind for v in validate(BASE, plan)} == {"RidePromise"}

    def test_mutant_transfer(self):
        base = base_plan()
        # request 2 still appears in a route but is declared rejected
        plan = plan_of(base.routes, {1, 3}, {2})
        assert {v.kind for v in validate(BASE, plan)} == {"TransferViolation"}

    def test_mutant_boarding_order(self):
        base = base_plan()
        first = base.routes[0][0]
        # split the double boarding into two same-stop calls, later rank first
        r1 = [
            Visit(1, first.arrival, first.arrival + 3, boards=(3,)),
            Visit(1, first.arrival + 3, first.departure, boards=(1,)),
        ] + list(base.routes[0][1:])
        plan = plan_of([r1, base.routes[1]], {1, 2, 3}, set())
        assert {v.kind for v in validate(BASE, plan)} == {"BoardingOrder"}

    def test_mutant_vehicle_count(self):
        base = base_plan()
        r1 = schedule_sequence(
            [Visit(1, None, None, boards=(1,)), Visit(6, None, None, alights=(1,))], BASE
        )
        r3 = schedule_sequence(
            [Visit(1, None, None, boards=(3,)), Visit(5, None, None, alights=(3,))], BASE
        )
        plan = plan_of([r1, base.routes[1], r3], {1, 2, 3}, set())
        assert {v.kind for v in validate(BASE, plan)} == {"VehicleCount"}

    def test_darp_mode_allows_loaded_turns(self):
        r1 = schedule_sequence(
            [
                Visit(1, None, None, boards=(1, 3)),
                Visit(5, None, None, alights=(3,)),
                Visit(7, None, None, turn_after=True),
                Visit(6, None, None, alights=(1,)),
            ],
            BASE,
        )
        plan = plan_of([r1, base_plan().routes[1]], {1, 2, 3}, set())
        assert validate(BASE, plan, DARP) == []


class TestMetrics:
    def test_empty_plan(self):
        m = metrics(BASE, empty_plan(BASE))
        assert m.accepted_count == 0
        assert m.saved_distance == 0
        assert m.objective == 0

    def test_direct_service(self):
        inst = make_instance([req(1, 1, 6, "E", 100)])
        plan = plan_of(
            [
                schedule_sequence(
                    [Visit(1, None, None, boards=(1,)), Visit(6, None, None, alights=(1,))],
                    inst,
                )
            ],
            {1},
            set(),
        )
        m = metrics(inst, plan)
        assert m.saved_distance == 0
        assert m.mean_detour == 1
        assert m.empty_share == 0
        assert m.objective == 10

    def test_objective_decomposition(self):
        for seed in range(5):
            inst = generate_instance(
                seed=seed, n_stops=8, m_requests=4, kappa=2, q_max=3, matrix=LINE8
            )
            obj, plan = brute_force_solve(inst)
            m = metrics(inst, plan)
            w = inst.weights
            assert m.objective == w.w_accept * m.accepted_count + w.w_dist * m.saved_distance
            assert m.objective == obj

    def test_lidarp_plans_have_no_direction_violations(self):
        for seed in range(5):
            inst = generate_instance(
                seed=seed, n_stops=8, m_requests=4, kappa=2, q_max=3, matrix=LINE8
            )
            _, plan = brute_force_solve(inst)
            assert metrics(inst, plan).direction_violation_count == 0


class TestSerialization:
    def test_round_trip(self):
        plan = base_plan()
        assert parse_plan(format_plan(plan)) == plan

    def test_turn_flag_round_trip(self):
        r1 = schedule_sequence(
            [
                Visit(1, None, None, boards=(1,)),
                Visit(6, None, None, alights=(1,), turn_after=True),
                Visit(1, None, None),
            ],
            BASE,
        )
        plan = plan_of([r1], {1}, {2, 3})
        text = format_plan(plan)
        assert "TURN" in text
        assert parse_plan(text) == plan

    def test_header_lists_ids(self):
        text = format_plan(base_plan())
        assert text.splitlines()[0] == "ACCEPTED 1 2 3"


class TestOracle:
    def test_guard(self):
        inst = generate_instance(
            seed=0, n_stops=8, m_requests=7, kappa=2, q_max=3, matrix=LINE8
        )
        with pytest.raises(TooLarge):
            brute_force_solve(inst)

    def test_plans_validate(self):
        for seed in range(6):
            inst = generate_instance(
                seed=seed, n_stops=8, m_requests=4, kappa=2, q_max=3, matrix=LINE8
            )
            _, plan = brute_force_solve(inst)
            assert validate(inst, plan) == []

    def test_subline_decomposition(self):
        # every oracle plan splits into maximal same-direction runs at turns
        for seed in range(4):
            inst = generate_instance(
                seed=seed, n_stops=8, m_requests=5, kappa=2, q_max=3, matrix=LINE8
            )
            _, plan = brute_force_solve(inst)
            for route in plan.routes:
                run = []

                def check(stops):
                    dedup = [s for i, s in enumerate(stops) if i == 0 or s != stops[i - 1]]
                    assert len(set(dedup)) == len(dedup)
                    assert dedup == sorted(dedup) or dedup == sorted(dedup, reverse=True)

                for v in route:
                    run.append(v.stop)
                    if v.turn_after:
                        check(run)
                        run = [v.stop]
                if run:
                    check(run)

    def test_deterministic(self):
        inst = generate_instance(
            seed=12, n_stops=8, m_requests=5, kappa=2, q_max=3, matrix=LINE8
        )
        assert brute_force_solve(inst) == brute_force_solve(inst)
