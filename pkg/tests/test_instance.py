"""Instance types, file format, and the synthetic generator."""

import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LINE8, make_instance, req
from lidarp.instance import (
    Direction,
    InstanceError,
    InvariantError,
    Request,
    TravelMatrix,
    WindowType,
    direction,
    format_instance,
    generate_instance,
    line_metric_matrix,
    parse_instance,
)


class TestTravelMatrix:
    def test_line_metric(self):
        m = line_metric_matrix(4, 2, 3)
        assert m.travel(1, 4) == 6
        assert m.travel(4, 1) == 6
        assert m.travel(2, 3) == 2
        assert m.t_turn == 3

    def test_triangle_violation_rejected(self):
        with pytest.raises(InvariantError, match="triangle"):
            TravelMatrix(3, ((0, 1, 100), (1, 0, 1), (100, 1, 0)))

    def test_mixed_diagonal_rejected(self):
        with pytest.raises(InvariantError, match="diagonal"):
            TravelMatrix(2, ((0, 5), (5, 1)))

    def test_too_small(self):
        with pytest.raises(InvariantError):
            TravelMatrix(1, ((0,),))


class TestRequest:
    def test_direction(self):
        assert direction(req(1, 2, 7)) == Direction.ASCENDING
        assert direction(req(1, 7, 2)) == Direction.DESCENDING

    def test_origin_equals_destination_rejected(self):
        with pytest.raises(InvariantError):
            req(1, 3, 3)

    def test_stop_outside_line_rejected(self):
        with pytest.raises(InvariantError):
            make_instance([req(1, 1, 9)])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(InvariantError, match="duplicate"):
            make_instance([req(1, 1, 2), req(1, 2, 3)])


class TestFormat:
    def test_round_trip_smallest(self):
        inst = make_instance([req(1, 1, 2)], matrix=line_metric_matrix(2, 2, 3))
        assert parse_instance(format_instance(inst)) == inst

    def test_round_trip_generated(self):
        inst = generate_instance(
            seed=7, n_stops=8, m_requests=5, kappa=2, q_max=3, matrix=LINE8
        )
        assert parse_instance(format_instance(inst)) == inst

    def test_zero_requests_section(self):
        inst = make_instance([])
        text = format_instance(inst)
        assert "REQUESTS 0" in text
        assert parse_instance(text).requests == ()

    def test_request_order_preserved(self):
        a = make_instance([req(1, 1, 2), req(2, 3, 4)])
        b = make_instance([req(2, 3, 4), req(1, 1, 2)])
        assert format_instance(a) != format_instance(b)

    def test_format_parse_format_identity(self):
        inst = generate_instance(
            seed=3, n_stops=8, m_requests=4, kappa=1, q_max=2, matrix=LINE8
        )
        canonical = format_instance(inst)
        assert format_instance(parse_instance(canonical)) == canonical

    def test_garbage_rejected(self):
        with pytest.raises(InstanceError):
            parse_instance("not an instance\n")

    @settings(max_examples=30, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        m=st.integers(1, 8),
        kappa=st.integers(1, 3),
    )
    def test_round_trip_property(self, seed, m, kappa):
        inst = generate_instance(
            seed=seed, n_stops=8, m_requests=m, kappa=kappa, q_max=3, matrix=LINE8
        )
        assert parse_instance(format_instance(inst)) == inst


class TestGenerator:
    def test_deterministic(self):
        a = generate_instance(seed=7, n_stops=8, m_requests=6, kappa=2, q_max=3, matrix=LINE8)
        b = generate_instance(seed=7, n_stops=8, m_requests=6, kappa=2, q_max=3, matrix=LINE8)
        assert a == b

    def test_window_type_split_even(self):
        big = line_metric_matrix(16, 2, 3)
        inst = generate_instance(
            seed=0, n_stops=16, m_requests=16, kappa=2, q_max=3, matrix=big
        )
        kinds = [r.window_type for r in inst.requests]
        assert kinds.count(WindowType.EARLIEST_PICKUP) == 8
        assert kinds.count(WindowType.LATEST_DROPOFF) == 8
        assert all(0 <= r.anchor_time <= 480 for r in inst.requests)

    def test_m1_is_earliest_pickup(self):
        inst = generate_instance(seed=5, n_stops=8, m_requests=1, kappa=1, q_max=1, matrix=LINE8)
        assert inst.requests[0].window_type == WindowType.EARLIEST_PICKUP

    def test_split_off_by_at_most_one(self):
        for m in range(1, 12):
            inst = generate_instance(
                seed=1, n_stops=8, m_requests=m, kappa=1, q_max=3, matrix=LINE8
            )
            e = sum(r.window_type == WindowType.EARLIEST_PICKUP for r in inst.requests)
            assert e - (m - e) in (0, 1)

    def test_loads_and_service_defaults(self):
        inst = generate_instance(seed=2, n_stops=8, m_requests=6, kappa=2, q_max=3, matrix=LINE8)
        assert all(r.load == 1 and r.service_time == 3 for r in inst.requests)
        assert all(r.origin != r.destination for r in inst.requests)

    def test_directions_partition(self):
        inst = generate_instance(seed=9, n_stops=8, m_requests=10, kappa=2, q_max=3, matrix=LINE8)
        asc = [r for r in inst.requests if direction(r) == Direction.ASCENDING]
        desc = [r for r in inst.requests if direction(r) == Direction.DESCENDING]
        assert len(asc) + len(desc) == len(inst.requests)

    def test_anchor_uniformity_smoke(self):
        anchors = []
        for seed in range(100):
            inst = generate_instance(
                seed=seed, n_stops=8, m_requests=10, kappa=1, q_max=3, matrix=LINE8
            )
            anchors.extend(r.anchor_time for r in inst.requests)
        assert 0 <= min(anchors) and max(anchors) <= 480
        assert abs(statistics.fmean(anchors) - 240) < 0.05 * 480
