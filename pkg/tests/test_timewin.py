"""Derived service windows and ride-time caps."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LINE8, make_instance, req
from lidarp.instance import ServiceParams, line_metric_matrix
from lidarp.timewin import (
    InfeasibleWindow,
    TimeWindow,
    derive_all,
    derive_schedule,
    max_ride_time,
    try_derive_schedule,
)


class TestMaxRide:
    def test_alpha_three(self):
        # direct 1->6 on the line is 10 minutes; cap = 3x
        assert max_ride_time(req(1, 1, 6), LINE8, Fraction(3)) == 30

    def test_alpha_one_is_direct(self):
        assert max_ride_time(req(1, 1, 6), LINE8, Fraction(1)) == 10

    def test_rational_alpha(self):
        m = line_metric_matrix(8, 1, 3)
        r = req(1, 1, 8)  # direct 7
        assert max_ride_time(r, m, Fraction(3, 2)) == Fraction(21, 2)


class TestDeriveSchedule:
    def params(self, alpha=3, beta=15):
        return ServiceParams(alpha, beta, 480)

    def test_earliest_pickup(self):
        # anchor e=100, direct 10: pickup [100,115], dropoff [110,145]
        s = derive_schedule(req(1, 1, 6, "E", 100), LINE8, self.params())
        assert s.pickup_window == TimeWindow(100, 115)
        assert s.dropoff_window == TimeWindow(110, 145)
        assert s.max_ride == 30

    def test_latest_dropoff(self):
        # anchor l=50, direct 10: dropoff [35,50], pickup [5,40]
        s = derive_schedule(req(1, 1, 6, "L", 50), LINE8, self.params())
        assert s.dropoff_window == TimeWindow(35, 50)
        assert s.pickup_window == TimeWindow(5, 40)

    def test_latest_dropoff_clamped_at_zero(self):
        s = derive_schedule(req(1, 1, 6, "L", 12), LINE8, self.params())
        assert s.dropoff_window.earliest == 0
        assert s.pickup_window.earliest == 0

    def test_unservable_latest_dropoff(self):
        # l=5 but direct is 10: cannot arrive before departing
        with pytest.raises(InfeasibleWindow):
            derive_schedule(req(1, 1, 6, "L", 5), LINE8, self.params())
        assert try_derive_schedule(req(1, 1, 6, "L", 5), LINE8, self.params()) is None

    def test_derive_all_omits_unservable(self):
        inst = make_instance([req(1, 1, 6, "E", 100), req(2, 1, 6, "L", 5)])
        sched = derive_all(inst)
        assert set(sched) == {1}

    def test_e_type_pickup_width_is_beta(self):
        for anchor in (0, 37, 460):
            s = derive_schedule(req(1, 2, 5, "E", anchor), LINE8, self.params())
            assert s.pickup_window.width() == 15

    @settings(max_examples=60, deadline=None)
    @given(
        o=st.integers(1, 8),
        d=st.integers(1, 8),
        wtype=st.sampled_from(["E", "L"]),
        anchor=st.integers(0, 480),
        beta=st.integers(0, 40),
    )
    def test_window_invariants(self, o, d, wtype, anchor, beta):
        if o == d:
            return
        r = req(1, o, d, wtype, anchor)
        s = try_derive_schedule(r, LINE8, ServiceParams(3, beta, 480))
        if s is None:
            return
        lmax = max_ride_time(r, LINE8, Fraction(3))
        assert s.pickup_window.width() <= beta + lmax
        if wtype == "E":
            assert s.pickup_window.width() == beta
        # the direct drive at the earliest pickup fits inside the dropoff window
        direct = LINE8.travel(o, d)
        assert s.dropoff_window.latest >= s.pickup_window.earliest + direct

    @settings(max_examples=40, deadline=None)
    @given(
        o=st.integers(1, 8),
        d=st.integers(1, 8),
        wtype=st.sampled_from(["E", "L"]),
        anchor=st.integers(0, 480),
        beta=st.integers(0, 30),
    )
    def test_beta_monotonicity(self, o, d, wtype, anchor, beta):
        if o == d:
            return
        r = req(1, o, d, wtype, anchor)
        small = try_derive_schedule(r, LINE8, ServiceParams(3, beta, 480))
        big = try_derive_schedule(r, LINE8, ServiceParams(3, beta + 5, 480))
        if small is None:
            return
        assert big is not None
        for name in ("pickup_window", "dropoff_window"):
            sw, bw = getattr(small, name), getattr(big, name)
            assert bw.earliest <= sw.earliest
            assert bw.latest >= sw.latest
