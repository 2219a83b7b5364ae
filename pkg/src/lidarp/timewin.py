"""Pickup/dropoff time windows and maximum ride times from the service promises.

Each request carries a single anchor; the opposite side of its window is
derived from the maximum wait and the maximum ride time.  Ride time is
measured as dropoff start + service time - pickup start throughout the
package, so every formulation and the validator share one definition.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from lidarp.instance import Instance, Request, ServiceParams, TravelMatrix, WindowType


class InfeasibleWindow(Exception):
    """The anchored dropoff is earlier than any possible arrival."""


Rational = Fraction


@dataclass(frozen=True)
class TimeWindow:
    earliest: Fraction
    latest: Fraction

    def __post_init__(self):
        object.__setattr__(self, "earliest", Fraction(self.earliest))
        object.__setattr__(self, "latest", Fraction(self.latest))
        if self.earliest < 0:
            raise ValueError("window start must be nonnegative")
        if self.earliest > self.latest:
            raise ValueError(f"empty window [{self.earliest}, {self.latest}]")

    def contains(self, t, tol=0) -> bool:
        return self.earliest - tol <= t <= self.latest + tol

    def width(self) -> Fraction:
        return self.latest - self.earliest


@dataclass(frozen=True)
class RequestSchedule:
    pickup_window: TimeWindow
    dropoff_window: TimeWindow
    max_ride: Fraction


def max_ride_time(r: Request, matrix: TravelMatrix, alpha: Fraction) -> Fraction:
    """Maximum ride time: alpha times the direct travel time."""
    return Fraction(alpha) * matrix.travel(r.origin, r.destination)


def derive_schedule(r: Request, matrix: TravelMatrix, params: ServiceParams) -> RequestSchedule:
    """Windows on both trip ends from the request's single anchor.

    The anchored side gets the tight beta window; the opposite side is
    propagated through the direct travel time and the maximum ride time.
    Windows are clamped at 0 but not at the horizon.
    """
    direct = matrix.travel(r.origin, r.destination)
    l_max = max_ride_time(r, matrix, params.alpha)
    beta = params.beta
    if r.window_type is WindowType.EARLIEST_PICKUP:
        e = Fraction(r.anchor_time)
        pickup = TimeWindow(e, e + beta)
        dropoff = TimeWindow(e + direct, e + beta + l_max)
    else:
        l = Fraction(r.anchor_time)
        if l - direct < 0:
            raise InfeasibleWindow(
                f"request {r.id}: latest dropoff {l} is before the direct travel time {direct}"
            )
        dropoff = TimeWindow(max(Fraction(0), l - beta), l)
        pickup = TimeWindow(max(Fraction(0), l - beta - l_max), l - direct)
    return RequestSchedule(pickup, dropoff, l_max)


def try_derive_schedule(
    r: Request, matrix: TravelMatrix, params: ServiceParams
) -> RequestSchedule | None:
    """Like :func:`derive_schedule` but None for requests that can never be served."""
    try:
        return derive_schedule(r, matrix, params)
    except InfeasibleWindow:
        return None


def derive_all(inst: Instance) -> dict[int, RequestSchedule]:
    """Schedules for every servable request, keyed by request id.

    Requests whose window is unsatisfiable are omitted; builders and the
    oracle treat them as force-rejected.
    """
    out: dict[int, RequestSchedule] = {}
    for r in inst.requests:
        sched = try_derive_schedule(r, inst.matrix, inst.params)
        if sched is not None:
            out[r.id] = sched
    return out
