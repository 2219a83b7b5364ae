"""Exact optimization toolkit for the line-based dial-a-ride problem.

The package covers the full pipeline: instance files and synthetic
benchmark generation, three equivalent MILP formulations (subline-,
location-, and event-based), an internal LP/branch-and-bound solver with
LP-file export for external solvers, and solution decoding, validation,
and metrics.
"""

from lidarp.instance import (
    Direction,
    FleetSpec,
    Instance,
    InvariantError,
    ObjectiveWeights,
    Request,
    ServiceParams,
    TravelMatrix,
    WindowType,
    direction,
    format_instance,
    generate_instance,
    line_metric_matrix,
    parse_instance,
)
from lidarp.timewin import RequestSchedule, TimeWindow, derive_schedule, max_ride_time

__all__ = [
    "Direction",
    "FleetSpec",
    "Instance",
    "InvariantError",
    "ObjectiveWeights",
    "Request",
    "RequestSchedule",
    "ServiceParams",
    "TimeWindow",
    "TravelMatrix",
    "WindowType",
    "derive_schedule",
    "direction",
    "format_instance",
    "generate_instance",
    "line_metric_matrix",
    "max_ride_time",
    "parse_instance",
]
