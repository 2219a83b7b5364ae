"""MILP formulation builders for the line-based dial-a-ride problem."""

from lidarp.forms.event import (
    EventFormulation,
    EventGraph,
    EventNode,
    build_event,
    build_event_graph,
    build_event_model,
    enumerate_events,
)
from lidarp.forms.location import (
    LocArc,
    LocationFormulation,
    LocationGraph,
    LocNode,
    build_location,
    build_location_graph,
    build_location_model,
)
from lidarp.forms.subline import (
    PrecedenceSets,
    SublineFormulation,
    SublineIndexing,
    branch_priority,
    build_subline,
    build_subline_model,
    precedence_sets,
)

FORMULATIONS = {
    "event": build_event,
    "location": build_location,
    "subline": build_subline,
}

__all__ = [
    "EventFormulation",
    "EventGraph",
    "EventNode",
    "FORMULATIONS",
    "LocArc",
    "LocationFormulation",
    "LocationGraph",
    "LocNode",
    "PrecedenceSets",
    "SublineFormulation",
    "SublineIndexing",
    "branch_priority",
    "build_event",
    "build_event_graph",
    "build_event_model",
    "build_location",
    "build_location_graph",
    "build_location_model",
    "build_subline",
    "build_subline_model",
    "precedence_sets",
]
