"""Shared fixtures, helpers, and the acceptance summary hook."""

from __future__ import annotations

import re

from lidarp.instance import (
    FleetSpec,
    Instance,
    ObjectiveWeights,
    Request,
    ServiceParams,
    TravelMatrix,
    WindowType,
    line_metric_matrix,
)

LINE8 = line_metric_matrix(8, 2, 3)


def req(rid, origin, destination, wtype="E", anchor=0, load=1, service=3):
    wt = WindowType.EARLIEST_PICKUP if wtype == "E" else WindowType.LATEST_DROPOFF
    return Request(rid, origin, destination, load, wt, anchor, service)


def make_instance(
    requests,
    kappa=1,
    q_max=3,
    matrix: TravelMatrix = LINE8,
    alpha=3,
    beta=15,
    horizon=480,
    weights=(10, 1),
):
    return Instance(
        matrix=matrix,
        fleet=FleetSpec(kappa, q_max, matrix.t_turn),
        params=ServiceParams(alpha, beta, horizon),
        weights=ObjectiveWeights(*weights),
        requests=tuple(requests),
    )


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", nodeid)
            if m:
                verdict = "PASS" if outcome == "passed" else "FAIL"
                lines[int(m.group(1))] = f"CRITERION {m.group(1)} ({m.group(2)}): {verdict}"
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
