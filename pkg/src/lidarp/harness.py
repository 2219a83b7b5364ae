"""Experiment orchestration: model-size reports, solve pipelines, weight
sweeps, the line-constrained-vs-classical comparison, and kernel benchmarks.

Reports are emitted as tab-separated values with a fixed header so a run
with the same configuration and seed is byte-identical (single worker).
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from lidarp.forms import build_event, build_location, build_subline
from lidarp.forms.subline import branch_priority
from lidarp.instance import (
    DEFAULT_HORIZON,
    Instance,
    InvariantError,
    ObjectiveWeights,
    TravelMatrix,
    format_instance,
    generate_instance,
    line_metric_matrix,
    parse_instance,
)
from lidarp.milp import kernels
from lidarp.milp.bnb import BnbConfig, solve_bb
from lidarp.milp.model import SolveStatus
from lidarp.milp.simplex import solve_lp
from lidarp.route import DARP, LIDARP, RoutePlan, metrics, validate

FORMULATIONS = ("subline", "location", "event")
MODES = (LIDARP, DARP)
SOLVERS = ("internal", "external")

REPORT_HEADER = (
    "instance",
    "formulation",
    "mode",
    "n_constraints",
    "n_binary",
    "n_continuous",
    "status",
    "objective",
    "gap",
    "wall_time",
    "accepted_count",
    "accepted_share",
    "saved_distance",
    "empty_share",
    "mean_detour",
    "mean_ride",
    "direction_violations",
)


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x) if x.denominator > 1 else str(x.numerator)
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


@dataclass(frozen=True)
class RunConfig:
    instance: str
    formulation: str = "event"
    mode: str = LIDARP
    solver: str = "internal"
    weights: tuple | None = None
    time_limit: float | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.mode == DARP and self.formulation != "event":
            raise ValueError("darp mode is only supported by the event formulation")


@dataclass
class ReportRow:
    instance: str
    formulation: str
    mode: str = LIDARP
    n_constraints: int | None = None
    n_binary: int | None = None
    n_continuous: int | None = None
    status: str = "built"
    objective: object = None
    gap: float | None = None
    wall_time: float | None = None
    fields: dict = field(default_factory=dict)

    def values(self) -> list[str]:
        base = {
            "instance": self.instance,
            "formulation": self.formulation,
            "mode": self.mode,
            "n_constraints": self.n_constraints,
            "n_binary": self.n_binary,
            "n_continuous": self.n_continuous,
            "status": self.status,
            "objective": self.objective,
            "gap": self.gap,
            "wall_time": self.wall_time,
        }
        out = []
        for key in REPORT_HEADER:
            if key in base:
                out.append(_fmt(base[key]))
            else:
                out.append(_fmt(self.fields.get(key)))
        return out


def format_report(rows: list[ReportRow]) -> str:
    lines = ["\t".join(REPORT_HEADER)]
    lines.extend("\t".join(row.values()) for row in rows)
    return "\n".join(lines) + "\n"


# -- building ---------------------------------------------------------


def build_formulation(inst: Instance, formulation: str, mode: str = LIDARP):
    if formulation == "event":
        return build_event(inst, mode)
    if mode != LIDARP:
        raise ValueError("darp mode is only supported by the event formulation")
    if formulation == "location":
        return build_location(inst)
    if formulation == "subline":
        return build_subline(inst)
    raise ValueError(f"unknown formulation {formulation!r}")


def load_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text())


def _with_weights(inst: Instance, weights) -> Instance:
    if weights is None:
        return inst
    return dataclasses.replace(
        inst, weights=ObjectiveWeights(Fraction(weights[0]), Fraction(weights[1]))
    )


def cmd_build_report(configs: list[RunConfig]) -> list[ReportRow]:
    """Build each configured formulation and report its size; no solving."""
    rows = []
    for cfg in configs:
        inst = load_instance(cfg.instance)
        form = build_formulation(inst, cfg.formulation, cfg.mode)
        rows.append(
            ReportRow(
                instance=Path(cfg.instance).stem,
                formulation=cfg.formulation,
                mode=cfg.mode,
                n_constraints=len(form.model.constraints),
                n_binary=form.model.n_binary(),
                n_continuous=form.model.n_continuous(),
                status="built",
            )
        )
    return rows


# -- solving ----------------------------------------------------------


def solve_config(
    cfg: RunConfig, inst: Instance | None = None
) -> tuple[ReportRow, RoutePlan | None]:
    """Solve one configuration with the internal branch and bound."""
    if inst is None:
        inst = load_instance(cfg.instance)
    inst = _with_weights(inst, cfg.weights)
    form = build_formulation(inst, cfg.formulation, cfg.mode)
    priority = branch_priority if cfg.formulation == "subline" else None
    t0 = time.perf_counter()
    res = solve_bb(
        form.model,
        config=BnbConfig(time_limit=cfg.time_limit, priority=priority),
    )
    wall = time.perf_counter() - t0
    row = ReportRow(
        instance=Path(cfg.instance).stem,
        formulation=cfg.formulation,
        mode=cfg.mode,
        n_constraints=len(form.model.constraints),
        n_binary=form.model.n_binary(),
        n_continuous=form.model.n_continuous(),
        status=res.status.value,
        objective=res.objective if res.status != SolveStatus.INFEASIBLE else None,
        gap=res.gap() if res.status != SolveStatus.INFEASIBLE else None,
        wall_time=wall,
    )
    plan = None
    if res.values and res.status in (
        SolveStatus.OPTIMAL,
        SolveStatus.FEASIBLE,
        SolveStatus.TIME_LIMIT,
    ):
        plan = form.decode(res)
        m = metrics(inst, plan)
        served = len(plan.accepted)
        total = served + len(plan.rejected)
        row.fields.update(
            accepted_count=m.accepted_count,
            accepted_share=Fraction(served, total) if total else Fraction(0),
            saved_distance=m.saved_distance,
            empty_share=m.empty_share,
            mean_detour=m.mean_detour,
            mean_ride=m.mean_ride,
            direction_violations=m.direction_violation_count,
        )
        bad = validate(inst, plan, cfg.mode)
        if bad:
            row.status = "invalid"
            row.fields["violations"] = "; ".join(f"{v.kind}: {v.detail}" for v in bad)
    return row, plan


def _solve_one(cfg: RunConfig) -> ReportRow:
    return solve_config(cfg)[0]


def solve_many(configs: list[RunConfig], workers: int = 1) -> list[ReportRow]:
    """Solve several configurations; parallel across configs, ordered merge."""
    if workers <= 1 or len(configs) <= 1:
        return [_solve_one(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_one, configs))


# -- weight sweep -----------------------------------------------------

DEFAULT_SWEEP = ((1, 10), (1, 1), (10, 1))


def cmd_sweep_weights(
    cfg: RunConfig, weight_list=DEFAULT_SWEEP
) -> list[ReportRow]:
    """One solve per weight pair; rows expose accepted share and saved distance."""
    inst = load_instance(cfg.instance)
    rows = []
    for wa, wd in weight_list:
        sub = dataclasses.replace(cfg, weights=(wa, wd))
        row, _ = solve_config(sub, inst)
        row.instance = f"{row.instance}[{wa}:{wd}]"
        rows.append(row)
    return rows


# -- comparison -------------------------------------------------------


def zero_turn_instance(inst: Instance) -> Instance:
    """The same instance with turn time forced to zero (both matrix and fleet)."""
    t = tuple(
        tuple(0 if i == j else v for j, v in enumerate(row))
        for i, row in enumerate(inst.matrix.t)
    )
    return dataclasses.replace(
        inst,
        matrix=TravelMatrix(inst.matrix.n, t),
        fleet=dataclasses.replace(inst.fleet, t_turn=0),
    )


def cmd_compare(cfg: RunConfig) -> tuple[list[ReportRow], dict]:
    """Solve the event model in both modes at zero turn time and report deltas."""
    inst = zero_turn_instance(load_instance(cfg.instance))
    rows = []
    by_mode = {}
    for mode in (LIDARP, DARP):
        sub = dataclasses.replace(cfg, formulation="event", mode=mode)
        row, plan = solve_config(sub, inst)
        rows.append(row)
        by_mode[mode] = row
    li, da = by_mode[LIDARP], by_mode[DARP]

    def _snap(x):
        return 0 if abs(float(x)) < 1e-6 else x

    deltas = {
        "objective_delta": _snap((da.objective or 0) - (li.objective or 0)),
        "saved_distance_delta": _snap(
            da.fields.get("saved_distance", 0) - li.fields.get("saved_distance", 0)
        ),
        "mean_ride_delta": _snap(
            da.fields.get("mean_ride", 0) - li.fields.get("mean_ride", 0)
        ),
        "darp_direction_violations": da.fields.get("direction_violations", 0),
    }
    return rows, deltas


# -- suite generation -------------------------------------------------


def suite_name(kappa: int, m: int) -> str:
    return f"w{kappa}-{m}"


def generate_suite(
    out_dir: str | Path,
    kappas=(2, 3),
    ms=(16, 24),
    seed: int = 0,
    n_stops: int = 8,
    spacing: int = 2,
    t_turn: int = 3,
    q_max: int = 3,
    horizon: int = DEFAULT_HORIZON,
) -> list[Path]:
    """Write one instance file per (kappa, m) pair, named ``w<kappa>-<m>``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix = line_metric_matrix(n_stops, spacing, t_turn)
    paths = []
    for kappa in kappas:
        for m in ms:
            inst = generate_instance(
                seed=seed + 1009 * kappa + m,
                n_stops=n_stops,
                m_requests=m,
                kappa=kappa,
                q_max=q_max,
                matrix=matrix,
            )
            path = out_dir / f"{suite_name(kappa, m)}.txt"
            path.write_text(format_instance(inst))
            paths.append(path)
    return paths


# -- kernel benchmark -------------------------------------------------


def cmd_bench(
    ms=(6, 10), seed: int = 0, repeats: int = 2, n_stops: int = 8
) -> list[ReportRow]:
    """Time the LP-relaxation pivot kernel with and without compilation.

    Solves the root relaxation of event models of increasing size with the
    compiled float kernel and with the pure-numpy fallback, and reports wall
    times and pivot counts.  Objectives must agree to within LP tolerance.
    """
    matrix = line_metric_matrix(n_stops, 2, 3)
    rows = []
    for m in ms:
        inst = generate_instance(
            seed=seed + m, n_stops=n_stops, m_requests=m, kappa=2, q_max=3, matrix=matrix
        )
        form = build_event(inst)
        results = {}
        for backend, enabled in (("numba", True), ("numpy", False)):
            prev = kernels.set_numba_enabled(enabled)
            try:
                if enabled and not kernels.numba_available():
                    results[backend] = None
                    continue
                solve_lp(form.model)  # warm-up: triggers compilation, not timed
                best = None
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    res = solve_lp(form.model)
                    dt = time.perf_counter() - t0
                    if best is None or dt < best[0]:
                        best = (dt, res)
                results[backend] = best
            finally:
                kernels.set_numba_enabled(prev)
        objs = [float(r[1].objective) for r in results.values() if r is not None]
        if objs and max(objs) - min(objs) > 1e-5 * max(1.0, abs(objs[0])):
            raise InvariantError(f"backend objectives disagree at m={m}: {objs}")
        for backend, got in results.items():
            row = ReportRow(
                instance=f"bench-m{m}",
                formulation="event",
                status="skipped" if got is None else "ok",
                n_binary=form.model.n_binary(),
                n_continuous=form.model.n_continuous(),
                n_constraints=len(form.model.constraints),
            )
            row.mode = backend
            if got is not None:
                row.wall_time = got[0]
                row.objective = got[1].objective
                row.fields["pivots"] = got[1].iterations
            rows.append(row)
    return rows
