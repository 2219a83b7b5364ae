"""Command-line interface.

Subcommands: gen, build, export, solve, validate, metrics, compare, sweep,
bench.  Exit codes: 0 success, 2 infeasible input or validation failure,
3 timeout with an incumbent.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from lidarp import harness
from lidarp.harness import (
    DEFAULT_SWEEP,
    RunConfig,
    build_formulation,
    format_report,
    load_instance,
)
from lidarp.instance import format_instance, generate_instance, line_metric_matrix
from lidarp.milp.lpio import export_lp, import_solution
from lidarp.route import LIDARP, format_plan, metrics, parse_plan, validate

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_TIMEOUT = 3


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    if "instance" in names:
        p.add_argument("--instance", required=True, help="instance file path")
    if "formulation" in names:
        p.add_argument(
            "--formulation",
            default="event",
            choices=harness.FORMULATIONS,
        )
    if "mode" in names:
        p.add_argument("--mode", default="lidarp", choices=harness.MODES)
    if "out" in names:
        p.add_argument("--out", default=None, help="output file (default: stdout)")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lidarp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-stops", type=int, default=8)
    p.add_argument("--m-requests", type=int, default=16)
    p.add_argument("--kappa", type=int, default=2)
    p.add_argument("--q-max", type=int, default=3)
    p.add_argument("--spacing", type=int, default=2)
    p.add_argument("--t-turn", type=int, default=3)
    _add_common(p, "out")

    p = sub.add_parser("build", help="build formulations and report model sizes")
    _add_common(p, "instance", "mode", "out")
    p.add_argument(
        "--formulation",
        default="all",
        choices=(*harness.FORMULATIONS, "all"),
    )

    p = sub.add_parser("export", help="export a formulation in LP format")
    _add_common(p, "instance", "formulation", "mode", "out")

    p = sub.add_parser("solve", help="solve an instance")
    _add_common(p, "instance", "formulation", "mode", "out")
    p.add_argument("--solver", default="internal", choices=harness.SOLVERS)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--solution",
        default=None,
        help="external solver solution file ('<name> <value>' per line)",
    )

    p = sub.add_parser("validate", help="validate a plan file against an instance")
    _add_common(p, "instance", "mode", "out")
    p.add_argument("--plan", required=True)

    p = sub.add_parser("metrics", help="compute solution metrics for a plan file")
    _add_common(p, "instance", "out")
    p.add_argument("--plan", required=True)

    p = sub.add_parser("compare", help="line-constrained vs classical at zero turn time")
    _add_common(p, "instance", "out")
    p.add_argument("--time-limit", type=float, default=None)

    p = sub.add_parser("sweep", help="objective weight sweep")
    _add_common(p, "instance", "formulation", "out")
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument(
        "--weights",
        default=None,
        help="comma-separated wa:wd pairs, e.g. '1:10,1:1,10:1'",
    )

    p = sub.add_parser("bench", help="compare compiled and fallback pivot kernels")
    p.add_argument("--sizes", default="6,10", help="comma-separated request counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=2)
    _add_common(p, "out")

    return ap


def _cmd_gen(args) -> int:
    matrix = line_metric_matrix(args.n_stops, args.spacing, args.t_turn)
    inst = generate_instance(
        seed=args.seed,
        n_stops=args.n_stops,
        m_requests=args.m_requests,
        kappa=args.kappa,
        q_max=args.q_max,
        matrix=matrix,
    )
    out = args.out
    if out and Path(out).is_dir():
        out = str(Path(out) / f"{harness.suite_name(args.kappa, args.m_requests)}.txt")
    _emit(format_instance(inst), out)
    return EXIT_OK


def _cmd_build(args) -> int:
    forms = harness.FORMULATIONS if args.formulation == "all" else (args.formulation,)
    configs = [
        RunConfig(instance=args.instance, formulation=f, mode=args.mode)
        for f in forms
        if not (args.mode == "darp" and f != "event")
    ]
    _emit(format_report(harness.cmd_build_report(configs)), args.out)
    return EXIT_OK


def _cmd_export(args) -> int:
    inst = load_instance(args.instance)
    form = build_formulation(inst, args.formulation, args.mode)
    _emit(export_lp(form.model), args.out)
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = RunConfig(
        instance=args.instance,
        formulation=args.formulation,
        mode=args.mode,
        solver=args.solver,
        time_limit=args.time_limit,
        seed=args.seed,
        workers=args.workers,
    )
    inst = load_instance(args.instance)
    if args.solver == "external":
        form = build_formulation(inst, args.formulation, args.mode)
        if args.solution is None:
            # no solution file yet: emit the model for the external solver
            _emit(export_lp(form.model), args.out)
            return EXIT_OK
        sol = import_solution(form.model, Path(args.solution).read_text())
        plan = form.decode(sol)
        bad = validate(inst, plan, args.mode)
        text = format_plan(plan) + metrics(inst, plan).as_lines() + "\n"
        _emit(text, args.out)
        if bad:
            for v in bad:
                print(f"violation: {v.kind}: {v.detail}", file=sys.stderr)
            return EXIT_INFEASIBLE
        return EXIT_OK

    row, plan = harness.solve_config(cfg, inst)
    text = format_report([row])
    if plan is not None:
        text += format_plan(plan) + metrics(inst, plan).as_lines() + "\n"
    _emit(text, args.out)
    if row.status == "invalid" or row.status == "infeasible":
        return EXIT_INFEASIBLE
    if row.status == "time_limit":
        return EXIT_TIMEOUT if plan is not None else EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    plan = parse_plan(Path(args.plan).read_text())
    bad = validate(inst, plan, args.mode)
    lines = [f"{v.kind}: {v.detail}" for v in bad] or ["ok"]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_INFEASIBLE if bad else EXIT_OK


def _cmd_metrics(args) -> int:
    inst = load_instance(args.instance)
    plan = parse_plan(Path(args.plan).read_text())
    _emit(metrics(inst, plan).as_lines() + "\n", args.out)
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = RunConfig(instance=args.instance, time_limit=args.time_limit)
    rows, deltas = harness.cmd_compare(cfg)
    text = format_report(rows)
    text += "".join(f"{k}={harness._fmt(v)}\n" for k, v in deltas.items())
    _emit(text, args.out)
    return EXIT_OK


def _parse_weights(spec: str | None):
    if spec is None:
        return DEFAULT_SWEEP
    pairs = []
    for part in spec.split(","):
        wa, wd = part.split(":")
        pairs.append((int(wa), int(wd)))
    return tuple(pairs)


def _cmd_sweep(args) -> int:
    cfg = RunConfig(
        instance=args.instance,
        formulation=args.formulation,
        time_limit=args.time_limit,
    )
    rows = harness.cmd_sweep_weights(cfg, _parse_weights(args.weights))
    _emit(format_report(rows), args.out)
    return EXIT_OK


def _cmd_bench(args) -> int:
    sizes = tuple(int(s) for s in args.sizes.split(","))
    rows = harness.cmd_bench(ms=sizes, seed=args.seed, repeats=args.repeats)
    _emit(format_report(rows), args.out)
    return EXIT_OK


_DISPATCH = {
    "gen": _cmd_gen,
    "build": _cmd_build,
    "export": _cmd_export,
    "solve": _cmd_solve,
    "validate": _cmd_validate,
    "metrics": _cmd_metrics,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    return _DISPATCH[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
