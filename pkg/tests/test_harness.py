"""Harness orchestration and the command-line interface."""

import dataclasses

import pytest

from conftest import LINE8, make_instance, req
from lidarp import harness
from lidarp.cli import main
from lidarp.harness import RunConfig, cmd_build_report, format_report, generate_suite
from lidarp.instance import format_instance, generate_instance, parse_instance


@pytest.fixture
def inst_file(tmp_path):
    inst = generate_instance(
        seed=2, n_stops=8, m_requests=3, kappa=2, q_max=3, matrix=LINE8
    )
    path = tmp_path / "small.txt"
    path.write_text(format_instance(inst))
    return path


class TestRunConfig:
    def test_darp_requires_event(self):
        with pytest.raises(ValueError):
            RunConfig(instance="x", formulation="subline", mode="darp")

    def test_unknown_formulation(self):
        with pytest.raises(ValueError):
            RunConfig(instance="x", formulation="magic")


class TestBuildReport:
    def test_counts_match_models(self, inst_file):
        rows = cmd_build_report(
            [RunConfig(instance=str(inst_file), formulation=f) for f in harness.FORMULATIONS]
        )
        by_form = {r.formulation: r for r in rows}
        inst = parse_instance(inst_file.read_text())
        for name in harness.FORMULATIONS:
            form = harness.build_formulation(inst, name)
            row = by_form[name]
            assert row.n_constraints == len(form.model.constraints)
            assert row.n_binary == form.model.n_binary()

    def test_size_ordering(self, inst_file):
        rows = cmd_build_report(
            [RunConfig(instance=str(inst_file), formulation=f) for f in harness.FORMULATIONS]
        )
        by_form = {r.formulation: r for r in rows}
        assert (
            by_form["subline"].n_constraints
            > by_form["location"].n_constraints
            > by_form["event"].n_constraints
        )
        assert (
            by_form["subline"].n_binary
            > by_form["location"].n_binary
            > by_form["event"].n_binary
        )

    def test_doubling_m_grows_binaries(self, tmp_path):
        counts = {}
        for m in (2, 4):
            inst = generate_instance(
                seed=4, n_stops=8, m_requests=m, kappa=2, q_max=3, matrix=LINE8
            )
            p = tmp_path / f"m{m}.txt"
            p.write_text(format_instance(inst))
            rows = cmd_build_report(
                [RunConfig(instance=str(p), formulation=f) for f in harness.FORMULATIONS]
            )
            counts[m] = {r.formulation: r.n_binary for r in rows}
        for f in harness.FORMULATIONS:
            assert counts[4][f] > counts[2][f]


class TestSuite:
    def test_naming_and_determinism(self, tmp_path):
        paths = generate_suite(tmp_path / "a", kappas=(2,), ms=(4,), seed=1)
        assert [p.name for p in paths] == ["w2-4.txt"]
        again = generate_suite(tmp_path / "b", kappas=(2,), ms=(4,), seed=1)
        assert paths[0].read_text() == again[0].read_text()


class TestSolvePipeline:
    def test_solve_and_report_deterministic(self, inst_file):
        rows1 = harness.solve_many([RunConfig(instance=str(inst_file))])
        rows2 = harness.solve_many([RunConfig(instance=str(inst_file))])
        for r in (*rows1, *rows2):
            r.wall_time = 0.0  # timing is the only nondeterministic column
        assert format_report(rows1) == format_report(rows2)

    def test_solved_row_validates(self, inst_file):
        row, plan = harness.solve_config(RunConfig(instance=str(inst_file)))
        assert row.status == "optimal"
        assert plan is not None
        assert row.fields["direction_violations"] == 0


class TestCli:
    def test_gen_round_trip(self, tmp_path):
        out = tmp_path / "g.txt"
        assert main(["gen", "--seed", "3", "--m-requests", "2", "--out", str(out)]) == 0
        parse_instance(out.read_text())

    def test_gen_into_directory_uses_suite_name(self, tmp_path):
        assert (
            main(["gen", "--seed", "3", "--m-requests", "4", "--kappa", "2", "--out", str(tmp_path)])
            == 0
        )
        assert (tmp_path / "w2-4.txt").exists()

    def test_build(self, inst_file, tmp_path):
        out = tmp_path / "r.tsv"
        assert main(["build", "--instance", str(inst_file), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("instance\tformulation")
        assert len(lines) == 4

    def test_export_and_external_round_trip(self, inst_file, tmp_path):
        lp = tmp_path / "m.lp"
        assert (
            main(["export", "--instance", str(inst_file), "--formulation", "event", "--out", str(lp)])
            == 0
        )
        assert "Maximize" in lp.read_text()

    def test_solve_validate_metrics(self, inst_file, tmp_path):
        out = tmp_path / "sol.txt"
        assert (
            main(["solve", "--instance", str(inst_file), "--formulation", "event", "--out", str(out)])
            == 0
        )
        text = out.read_text()
        plan_lines = []
        for line in text.splitlines()[2:]:
            if "=" in line:
                break
            plan_lines.append(line)
        plan_file = tmp_path / "plan.txt"
        plan_file.write_text("\n".join(plan_lines) + "\n")
        assert main(["validate", "--instance", str(inst_file), "--plan", str(plan_file)]) == 0
        assert main(["metrics", "--instance", str(inst_file), "--plan", str(plan_file)]) == 0

    def test_validate_bad_plan_exit_2(self, tmp_path):
        inst = make_instance([req(1, 1, 6, "E", 100)])
        ipath = tmp_path / "i.txt"
        ipath.write_text(format_instance(inst))
        plan = tmp_path / "p.txt"
        plan.write_text("ACCEPTED 1\nREJECTED\n1 1 50 53 B:1 A:\n1 6 63 66 B: A:1\n")
        assert main(["validate", "--instance", str(ipath), "--plan", str(plan)]) == 2

    def test_sweep(self, inst_file, tmp_path):
        out = tmp_path / "s.tsv"
        assert (
            main(["sweep", "--instance", str(inst_file), "--formulation", "event", "--out", str(out)])
            == 0
        )
        assert len(out.read_text().splitlines()) == 4

    def test_compare(self, inst_file, tmp_path):
        out = tmp_path / "c.txt"
        assert main(["compare", "--instance", str(inst_file), "--out", str(out)]) == 0
        text = out.read_text()
        assert "objective_delta=" in text
        assert "darp_direction_violations=" in text

    def test_bench(self, tmp_path):
        out = tmp_path / "b.tsv"
        assert main(["bench", "--sizes", "3", "--repeats", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        backends = {line.split("\t")[2] for line in lines[1:]}
        assert backends == {"numba", "numpy"}
