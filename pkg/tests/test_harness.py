import json

import numpy as np
import pytest

from qopt import ConfigError, NumericalFailureError, load_config, run_experiment, sweep, verify
from qopt.cli import main
from qopt.harness import baseline_iterations, build_objective
from qopt.trace import Trace, TraceRow, read_trace

PGD_SIMPLEX = {
    "algorithm": "pgd",
    "objective": {"name": "quadratic", "params": {"set": {"kind": "simplex", "dimension": 3}}},
    "x0": [1.0, 0.0, 0.0],
    "T": 5,
    "seed": 3,
}


class TestConfigValidation:
    def test_missing_algorithm_names_field(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config({"objective": "example1", "T": 5})
        assert excinfo.value.field == "algorithm"

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config({"algorithm": "bfgs", "objective": "example1", "T": 5})
        assert excinfo.value.field == "algorithm"

    def test_missing_objective(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config({"algorithm": "pgd", "T": 5})
        assert excinfo.value.field == "objective"

    def test_baseline_needs_exactly_one_budget(self):
        base = {"algorithm": "pgd", "objective": "example1", "x0": [5.0]}
        with pytest.raises(ConfigError):
            load_config(base)
        with pytest.raises(ConfigError):
            load_config({**base, "T": 5, "epsilon": 0.1})

    def test_accelerated_requires_epsilon(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config({"algorithm": "accelerated", "objective": "example1", "T": 5})
        assert excinfo.value.field in ("epsilon", "T")

    def test_bad_epsilon(self):
        with pytest.raises(ConfigError):
            load_config({"algorithm": "accelerated", "objective": "example1", "epsilon": -1.0})

    def test_unknown_objective_reported(self):
        config = load_config({"algorithm": "pgd", "objective": "mystery", "T": 5})
        with pytest.raises(ConfigError) as excinfo:
            build_objective(config)
        assert excinfo.value.field == "objective"

    def test_set_override_rejected_for_pinned_objective(self):
        config = load_config({
            "algorithm": "pgd", "objective": "example1", "T": 5,
            "set": {"kind": "box", "lower": [-2], "upper": [2]},
        })
        with pytest.raises(ConfigError):
            build_objective(config)

    def test_infeasible_x0(self, tmp_path):
        config = load_config({**PGD_SIMPLEX, "x0": [1.0, 1.0, 1.0]})
        with pytest.raises(ConfigError) as excinfo:
            run_experiment(config, output_path=tmp_path / "t.csv")
        assert excinfo.value.field == "x0"

    def test_env_seed_override(self, monkeypatch):
        monkeypatch.setenv("QOPT_SEED", "99")
        config = load_config(PGD_SIMPLEX)
        assert config.seed == 99

    def test_top_level_dim_shorthand(self):
        config = load_config({"algorithm": "pgd", "objective": "quadratic",
                              "dim": 3, "T": 5})
        obj = build_objective(config)
        assert obj.dimension == 3

    def test_epsilon_to_iterations_conversion(self):
        config = load_config({"algorithm": "pgd", "objective": "example1",
                              "x0": [5.0], "epsilon": 10.0})
        obj = build_objective(config)
        # ceil(20 L D^2 / (gamma^2 eps) - 1) with L=1.8857, D=10, gamma=0.5.
        assert baseline_iterations(config, obj) == 1508


class TestRunExperiment:
    def test_trace_file_schema(self, tmp_path):
        path = tmp_path / "trace.csv"
        trace = run_experiment(load_config(PGD_SIMPLEX), output_path=path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# {")
        assert lines[1] == "iter,oracle_calls,f,gap,bound"
        assert len(lines) == 2 + len(trace.rows)
        header = json.loads(lines[0][2:])
        assert header["algorithm"] == "pgd"
        assert header["seed"] == 3
        assert header["config"]["T"] == 5

    def test_first_step_reaches_simplex_optimum(self, tmp_path):
        path = tmp_path / "trace.csv"
        run_experiment(load_config(PGD_SIMPLEX), output_path=path)
        row1 = path.read_text().splitlines()[3]
        fields = row1.split(",")
        assert fields[0] == "1"
        assert float(fields[3]) == 0.0  # gap hits zero after one step

    def test_round_trip_preserves_floats(self, tmp_path):
        path = tmp_path / "trace.csv"
        trace = run_experiment(load_config(PGD_SIMPLEX), output_path=path)
        parsed = read_trace(path)
        for a, b in zip(trace.rows, parsed.rows):
            assert a.f_value == b.f_value
            assert a.gap == b.gap
            assert a.bound == b.bound

    def test_byte_identical_reruns(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_experiment(load_config(PGD_SIMPLEX), output_path=p1)
        run_experiment(load_config(PGD_SIMPLEX), output_path=p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_baseline_bounds_attached(self, tmp_path):
        trace = run_experiment(load_config({**PGD_SIMPLEX, "T": 10}),
                               output_path=tmp_path / "t.csv")
        assert trace.rows[0].bound is None
        assert trace.rows[1].bound is not None

    def test_accelerated_run(self, tmp_path):
        config = load_config({
            "algorithm": "accelerated",
            "objective": "quadratic",
            "x0": [1.0, 1.0],
            "epsilon": 1e-2,
            "seed": 0,
        })
        trace = run_experiment(config, output_path=tmp_path / "acc.csv")
        assert trace.final_gap <= 1e-2

    def test_x0_rules(self, tmp_path):
        for rule, expected in [("vertex", [1.0, 0.0, 0.0]), ("center", [1 / 3, 1 / 3, 1 / 3])]:
            trace = run_experiment(load_config({**PGD_SIMPLEX, "x0": rule}),
                                   output_path=tmp_path / f"{rule}.csv")
            assert trace.rows[0].f_value == pytest.approx(
                0.5 * float(np.dot(expected, expected)), abs=1e-15)


class TestSweep:
    def test_empty_grid_rejected(self, tmp_path):
        with pytest.raises(ConfigError) as excinfo:
            sweep(load_config(PGD_SIMPLEX), {}, tmp_path)
        assert excinfo.value.field == "grid"

    def test_unknown_parameter_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            sweep(load_config(PGD_SIMPLEX), {"step_size": [1, 2]}, tmp_path)

    def test_summary_structure_and_fit(self, tmp_path):
        base = load_config({"algorithm": "pgd", "objective": "example1",
                            "x0": [5.0], "T": 50, "seed": 0})
        summary = sweep(base, {"T": [50, 100]}, tmp_path)
        assert len(summary["runs"]) == 2
        for run in summary["runs"]:
            assert (tmp_path / run["path"].split("/")[-1]).exists()
        assert "pgd" in summary["fits"]
        assert isinstance(summary["fits"]["pgd"]["slope"], float)
        saved = json.loads((tmp_path / "summary.json").read_text())
        assert saved["fits"]["pgd"]["slope"] == summary["fits"]["pgd"]["slope"]

    def test_accelerated_calls_fit(self, tmp_path):
        base = load_config({"algorithm": "accelerated", "objective": "quadratic",
                            "x0": [1.0, 1.0], "epsilon": 1.0, "seed": 0})
        summary = sweep(base, {"epsilon": [1e-1, 1e-2]}, tmp_path)
        assert summary["fits"]["accelerated"]["slope"] < 0


class TestVerifySubsets:
    def test_group_selection(self):
        report = verify(["quasar_certificate"])
        assert len(report.checks) == 4
        assert report.overall

    def test_expected_failure_semantics(self):
        report = verify(["quasar_counterexample:fig1_counterexample"])
        check = report.checks[0]
        assert check.passed and check.max_violation > 0.0

    def test_unknown_check_rejected(self):
        with pytest.raises(ConfigError):
            verify(["nonexistent_check"])

    def test_fast_subset_passes(self):
        report = verify(["counterexample_construction:fig1_counterexample",
                         "trace_determinism", "fw_dynamics", "oracle_accounting",
                         "gamma_free_baselines"])
        assert report.overall


class TestCLI:
    def write_config(self, tmp_path, config):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        return str(path)

    def test_run_command(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, {**PGD_SIMPLEX, "output_path": str(tmp_path / "out.csv")})
        assert main(["run", cfg]) == 0
        assert (tmp_path / "out.csv").exists()
        assert "oracle_calls" in capsys.readouterr().out

    def test_run_output_flag_overrides(self, tmp_path):
        cfg = self.write_config(tmp_path, PGD_SIMPLEX)
        out = tmp_path / "explicit.csv"
        assert main(["run", cfg, "--output", str(out)]) == 0
        assert out.exists()

    def test_run_without_output_path_is_config_error(self, tmp_path):
        cfg = self.write_config(tmp_path, PGD_SIMPLEX)
        assert main(["run", cfg]) == 2

    def test_bad_config_exits_2(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, {"objective": "example1", "T": 5})
        assert main(["run", cfg]) == 2
        assert "algorithm" in capsys.readouterr().err

    def test_numerical_failure_exits_3(self, tmp_path, monkeypatch, capsys):
        header = {"algorithm": "accelerated", "objective": "quadratic"}
        rows = [TraceRow(0, 2, 1.0, 1.0, None, 1.0)]

        def exploding(config, output_path=None):
            exc = NumericalFailureError("synthetic blow-up")
            exc.partial_trace = Trace(header=header, rows=rows, failure="synthetic blow-up")
            raise exc

        monkeypatch.setattr("qopt.cli.run_experiment", exploding)
        cfg = self.write_config(tmp_path, {**PGD_SIMPLEX, "output_path": str(tmp_path / "o.csv")})
        assert main(["run", cfg]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_failure_marker_row_written(self, tmp_path, monkeypatch):
        # The harness flushes the partial trace with a marker row on failure.
        import qopt.harness as harness

        def exploding(obj, x0, epsilon, counter):
            exc = NumericalFailureError("synthetic blow-up")
            exc.partial_trace = Trace(
                header={"algorithm": "accelerated"},
                rows=[TraceRow(0, 2, 1.0, 1.0, None, 1.0)],
                failure="synthetic blow-up",
            )
            raise exc

        monkeypatch.setattr(harness, "run_accelerated", exploding)
        cfg = load_config({"algorithm": "accelerated", "objective": "quadratic",
                           "x0": [1.0, 1.0], "epsilon": 1e-2})
        path = tmp_path / "partial.csv"
        with pytest.raises(NumericalFailureError):
            run_experiment(cfg, output_path=path)
        lines = path.read_text().splitlines()
        assert lines[-2].startswith("-1,")
        assert lines[-1].startswith("# numerical-failure")

    def test_verify_subcommand(self, capsys):
        assert main(["verify", "--suite", "trace_determinism"]) == 0
        out = capsys.readouterr().out
        assert "overall: PASS" in out

    def test_verify_unknown_suite(self, capsys):
        assert main(["verify", "--suite", "bogus"]) == 2

    def test_verify_list(self, capsys):
        assert main(["verify", "--list"]) == 0
        assert "accelerated_gap:example1" in capsys.readouterr().out

    def test_sweep_subcommand(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, {"algorithm": "pgd", "objective": "example1",
                                           "x0": [5.0], "T": 20, "seed": 0})
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"T": [20, 40]}))
        out_dir = tmp_path / "sweep"
        assert main(["sweep", cfg, "--grid", str(grid), "--out-dir", str(out_dir)]) == 0
        assert (out_dir / "summary.json").exists()

    def test_sweep_bad_grid_path(self, tmp_path):
        cfg = self.write_config(tmp_path, PGD_SIMPLEX)
        assert main(["sweep", cfg, "--grid", str(tmp_path / "missing.json")]) == 2
