import csv
import math
import subprocess
import sys

import numpy as np
import pytest

from itvolt import cli


def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "itvolt.cli", *args], capture_output=True, text=True
    )


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestRun:
    def test_two_level_row(self, tmp_path):
        out = tmp_path / "row.csv"
        code = cli.main([
            "run", "--model", "two-level", "--solver", "itvolt-jacobi",
            "--dt", "100", "--points", "6", "--repeats", "1", "--out", str(out),
        ])
        assert code == 0
        header, row = read_csv(out)
        parsed = cli.parse_result_row(row)
        assert parsed.status == "converged"
        assert 1e-9 < parsed.eps_sol < 1e-7  # table value 1.01e-8
        assert parsed.k_max <= 10
        assert parsed.tol == 1e-10

    def test_gmres_default_tolerance(self, tmp_path):
        out = tmp_path / "row.csv"
        assert cli.main([
            "run", "--model", "two-level", "--solver", "itvolt-gmres",
            "--dt", "100", "--points", "3", "--repeats", "1", "--out", str(out),
        ]) == 0
        parsed = cli.parse_result_row(read_csv(out)[1])
        assert parsed.tol == 1e-13

    def test_diverged_row_renders_inf(self, tmp_path):
        out = tmp_path / "row.csv"
        assert cli.main([
            "run", "--model", "two-level", "--solver", "itvolt-jacobi",
            "--dt", "1000", "--points", "12", "--repeats", "1", "--out", str(out),
        ]) == 0
        header, row = read_csv(out)
        assert row[header.index("status")] == "diverged"
        assert row[header.index("eps_sol")] == "INF"
        assert row[header.index("eps_norm")] == "INF"

    def test_unknown_solver_usage_error(self):
        proc = run_cli(["run", "--solver", "not-a-solver"])
        assert proc.returncode == 2

    def test_bad_config_value_exit_2(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("dt=banana\n")
        proc = run_cli(["run", "--config", str(cfg)])
        assert proc.returncode == 2
        assert "dt" in proc.stderr

    def test_unknown_config_key_exit_2(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("frobnicate=1\n")
        proc = run_cli(["run", "--config", str(cfg)])
        assert proc.returncode == 2

    def test_cli_overrides_config(self, tmp_path):
        cfg = tmp_path / "base.cfg"
        cfg.write_text("model=two-level\ndt=100\npoints=3\nrepeats=1\n")
        out = tmp_path / "row.csv"
        assert cli.main([
            "run", "--config", str(cfg), "--points", "6", "--out", str(out),
        ]) == 0
        parsed = cli.parse_result_row(read_csv(out)[1])
        assert parsed.points == 6

    def test_trajectory_output(self, tmp_path):
        out = tmp_path / "row.csv"
        traj = tmp_path / "traj.csv"
        assert cli.main([
            "run", "--model", "two-level", "--solver", "itvolt-jacobi",
            "--dt", "450", "--points", "12", "--repeats", "1",
            "--out", str(out), "--trajectory-out", str(traj),
        ]) == 0
        rows = read_csv(traj)
        assert rows[0] == ["t", "p0", "p1"]
        assert len(rows) == 22  # 20 intervals + initial point + header


class TestDeterminism:
    def test_metric_fields_bit_identical(self, tmp_path):
        rows = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert cli.main([
                "run", "--model", "two-level", "--solver", "itvolt-gauss-seidel",
                "--dt", "500", "--points", "12", "--repeats", "1",
                "--diagnostics", "--out", str(out),
            ]) == 0
            rows.append(read_csv(out)[1])
        header = cli.result_header()
        skip = header.index("wall_time_seconds")
        for i, (left, right) in enumerate(zip(*rows)):
            if i != skip:
                assert left == right


class TestRoundTrip:
    def test_result_row_round_trip(self, tmp_path):
        out = tmp_path / "row.csv"
        assert cli.main([
            "run", "--model", "two-level", "--solver", "itvolt-jacobi",
            "--dt", "100", "--points", "3", "--repeats", "1",
            "--diagnostics", "--out", str(out),
        ]) == 0
        header, row = read_csv(out)
        parsed = cli.parse_result_row(row)
        assert cli.render_row(parsed) == row


class TestTable:
    def test_empty_sweep_header_only(self, tmp_path):
        out = tmp_path / "t.csv"
        assert cli.main([
            "table", "--model", "two-level", "--grid", "", "--out", str(out),
        ]) == 0
        rows = read_csv(out)
        assert rows == [cli.result_header()]

    def test_grid_times_solver_sweep(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(
            "model=two-level\nrepeats=1\n"
            "solver=itvolt-jacobi,itvolt-gauss-seidel,itvolt-gmres\n"
            "grid=100:3,100:6,500:6\n"
        )
        out = tmp_path / "t.csv"
        assert cli.main(["table", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_csv(out)
        assert len(rows) == 1 + 9
        solvers = {row[1] for row in rows[1:]}
        assert solvers == {"itvolt-jacobi", "itvolt-gauss-seidel", "itvolt-gmres"}

    def test_cartesian_dt_points(self, tmp_path):
        out = tmp_path / "t.csv"
        assert cli.main([
            "table", "--model", "two-level", "--solver", "itvolt-jacobi",
            "--dt", "100,500", "--points", "3,6", "--repeats", "1", "--out", str(out),
        ]) == 0
        rows = read_csv(out)
        assert len(rows) == 1 + 4


class TestDataCommands:
    def test_pulse_data(self, tmp_path):
        out = tmp_path / "pulse.csv"
        assert cli.main([
            "pulse-data", "--model", "oscillator", "--e0", "1", "--t-final", "100",
            "--omega0", "1", "--samples", "101", "--out", str(out),
        ]) == 0
        rows = read_csv(out)
        assert rows[0] == ["t", "pulse"]
        assert len(rows) == 102
        mid = float(rows[51][1])  # t = 50: sin^2 = 1, cos(50) factor
        assert mid == pytest.approx(np.cos(50.0), rel=1e-12)

    def test_two_level_oracle_data_two_amplitudes(self, tmp_path):
        out = tmp_path / "fig2.csv"
        e1, e2 = 2 * math.pi / 9000, 10 * math.pi / 9000
        assert cli.main([
            "oracle-data", "--model", "two-level", "--t-final", "9000",
            "--e0-list", f"{e1},{e2}", "--samples", "11", "--out", str(out),
        ]) == 0
        rows = read_csv(out)
        assert rows[0] == ["e0", "t", "p_ground", "p_excited"]
        assert len(rows) == 1 + 22
        for row in rows[1:]:
            assert float(row[2]) + float(row[3]) == pytest.approx(1.0, abs=1e-12)

    def test_oscillator_oracle_data(self, tmp_path):
        out = tmp_path / "fig3.csv"
        assert cli.main([
            "oracle-data", "--model", "oscillator", "--samples", "21",
            "--oracle-states", "3", "--out", str(out),
        ]) == 0
        rows = read_csv(out)
        assert rows[0] == ["e0", "t", "x0", "p0", "energy_expectation", "p0", "p1", "p2"]
        assert float(rows[1][4]) == pytest.approx(0.5, abs=1e-12)
