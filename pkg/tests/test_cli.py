"""Command-line interface: CSV formats, exit codes, determinism."""
import subprocess
import sys

import numpy as np
import pytest

from harrisnls import (Interval, NoiseSpec, builtin_model, estimate_beta,
                       generate_dataset, hitting_count, nls_fit, random_walk,
                       simulate_chain)


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "harrisnls", *args],
                          capture_output=True, text=True, cwd=cwd)


def write_series(path, data):
    with open(path, "w") as fh:
        fh.write("t,x,y\n")
        for t, (xi, yi) in enumerate(zip(data.x, data.y), start=1):
            fh.write(f"{t},{float(xi)!r},{float(yi)!r}\n")


@pytest.fixture(scope="module")
def series_csv(tmp_path_factory):
    traj = simulate_chain(random_walk(), 300, seed=3)
    m = builtin_model("linear")
    data = generate_dataset(traj, m, [0.5], NoiseSpec(sd=0.5), seed=4)
    path = tmp_path_factory.mktemp("cli") / "series.csv"
    write_series(path, data)
    return str(path), data, m


class TestSimulate:
    def test_stdout_roundtrip(self):
        """The emitted CSV carries full-precision states: parsing it back
        reproduces the simulated path bit for bit."""
        proc = run_cli("simulate", "--chain", "random_walk", "--n", "40",
                       "--seed", "3")
        assert proc.returncode == 0
        lines = proc.stdout.strip().splitlines()
        assert lines[0] == "t,x"
        assert len(lines) == 42  # header + initial state + 40 steps
        vals = np.array([float(l.split(",")[1]) for l in lines[1:]])
        traj = simulate_chain(random_walk(), 40, seed=3)
        np.testing.assert_array_equal(vals, traj.values)

    def test_out_file(self, tmp_path):
        out = tmp_path / "walk.csv"
        proc = run_cli("simulate", "--chain", "ar1", "--phi", "0.5",
                       "--n", "10", "--seed", "2", "--out", str(out))
        assert proc.returncode == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,x" and len(lines) == 12
        assert lines[1] == "0,0"

    def test_bad_flag(self):
        proc = run_cli("simulate", "--chain", "random_walk", "--n", "5",
                       "--wat")
        assert proc.returncode == 1


class TestFit:
    def test_matches_library_fit_exactly(self, series_csv):
        path, data, m = series_csv
        proc = run_cli("fit", "--data", path, "--model", "linear",
                       "--loss", "nls")
        assert proc.returncode == 0
        header, row = proc.stdout.strip().splitlines()
        cells = dict(zip(header.split(","), row.split(",")))
        fit = nls_fit(data, m)
        assert float(cells["theta_0"]) == fit.theta_hat[0]
        assert float(cells["loss_value"]) == fit.loss_value
        assert cells["converged"] == "true"
        assert int(cells["n_effective"]) == data.n

    def test_ci_appends_a_covariance_block(self, series_csv):
        path, _, _ = series_csv
        proc = run_cli("fit", "--data", path, "--model", "linear",
                       "--loss", "mnls", "--beta", "0.5", "--ci", "0.95",
                       "--set", "-1", "1")
        assert proc.returncode == 0
        blocks = proc.stdout.strip().split("\n\n")
        assert len(blocks) == 2
        header = blocks[0].splitlines()[0]
        for col in ("se_0", "ci_lo_0", "ci_hi_0", "radius", "beta"):
            assert col in header.split(",")
        cov = float(blocks[1].strip())
        assert np.isfinite(cov) and cov > 0

    def test_unknown_model(self, series_csv):
        path, _, _ = series_csv
        proc = run_cli("fit", "--data", path, "--model", "nosuch")
        assert proc.returncode == 1
        assert "unknown model" in proc.stderr

    def test_missing_file(self):
        proc = run_cli("fit", "--data", "nope.csv", "--model", "linear")
        assert proc.returncode == 1

    def test_two_column_series_rejected(self, tmp_path):
        path = tmp_path / "walk.csv"
        run_cli("simulate", "--chain", "random_walk", "--n", "30",
                "--seed", "1", "--out", str(path))
        proc = run_cli("fit", "--data", str(path), "--model", "linear")
        assert proc.returncode == 1
        assert "t,x,y" in proc.stderr

    def test_estimation_failure_exits_two(self, tmp_path):
        path = tmp_path / "far.csv"
        with open(path, "w") as fh:
            fh.write("t,x,y\n")
            for i in range(1, 31):
                fh.write(f"{i},{1000.0 + i},1.0\n")
        proc = run_cli("fit", "--data", str(path), "--model", "linear",
                       "--loss", "mnls", "--beta", "1.0")
        assert proc.returncode == 2
        assert "truncation removed too many points" in proc.stderr

    def test_parse_error_names_the_line(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("t,x,y\n1,0.0,1.0\nbad\n")
        proc = run_cli("fit", "--data", str(path), "--model", "linear")
        assert proc.returncode == 1
        assert f"{path}, line 3" in proc.stderr

    def test_time_index_must_increase(self, tmp_path):
        path = tmp_path / "mono.csv"
        path.write_text("t,x,y\n1,0.0,1.0\n3,0.5,1.2\n2,0.7,0.9\n")
        proc = run_cli("fit", "--data", str(path), "--model", "linear")
        assert proc.returncode == 1
        assert "line 4: time index must increase" in proc.stderr


class TestBeta:
    def test_matches_library_estimate(self, tmp_path):
        path = tmp_path / "walk.csv"
        run_cli("simulate", "--chain", "random_walk", "--n", "200",
                "--seed", "3", "--out", str(path))
        proc = run_cli("beta", "--data", str(path), "--set", "-1", "1")
        assert proc.returncode == 0
        header, row = proc.stdout.strip().splitlines()
        cells = dict(zip(header.split(","), row.split(",")))
        traj = simulate_chain(random_walk(), 200, seed=3)
        small_set = Interval(-1.0, 1.0)
        assert float(cells["beta_hat"]) == estimate_beta(traj, small_set)
        assert int(cells["hits"]) == hitting_count(traj, small_set)
        assert float(cells["set_lo"]) == -1.0


class TestMc:
    CONFIG = """\
chain = random_walk
model = linear
theta0 = 0.5
sizes = 60 120
noise_sd = 0.5
estimators = nls mnls
reps = 3
seed = 40
"""

    def test_outputs_are_deterministic(self, tmp_path):
        cfg = tmp_path / "study.cfg"
        cfg.write_text(self.CONFIG)
        a, b = tmp_path / "a", tmp_path / "b"
        p1 = run_cli("mc", "--config", str(cfg), "--out-dir", str(a))
        p2 = run_cli("mc", "--config", str(cfg), "--out-dir", str(b),
                     "--threads", "2")
        assert p1.returncode == 0 and p2.returncode == 0
        assert (a / "table.csv").read_bytes() == (b / "table.csv").read_bytes()
        assert (a / "ratios.csv").read_bytes() == (b / "ratios.csv").read_bytes()
        header = (a / "table.csv").read_text().splitlines()[0]
        assert header == "estimator,mean_60,se_60,mean_120,se_120"

    def test_unknown_key_is_reported(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(self.CONFIG + "wat = 3\n")
        proc = run_cli("mc", "--config", str(cfg))
        assert proc.returncode == 1
        assert "unknown config keys: wat" in proc.stderr

    def test_duplicate_key(self, tmp_path):
        cfg = tmp_path / "dup.cfg"
        cfg.write_text("chain = random_walk\nchain = ar1\n")
        proc = run_cli("mc", "--config", str(cfg))
        assert proc.returncode == 1
        assert "line 2: duplicate key 'chain'" in proc.stderr

    def test_missing_required_key(self, tmp_path):
        cfg = tmp_path / "thin.cfg"
        cfg.write_text("chain = random_walk\n")
        proc = run_cli("mc", "--config", str(cfg))
        assert proc.returncode == 1
        assert "missing required key" in proc.stderr


class TestCalibrate:
    def test_curve_length_and_coefficients(self, series_csv):
        path, data, _ = series_csv
        proc = run_cli("calibrate", "--data", path, "--degree", "1",
                       "--beta", "0.5", "--curve-points", "12")
        assert proc.returncode == 0
        lines = proc.stdout.strip().splitlines()
        assert lines[0] == "x,m_hat" and len(lines) == 13
        assert "coef_0" in proc.stderr and "coef_1" in proc.stderr
        slope = float(proc.stderr.split("coef_1 = ")[1].split()[0])
        assert abs(slope - 0.5) < 0.05


class TestHelp:
    @pytest.mark.parametrize("sub", ["simulate", "fit", "beta", "mc",
                                     "calibrate"])
    def test_subcommand_help(self, sub):
        proc = run_cli(sub, "--help")
        assert proc.returncode == 0
        assert sub in proc.stdout and "--" in proc.stdout

    def test_top_level_lists_subcommands(self):
        proc = run_cli("--help")
        assert proc.returncode == 0
        for sub in ("simulate", "fit", "beta", "mc", "calibrate"):
            assert sub in proc.stdout
