"""End-to-end checks of the command line driver.

Everything runs through subprocess so argument parsing, exit codes and
file outputs are exercised exactly as a user sees them.  Runs are kept
small; physics accuracy is covered by the module test suites.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

B0 = 0.3926990817


def run_cli(*args, check=True):
    proc = subprocess.run([sys.executable, "-m", "cusplab.cli", *args],
                          capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(
            f"cli failed ({proc.returncode}):\n{proc.stderr}")
    return proc


def load_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


@pytest.fixture(scope="module")
def eff_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("eff")
    run_cli("effective", "--b0", str(B0), "--tau-max", "1e3",
            "--out", str(out))
    return out


@pytest.fixture(scope="module")
def euler_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("euler")
    run_cli("euler", "--b0", str(B0), "--t-end", "0.01", "--dt", "1e-3",
            "--n-nodes", "128", "--snapshot-every", "5", "--out", str(out))
    return out


class TestEffectiveCommand:
    def test_trajectory_schema(self, eff_dir):
        data = load_csv(eff_dir / "trajectory.csv")
        assert data.dtype.names == ("tau", "A", "B", "dA", "dB", "Q", "I")
        assert data["tau"][0] == 0.0
        assert data["tau"][-1] == pytest.approx(1e3)
        assert data["B"][0] == pytest.approx(B0)

    def test_report_contents(self, eff_dir):
        rep = json.loads((eff_dir / "report.json").read_text())
        assert rep["max_identity_residual"] < 1e-7
        assert rep["B_max_increase"] == 0.0
        assert rep["q_over_tau_min"] >= rep["q_over_tau_lower"] - 1e-10
        assert rep["q_over_tau_max"] <= rep["q_over_tau_upper"] + 1e-10

    def test_transport_schema(self, eff_dir):
        data = load_csv(eff_dir / "transport.csv")
        assert data.dtype.names[:3] == ("tau", "Js", "Jc")
        assert data["tau"][0] == 0.0
        assert data["Js"][0] == 0.0 and data["Jc"][0] == 0.0
        # Endpoint columns come in lo/hi pairs that never cross.
        n_arcs = (len(data.dtype.names) - 3) // 2
        for k in range(n_arcs):
            assert np.all(data[f"hi{k}"] >= data[f"lo{k}"])

    def test_manifest(self, eff_dir):
        man = json.loads((eff_dir / "manifest.json").read_text())
        assert man["command"] == "effective"
        assert set(man["outputs"]) == {"trajectory.csv", "report.json",
                                       "transport.csv"}
        assert len(man["config_sha256"]) == 64
        assert man["config"]["b0"] == pytest.approx(B0)
        assert man["wall_time_s"] >= 0.0

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            run_cli("effective", "--b0", "0.5", "--tau-max", "200",
                    "--out", str(out))
        for name in ("trajectory.csv", "transport.csv", "report.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestConfigHandling:
    def test_file_then_flag_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "command": "effective",
            "settings": {"b0": 0.3, "tau_max": 500.0, "transport": False},
        }))
        out = tmp_path / "run"
        run_cli("effective", "--config", str(cfg), "--b0", "0.35",
                "--out", str(out))
        man = json.loads((out / "manifest.json").read_text())
        assert man["config"]["b0"] == 0.35          # flag wins
        assert man["config"]["tau_max"] == 500.0    # file wins over default
        assert man["config"]["transport"] is False
        assert not (out / "transport.csv").exists()

    def test_flat_config_form(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"tau_max": 300.0, "transport": False}))
        out = tmp_path / "run"
        run_cli("effective", "--config", str(cfg), "--out", str(out))
        man = json.loads((out / "manifest.json").read_text())
        assert man["config"]["tau_max"] == 300.0

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"no_such_key": 1}))
        proc = run_cli("effective", "--config", str(cfg), check=False)
        assert proc.returncode == 2
        assert "no_such_key" in proc.stderr

    def test_command_mismatch_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"command": "euler", "settings": {}}))
        proc = run_cli("effective", "--config", str(cfg), check=False)
        assert proc.returncode == 2

    def test_invalid_b0_exits_2(self):
        proc = run_cli("effective", "--b0", "2.0", check=False)
        assert proc.returncode == 2
        assert "B0" in proc.stderr

    def test_bad_radius_token_exits_2(self, tmp_path):
        proc = run_cli("bounds", "--r-list", "e-10,zzz",
                       "--out", str(tmp_path), check=False)
        assert proc.returncode == 2

    def test_numerical_failure_exits_3(self, tmp_path):
        # Forcing this large kicks the startup iterate out of the
        # admissible half-angle band: a genuine runtime failure, not a
        # rejected configuration.
        proc = run_cli("effective", "--b0", "0.7", "--forcing", "1e4",
                       "--tau-max", "100", "--out", str(tmp_path),
                       check=False)
        assert proc.returncode == 3
        assert "NonContraction" in proc.stderr


class TestEulerCommand:
    def test_snapshot_schema(self, euler_dir):
        data = load_csv(euler_dir / "snapshots.csv")
        assert data.dtype.names == ("t", "node_index", "x", "y")
        times = np.unique(data["t"])
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(0.01)
        # node_index restarts at 0 on each contour: two zeros per time.
        for t in times:
            idx = data["node_index"][data["t"] == t]
            assert int(np.sum(idx == 0)) == 2

    def test_corner_rows_at_origin(self, euler_dir):
        data = load_csv(euler_dir / "snapshots.csv")
        corner = data[data["node_index"] == 0]
        assert np.max(np.hypot(corner["x"], corner["y"])) == 0.0

    def test_manifest_records_run_keys(self, euler_dir):
        man = json.loads((euler_dir / "manifest.json").read_text())
        for key in ("b0", "n_nodes", "dt", "t_end", "quad_order",
                    "symmetrize", "snapshot_every"):
            assert key in man["config"]
        assert man["extras"]["n_contours"] == 2


class TestBoundsCommand:
    def test_example_run(self, tmp_path):
        run_cli("bounds", "--kappa", "zero", "--r-list", "e-10,e-100",
                "--out", str(tmp_path))
        lines = (tmp_path / "bounds.csv").read_text().splitlines()
        assert lines[0] == "r,xi,m,eta,bound_F,bound_G"
        # Deep radii keep their exact log-form tokens.
        assert lines[1].startswith("e-10,")
        assert lines[2].startswith("e-100,")
        row = lines[2].split(",")
        assert float(row[1]) == pytest.approx(0.5 * math.log(100.0))
        assert int(row[2]) == 7
        assert float(row[3]) == pytest.approx(math.log(100.0) / 200.0)

    def test_plain_float_radius(self, tmp_path):
        run_cli("bounds", "--r-list", "1e-3", "--out", str(tmp_path))
        lines = (tmp_path / "bounds.csv").read_text().splitlines()
        assert float(lines[1].split(",")[0]) == pytest.approx(1e-3)

    def test_kappa_power(self, tmp_path):
        run_cli("bounds", "--kappa", "power:2", "--r-list", "e-100",
                "--out", str(tmp_path))
        data = np.genfromtxt(tmp_path / "bounds.csv", delimiter=",",
                             names=True, converters={0: lambda s: 0.0})
        # kappa(L^-1/2) = 1/L tightens xi to min(ln L, ln L)/2 unchanged
        # here, but the decay term gains the sqrt(kappa) = 0.1 offset.
        assert data["bound_F"] == pytest.approx(
            2.0 * math.log(100.0) / 10.0 + 0.1)

    def test_kappa_table_from_file(self, tmp_path):
        table = tmp_path / "kappa.csv"
        table.write_text("r,kappa\n1e-12,0.0\n1e-6,0.05\n1e-1,0.2\n")
        run_cli("bounds", "--kappa", f"table:{table}", "--r-list", "e-100",
                "--out", str(tmp_path))
        assert (tmp_path / "bounds.csv").is_file()

    def test_infeasible_radius_exits_2(self, tmp_path):
        proc = run_cli("bounds", "--r-list", "0.5", "--out", str(tmp_path),
                       check=False)
        assert proc.returncode == 2


class TestDiagnosticCommands:
    def test_compare_schema_and_t0(self, tmp_path):
        run_cli("compare", "--b0", str(B0), "--t-end", "0.005",
                "--dt", "2.5e-3", "--n-nodes", "128", "--snapshot-every", "2",
                "--radii", "1e-2", "--out", str(tmp_path))
        data = load_csv(tmp_path / "diagnostics.csv")
        assert data.dtype.names == ("t", "r", "G", "F", "theta_bar",
                                    "half_angle", "bisector")
        first = data[data["t"] == 0.0]
        assert first["G"] == pytest.approx(2.0 * B0 / math.pi, rel=1e-6)
        assert abs(first["F"]) < 1e-12
        assert first["half_angle"] == pytest.approx(B0, abs=1e-12)
        assert (tmp_path / "trajectory.csv").is_file()

    def test_collapse_schema_and_rescaling(self, tmp_path):
        run_cli("collapse", "--b0", str(B0), "--t-end", "0.004",
                "--dt", "2e-3", "--n-nodes", "128", "--snapshot-every", "1",
                "--radii", "1e-2,1e-3", "--out", str(tmp_path))
        data = load_csv(tmp_path / "collapse.csv")
        assert data.dtype.names == ("t", "r", "tau", "half_angle",
                                    "bisector", "model_B", "model_A")
        assert np.allclose(data["tau"], data["t"] * -np.log(data["r"]))
        traj = load_csv(tmp_path / "trajectory.csv")
        at_rest = data[data["t"] == 0.0]
        assert at_rest["model_B"] == pytest.approx(traj["B"][0])

    def test_decomp_schema_and_uniformity(self, tmp_path):
        run_cli("decomp", "--b0", str(B0), "--radii", "1e-3,1e-2,1e-1",
                "--n-thetas", "4", "--out", str(tmp_path))
        data = load_csv(tmp_path / "decomp.csv")
        assert data.dtype.names == ("r", "theta", "residual_over_r")
        assert data.size == 12
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["extras"]["residual_spread"] < 10.0
