import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from legendre_sr.cli import main
from legendre_sr.config import ExperimentConfig, parse_config
from legendre_sr.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) if v not in ("ok",) else v for v in r] for r in rows[1:]]


class TestConfig:
    def test_minimal(self):
        cfg = parse_config('{"task": "verify"}')
        assert isinstance(cfg, ExperimentConfig) and cfg.seed == 42

    def test_syntax_error_has_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config('{\n "task": "verify",\n "seed": ,\n}')

    def test_unknown_key_has_line(self):
        with pytest.raises(ConfigError, match=r"line 3: gpr.bogus: unknown key"):
            parse_config('{\n "task": "gpr-track",\n "gpr": {"bogus": 1}\n}')

    def test_type_error_has_line(self):
        with pytest.raises(ConfigError, match=r"line 2: seed: expected integer"):
            parse_config('{"task": "verify",\n "seed": "x"}')

    def test_bad_task(self):
        with pytest.raises(ConfigError, match="task"):
            parse_config('{"task": "fly"}')


class TestExitCodes:
    def test_verify_passes(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "verify", "--config", write(tmp_path, {"task": "verify"}))
        report = json.loads(out)
        assert code == 0 and report["overall_pass"]
        assert all(c["residual"] < c["tolerance"] for c in report["checks"].values())

    def test_zero_tolerance_fails(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "verify", "--config", write(tmp_path, {"task": "verify"}), "--tol", "0")
        assert code == 1 and not json.loads(out)["overall_pass"]

    def test_malformed(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "verify", "--config", write(tmp_path, "{not json"))
        assert code == 2 and "line 1" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run_cli(capsys, "verify", "--config", str(tmp_path / "nope.json"))[0] == 2

    def test_usage_error(self, capsys):
        assert run_cli(capsys, "gpr-track")[0] == 2

    def test_bad_dimensions(self, tmp_path, capsys):
        cfg = {"task": "gpr-track", "gpr": {"x0": [1.0, 2.0, 3.0]}}
        assert run_cli(capsys, "gpr-track", "--config", write(tmp_path, cfg))[0] == 2

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "legendre_sr", "ou-flow", "--config",
                               write(tmp_path, {"task": "ou-flow", "ou": {"steps": 4}})],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.startswith("t,eta_0")


class TestGprTrack:
    def test_header_and_determinism(self, tmp_path, capsys):
        path = write(tmp_path, {"task": "gpr-track"})
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["gpr-track", "--config", path, "--out", str(a)]) == 0
        assert main(["gpr-track", "--config", path, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        header = a.read_text().splitlines()[0].split(",")
        assert header[:4] == ["k", "x_true_0", "x_true_1", "y_0"]
        assert "lambda_0_1" in header and "sigma_1_0" in header and header[-2:] == ["psi", "dual_grad_residual"]
        assert main(["gpr-track", "--config", path, "--out", str(b), "--seed", "7"]) == 0
        assert a.read_bytes() != b.read_bytes()

    def test_near_noiseless_tracking(self, tmp_path, capsys):
        cfg = {"task": "gpr-track", "gpr": {"q": [[1e-10, 0], [0, 1e-10]], "r": [[1e-10, 0], [0, 1e-10]],
                                             "h": [[1, 0], [0, 1]], "steps": 15}}
        code, out, _ = run_cli(capsys, "gpr-track", "--config", write(tmp_path, cfg))
        header, rows = table(out)
        xi, mi = header.index("x_true_0"), header.index("m_0")
        for row in rows[9:]:
            assert max(abs(row[xi + j] - row[mi + j]) for j in range(2)) < 1e-4

    def test_uninformative_observation(self, tmp_path, capsys):
        a, q = np.array([[0.9, 0.1], [-0.2, 0.8]]), 0.1 * np.eye(2)
        cfg = {"task": "gpr-track", "gpr": {"h": [[0.0, 0.0]], "steps": 5}}
        _, out, _ = run_cli(capsys, "gpr-track", "--config", write(tmp_path, cfg))
        header, rows = table(out)
        mi, si = header.index("m_0"), header.index("sigma_0_0")
        m, s = np.zeros(2), np.eye(2)
        for row in rows:
            m, s = a @ m, a @ s @ a.T + q
            np.testing.assert_allclose(row[mi:mi + 2], m, atol=1e-12)
            np.testing.assert_allclose(np.reshape(row[si:si + 4], (2, 2)), s, atol=1e-12)


class TestOuFlow:
    def test_single_row_at_zero_horizon(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "ou-flow", "--config", write(tmp_path, {"task": "ou-flow", "ou": {"horizon": 0}}))
        assert code == 0 and len(out.strip().splitlines()) == 2

    def test_stationary_rows_constant(self, tmp_path, capsys):
        cfg = {"task": "ou-flow", "ou": {"k": [[1.0]], "mu": [0.0], "diffusion": [[2.0]], "m0": [0.0],
                                          "sigma0": [[1.0]], "horizon": 1.0, "steps": 10}}
        _, out, _ = run_cli(capsys, "ou-flow", "--config", write(tmp_path, cfg))
        _, rows = table(out)
        assert len(rows) == 11
        for row in rows:
            assert row[1:3] == [0.0, 1.0] and row[-2] < 1e-12

    def test_discrepancy_small(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "ou-flow", "--config", write(tmp_path, {"task": "ou-flow"}))
        header, rows = table(out)
        assert code == 0 and len(rows) == 201
        assert max(r[header.index("discrepancy")] for r in rows) < 1e-6

    def test_cone_exit(self, tmp_path, capsys):
        cfg = {"task": "ou-flow", "ou": {"k": [[-1.0]], "mu": [0.0], "diffusion": [[1.0]], "m0": [0.0],
                                          "sigma0": [[1.0]], "horizon": 5.0, "steps": 4}}
        code, out, _ = run_cli(capsys, "ou-flow", "--config", write(tmp_path, cfg))
        assert code == 1 and out.strip().endswith("cone_exit t=1.25")


class TestReservoirTasks:
    @pytest.mark.parametrize("task", ["quadratic-sr", "linear-p-sr"])
    def test_shapes(self, tmp_path, capsys, task):
        cfg = {"task": task, "reservoir": {"n": 3, "m": 2}, "inputs": {"steps": 12}}
        code, out, _ = run_cli(capsys, task, "--config", write(tmp_path, cfg))
        lines = out.strip().splitlines()
        assert code == 0 and len(lines) == 14
        assert lines[0] == "k,u_0,u_1," + ",".join(f"x_{i}" for i in range(6)) + ",hamiltonian"

    def test_explicit_rotation(self, tmp_path, capsys):
        cfg = {"task": "quadratic-sr", "reservoir": {"m_energy": [[1, 0], [0, 1]], "dt": 1.5707963267948966},
               "inputs": {"values": [[0.0]] * 4, "x0": [1.0, 0.0]}}
        _, out, _ = run_cli(capsys, "quadratic-sr", "--config", write(tmp_path, cfg))
        _, rows = table(out)
        np.testing.assert_allclose([r[2:4] for r in rows],
                                   [[1, 0], [0, -1], [-1, 0], [0, 1], [1, 0]], atol=1e-12)
        assert all(r[-1] == pytest.approx(0.5) for r in rows)


class TestReadoutTask:
    def test_default_beats_baseline(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "readout-task", "--config", write(tmp_path, {"task": "readout-task"}))
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 3
        assert all(float(r["nrmse_sr"]) < float(r["nrmse_persistence"]) for r in rows)

    def test_reg_sweep_rows(self, tmp_path, capsys):
        cfg = {"task": "readout-task", "readout": {"reg": [0.1, 1.0, 10.0, 100.0], "steps": 300}}
        _, out, _ = run_cli(capsys, "readout-task", "--config", write(tmp_path, cfg))
        assert [r["reg"] for r in csv.DictReader(io.StringIO(out))] == ["0.1", "1.0", "10.0", "100.0"]

    def test_washout_too_long(self, tmp_path, capsys):
        cfg = {"task": "readout-task", "readout": {"washout": 800, "steps": 800}}
        code, _, err = run_cli(capsys, "readout-task", "--config", write(tmp_path, cfg))
        assert code == 2 and "washout" in err

    def test_constant_targets_error(self, tmp_path, capsys):
        # blind observations from the stationary prior: the filter never moves
        cfg = {"task": "readout-task", "readout": {"steps": 200},
               "gpr": {"a": [[0.5]], "q": [[0.75]], "h": [[0.0]], "x0": [0.0], "m0": [0.0], "sigma0": [[1.0]]}}
        code, _, err = run_cli(capsys, "readout-task", "--config", write(tmp_path, cfg))
        assert code == 1 and "variance" in err


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    cfg = parse_config(path.read_text())
    assert cfg.task == path.stem.replace("_", "-")
