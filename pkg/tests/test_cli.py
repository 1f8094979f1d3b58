import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from propphase.cli import main, read_values
from propphase.estimator import empirical_phase
from propphase.families import parse_family
from propphase.kernels import KernelConfig, kernel, psi_oracle
from propphase.sim import Scenario, new_estimator_t, replication_data


def write_z(path, values, header=True):
    lines = (["z"] if header else []) + [repr(float(v)) for v in values]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_curve(path):
    rows = [r for r in csv.reader(open(path)) if r and not r[0].startswith("#")]
    return rows[0], np.array(rows[1:], dtype=float)


class TestEstimate:
    def test_gamma_schedule(self, tmp_path, capsys):
        z = np.random.default_rng(0).normal(size=500)
        f = write_z(tmp_path / "z.csv", z)
        assert main(["estimate", "--family", "gaussian sigma=1 null=0", "--gamma", "0.5", "--input", str(f)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["estimate"]["t_used"] == pytest.approx(math.sqrt(math.log(500)))
        man = doc["manifest"]
        assert man["command"] == "estimate" and man["config"]["grid"] == 400 and "version" in man and "timestamp" in man
        ref = empirical_phase(z, doc["estimate"]["t_used"], parse_family("gaussian"))
        assert doc["estimate"]["pi1_raw"] == ref.pi1_raw

    def test_csv_output(self, tmp_path):
        f = write_z(tmp_path / "z.csv", [0, 1, 2, 5], header=False)
        out = tmp_path / "o.csv"
        assert main(["estimate", "--family", "poisson null=0.08", "--t", "1.5", "--input", str(f),
                     "--output", "csv", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# manifest: ")
        row = dict(zip(lines[1].split(","), lines[2].split(",")))
        assert float(row["t_used"]) == 1.5 and int(row["m"]) == 4

    def test_binomial_exit_2(self, tmp_path, capsys):
        f = write_z(tmp_path / "z.csv", [0, 1])
        assert main(["estimate", "--family", "binomial n=3 null=0.5", "--t", "1", "--input", str(f)]) == 2
        assert "no kernel exists" in capsys.readouterr().err

    @pytest.mark.parametrize("content, code", [("", 3), ("z\n", 3), ("z\n1\nabc\n", 3), ("1,2\n", 3)])
    def test_bad_data(self, tmp_path, content, code, capsys):
        f = tmp_path / "z.csv"
        f.write_text(content)
        assert main(["estimate", "--family", "gaussian", "--t", "1", "--input", str(f)]) == code

    def test_support_line_number(self, tmp_path, capsys):
        f = write_z(tmp_path / "z.csv", [1, 2, 2.5])
        assert main(["estimate", "--family", "poisson null=0.08", "--t", "1", "--input", str(f)]) == 3
        assert "z.csv:4" in capsys.readouterr().err

    def test_overflow_exit_4(self, tmp_path):
        f = write_z(tmp_path / "z.csv", [1, 2, 700])
        assert main(["estimate", "--family", "poisson null=0.08", "--t", "60", "--input", str(f)]) == 4

    def test_missing_extras_exit_2(self, tmp_path):
        f = write_z(tmp_path / "z.csv", [1, 2])
        assert main(["estimate", "--family", "poisson null=0.08", "--gamma", "0.5", "--input", str(f)]) == 2

    def test_argparse_errors_exit_2(self, tmp_path):
        f = write_z(tmp_path / "z.csv", [1, 2])
        with pytest.raises(SystemExit) as info:
            main(["estimate", "--family", "gaussian", "--t", "1", "--gamma", "0.5", "--input", str(f)])
        assert info.value.code == 2

    def test_header_detection(self, tmp_path):
        np.testing.assert_array_equal(read_values(write_z(tmp_path / "a.csv", [1.5, 2])), [1.5, 2])
        np.testing.assert_array_equal(read_values(write_z(tmp_path / "b.csv", [1.5, 2], header=False)), [1.5, 2])


class TestSimulate:
    ARGS = ["simulate", "--family", "laplace", "--m", "1000", "--regime", "dense", "--reps", "10", "--seed", "7"]

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(self.ARGS + ["--csv", str(a)]) == 0
        assert main(self.ARGS + ["--csv", str(b), "--workers", "2"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_summary_and_regime(self, tmp_path):
        s = tmp_path / "s.json"
        assert main(["simulate", "--family", "laplace", "--m", "200", "--regime", "dense", "--reps", "2",
                     "--summary", str(s)]) == 0
        doc = json.loads(s.read_text())
        assert doc["pi1_nominal"] == 0.2 and doc["manifest"]["command"] == "simulate"
        assert doc["manifest"]["config"]["master_seed"] == 0

    def test_seed_env_override(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["simulate", "--family", "laplace", "--m", "100", "--reps", "2"]
        assert main(base + ["--seed", "5", "--csv", str(a)]) == 0
        monkeypatch.setenv("PROPPHASE_SEED", "5")
        assert main(base + ["--seed", "99", "--csv", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_scenario_file(self, tmp_path):
        cfg = tmp_path / "sc.json"
        cfg.write_text(json.dumps({"family": "negbinomial n=5 null=-4.5", "m": 100, "reps": 2, "seed": 1}))
        out = tmp_path / "o.csv"
        assert main(["simulate", "--scenario", str(cfg), "--csv", str(out)]) == 0
        assert "negbinomial" in out.read_text()

    def test_invalid_regime(self):
        assert main(["simulate", "--family", "laplace", "--m", "100", "--regime", "bogus"]) == 2

    def test_round_trip(self, tmp_path, capsys):
        zdir = tmp_path / "z"
        assert main(["simulate", "--family", "poisson null=0.08", "--m", "300", "--reps", "2", "--seed", "4",
                     "--csv", str(tmp_path / "o.csv"), "--dump-z", str(zdir)]) == 0
        sc = Scenario(parse_family("poisson null=0.08"), 300, reps=2, master_seed=4)
        params, z = replication_data(sc, 1)
        t = new_estimator_t(sc, params)
        assert main(["estimate", "--family", "poisson null=0.08", "--t", repr(t),
                     "--input", str(zdir / "z_rep0001.csv")]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["estimate"]["pi1_raw"] == empirical_phase(z, t, sc.family, KernelConfig()).pi1_raw


class TestCurves:
    def test_psi_null_constant(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["curves", "--family", "poisson null=0.08", "--what", "psi", "--param", "0.08",
                     "--from", "0", "--to", "20", "--num", "11", "--out", str(out)]) == 0
        header, data = read_curve(out)
        assert header == ["t", "psi"] and np.all(data[:, 1] == 1.0)

    def test_kernel_t_zero(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["curves", "--family", "laplace", "--what", "kernel", "--t", "0",
                     "--from", "-5", "--to", "5", "--out", str(out)]) == 0
        _, data = read_curve(out)
        np.testing.assert_allclose(data[:, 1], 1.0, atol=1e-12)

    def test_gaussian_decay_exact(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["curves", "--family", "gaussian", "--what", "psi", "--param", "1",
                     "--from", "0", "--to", "100", "--num", "201", "--out", str(out)]) == 0
        _, data = read_curve(out)
        assert data[-1, 1] < 5e-4
        np.testing.assert_array_equal(data[:, 1], psi_oracle(data[:, 0], 1.0, parse_family("gaussian")))

    def test_discrete_kernel_grid(self, tmp_path):
        out = tmp_path / "c.csv"
        fam = "negbinomial n=5 null=-4.5"
        assert main(["curves", "--family", fam, "--what", "kernel", "--t", "2", "--from", "0", "--to", "6",
                     "--out", str(out)]) == 0
        _, data = read_curve(out)
        np.testing.assert_array_equal(data[:, 0], np.arange(7))
        np.testing.assert_array_equal(data[:, 1], kernel(2.0, np.arange(7), parse_family(fam)))

    @pytest.mark.parametrize("extra", [["--from", "5", "--to", "1"], ["--num", "0"]])
    def test_bad_ranges(self, extra):
        assert main(["curves", "--family", "gaussian", "--what", "psi", "--param", "1"] + extra) == 2

    def test_missing_param(self):
        assert main(["curves", "--family", "gaussian", "--what", "psi"]) == 2


class TestSchedule:
    def test_print(self, capsys):
        assert main(["schedule", "--family", "laplace", "--m", "1000", "10000"]) == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert rows[0] == "m,t" and float(rows[2].split(",")[1]) == pytest.approx(math.log(1e4))


def test_module_entry_point(tmp_path):
    f = write_z(tmp_path / "z.csv", [0.0, 1.0])
    res = subprocess.run([sys.executable, "-m", "propphase", "estimate", "--family", "inversegaussian sigma=1",
                          "--t", "1", "--input", str(f)], capture_output=True, text=True)
    assert res.returncode == 2 and "no kernel exists" in res.stderr
