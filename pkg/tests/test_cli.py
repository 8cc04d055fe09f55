import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dynbiharm import cli, mms, properties
from dynbiharm.evolution import NumericalAbort
from dynbiharm.properties import PropertyReport

from conftest import REFERENCE_TEXT, SMALL_TEXT


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run(*argv):
    return cli.main([str(a) for a in argv])


# ---------------------------------------------------------------------------
# spectrum


def test_spectrum_golden(tmp_path, ref_cfg_file):
    out = tmp_path / "spec"
    assert run("spectrum", "--config", ref_cfg_file, "--out", out) == 0
    table = rows(out / "spectrum.csv")
    assert table[0] == ["n", "lambda", "mode", "branch", "multiplicity"]
    n, lam, mode, branch, mult = table[1]
    assert (n, mode, branch, mult) == ("1", "0", "cos", "1") and abs(float(lam)) < 1e-12
    assert table[2][2:] == ["1", "cos", "2"] and float(table[2][1]) == pytest.approx(0.21963918400947852, rel=1e-12)
    summary = dict(rows(out / "gap_summary.csv")[1:])
    assert summary["kernel_count"] == "1" and float(summary["kernel_vector_error"]) < 1e-8
    man = json.loads((out / "manifest.json").read_text())
    assert man["subcommand"] == "spectrum" and man["seed"] == 42 and man["exit_code"] == 0
    assert man["config"]["n_elem"] == 128 and set(man["timings"]) == {"spectrum", "write"}
    assert man["outputs"] == ["spectrum.csv", "gap_summary.csv"]


def test_spectrum_is_byte_reproducible(tmp_path, small_cfg_file):
    for name in ("a", "b"):
        assert run("spectrum", "--config", small_cfg_file, "--out", tmp_path / name) == 0
    assert (tmp_path / "a" / "spectrum.csv").read_bytes() == (tmp_path / "b" / "spectrum.csv").read_bytes()
    assert (tmp_path / "a" / "gap_summary.csv").read_bytes() == (tmp_path / "b" / "gap_summary.csv").read_bytes()


def test_malformed_key_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(SMALL_TEXT.replace("kappa = 1", "kapa = 1"))
    assert run("spectrum", "--config", cfg, "--out", tmp_path / "o") == 1
    assert "line 5" in capsys.readouterr().err


def test_k_per_mode_too_large(tmp_path, small_cfg_file, capsys):
    assert run("spectrum", "--config", small_cfg_file, "--out", tmp_path / "o", "--k-per-mode", 99) == 1
    err = capsys.readouterr().err
    assert "99" in err and "34" in err


def test_missing_config_file(tmp_path, capsys):
    assert run("spectrum", "--config", tmp_path / "nope.cfg", "--out", tmp_path / "o") == 1
    assert "cannot read config" in capsys.readouterr().err


def test_invariant_violation_exit_code(tmp_path):
    cfg = tmp_path / "decoupled.cfg"
    cfg.write_text(SMALL_TEXT.replace("kappa = 1", "kappa = 1e300"))
    out = tmp_path / "o"
    assert run("spectrum", "--config", cfg, "--out", out) == 2
    assert json.loads((out / "manifest.json").read_text())["exit_code"] == 2


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run("spectrum", "--out", tmp_path) == 1
    assert run("frobnicate") == 1
    assert cli.main(["--version"]) == 0
    capsys.readouterr()


# ---------------------------------------------------------------------------
# evolve


def test_evolve_constant(tmp_path, small_cfg_file):
    out = tmp_path / "ev"
    assert run("evolve", "--config", small_cfg_file, "--out", out, "--initial", "ones", "--T", 1, "--dt", 0.1) == 0
    table = rows(out / "trajectory.csv")
    assert table[0] == ["t", "m_norm", "mu_mass", "min_value", "energy"]
    data = np.array(table[1:], dtype=float)
    assert data.shape == (11, 5)
    assert np.ptp(data[:, 2]) <= 1e-12 * data[0, 2]
    assert np.allclose(data[:, 3], 1.0, atol=1e-12)


def test_evolve_bump_dips_and_recovers(tmp_path, ref_cfg_file):
    out = tmp_path / "ev"
    assert run("evolve", "--config", ref_cfg_file, "--out", out, "--initial", "bump", "--T", 0.002, "--dt", 1e-4) == 0
    mins = np.array(rows(out / "trajectory.csv")[1:], dtype=float)[:, 3]
    assert mins[0] >= -1e-12
    neg = np.flatnonzero(mins < -1e-6)
    assert neg.size > 0 and neg[-1] < mins.size - 1
    assert mins[-1] >= -1e-10


def test_evolve_mms_error_second_order(tmp_path, small_cfg_file):
    errors = []
    for dt in (0.02, 0.01):
        out = tmp_path / f"mms{dt}"
        assert run("evolve", "--config", small_cfg_file, "--out", out, "--initial", "mms", "--forcing", "mms", "--T", 0.2, "--dt", dt) == 0
        table = rows(out / "trajectory.csv")
        assert table[0][-1] == "error_l2"
        errors.append(float(table[-1][-1]))
    assert math.log2(errors[0] / errors[1]) == pytest.approx(2.0, abs=0.15)


def test_evolve_config_keys_and_snapshots(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(SMALL_TEXT + "T = 0.2\ndt = 0.1\ntheta = 1\ninitial = eigen:2\nsnapshot_every = 1\n")
    out = tmp_path / "ev"
    assert run("evolve", "--config", cfg, "--out", out) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["options"]["theta"] == 1.0 and man["options"]["initial"] == "eigen:2"
    assert rows(out / "snapshots_field.csv")[0] == ["t", "r", "theta", "y"]
    assert rows(out / "snapshots_surface.csv")[0] == ["t", "circle", "theta", "y_Gamma"]
    # final state feeds back in as a file initial condition
    out2 = tmp_path / "ev2"
    assert run("evolve", "--config", cfg, "--out", out2, "--initial", f"file:{out / 'final_state.csv'}") == 0


@pytest.mark.parametrize(
    "extra, fragment",
    [
        (("--initial", "wobble"), "unknown initial"),
        (("--forcing", "wind"), "unknown forcing"),
        (("--initial", "eigen:x"), "integer"),
        (("--T", 1, "--dt", 0.3), "multiple"),
        (("--dt", -1), "positive"),
        (("--theta", 0.2), "theta"),
    ],
)
def test_evolve_bad_input(tmp_path, small_cfg_file, capsys, extra, fragment):
    assert run("evolve", "--config", small_cfg_file, "--out", tmp_path / "o", *extra) == 1
    assert fragment in capsys.readouterr().err


def test_evolve_numerical_abort(tmp_path, small_cfg_file, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise NumericalAbort(0.25)

    monkeypatch.setattr(cli, "duhamel_evolve", boom)
    out = tmp_path / "o"
    assert run("evolve", "--config", small_cfg_file, "--out", out, "--initial", "ones") == 3
    assert "t = 0.25" in capsys.readouterr().err
    assert json.loads((out / "manifest.json").read_text())["exit_code"] == 3


# ---------------------------------------------------------------------------
# verify, mms, positivity-scan


def test_verify_reports_failure(tmp_path, small_cfg_file, monkeypatch):
    def fake(config, seed, family_size):
        rep = PropertyReport(config, seed)
        rep.add("always_fails", "stub", 2.0, 1.0, "<=")
        return rep, {}

    monkeypatch.setattr(properties, "run_all", fake)
    out = tmp_path / "v"
    assert run("verify", "--config", small_cfg_file, "--out", out) == 2
    assert "[FAIL] always_fails" in (out / "report.txt").read_text()
    assert rows(out / "report.csv")[1][-1] == "0"


def test_verify_rejects_degenerate_annulus(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(SMALL_TEXT.replace("R1 = 2", "R1 = 1"))
    assert run("verify", "--config", cfg, "--out", tmp_path / "o") == 1


def test_mms_subcommand(tmp_path, small_cfg_file):
    out = tmp_path / "m"
    assert run("mms", "--config", small_cfg_file, "--out", out) == 0
    table = rows(out / "mms_orders.csv")
    assert table[0] == ["ladder", "step", "error", "order"]
    kinds = [r[0] for r in table[1:]]
    assert kinds.count("space") == 4 and kinds.count("time") == 3 and kinds.count("time_theta1") == 3
    theta1 = [float(r[3]) for r in table[1:] if r[0] == "time_theta1"][1:]
    assert all(abs(p - 1.0) < 0.1 for p in theta1)


def test_mms_order_regression(tmp_path, small_cfg_file, monkeypatch):
    real = mms.spatial_ladder

    def degraded(config):
        res = real(config, n_elems=(4, 8, 16))
        res.orders = [2.0, 2.0]
        return res

    monkeypatch.setattr(mms, "spatial_ladder", degraded)
    assert run("mms", "--config", small_cfg_file, "--out", tmp_path / "m") == 2


def test_positivity_scan_constant(tmp_path, small_cfg_file):
    out = tmp_path / "p"
    assert run("positivity-scan", "--config", small_cfg_file, "--out", out, "--family", "ones", "--family-size", 1) == 0
    table = rows(out / "positivity.csv")
    assert table[0][:3] == ["member", "center", "width"] and "status" in table[0]
    rec = dict(zip(table[0], table[1]))
    assert float(rec["t0"]) == 0.0 and rec["status"] == "recovered"
    summary = dict(rows(out / "positivity_summary.csv")[1:])
    assert float(summary["t0_star"]) == 0.0 and summary["members_with_violation"] == "0"


def test_positivity_scan_short_horizon(tmp_path, ref_cfg_file):
    out = tmp_path / "p"
    assert run("positivity-scan", "--config", ref_cfg_file, "--out", out, "--family-size", 2, "--t-max", 0.001) == 0
    assert dict(rows(out / "positivity_summary.csv")[1:])["status"] == "not recovered within horizon"


def test_positivity_scan_bad_size(tmp_path, small_cfg_file):
    assert run("positivity-scan", "--config", small_cfg_file, "--out", tmp_path / "p", "--family-size", 0) == 1


def test_module_entry_point(tmp_path, small_cfg_file):
    proc = subprocess.run(
        [sys.executable, "-m", "dynbiharm", "spectrum", "--config", str(small_cfg_file), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "lambda_2" in proc.stdout
