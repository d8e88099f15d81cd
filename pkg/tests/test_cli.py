"""Command-line behavior: exit codes, formats, reproducible files."""

import json
import os

import numpy as np
import pytest

from fctlq.cli import main


def run(args):
    return main(list(args))


def test_solve_default_ok(capsys):
    assert run(["solve", "--lambda", "0.3"]) == 0
    out = capsys.readouterr().out
    assert "pgf_w1" in out
    assert "mean" in out


def test_exit_code_config_errors(tmp_path, capsys):
    assert run(["solve", "--lambda", "0.42"]) == 2  # unstable
    bad = tmp_path / "bad.json"
    bad.write_text('{"arrivals": {"kind": "nosuch"}}')
    assert run(["solve", "--config", str(bad)]) == 2
    missing = tmp_path / "missing.json"
    assert run(["solve", "--config", str(missing)]) == 2
    nofield = tmp_path / "nofield.json"
    nofield.write_text('{"arrivals": {"kind": "poisson"}}')
    assert run(["solve", "--config", str(nofield)]) == 2
    assert run(["roots", "--g", "0"]) == 2
    capsys.readouterr()


def test_exit_code_variant_restrictions(tmp_path, capsys):
    cfgp = tmp_path / "rt.json"
    cfgp.write_text(json.dumps({
        "g": 8, "r": 12,
        "arrivals": {"kind": "poisson", "lambda": 0.3},
        "variant": {"kind": "right_turn"},
    }))
    for cmd in ("cycle-profile", "green-dist", "delay-dist", "roots", "compare"):
        assert run([cmd, "--config", str(cfgp)]) == 2
    assert run(["solve", "--config", str(cfgp)]) == 0
    capsys.readouterr()


def test_exit_code_crosscheck(capsys):
    assert run(["solve", "--lambda", "0.38", "--tol", "1e-16"]) == 4
    capsys.readouterr()


def test_json_format_parses(tmp_path):
    out = tmp_path / "m.json"
    assert run(["moments", "--lambda", "0.3", "--format", "json",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    res = doc["results"]
    assert "contour" in res and "roots" in res
    assert abs(res["contour"]["mean"] - res["roots"]["mean"]) < 1e-9


def test_outputs_byte_identical(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for cmd in (["solve", "--lambda", "0.36"],
                ["dist", "--lambda", "0.36"],
                ["simulate", "--lambda", "0.3", "--seed", "5"]):
        assert run(cmd + ["--out", str(a)]) == 0
        assert run(cmd + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_dist_pmf_sums_to_one_with_tail(tmp_path):
    out = tmp_path / "d.json"
    assert run(["dist", "--lambda", "0.38", "--format", "json",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    for backend in ("contour", "roots"):
        total = sum(doc["pmf"][backend]) + doc["tail"][backend]
        assert abs(total - 1.0) < 1e-8


def test_green_dist_headers_and_mass(tmp_path):
    out = tmp_path / "g.csv"
    assert run(["green-dist", "--lambda", "0.38", "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0].split(",")[0] == "k"
    body = [r.split(",") for r in rows[1:]]
    assert body[-1][0] == "tail"
    mass = sum(float(v) for _, v in body)
    assert abs(mass - 1.0) < 1e-8


def test_delay_dist_convention_validation(tmp_path, capsys):
    cfgp = tmp_path / "c.json"
    cfgp.write_text('{"convention": "nope"}')
    assert run(["delay-dist", "--lambda", "0.3", "--config", str(cfgp)]) == 2
    cfgp.write_text('{"slot": 99}')
    assert run(["delay-dist", "--lambda", "0.3", "--config", str(cfgp)]) == 2
    capsys.readouterr()


def test_roots_certification_payload(tmp_path):
    out = tmp_path / "r.json"
    assert run(["roots", "--lambda", "0.38", "--format", "json",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["roots"]) == 20
    cert = doc["certification"]
    assert cert["passed"]
    assert cert["count"] == 20
    assert cert["max_residual"] < 1e-11
    assert cert["lambert_max_diff"] < 1e-9


def test_simulate_deterministic_and_labelled(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["simulate", "--lambda", "0.3", "--seed", "9",
                "--out", str(out)]) == 0
    rows = [r.split(",") for r in out.read_text().strip().splitlines()[1:]]
    kinds = {r[0] for r in rows}
    assert {"scalar", "overflow_pmf", "overflow_pmf_se"} <= kinds
    scalars = {r[1]: r[2] for r in rows if r[0] == "scalar"}
    assert float(scalars["cycles"]) > 0
    assert scalars["kind"] == "standard"
    pmf = [float(r[2]) for r in rows if r[0] == "overflow_pmf"]
    assert abs(sum(pmf) - 1.0) < 1e-9


def test_compare_passes_on_standard(capsys):
    assert run(["compare", "--g", "4", "--r", "6", "--lambda", "0.2",
                "--seed", "5"]) == 0
    out = capsys.readouterr().out
    assert "exact_tv_contour" in out
    assert "faster backend" in out


def test_figure1_outputs(tmp_path):
    outdir = tmp_path / "fig"
    assert run(["figure1", "--out", str(outdir)]) == 0
    manifest = json.loads((outdir / "manifest.json").read_text())
    for entry in manifest["files"].values():
        path = outdir / entry["path"]
        assert path.exists()
        header = path.read_text().splitlines()[0].split(",")
        assert header == entry["columns"]
    # delay panel restricted to heavy loads
    assert manifest["delay_lambdas"] == [0.36, 0.38]
    delay_header = (outdir / "figure1d_delay_slot10.csv").read_text().splitlines()[0]
    assert delay_header == "delay,lam0.36,lam0.38"
    # start-of-green columns are distributions with an explicit tail row
    rows = (outdir / "figure1b_start_green.csv").read_text().strip().splitlines()
    assert rows[-1].split(",")[0] == "tail"
    for col in range(1, 5):
        mass = sum(float(r.split(",")[col]) for r in rows[1:])
        assert abs(mass - 1.0) < 1e-8


def test_figure1_no_delay_panel_for_light_loads(tmp_path):
    outdir = tmp_path / "fig"
    cfgp = tmp_path / "light.json"
    cfgp.write_text('{"lambdas": [0.2, 0.3]}')
    assert run(["figure1", "--config", str(cfgp), "--out", str(outdir)]) == 0
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["delay_lambdas"] == []
    assert not (outdir / "figure1d_delay_slot10.csv").exists()


def test_figure1_byte_identical(tmp_path):
    d1 = tmp_path / "f1"
    d2 = tmp_path / "f2"
    assert run(["figure1", "--out", str(d1)]) == 0
    assert run(["figure1", "--out", str(d2)]) == 0
    for name in sorted(os.listdir(d1)):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_lambda_flag_overrides_rate(tmp_path, capsys):
    cfgp = tmp_path / "b.json"
    cfgp.write_text('{"g": 4, "r": 4, "arrivals": {"kind": "bernoulli", "p": 0.2}}')
    assert run(["moments", "--config", str(cfgp), "--lambda", "0.45"]) == 0
    out = capsys.readouterr().out
    # bernoulli mean with p=0.45 at g=4, r=4 is well away from the p=0.2 value
    assert run(["moments", "--config", str(cfgp)]) == 0
    out2 = capsys.readouterr().out
    assert out != out2
