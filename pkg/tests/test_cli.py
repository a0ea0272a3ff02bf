import csv
import json
import math

import numpy as np
import pytest

from stripdd.cli import main


def base_config(outdir, width=0.05, nx=64, ny=4, steps=10):
    return {
        "domain": {"length": 2.0, "width": width, "nx": nx, "ny": ny},
        "coefficients": {"d_n": 1.0, "c_n": 1.0, "d_p": 1.0, "c_p": 1.0},
        "doping": 0.0,
        "boundary": {
            "u": {"kind": "linear_x", "start": 0.0, "end": 1.0},
            "n": {"kind": "linear_x", "start": 1.0, "end": 2.0},
            "p": {"kind": "linear_x", "start": 1.0, "end": 2.0},
        },
        "homotopy": {"steps": steps, "newton_tol": 1e-10, "newton_maxit": 25, "alpha0": 1.0},
        "solver": {"kind": "direct"},
        "seed": 1234,
        "output_dir": str(outdir),
    }


def constant_config(outdir, steps=5):
    cfg = base_config(outdir, width=1.0, nx=8, ny=8, steps=steps)
    cfg["domain"]["length"] = 1.0
    cfg["boundary"] = {
        "u": {"kind": "constant", "value": 0.0},
        "n": {"kind": "constant", "value": 1.0},
        "p": 1.0,
    }
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_audit_reference_feasible(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, base_config(out))
    assert main(["audit", "--config", path]) == 0
    doc = json.loads((out / "bounds.json").read_text())
    assert doc["width_ok"] is True
    assert doc["bigr_ok"] is True
    assert doc["contraction_width_ok"] is True
    assert "d0" in doc and "d0_proof" in doc


def test_audit_wide_domain_infeasible(tmp_path):
    out = tmp_path / "out"
    cfg = base_config(out, width=1.0)
    path = write_config(tmp_path, cfg)
    assert main(["audit", "--config", path]) == 2
    doc = json.loads((out / "bounds.json").read_text())
    assert not (doc["width_ok"] and doc["bigr_ok"] and doc["contraction_width_ok"])


def test_audit_missing_width(tmp_path, capsys):
    cfg = base_config(tmp_path / "out")
    del cfg["domain"]["width"]
    path = write_config(tmp_path, cfg)
    assert main(["audit", "--config", path]) == 1
    assert "width" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = base_config(tmp_path / "out")
    cfg["domain"]["depth"] = 3.0
    path = write_config(tmp_path, cfg)
    assert main(["trace", "--config", path]) == 1
    assert "depth" in capsys.readouterr().err


def test_trace_constant_solution(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, constant_config(out, steps=5))
    assert main(["trace", "--config", path]) == 0
    with open(out / "curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    for row in rows:
        assert abs(float(row["dist_to_h0"])) <= 1e-12


def test_trace_reference_schedule_and_determinism(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, base_config(out))
    assert main(["trace", "--config", path]) == 0
    first_curve = (out / "curve.csv").read_bytes()
    first_fields = (out / "fields_lambda1.csv").read_bytes()

    with open(out / "curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 11
    lams = [float(r["lambda"]) for r in rows]
    assert lams == pytest.approx([k / 10 for k in range(11)])

    assert main(["trace", "--config", path]) == 0
    assert (out / "curve.csv").read_bytes() == first_curve
    assert (out / "fields_lambda1.csv").read_bytes() == first_fields


def test_curve_csv_round_trip(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, base_config(out))
    assert main(["trace", "--config", path]) == 0
    with open(out / "curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    # values printed at >= 12 significant digits survive a parse/print cycle
    for row in rows:
        for key in ("lambda", "residual_norm", "dist_to_h0", "min_n"):
            v = float(row[key])
            assert f"{v:.15g}" == row[key]


def test_solve0_constant_solution(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, constant_config(out))
    assert main(["solve0", "--config", path]) == 0
    with open(out / "fields_lambda0.csv") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        assert abs(float(row["u"])) <= 1e-12
        assert float(row["n"]) == pytest.approx(1.0, abs=1e-12)


def test_solve0_mms_convergence(tmp_path):
    errs = []
    for nx in (8, 16, 32):
        out = tmp_path / f"out{nx}"
        cfg = constant_config(out)
        cfg["domain"].update({"nx": nx, "ny": nx})
        cfg["boundary"] = {"u": 0.0, "n": 0.0, "p": 0.0}
        # nodal doping file for D = 2 pi^2 sin(pi x) sin(pi y)
        xs = np.linspace(0, 1, nx + 1)
        X, Y = np.meshgrid(xs, xs)
        D = 2 * np.pi**2 * np.sin(np.pi * X) * np.sin(np.pi * Y)
        dpath = tmp_path / f"doping{nx}.txt"
        np.savetxt(dpath, D.ravel())
        cfg["doping"] = {"kind": "file", "path": str(dpath)}
        path = write_config(tmp_path, cfg, name=f"cfg{nx}.json")
        assert main(["solve0", "--config", path]) == 0
        with open(out / "fields_lambda0.csv") as fh:
            rows = list(csv.DictReader(fh))
        err = max(
            abs(float(r["u"]) - math.sin(math.pi * float(r["x"])) * math.sin(math.pi * float(r["y"])))
            for r in rows
        )
        errs.append(err)
    for i in range(2):
        assert 1.8 < math.log2(errs[i] / errs[i + 1]) < 2.2


def test_solve0_doping_wrong_node_count(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = constant_config(out)
    dpath = tmp_path / "doping.txt"
    np.savetxt(dpath, np.zeros(7))
    cfg["doping"] = {"kind": "file", "path": str(dpath)}
    path = write_config(tmp_path, cfg)
    assert main(["solve0", "--config", path]) == 1
    assert "doping" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["audit", "--config", str(path)]) == 1
    assert "config" in capsys.readouterr().err
