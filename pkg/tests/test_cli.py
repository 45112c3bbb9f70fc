from __future__ import annotations

import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from greenpath.cli import run


def call(argv, capsys):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_kernel_green_ball(capsys):
    code, out, _ = call(["kernel", "--kernel", "green", "--domain", "ball:3:1", "--bc", "dirichlet",
                         "--x", "0.5,0,0", "--xp", "0,0,0"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert float(row["value_re"]) == pytest.approx(1.0, rel=1e-14)
    assert row["value_re"] == "1.0000000000000000e+00"  # 17 significant digits
    assert float(row["value_im"]) == 0.0
    assert list(row)[:4] == ["domain", "bc", "s", "n"]


def test_kernel_invalid_domain(capsys):
    code, _, err = call(["kernel", "--domain", "pentagon", "--x", "0,0", "--xp", "1,1"], capsys)
    assert code == 2
    assert "pentagon" in err


@pytest.mark.parametrize("argv", [
    ["kernel"],
    ["kernel", "--domain", "ball:3:1", "--bogus"],
    ["frobnicate"],
    ["kernel", "--kernel", "heat", "--domain", "halfspace:1", "--x", "1", "--xp", "1"],  # needs --dt
    ["kernel", "--domain", "ball:3:1", "--x", "0.5,0", "--xp", "0,0,0"],
    ["mc", "--domain", "ball:3:1", "--x", "0,0,0", "--walks", "0"],
])
def test_usage_errors(argv, capsys):
    code, _, err = call(argv, capsys)
    assert code == 2
    assert err


def test_kernel_variants(capsys):
    code, out, _ = call(["kernel", "--kernel", "schrodinger", "--domain", "free:1", "--x", "0", "--xp", "0", "--dt", "1"], capsys)
    (row,) = rows(out)
    assert code == 0 and row["s"] == "i"
    assert complex(float(row["value_re"]), float(row["value_im"])) == pytest.approx(complex(math.cos(math.pi / 4), -math.sin(math.pi / 4)))
    code, out, _ = call(["kernel", "--kernel", "heat", "--domain", "halfspace:1", "--bc", "neumann", "--x", "1", "--xp", "1", "--dt", "1"], capsys)
    assert float(rows(out)[0]["value_re"]) == pytest.approx(1 + math.exp(-4 * math.pi))
    code, out, _ = call(["kernel", "--kernel", "poisson", "--domain", "ball:3:1", "--x", "0.5,0,0", "--xp", "1,0,0"], capsys)
    assert float(rows(out)[0]["value_re"]) == pytest.approx(3 / (2 * math.pi))
    code, out, _ = call(["kernel", "--kernel", "first-passage", "--domain", "halfspace:1", "--x", "1", "--xp", "0", "--dt", "1"], capsys)
    assert float(rows(out)[0]["value_re"]) == pytest.approx(math.exp(-math.pi))
    code, out, _ = call(["kernel", "--kernel", "fixed-energy", "--domain", "free:3", "--x", "0,0,0", "--xp", "1,0,0", "--energy", "0.5"], capsys)
    assert float(rows(out)[0]["value_re"]) == pytest.approx(math.exp(-2 * math.pi))
    code, out, _ = call(["kernel", "--kernel", "wave-I", "--domain", "free:4", "--u", "5", "--w", "0.01"], capsys)
    assert code == 0 and float(rows(out)[0]["value_re"]) < 1e-100
    code, out, _ = call(["kernel", "--kernel", "elliptic", "--domain", "free:4", "--x", "0,0,0,0", "--xp", "2,0,0,0"], capsys)
    assert float(rows(out)[0]["value_re"]) == pytest.approx(1 / (4 * math.pi))


def test_dump_images(tmp_path, capsys):
    path = tmp_path / "img.json"
    code, _, _ = call(["kernel", "--kernel", "heat", "--domain", "strip:1", "--x", "0.5", "--xp", "0.3", "--dt", "1",
                       "--dump-images", str(path), "--image-order", "1"], capsys)
    assert code == 0
    data = json.loads(path.read_text())
    assert sorted(round(t["image"][0], 12) for t in data["terms"]) == [-2.3, -1.7, -0.3, 0.3, 1.7, 2.3]


def test_solve(tmp_path, capsys):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({
        "domain": "halfspace:1", "class": "parabolic", "phi": "1", "psi": "0",
        "grid": {"points": [[1.0]], "times": [1.0]},
        "quadrature": {"method": "adaptive-1d", "target_tol": 1e-10},
    }))
    out_csv = tmp_path / "u.csv"
    code, _, _ = call(["solve", str(prob), "-o", str(out_csv)], capsys)
    assert code == 0
    (row,) = rows(out_csv.read_text())
    assert list(row) == ["x1", "t", "value"]
    assert float(row["value"]) == pytest.approx(1 - math.erf(math.sqrt(math.pi)), abs=1e-9)


def test_solve_grid_axes(tmp_path, capsys):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({
        "domain": "ball:3:1", "class": "elliptic", "phi": "x1",
        "grid": {"axes": [[-0.5, 0.5, 3], [0, 0, 1], [0.1, 0.1, 1]]},
    }))
    code, out, _ = call(["solve", str(prob)], capsys)
    assert code == 0
    got = rows(out)
    assert [float(r["value"]) for r in got] == pytest.approx([-0.5, 0.0, 0.5], abs=1e-8)


def test_solve_bad_problem(tmp_path, capsys):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"domain": "ball:3:1", "class": "elliptic", "phi": "import os", "grid": {"points": [[0, 0, 0]]}}))
    assert call(["solve", str(prob)], capsys)[0] == 2
    prob.write_text("{not json")
    assert call(["solve", str(prob)], capsys)[0] == 2
    prob.write_text(json.dumps({"domain": "ball:3:1", "class": "elliptic", "grid": {}, "colour": 1}))
    assert call(["solve", str(prob)], capsys)[0] == 2


def test_io_errors(tmp_path, capsys):
    assert call(["solve", str(tmp_path / "missing.json")], capsys)[0] == 3
    code, _, _ = call(["kernel", "--domain", "ball:3:1", "--x", "0.5,0,0", "--xp", "0,0,0",
                       "-o", str(tmp_path / "no" / "dir" / "x.csv")], capsys)
    assert code == 3


def test_mc_json_and_per_walk(tmp_path, capsys):
    walks = tmp_path / "walks.csv"
    argv = ["mc", "--domain", "ball:3:1", "--x", "0,0,0", "--walks", "300", "--seed", "5", "--dt", "1e-3",
            "--per-walk", str(walks)]
    code, out, _ = call(argv, capsys)
    assert code == 0
    res = json.loads(out)
    assert {"mean", "stderr", "n", "seed"} <= set(res)
    assert res["n"] == 300 and res["seed"] == 5
    per = rows(walks.read_text())
    assert len(per) == 300
    assert math.fsum(float(r["exit_time"]) for r in per) / 300 == pytest.approx(res["mean"], rel=1e-12)
    code, out2, _ = call(argv + ["--threads", "3"], capsys)
    assert out2 == out


def test_mc_estimators(capsys):
    code, out, _ = call(["mc", "--domain", "ball:3:1", "--x", "0.5,0,0", "--quantity", "elliptic", "--phi", "x1 + 2",
                         "--walks", "20000", "--seed", "1"], capsys)
    res = json.loads(out)
    assert code == 0 and abs(res["mean"] - 2.5) <= 3 * res["stderr"]
    code, _, err = call(["mc", "--domain", "halfspace:1", "--x", "1"], capsys)
    assert code == 2 and "infinite" in err


def test_verify_subset_deterministic(capsys):
    a = call(["verify", "--suite", "fast", "--seed", "42", "--only", "1", "10", "14"], capsys)
    b = call(["verify", "--suite", "fast", "--seed", "42", "--only", "1", "10", "14", "--threads", "2"], capsys)
    assert a[0] == 0 and a[1] == b[1]
    lines = a[1].splitlines()
    assert sum(" PASS " in line for line in lines) == 3


@pytest.mark.slow
def test_verify_fast_suite_byte_identical(tmp_path):
    env = dict(os.environ)
    outs = []
    for threads in ("1", "4"):
        env["GREENPATH_THREADS"] = threads
        proc = subprocess.run([sys.executable, "-m", "greenpath", "verify", "--suite", "fast", "--seed", "42"],
                              capture_output=True, env=env, timeout=600)
        assert proc.returncode == 0, proc.stderr.decode()
        outs.append(proc.stdout)
    assert outs[0] == outs[1]
    assert outs[0].decode().count(" PASS ") == 14
