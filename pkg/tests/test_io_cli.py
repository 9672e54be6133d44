from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from skewlab import io as sio
from skewlab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# file writers

def test_pgm_round_trip(tmp_path):
    img = np.arange(6 * 5, dtype=np.uint8).reshape(6, 5) * 7
    p = sio.write_pgm(tmp_path / "a.pgm", img)
    assert np.array_equal(sio.read_pgm(p), img)
    assert p.read_bytes().startswith(b"P5\n5 6\n255\n")


def test_atomic_write_leaves_no_temporaries(tmp_path):
    sio.write_csv(tmp_path / "x.csv", ["a", "b"], [(1, 0.1), (2, 1 + 2j)])
    sio.write_json(tmp_path / "x.json", {"z": 1j, "v": math.inf})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["x.csv", "x.json"]
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines[0] == "a,b" and lines[1] == "1,0.1"


def test_jsonable_handles_complex_and_nonfinite():
    data = json.loads(sio.dumps({"c": 1 - 2j, "n": math.nan, "a": np.arange(2)}))
    assert data == {"a": [0, 1], "c": {"re": 1.0, "im": -2.0}, "n": "nan"}


# command line

def test_pliss_uniform_density(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "pliss", "--out", str(tmp_path), "--logs", "const:log2:100",
                           "--sigma", "1.5")
    assert code == 0
    assert json.loads(out)["density"] == 1
    assert (tmp_path / "pliss.csv").exists() and (tmp_path / "manifest.json").exists()


def test_ce_on_chebyshev(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "ce", "--map", "builtin:chebyshev", "--out", str(tmp_path),
                           "--no-figures", "--n", "60")
    assert code == 0
    assert json.loads(out)["mu_ce"] == pytest.approx(4, rel=1e-6)


def test_missing_map_exits_with_input_error(capsys, tmp_path):
    code, _, err = run_cli(capsys, "orbit", "--map", str(tmp_path / "nope.map"), "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err)["error"]["code"] == "io-not-found"


def test_corrupted_map_reports_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.map"
    bad.write_text("lambda = banana\n")
    code, _, err = run_cli(capsys, "orbit", "--map", str(bad), "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err)["error"]["code"] == "io-parse"


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 5\nbogus = 1\n")
    code, _, err = run_cli(capsys, "orbit", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err)["error"]["code"] == "unknown-key"


def test_config_file_and_explicit_flags(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 5\nz = 0.5\n")
    code, out, _ = run_cli(capsys, "orbit", "--config", str(cfg), "--n", "7", "--out", str(tmp_path),
                           "--no-figures")
    assert code == 0 and json.loads(out)["steps"] == 7
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["params"]["z"] == {"re": 0.5, "im": 0.0}


def test_replay_reproduces_outputs(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli(capsys, "classify", "--out", str(a), "--resolution", "48", "--budget", "60", "--no-figures")
    code, _, _ = run_cli(capsys, "replay", str(a / "manifest.json"), "--out", str(b))
    assert code == 0
    for name in ("classify.json", "classify.pgm"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_thread_count_does_not_change_outputs(capsys, tmp_path):
    outs = []
    for threads in (1, 8):
        d = tmp_path / f"t{threads}"
        run_cli(capsys, "area", "--out", str(d), "--resolutions", "64", "--budgets", "20,80",
                "--threads", str(threads), "--no-figures")
        outs.append(d)
    files = sorted(p.name for p in outs[0].iterdir() if p.name != "manifest.json")
    assert files
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "skewlab", "pliss", "--out", str(tmp_path),
                          "--logs", "alt:1:-1:10", "--sigma", "2.718281828459045"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["count"] == 1
