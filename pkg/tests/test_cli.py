import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sl2lie import io
from sl2lie.cli import main
from sl2lie.errors import UsageError
from sl2lie.systems import Trajectory


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


finite = st.floats(allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
def test_csv_round_trip_is_bit_exact(tmp_path_factory, rows):
    arr = np.array(rows)
    tr = Trajectory("ks2", arr[:, 0], arr[:, 1:], 0.0, 1.0, 0.1)
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    io.write_trajectory(path, tr)
    back = io.read_trajectory(path, "ks2")
    assert np.array_equal(back.times, tr.times)
    assert np.array_equal(back.states, tr.states)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.startswith(b"t,x,v\n")


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,x\n0.0,abc\n")
    with pytest.raises(UsageError):
        io.read_trajectory(p, "riccati")
    p.write_text("t,x,v\n0.0,1.0\n")
    with pytest.raises(UsageError):
        io.read_trajectory(p, "ks2")
    with pytest.raises(UsageError):
        io.read_trajectory(tmp_path / "missing.csv", "ks2")


def test_solve_riccati(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"system": "riccati", "b1": 1, "initial": [0], "dt": 1e-4})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    tr = io.read_trajectory(tmp_path / "o" / "riccati.csv", "riccati")
    assert np.max(np.abs(tr.states[:, 0] - np.tan(tr.times))) < 1e-6


def test_solve_reduced_rows(tmp_path):
    cfg = write(tmp_path / "c.json", {"system": "reduced_sl2", "b1": 0, "dt": 0.25})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "reduced_sl2.csv").read_text().splitlines()
    assert lines[0] == "t,alpha,beta,gamma,delta"
    assert lines[2] == "0.25,1.0,0.0,0.25,1.0"


def test_solve_exit_codes(tmp_path, capsys):
    out = tmp_path / "o"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    cfg = write(tmp_path / "u.json", {"system": "nope", "initial": [0]})
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 2
    cfg = write(tmp_path / "d.json", {"system": "ks2", "c0": 1, "initial": [0, 1]})
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 4
    assert not out.exists()
    capsys.readouterr()
    cfg = write(tmp_path / "t.json", {"system": "riccati", "b1": 1, "initial": [0], "t1": 2, "dt": 1e-3})
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 3
    diag = json.loads(capsys.readouterr().err)
    assert diag["error"] == "truncated" and abs(diag["failure_time"] - math.pi / 2) < 5e-3
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert main(["solve", "--out", str(out)]) == 2


RECON = {
    "b1": {"kind": "cosine", "params": [1, 1, 0]},
    "dt": 1e-3,
    "systems": [
        {"system": "riccati", "initial": [0]},
        {"system": "riccati", "initial": [0.5], "output": "ric1.csv"},
        {"system": "riccati", "initial": [-0.5], "output": "ricm1.csv"},
        {"system": "milne_pinney", "c": 1, "initial": [1, 0]},
        {"system": "harmonic_oscillator", "initial": [1, 0]},
        {"system": "ks2", "c0": 1, "initial": [1, 0]},
        {"system": "ks2", "c0": 1, "initial": [2, 0], "output": "ks2b.csv"},
        {"system": "ks3", "c0": 1, "initial": [0, 1, 0]},
        {"system": "wei_norman", "initial": [0, 0, 0]},
    ],
}


@pytest.fixture(scope="module")
def recon_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("recon")
    cfg = write(d / "rec.json", RECON)
    assert main(["reconstruct", "--config", cfg, "--out", str(d)]) == 0
    return d


def test_reconstruct_report(recon_dir):
    rep = json.loads((recon_dir / "reconstruct_report.json").read_text())
    assert rep["pass"] and len(rep["checks"]) == len(RECON["systems"])
    for chk in rep["checks"]:
        assert set(chk) >= {"check", "value", "threshold", "pass"}
        assert chk["value"] < 1e-5


def test_reconstruct_failures(tmp_path, capsys):
    cfg = write(tmp_path / "e.json", {"systems": []})
    assert main(["reconstruct", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    cfg = write(tmp_path / "k.json", {"b1": 1, "t1": 3, "dt": 1e-3,
                                      "systems": [{"system": "ks2", "c0": -1, "initial": [1, 0]}]})
    assert main(["reconstruct", "--config", cfg, "--out", str(tmp_path / "o")]) == 5
    rep = json.loads((tmp_path / "o" / "reconstruct_report.json").read_text())
    assert rep["checks"][0]["truncated"] and not rep["pass"]


@pytest.mark.parametrize("cfg,count", [
    ({"system": "ks2", "c0": 1, "inputs": ["ks2.csv", "ks2b.csv"]}, 2),
    ({"system": "riccati", "inputs": ["riccati.csv", "ric1.csv", "ricm1.csv"]}, 3),
])
def test_invert_round_trip(recon_dir, tmp_path, cfg, count):
    path = write(recon_dir / f"inv_{cfg['system']}.json", cfg)
    assert main(["invert", "--config", path, "--out", str(tmp_path)]) == 0
    rp = io.read_path(tmp_path / "reduced_path.csv")
    ref = io.read_path(recon_dir / "reduced_path.csv")
    assert np.max(np.abs(rp.entries - ref.entries)) < 1e-5
    rep = json.loads((tmp_path / "invert_report.json").read_text())
    assert rep["pass"] and len(rep["checks"]) == count + 1


def test_invert_precondition(recon_dir, tmp_path, capsys):
    path = write(recon_dir / "inv_bad.json", {"system": "ks2", "c0": 1, "inputs": ["ks2.csv", "ks2.csv"]})
    assert main(["invert", "--config", path, "--out", str(tmp_path / "o")]) == 4
    assert "coincide" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def _series(path, header, cols):
    t = np.arange(0, 1001) * 1e-3
    io.write_rows(path, header, t, np.column_stack([c(t) for c in cols]))


def test_superpose_basic(tmp_path):
    _series(tmp_path / "lin.csv", ("t", "x", "v", "a"), (lambda t: t, np.ones_like, np.zeros_like))
    cfg = write(tmp_path / "b.json", {"mode": "basic_ks3", "particular": "lin.csv", "A": [[1, 1], [1, 2]]})
    assert main(["superpose", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    tr = io.read_trajectory(tmp_path / "o" / "superposed_ks3.csv", "ks3")
    np.testing.assert_allclose(tr.states[:, 0], (tr.times + 1) / (tr.times + 2), atol=1e-15)


def test_superpose_mixed(tmp_path, capsys):
    _series(tmp_path / "c.csv", ("t", "x", "v"), (np.cos, lambda t: -np.sin(t)))
    _series(tmp_path / "s.csv", ("t", "x", "v"), (np.sin, np.cos))
    base = {"mode": "mixed_ks2", "ho": ["c.csv", "s.csv"], "c0": 1, "b1": 1}
    cfg = write(tmp_path / "m.json", {**base, "k1": 1, "k2": 1})
    assert main(["superpose", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "superpose_report.json").read_text())
    assert rep["checks"][0]["value"] < 1e-6
    cfg = write(tmp_path / "m2.json", {**base, "ks2_initial": [1.0, 0.5]})
    assert main(["superpose", "--config", cfg, "--out", str(tmp_path / "o2")]) == 0
    cfg = write(tmp_path / "m3.json", {**base, "k1": 0.5, "k2": 1})
    assert main(["superpose", "--config", cfg, "--out", str(tmp_path / "o3")]) == 4
    assert not (tmp_path / "o3").exists()
    cfg = write(tmp_path / "m4.json", {"mode": "cubic"})
    assert main(["superpose", "--config", cfg]) == 2


def test_verify_single_suite(tmp_path, capsys):
    assert main(["verify", "algebra", "--out", str(tmp_path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["pass"] and all(c["pass"] for c in rep["checks"])
    assert (tmp_path / "verify_algebra.json").exists()
    assert main(["verify", "bogus"]) == 2


def test_bench(tmp_path, capsys):
    cfg = write(tmp_path / "b.json", {"system": "ks3", "c0": 1, "b1": {"kind": "cosine", "params": [1]},
                                      "n": 100, "dt": 1e-3})
    assert main(["bench", "--config", cfg, "--out", str(tmp_path), "--seed", "3"]) == 0
    rep = json.loads((tmp_path / "bench_report.json").read_text())
    assert rep["n"] == 100 and rep["compared"] == 100
    assert abs(rep["direct"]["max_error_vs_reference"] - rep["reduced"]["max_error_vs_reference"]) < 1e-5
    cfg = write(tmp_path / "b1.json", {"system": "riccati", "b1": 1, "initial_states": [[0.0]], "dt": 1e-3})
    assert main(["bench", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "bench_report.json").read_text())
    assert rep["n"] == 1 and "wall_time_s" in rep["direct"] and "wall_time_s" in rep["reduced"]
