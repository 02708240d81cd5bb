import io
import json

import numpy as np
import pytest

from fxstrings.cli import parse_lengths, run, synth
from fxstrings.errors import InvalidParams
from fxstrings.export import Table
from fxstrings.ingest import parse_ticks, write_ticks


def call(argv, stdin_text=""):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdin=io.StringIO(stdin_text), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def tickfile(tmp_path):
    s = synth("gbm", 4000, seed=11, sigma=3e-4, spread=2e-4, p0=1.4)
    f = tmp_path / "ticks.csv"
    with open(f, "w") as fh:
        write_ticks(s, fh)
    return f


def test_parse_lengths():
    assert parse_lengths("10,20,5") == [10, 20, 5]
    g = parse_lengths("100:10000:log16")
    assert g[0] == 100 and g[-1] == 10000 and len(g) == 16
    import argparse
    with pytest.raises(argparse.ArgumentTypeError):
        parse_lengths("1:10:lin4")


def test_synth_models():
    assert np.all(synth("lnlinear", 50, b=0.0).ask == 1.0)
    assert np.all(synth("cos", 50, a2=0.0).ask == 1.0)
    a, b = synth("gbm", 100, seed=5), synth("gbm", 100, seed=5)
    assert a == b and not synth("gbm", 100, seed=6) == a
    s = synth("cos", 10, spread=0.002)
    np.testing.assert_allclose(s.ask - s.bid, 0.002)
    with pytest.raises(InvalidParams):
        synth("cos", 10, a1=0.01, a2=0.02)
    with pytest.raises(InvalidParams):
        synth("gbm", 1)


def test_synth_pipe_into_sweep():
    code, ticks, _ = call(["synth", "--model", "cos", "--n", "20000"])
    assert code == 0
    code, out, _ = call(["sweep", "--decimate", "1", "--q", "1", "--channel", "symmetric",
                         "--lengths", "628,942"], ticks)
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "l_s,T_seconds,mean,dispersion,n"
    assert len(rows) == 3


def test_byte_identical_and_manifest(tickfile, tmp_path):
    argv = ["sweep", "-i", str(tickfile), "--lengths", "10:300:log5", "--decimate", "1"]
    a = call(argv)[1]
    b = call(argv + ["--workers", "3"])[1]
    assert a == b
    man = tmp_path / "m.json"
    out = tmp_path / "o.csv"
    assert call(argv + ["-o", str(out), "--manifest", str(man)])[0] == 0
    doc = json.loads(man.read_text())
    assert out.read_text() == a
    assert doc["inputs"][str(tickfile)]["sha256"]
    assert doc["config"]["command"] == "sweep"


@pytest.mark.parametrize("argv", [
    ["map", "--l-s", "20", "--tau", "5"],
    ["map", "--l-s", "5", "--brane"],
    ["profile", "--l-s", "30", "--condition", "buy"],
    ["volat", "--l-s", "30"],
    ["dft", "--l-s", "30", "--format", "json"],
    ["polarize", "--l-s", "30", "--channel", "antisymmetric"],
    ["corrsum", "--l-s", "30"],
    ["rotate", "--l-s", "20"],
    ["gateaux", "--l-s", "20", "--psi", "spread-lagged"],
    ["gateaux", "--l-s", "20", "--verify-tau", "40", "--order", "2"],
])
def test_commands_run(tickfile, argv):
    code, out, err = call(argv + ["-i", str(tickfile)])
    assert code == 0, err
    assert out


def test_headers(tickfile):
    heads = {
        "profile": "h,mean,dispersion", "dft": "k,re,im", "corrsum": "epsilon,C",
        "polarize": "tau,t,g_window,distance", "rotate": "t,d,M", "gateaux": "t,value",
    }
    for cmd, h in heads.items():
        out = call([cmd, "-i", str(tickfile), "--l-s", "20"])[1]
        assert out.splitlines()[0] == h


def test_two_pair_commands(tickfile, tmp_path):
    other = tmp_path / "j.csv"
    with open(other, "w") as fh:
        write_ticks(synth("gbm", 4000, seed=12, sigma=3e-4, spread=2e-4, p0=1.6), fh)
    code, out, _ = call(["rotate", "-i", str(tickfile), "--input-j", str(other),
                         "--l-s", "20", "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["columns"] == ["t", "d", "M"] and doc["meta"]["alpha"] >= 0
    code, out, _ = call(["gateaux", "-i", str(tickfile), "--input-j", str(other), "--l-s", "20"])
    assert code == 0 and len(out.splitlines()) > 10


def test_error_exit_codes(tmp_path):
    code, _, err = call(["sweep", "-i", str(tmp_path / "missing.csv")])
    assert code == 3 and "missing.csv" in json.loads(err)["file"]
    bad = tmp_path / "bad.csv"
    bad.write_text("1000,1.1,1.2\n")
    code, _, err = call(["map", "-i", str(bad)])
    assert code == 3 and json.loads(err)["error"] == "InvertedSpread"
    assert call(["nonsense"])[0] == 2
    code, _, err = call(["map", "--q", "-1"], "1,1.2,1.1\n2,1.2,1.1\n")
    assert code == 2
    monotone = "\n".join(f"{i * 1000},{1 + i * 1e-3},{1 + i * 1e-3}" for i in range(200))
    code, _, err = call(["corrsum", "--l-s", "10", "--decimate", "1"], monotone)
    assert code in (3, 4)
    code, _, err = call(["corrsum", "--l-s", "10", "--decimate", "1", "--fit-lo", "1e-30",
                         "--fit-hi", "2e-30"], _noisy())
    assert code == 4 and json.loads(err)["error"] == "InsufficientFitPoints"


def _noisy():
    buf = io.StringIO()
    write_ticks(synth("gbm", 3000, seed=2, sigma=1e-3, spread=1e-4), buf)
    return buf.getvalue()


def test_table_writers():
    t = Table(("a", "b"), [(1, -0.0), (2, float("nan"))], {"x": 1.5})
    buf = io.StringIO()
    t.write_csv(buf)
    assert buf.getvalue() == "a,b\n1,0.0\n2,nan\n"
    buf = io.StringIO()
    t.write_json(buf)
    doc = json.loads(buf.getvalue())
    assert doc["rows"][1] == [2, None] and doc["meta"]["x"] == 1.5
    with pytest.raises(ValueError):
        Table(("a",), [(1, 2)])


def test_synth_output_parses():
    code, out, _ = call(["synth", "--model", "lnlinear", "--b", "0.001", "--n", "30"])
    s = parse_ticks(out)
    assert len(s) == 30 and s.ask[29] == pytest.approx(np.exp(0.029), rel=1e-14)
