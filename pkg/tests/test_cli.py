import json
import os
import subprocess
import sys

import numpy as np
import pytest

from graphsp import io
from graphsp.cli import RunConfig, main
from graphsp.graph import cycle_graph, path_graph

from _graphs import random_graph


@pytest.fixture
def p2(tmp_path):
    g = tmp_path / "p2.tsv"
    io.write_graph(path_graph(2), g)
    x = tmp_path / "x.csv"
    io.write_signal(np.array([1.0, 0.0]), x)
    return g, x


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_gft_p2(p2, tmp_path, capsys):
    g, x = p2
    code, _, _ = run(["gft", "--graph", g, "--signal", x, "--operator", "L", "--out", tmp_path / "o"], capsys)
    assert code == 0
    nu, c = io.read_gft(tmp_path / "o" / "gft.csv")
    assert np.allclose(nu, [0, 2], atol=1e-14) and np.allclose(c, [2 ** -0.5, 2 ** -0.5])
    side = json.loads((tmp_path / "o" / "gft.csv.json").read_text())
    assert side["operator"] == "L" and "versions" in side and "tolerances" in side


@pytest.mark.parametrize("backend", ["exact", "chebyshev", "lanczos", "arma"])
def test_filter_tikhonov_p2(p2, tmp_path, capsys, backend):
    g, x = p2
    code, out, _ = run(["filter", "--graph", g, "--signal", x, "--response", "tikhonov:0.5",
                        "--backend", backend, "--krylov-dim", 2, "--order", 40, "--out", tmp_path], capsys)
    assert code == 0
    y = io.read_signal(tmp_path / "filtered.csv", 2)
    assert np.abs(y - [0.75, 0.25]).max() < 1e-6
    side = json.loads((tmp_path / "filtered.csv.json").read_text())
    assert side["backend"] == backend and side["operator"] == "L"


def test_missing_file(tmp_path, capsys):
    code, _, err = run(["gft", "--graph", tmp_path / "nope.tsv", "--out", tmp_path], capsys)
    assert code == 1
    lines = err.strip().splitlines()
    assert len(lines) == 1 and json.loads(lines[0])["code"] == "E_IO"


def test_malformed_graph(tmp_path, capsys):
    g = tmp_path / "bad.tsv"
    g.write_text("0\tone\n")
    code, _, err = run(["operator", "--graph", g, "--out", tmp_path], capsys)
    assert code == 1 and json.loads(err)["code"] == "E_IO"


def test_module_error_code(tmp_path, capsys):
    g = tmp_path / "tri.tsv"
    io.write_graph(cycle_graph(3), g)
    x = tmp_path / "x.csv"
    io.write_signal(np.ones(3), x)
    code, _, err = run(["fb", "--graph", g, "--signal", x, "--out", tmp_path], capsys)
    msg = json.loads(err)
    assert code == 1 and msg["code"] == "E_BIPARTITE" and "haar" in msg["message"]


def test_usage_error(p2, tmp_path, capsys):
    g, _ = p2
    code, _, err = run(["gft", "--graph", g, "--out", tmp_path], capsys)
    assert code == 1 and json.loads(err)["code"] == "E_USAGE"


def test_operator_command(tmp_path, capsys):
    g = tmp_path / "c.tsv"
    io.write_graph(cycle_graph(4, directed=True), g)
    code, out, _ = run(["operator", "--graph", g, "--operator", "Q", "--out", tmp_path], capsys)
    assert code == 0 and json.loads(out)["n"] == 4
    assert (tmp_path / "operator.tsv.json").is_file()
    assert np.allclose(io.read_signal(tmp_path / "pi.csv", 4), 0.25)


def test_sgwt_command(tmp_path, capsys):
    g = tmp_path / "g.tsv"
    io.write_graph(random_graph(20, seed=1), g)
    x = tmp_path / "x.csv"
    io.write_signal(np.random.default_rng(0).standard_normal(20), x)
    code, out, _ = run(["sgwt", "--graph", g, "--signal", x, "--out", tmp_path], capsys)
    A, B = json.loads(out)["frame_bounds"]
    assert code == 0 and 0 < A <= B
    f = io.read_frame(tmp_path / "frame.json")
    assert io.read_sgwt(tmp_path / "sgwt.csv", f).count == 5 * 20


def test_multires_and_reconstruct(tmp_path, capsys):
    g = tmp_path / "g.tsv"
    io.write_graph(random_graph(40, seed=2), g)
    xv = np.random.default_rng(3).standard_normal(40)
    x = tmp_path / "x.csv"
    io.write_signal(xv, x)
    code, out, _ = run(["multires", "--graph", g, "--signal", x, "--depth", 3, "--plot-data",
                        "--out", tmp_path / "arch"], capsys)
    assert code == 0 and json.loads(out)["coefficients"] == 40
    assert (tmp_path / "arch" / "approx_level_3.tsv").is_file()
    code, _, _ = run(["reconstruct", "--archive", tmp_path / "arch", "--out", tmp_path / "rec"], capsys)
    assert code == 0
    assert np.allclose(io.read_signal(tmp_path / "rec" / "reconstructed.csv", 40), xv, atol=1e-12)


def test_fb_on_bipartite(tmp_path, capsys):
    g = tmp_path / "c.tsv"
    io.write_graph(cycle_graph(6), g)
    x = tmp_path / "x.csv"
    io.write_signal(np.arange(6.0), x)
    code, out, _ = run(["fb", "--graph", g, "--signal", x, "--out", tmp_path / "fb"], capsys)
    assert code == 0 and json.loads(out)["coefficients"] == 6
    assert json.loads((tmp_path / "fb" / "level_1" / "partition.json").read_text())["V0"] == [0, 2, 4]


def test_deterministic_output(p2, tmp_path, capsys):
    g, x = p2
    for d in ("a", "b"):
        run(["filter", "--graph", g, "--signal", x, "--response", "heat:1", "--backend", "chebyshev",
             "--out", tmp_path / d], capsys)
    assert (tmp_path / "a" / "filtered.csv").read_text() == (tmp_path / "b" / "filtered.csv").read_text()


def test_run_config_validation(tmp_path):
    with pytest.raises(ValueError):
        RunConfig("gft", backend="arma").validate()
    with pytest.raises(ValueError):
        RunConfig("plot").validate()
    with pytest.raises(OSError):
        RunConfig("gft", graph_path=str(tmp_path / "missing")).validate()


def test_module_entry_point(p2, tmp_path):
    g, x = p2
    env = {**os.environ, "GSP_DISABLE_NUMBA": "1"}
    res = subprocess.run([sys.executable, "-m", "graphsp", "filter", "--graph", str(g), "--signal", str(x),
                          "--response", "tikhonov:0.5", "--backend", "arma", "--out", str(tmp_path / "m")],
                         capture_output=True, text=True, env=env)
    assert res.returncode == 0, res.stderr
    assert np.abs(io.read_signal(tmp_path / "m" / "filtered.csv", 2) - [0.75, 0.25]).max() < 1e-6
