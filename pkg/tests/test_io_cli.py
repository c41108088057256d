import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pqspec import Grid, GridFunction, ParameterError
from pqspec.cli import ConfigError, RunConfig, main
from pqspec.io import (gridfunction_from_csv, read_gridfunction_csv, svg_plot, write_gridfunction_csv,
                       write_json)

SMALL = {"s1": 0.7, "s2": 0.3, "p": 3.0, "q": 2.0, "n_int": 8, "L": 1.0, "n_ext": 4, "restarts": 2}


def write_cfg(tmp_path, **over):
    cfg = dict(SMALL, **over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, *args, **over):
    return main([args[0], "--config", write_cfg(tmp_path, **over), "--out", str(tmp_path / "out"), *args[1:]])


# -- io -------------------------------------------------------------------
@settings(max_examples=40, deadline=None)
@given(vals=st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=17, max_size=17))
def test_csv_roundtrip_bit_exact(tmp_path_factory, vals):
    g = Grid(0.0, 1.0, 8, 1.0, 4)
    u = GridFunction(g, np.array(vals))
    path = tmp_path_factory.mktemp("csv") / "u.csv"
    write_gridfunction_csv(path, u)
    x, v = read_gridfunction_csv(path)
    assert np.array_equal(v, u.values) and np.array_equal(x, np.asarray(g.nodes))
    assert np.array_equal(gridfunction_from_csv(path, g).values, u.values)


def test_csv_errors(tmp_path):
    g = Grid(0.0, 1.0, 8, 1.0, 4)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ParameterError):
        read_gridfunction_csv(bad)
    write_gridfunction_csv(bad, GridFunction.constant(g, 1.0))
    with pytest.raises(ParameterError):
        gridfunction_from_csv(bad, Grid(0.0, 1.0, 8, 1.0, 5))
    with pytest.raises(ParameterError):
        gridfunction_from_csv(bad, Grid(0.0, 1.0, 8, 2.0, 4))


def test_json_nan_becomes_null(tmp_path):
    write_json(tmp_path / "r.json", {"b": float("nan"), "a": np.float64(1.5), "c": [np.True_, np.int64(3)]})
    text = (tmp_path / "r.json").read_text()
    assert json.loads(text) == {"a": 1.5, "b": None, "c": [True, 3]}
    assert text.index('"a"') < text.index('"b"')


def test_svg_is_wellformed():
    x = np.linspace(0, 1, 11)
    svg = svg_plot([("u <1>", x, np.sin(x)), ("v", x, np.nan * x)], "title & more", vlines=[("lam1", 0.5)])
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) >= 1


# -- config ---------------------------------------------------------------
def test_config_parsing():
    cfg = RunConfig.from_dict(dict(SMALL, **{"lambda": 3.0, "gauss": 6, "tol": 1e-9}))
    assert cfg.params.lam == 3.0 and cfg.rule.gauss == 6 and cfg.opts.tol == 1e-9
    assert cfg.grid == Grid(0.0, 1.0, 8, 1.0, 4)
    with pytest.raises(ConfigError):
        RunConfig.from_dict(dict(SMALL, colour="red"))
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"s1": 0.5})
    with pytest.raises(ParameterError):
        RunConfig.from_dict(dict(SMALL, n_int=1))


# -- subcommands ----------------------------------------------------------
def test_lambda1_command(tmp_path):
    assert run(tmp_path, "lambda1") == 0
    out = tmp_path / "out"
    doc = json.loads((out / "result.json").read_text())
    assert set(doc) == {"config", "result", "metadata"}
    assert doc["result"]["lambda1"] > 0
    rows = list(csv.reader((out / "u1.csv").open()))
    assert rows[0] == ["x", "u"] and len(rows) == 18
    ET.fromstring((out / "u1.svg").read_text())


def test_result_json_reproducible(tmp_path):
    assert run(tmp_path, "lambda1") == 0
    first = json.loads((tmp_path / "out" / "result.json").read_text())
    assert run(tmp_path, "lambda1") == 0
    second = json.loads((tmp_path / "out" / "result.json").read_text())
    first.pop("metadata"), second.pop("metadata")
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)


def test_bad_inputs_exit_1(tmp_path, capsys):
    assert run(tmp_path, "lambda1", p=2.0) == 1
    assert "unsupported parameters" in capsys.readouterr().err
    assert main(["lambda1", "--config", str(tmp_path / "missing.json")]) == 1
    assert run(tmp_path, "solve", "--lambda", "-1") == 1
    assert run(tmp_path, "scan", "--min", "5", "--max", "1", "--steps", "3") == 1
    assert run(tmp_path, "scan", "--min", "1", "--max", "5", "--steps", "1") == 1
    assert main(["frobnicate"]) == 1


def test_solve_command_classifications(tmp_path):
    assert run(tmp_path, "solve", "--lambda", "0") == 0
    doc = json.loads((tmp_path / "out" / "result.json").read_text())["result"]
    assert doc["classification"] == "eigenpair"
    u = read_gridfunction_csv(tmp_path / "out" / "u.csv")[1]
    assert np.ptp(u) == 0.0

    assert run(tmp_path, "lambda1") == 0
    lam1 = json.loads((tmp_path / "out" / "result.json").read_text())["result"]["lambda1"]
    for factor, expect in ((0.5, "no-nontrivial-solution"), (2.0, "eigenpair")):
        assert run(tmp_path, "solve", "--lambda", repr(factor * lam1)) == 0
        doc = json.loads((tmp_path / "out" / "result.json").read_text())["result"]
        assert doc["classification"] == expect


def test_scan_command(tmp_path):
    assert run(tmp_path, "scan", "--min", "5", "--max", "60", "--steps", "4") == 0
    rows = list(csv.reader((tmp_path / "out" / "scan.csv").open()))
    assert rows[0] == ["lambda", "classification", "residual", "f_min"]
    assert len(rows) == 5
    lams = [float(r[0]) for r in rows[1:]]
    assert lams == sorted(lams)
    ET.fromstring((tmp_path / "out" / "scan.svg").read_text())


def test_check_command(tmp_path):
    assert run(tmp_path, "solve", "--lambda", "60") == 0
    u_csv = tmp_path / "out" / "u.csv"
    assert run(tmp_path, "check", "--input", str(u_csv)) == 0
    doc = json.loads((tmp_path / "out" / "check.json").read_text())["result"]
    assert doc["ok"] and doc["linf_extended"]["exterior_ok"]
    assert (tmp_path / "out" / "degiorgi.csv").read_text().startswith("n,C_n,U_n")
    # a grid mismatch is a usage error
    assert run(tmp_path, "check", "--input", str(u_csv), n_ext=5) == 1


def test_oracle_command(tmp_path):
    assert run(tmp_path, "oracle", n_int=4, L=0.5, n_ext=3, oracle="both", n_starts=64) == 0
    doc = json.loads((tmp_path / "out" / "oracle.json").read_text())["result"]
    assert doc["dense_q2"]["lambda1"] == pytest.approx(doc["brute_lambda1"]["lambda1"], rel=1e-6)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pqspec", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "lambda1" in proc.stdout
