import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from sparsehb.cli import CONDITION_COLUMNS, asymptotic_rate, main, parse_k
from sparsehb.index_sets import make_standard_sparse, write_index_file


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    reader = csv.DictReader(io.StringIO(text, newline=""))
    return reader.fieldnames, list(reader)


def test_condition_single_block(capsys):
    code, out, _ = run(capsys, "condition", "--family", "sparse", "--d", "2", "--k", "1")
    assert code == 0
    header, rows = rows_of(out)
    assert header == CONDITION_COLUMNS
    assert len(rows) == 1
    assert rows[0]["dim"] == "1" and float(rows[0]["kappa"]) == pytest.approx(1.0)
    assert out.endswith("\r\n")


def test_condition_range_increasing(capsys):
    code, out, _ = run(capsys, "condition", "--family", "sparse", "--d", "2", "--k", "2..8")
    assert code == 0
    _, rows = rows_of(out)
    assert [int(r["k"]) for r in rows] == list(range(2, 9))
    kappas = [float(r["kappa"]) for r in rows]
    assert all(a < b for a, b in zip(kappas, kappas[1:]))


def test_energy_a0_equals_sparse(capsys):
    _, a, _ = run(capsys, "condition", "--family", "energy", "--a", "0", "--d", "2", "--k", "3")
    _, b, _ = run(capsys, "condition", "--family", "sparse", "--d", "2", "--k", "3")
    assert a == b


def test_condition_json_and_export(capsys, tmp_path):
    path = tmp_path / "a.coo"
    code, out, _ = run(capsys, "condition", "--k", "3", "--format", "json",
                       "--export-matrix", str(path))
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and doc["columns"] == CONDITION_COLUMNS
    assert doc["rows"][0]["dim"] == 17
    assert len(path.read_text().splitlines()) > 17
    code, _, err = run(capsys, "condition", "--k", "2..4", "--export-matrix", str(path))
    assert code == 2 and "single k" in err


def test_lanczos_method_matches_dense(capsys):
    _, a, _ = run(capsys, "condition", "--k", "5", "--method", "dense", "--format", "json")
    _, b, _ = run(capsys, "condition", "--k", "5", "--method", "lanczos", "--format", "json")
    ka, kb = json.loads(a)["rows"][0]["kappa"], json.loads(b)["rows"][0]["kappa"]
    assert kb == pytest.approx(ka, rel=1e-6)


def test_asymptotics(capsys):
    code, out, _ = run(capsys, "asymptotics", "--family", "full", "--d", "2", "--k", "2..6",
                       "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["rate"] == "1" and doc["rho_max_over_min"] <= 4
    code, _, err = run(capsys, "asymptotics", "--k", "2..4")
    assert code == 2 and ">= 4" in err
    code, _, _ = run(capsys, "asymptotics", "--family", "gap", "--k", "1..4")
    assert code == 2


def test_rates():
    assert asymptotic_rate("sparse", 2) == 0.5
    assert asymptotic_rate("full", 3) == 2
    assert asymptotic_rate("energy", 2, Fraction(1, 2)) == Fraction(1, 3)


def test_parse_k():
    assert parse_k("5") == (5,)
    assert parse_k("2..4") == (2, 3, 4)
    for bad in ("4..2", "x", "1..y"):
        with pytest.raises(Exception):
            parse_k(bad)


def test_bounds_gap(capsys):
    code, out, _ = run(capsys, "bounds", "--family", "gap", "--d", "2", "--k", "2")
    assert code == 0
    rep = json.loads(out)["reports"][0]
    assert rep["bounds"]["n_lambda"] == 3
    assert rep["bounds"]["n_tilde_prime"] == 4
    assert rep["literal_set"] == [[4, 1], [4, 2]]
    assert rep["literal_bounds"]["n_tilde_prime"] == 4


def test_witness_full_grid(capsys):
    code, out, _ = run(capsys, "witness", "--family", "full", "--d", "2", "--k", "3")
    assert code == 0
    rep = json.loads(out)["reports"][0]
    assert rep["upper_contained"] is True and rep["lower_contained"] is True
    assert rep["upper_witness"]["kind"] == "sbar_slice"
    assert rep["lower_witness"]["bound_direction"] == "upper_on_lambda_min"


def test_solve(capsys):
    code, out, _ = run(capsys, "solve", "--family", "sparse", "--d", "2", "--k", "5",
                       "--rhs", "constant_one")
    assert code == 0
    rep = json.loads(out)["reports"][0]
    assert rep["stats"]["iterations"] > 0
    assert rep["stats"]["final_relative_residual"] <= 1e-8
    assert len(rep["stats"]["residual_history"]) == rep["stats"]["iterations"]
    code, out, _ = run(capsys, "solve", "--k", "6", "--rhs", "product_sine")
    rep = json.loads(out)["reports"][0]
    assert rep["center_value"] == pytest.approx(rep["exact_center_value"], rel=1e-2)
    code, _, err = run(capsys, "solve", "--k", "6", "--maxit", "2")
    assert code == 3 and "numerical failure" in err


def test_eval(capsys):
    code, out, _ = run(capsys, "eval", "--block", "1", "1", "--x", "0.25", "0.25")
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] == 0.25 and doc["node"] == [[1, 1], [1, 1]]
    code, out, _ = run(capsys, "eval", "--block", "2", "--offsets", "1", "--x", "0.75")
    assert json.loads(out)["value"] == 1.0
    code, _, _ = run(capsys, "eval", "--block", "2", "--offsets", "2", "--x", "0.75")
    assert code == 2
    code, _, _ = run(capsys, "eval", "--block", "2", "2", "--x", "0.75")
    assert code == 2


def test_file_family(capsys, tmp_path):
    path = tmp_path / "set.txt"
    write_index_file(make_standard_sparse(4, 2), path)
    _, a, _ = run(capsys, "condition", "--family", "file", "--file", str(path))
    _, b, _ = run(capsys, "condition", "--family", "sparse", "--k", "4")
    assert a == b
    code, _, err = run(capsys, "condition", "--family", "file", "--file", str(tmp_path / "none"))
    assert code == 2
    code, _, _ = run(capsys, "condition", "--family", "file")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["condition", "--d", "0"],
    ["condition", "--k", "0"],
    ["condition", "--family", "energy", "--a", "1"],
    ["condition", "--family", "gap", "--d", "1"],
    ["condition", "--tol", "-1"],
    ["condition", "--threads", "0"],
])
def test_config_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and "error" in err


def test_cap_is_numerical_failure(capsys, monkeypatch):
    monkeypatch.setattr("sparsehb.cli.DEFAULT_NNZ_CAP", 10)
    code, _, err = run(capsys, "condition", "--k", "4")
    assert code == 3 and "cap" in err


def test_out_file_and_threads(capsys, tmp_path):
    path = tmp_path / "o.csv"
    code, out, _ = run(capsys, "condition", "--k", "3", "--out", str(path), "--threads", "1")
    assert code == 0 and out == ""
    assert path.read_bytes().startswith(b"k,dim,")


def test_byte_identical_repeats(tmp_path):
    outs = []
    for i in range(2):
        for fmt in ("csv", "json"):
            p = tmp_path / f"{i}.{fmt}"
            assert main(["condition", "--k", "2..6", "--method", "lanczos", "--seed", "7",
                         "--format", fmt, "--out", str(p)]) == 0
            outs.append(p.read_bytes())
    assert outs[0] == outs[2] and outs[1] == outs[3]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "sparsehb", "bounds", "--k", "3"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["reports"][0]["bounds"]["n_tilde"] == 10
