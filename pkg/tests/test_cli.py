import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from curlab import cli
from curlab.cli import EXIT_BUDGET, EXIT_INDEX, EXIT_OK, EXIT_PARSE, EXIT_USAGE, main
from curlab.matio import write_csv, write_mtx
from curlab.report import SCHEMA_VERSION, dumps, make_report, parse_report

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "report.schema.json").read_text())


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report_of(out):
    rep = parse_report(out)
    jsonschema.validate(rep, SCHEMA)
    return rep


@pytest.fixture
def golden(tmp_path):
    p = tmp_path / "golden.csv"
    write_csv(p, [[1, 2], [3, 4]], header="golden 2x2")
    return p


@pytest.fixture
def rank1(tmp_path):
    p = tmp_path / "rank1.mtx"
    write_mtx(p, [[1, 2], [2, 4]])
    return p


# --- decompose ---------------------------------------------------------------


def test_decompose_golden(capsys, golden):
    code, out, err = run(capsys, "decompose", golden, "--rows", "1", "--cols", "1", "--mode", "both")
    assert code == EXIT_OK
    res = report_of(out)["results"]
    assert res["exact"] is False
    assert res["I"] == [1] and res["J"] == [1]
    assert res["C"] == [[1.0], [3.0]] and res["U"] == [[1.0]] and res["R"] == [[1.0, 2.0]]
    assert res["cur"]["residual"]["frobenius"] == pytest.approx(2.0, abs=1e-12)
    assert res["projection"]["mixing"] == [[pytest.approx(0.76, abs=1e-12)]]
    assert res["projection"]["residual"]["frobenius"] == pytest.approx(1.0583005, abs=1e-6)
    assert "exact=False" in err


def test_decompose_identity_full_selection(capsys, tmp_path):
    p = tmp_path / "eye.csv"
    write_csv(p, np.eye(3))
    code, out, _ = run(capsys, "decompose", p, "--rows", "1,2,3", "--cols", "1,2,3")
    assert code == EXIT_OK
    res = report_of(out)["results"]
    assert res["exact"] is True
    for key in ("cur", "projection"):
        assert res[key]["residual"]["frobenius"] == 0.0


@pytest.mark.parametrize("mode, present, absent", [("exact", "cur", "projection"),
                                                    ("project", "projection", "cur")])
def test_decompose_modes(capsys, golden, mode, present, absent):
    _, out, _ = run(capsys, "decompose", golden, "--rows", "1", "--cols", "1", "--mode", mode)
    res = report_of(out)["results"]
    assert present in res and absent not in res


def test_decompose_with_k(capsys, rank1):
    code, out, _ = run(capsys, "decompose", rank1, "--k", "1")
    assert code == EXIT_OK
    rep = report_of(out)
    # greedy picks the larger-norm row and column (both index 2, 1-based)
    assert rep["results"]["I"] == [2] and rep["results"]["J"] == [2]
    assert rep["results"]["exact"] is True
    assert rep["inputs"]["strategy"] == "greedy"


def test_decompose_repeated_indices(capsys, rank1):
    _, out, _ = run(capsys, "decompose", rank1, "--rows", "1", "--cols", "1,1")
    res = report_of(out)["results"]
    assert res["J"] == [1, 1] and res["exact"] is True


# --- check -------------------------------------------------------------------


def test_check_golden_all_false(capsys, golden):
    code, out, _ = run(capsys, "check", golden, "--rows", "1", "--cols", "1")
    assert code == EXIT_OK
    res = report_of(out)["results"]
    assert set(res["conditions"].values()) == {False}
    assert res["consistent"] is True
    assert res["ranks"] == {"A": 2, "C": 1, "U": 1, "R": 1}


def test_check_rank_one_all_true(capsys, rank1):
    _, out, _ = run(capsys, "check", rank1, "--rows", "1", "--cols", "1")
    res = report_of(out)["results"]
    assert set(res["conditions"].values()) == {True}


def test_check_corpus_is_consistent(capsys, tmp_path):
    rng = np.random.default_rng(4)
    for t in range(15):
        A = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
        p = tmp_path / f"m{t}.csv"
        write_csv(p, A)
        rows = ",".join(str(i) for i in rng.integers(1, 7, size=rng.integers(1, 4)))
        cols = ",".join(str(j) for j in rng.integers(1, 6, size=rng.integers(1, 4)))
        _, out, _ = run(capsys, "check", p, "--rows", rows, "--cols", cols, "--tol", "1e-8")
        res = report_of(out)["results"]
        assert len(set(res["conditions"].values())) == 1


# --- select ------------------------------------------------------------------


def test_select_exhaustive_and_greedy(capsys, tmp_path):
    p = tmp_path / "d.csv"
    write_csv(p, np.diag([3.0, 2.0, 1.0]))
    _, out, _ = run(capsys, "select", p, "--k", "2", "--strategy", "exhaustive")
    res = report_of(out)["results"]
    assert res["indices"] == [1, 2]
    assert res["error_frobenius"] == pytest.approx(1.0, abs=1e-14)
    assert res["subsets_evaluated"] == 3
    _, out, _ = run(capsys, "select", p, "--k", "2", "--strategy", "greedy")
    res = report_of(out)["results"]
    assert res["indices"] == [1, 2] and res["subsets_evaluated"] is None


def test_select_uniform_deterministic(capsys, golden):
    argv = ("select", golden, "--k", "3", "--strategy", "uniform", "--seed", "8")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    report_of(a)


def test_select_rows_axis(capsys, rank1):
    _, out, _ = run(capsys, "select", rank1, "--k", "1", "--axis", "rows")
    assert report_of(out)["results"]["indices"] == [2]


def test_select_budget_exit(capsys, tmp_path):
    p = tmp_path / "e.csv"
    write_csv(p, np.eye(10))
    code, _, err = run(capsys, "select", p, "--k", "5", "--strategy", "exhaustive", "--budget", "10")
    assert code == EXIT_BUDGET and "budget" in err


def test_select_spectral_norm_option(capsys, golden):
    code, out, _ = run(capsys, "select", golden, "--k", "1", "--strategy", "exhaustive",
                       "--norm", "spectral")
    assert code == EXIT_OK
    assert report_of(out)["inputs"]["norm"] == "spectral"


# --- verify ------------------------------------------------------------------


def test_verify_sweep(capsys):
    code, out, err = run(capsys, "verify", "sweep", "--trials", "100", "--seed", "42", "--tol", "1e-8")
    assert code == EXIT_OK
    rep = report_of(out)
    assert rep["command"] == "verify-sweep"
    assert rep["results"]["agreement_failures"] == [] and rep["results"]["identity_failures"] == []
    assert rep["inputs"]["seed"] == 42 and rep["inputs"]["trials"] == 100
    assert "agreement_failures=0" in err


def test_verify_open_question(capsys):
    code, out, _ = run(capsys, "verify", "open-question", "--trials", "200", "--seed", "7")
    assert code == EXIT_OK
    res = report_of(out)["results"]
    assert res["counterexamples"] == [] and res["trials_run"] == 200


def test_verify_witness_indices_are_one_based():
    w = {"seed": 0, "trial": 1, "shape": [2, 2], "I": [0, 1], "J": [1], "A": [[1.0, 0.0], [0.0, 1.0]]}
    ext = cli._external_witness(w)
    assert ext["I"] == [1, 2] and ext["J"] == [2]
    jsonschema.validate(ext, SCHEMA["$defs"]["witness"] | {"$defs": SCHEMA["$defs"]})


@pytest.mark.parametrize("flag", [["--trials", "0"], ["--max-rank", "20"], ["--repeat-prob", "2"],
                                  ["--workers", "0"]])
def test_verify_config_errors(capsys, flag):
    code, _, _ = run(capsys, "verify", "sweep", *flag)
    assert code == EXIT_USAGE


# --- errors and index conversion ---------------------------------------------


def test_index_conversion_both_ways():
    assert cli._index_list("1,3,3") == [0, 2, 2]
    from curlab.report import one_based
    assert one_based(cli._index_list("2,1")) == [2, 1]


def test_out_of_bounds_exit(capsys, golden):
    code, _, err = run(capsys, "decompose", golden, "--rows", "3", "--cols", "1")
    assert code == EXIT_INDEX and "3" in err
    code, _, _ = run(capsys, "check", golden, "--rows", "0", "--cols", "1")
    assert code == EXIT_INDEX


def test_parse_error_exit(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3\n")
    code, _, err = run(capsys, "decompose", p, "--rows", "1", "--cols", "1")
    assert code == EXIT_PARSE and ":2:" in err
    code, _, _ = run(capsys, "decompose", tmp_path / "missing.csv", "--rows", "1", "--cols", "1")
    assert code == EXIT_PARSE


@pytest.mark.parametrize("argv", [
    ["decompose", "{f}", "--rows", "1", "--cols", "1", "--k", "1"],
    ["decompose", "{f}", "--rows", "1"],
    ["decompose", "{f}", "--rows", "a", "--cols", "1"],
    ["select", "{f}"],
    ["check", "{f}", "--rows", "1", "--cols", "1", "--tol", "-1"],
    ["frobnicate"],
])
def test_usage_errors(capsys, golden, argv):
    code, _, _ = run(capsys, *[a.format(f=golden) for a in argv])
    assert code == EXIT_USAGE


def test_output_flag(capsys, golden, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "--output", target, "check", golden, "--rows", "1", "--cols", "1")
    assert code == EXIT_OK and out == ""
    report_of(target.read_text())


def test_module_entry_point(golden):
    proc = subprocess.run([sys.executable, "-m", "curlab", "check", str(golden), "--rows", "1",
                           "--cols", "1"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert report_of(proc.stdout)["command"] == "check"


# --- reports -----------------------------------------------------------------


def test_report_round_trip_is_exact():
    x = 0.1 + 0.2
    rep = make_report("select", {"seed": np.int64(3)}, {"v": np.float64(x), "m": np.eye(2)})
    back = parse_report(dumps(rep))
    assert back == rep and back["results"]["v"] == x
    assert back["schema_version"] == SCHEMA_VERSION


def test_report_rejects_bad_envelope():
    with pytest.raises(ValueError):
        parse_report("[]")
    with pytest.raises(ValueError):
        parse_report(json.dumps({"schema_version": "2.0", "command": "check", "inputs": {}, "results": {}}))
    with pytest.raises(ValueError):
        parse_report(json.dumps({"schema_version": "1.0", "command": "check"}))
    with pytest.raises(ValueError):
        make_report("check", {}, {"x": float("nan")})


def test_unrepresentable_pseudoinverse_exit(capsys, tmp_path):
    p = tmp_path / "tiny.csv"
    write_csv(p, [[5e-324]])
    code, _, err = run(capsys, "decompose", p, "--rows", "1", "--cols", "1")
    assert code == cli.EXIT_NUMERIC and "overflow" in err
