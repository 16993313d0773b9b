import json
import subprocess
import sys

import numpy as np
import pytest

from simtri.cli import (
    EXIT_FAILED,
    EXIT_INPUT,
    EXIT_OK,
    decode_matrix,
    digest,
    encode_matrix,
    family_to_dict,
    main,
    parse_family,
)
from simtri.commalg import OperatorFamily

GOLDEN = {
    "dim": 2,
    "matrices": [
        {"name": "A", "entries": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
        {"name": "B", "entries": [[[0, 0], [0, 0]], [[1, 0], [0, 0]]]},
    ],
}


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(p)


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def strip_timings(report):
    report = dict(report)
    report.pop("timings")
    return report


# ---------------------------------------------------------------------------
# encoding


def test_matrix_round_trip_exact():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    back = decode_matrix(json.loads(json.dumps(encode_matrix(M))), "M")
    assert np.array_equal(M, back)


def test_family_round_trip_and_digest():
    ff = parse_family(GOLDEN)
    again = parse_family(json.loads(json.dumps(family_to_dict(ff.family))))
    assert digest(ff.family) == digest(again.family)
    assert digest(ff.family) != digest(OperatorFamily([np.eye(2), np.eye(2)]))


# ---------------------------------------------------------------------------
# commands


def test_triangularize_golden_pair(tmp_path):
    code, rep = run(["triangularize", write(tmp_path, "f.json", GOLDEN)], tmp_path)
    assert code == EXIT_OK and rep["status"] == "verified"
    assert rep["result"]["mode"] == "shemesh"
    assert rep["verification"]["overall"]


def test_reports_are_deterministic(tmp_path):
    path = write(tmp_path, "f.json", GOLDEN)
    _, a = run(["triangularize", path], tmp_path, "a.json")
    _, b = run(["triangularize", path], tmp_path, "b.json")
    assert strip_timings(a) == strip_timings(b)


@pytest.mark.parametrize("command", ["triangularize", "algebra"])
def test_fresh_report_verifies(tmp_path, command):
    gen = tmp_path / "g.json"
    assert main(["generate", "--kind", "l_nilpotent", "--dim", "4", "--seed", "3", "--out", str(gen)]) == EXIT_OK
    code, _ = run([command, str(gen)], tmp_path, "r.json")
    assert code == EXIT_OK
    code, ver = run(["verify", str(tmp_path / "r.json")], tmp_path, "v.json")
    assert code == EXIT_OK and ver["status"] == "verified"


def test_tampered_report_fails(tmp_path):
    _, rep = run(["triangularize", write(tmp_path, "f.json", GOLDEN)], tmp_path, "r.json")
    # swap the basis columns: e1 is not invariant under B = E21
    P = rep["result"]["basis_change"]
    rep["result"]["basis_change"] = [row[::-1] for row in P]
    code, ver = run(["verify", write(tmp_path, "t.json", rep)], tmp_path, "v.json")
    assert code == EXIT_FAILED and ver["status"] == "verification_failed"


def test_digest_mismatch_is_input_error(tmp_path):
    _, rep = run(["triangularize", write(tmp_path, "f.json", GOLDEN)], tmp_path, "r.json")
    rep["family"]["matrices"][0]["entries"][0][0] = [2, 0]
    assert main(["verify", write(tmp_path, "t.json", rep)]) == EXIT_INPUT


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        '{"dim": 2}',
        '{"dim": 2, "matrices": [{"entries": [[[1, 0]]]}]}',
        '{"dim": 1, "matrices": [{"entries": [[[1, 0]]]}], "dim": 1}',
        '{"dim": 1, "matrices": [{"entries": [[[1, 0]]]}], "tolerances": {"bogus": 1}}',
        '{"dim": 1, "matrices": [{"entries": [[[1, 0]]]}], "tolerances": {"zero_tol": -1}}',
        '{"dim": 1, "matrices": [{"entries": [["x", 0]]}]}',
    ],
)
def test_malformed_input_exits_2(tmp_path, text):
    assert main(["check", write(tmp_path, "bad.json", text)]) == EXIT_INPUT


def test_missing_file_exits_2(tmp_path):
    assert main(["check", str(tmp_path / "none.json")]) == EXIT_INPUT


def test_bad_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["triangularize", write(tmp_path, "f.json", GOLDEN), "--zero-tol", "abc"])
    assert exc.value.code == EXIT_INPUT


def test_predicate_failure_exits_1(tmp_path):
    gen = tmp_path / "g.json"
    main(["generate", "--kind", "shemesh_lr", "--dim", "4", "--seed", "1", "--violate", "--out", str(gen)])
    code, rep = run(["triangularize", str(gen), "--mode", "shemesh"], tmp_path)
    assert code == EXIT_FAILED and rep["status"] == "predicate_failed"


def test_check_reports_conditions(tmp_path):
    code, rep = run(["check", write(tmp_path, "f.json", GOLDEN)], tmp_path)
    assert code == EXIT_OK
    pair = rep["condition_report"]["pairs"]["A,B"]
    assert pair["shemesh_left_right"] and not pair["commuting"]


def test_algebra_report_values(tmp_path):
    code, rep = run(["algebra", write(tmp_path, "f.json", GOLDEN)], tmp_path)
    assert code == EXIT_OK
    r = rep["result"]
    assert (r["dim_algebra"], r["radical_dim"], r["quotient_dim"]) == (2, 1, 1)


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["generate", "--kind", "commuting", "--dim", "4", "--seed", "1", "--out", str(a)])
    main(["generate", "--kind", "commuting", "--dim", "4", "--seed", "1", "--out", str(b)])
    assert a.read_text() == b.read_text()


def test_console_entry_point(tmp_path):
    path = write(tmp_path, "f.json", GOLDEN)
    proc = subprocess.run([sys.executable, "-m", "simtri.cli", "check", path], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "check"


def family(*mats):
    return {"dim": len(mats[0]), "matrices": [
        {"name": f"M{k}", "entries": [[[float(np.real(x)), float(np.imag(x))] for x in row] for row in M]}
        for k, M in enumerate(mats)]}


def test_commuting_diagonals_length_one(tmp_path):
    _, rep = run(["check", write(tmp_path, "f.json", family(np.diag([1, 2]), np.diag([3, 5])))], tmp_path)
    assert rep["condition_report"]["l_nilpotent_length"] == 1


def test_single_matrix_auto_mode(tmp_path):
    code, rep = run(["triangularize", write(tmp_path, "f.json", family(np.array([[1, 0], [2, 3]])))], tmp_path)
    assert code == EXIT_OK and rep["result"]["mode"] == "l_nilpotent"
    assert rep["result"]["routes"][0] == "commuting_eigenspace"


def test_golden_pair_chain_dims(tmp_path):
    _, rep = run(["triangularize", write(tmp_path, "f.json", GOLDEN), "--mode", "shemesh"], tmp_path)
    assert rep["result"]["chain_dims"] == [1]


def test_no_predicate_lists_residuals(tmp_path):
    rng = np.random.default_rng(5)
    mats = [rng.standard_normal((3, 3)) for _ in range(2)]
    code, rep = run(["triangularize", write(tmp_path, "f.json", family(*mats))], tmp_path)
    assert code == EXIT_FAILED and rep["status"] == "predicate_failed"
    assert {"A[A,B]", "[A,B]B", "B[A,B]", "normal_A"} <= set(rep["residuals"])


def test_malformed_pair_names_matrix(tmp_path, capsys):
    bad = {"dim": 1, "matrices": [{"name": "Q", "entries": [[[1]]]}]}
    assert main(["check", write(tmp_path, "f.json", bad)]) == EXIT_INPUT
    assert "'Q'" in capsys.readouterr().err


def test_form_entry_perturbed_by_one(tmp_path):
    _, rep = run(["triangularize", write(tmp_path, "f.json", GOLDEN)], tmp_path, "r.json")
    rep["result"]["triangular_forms"][0][0][0][0] += 1.0
    assert main(["verify", write(tmp_path, "t.json", rep)]) == EXIT_FAILED
