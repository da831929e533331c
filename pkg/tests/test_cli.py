"""Command-line interface contract: exit codes, flags, output streams."""

import json
import os

from limitdl.cli import main

FIX = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def fx(*parts):
    return os.path.join(FIX, *parts)


def test_typecheck_ok(capsys):
    assert main(["typecheck", fx("integral255.lchc")]) == 0
    assert "InitialHigherOrder" in capsys.readouterr().out


def test_typecheck_json(capsys):
    assert main(["typecheck", fx("integral255.lchc"), "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["mode"] == "InitialHigherOrder"


def test_solve_unsat_exit_code(capsys, tmp_path):
    proof = tmp_path / "proof.json"
    rc = main(["solve", fx("fo", "lia_threshold_unsat.lchc"),
               "--emit-proof", str(proof)])
    assert rc == 20
    assert "UNSAT" in capsys.readouterr().out
    assert json.loads(proof.read_text())  # non-empty replayable trace


def test_solve_sat_exit_code(capsys, tmp_path):
    model = tmp_path / "model.json"
    rc = main(["solve", fx("fo", "lia_threshold_sat.lchc"),
               "--emit-model", str(model), "--json"])
    assert rc == 10
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "SAT"
    assert json.loads(model.read_text())["predicates"]["R"]["kind"] == "active"


def test_solve_unknown_exit_code(capsys):
    rc = main(["solve", fx("integral256.lchc"), "--total-budget", "10",
               "--budget-resolution", "5", "--budget-models", "1"])
    assert rc == 30


def test_solve_invalid_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.lchc"
    bad.write_text("""(theory (lia))
(declare R (-> W W o))
(clause ((x W) (y W)) (head (R x y)) (body (geq x y)))
(goal () (body (R 0 0)))
""")
    assert main(["solve", str(bad)]) == 2
    assert capsys.readouterr().err  # diagnostics on stderr


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.lchc"
    bad.write_text("(theory (lia)")
    assert main(["solve", str(bad)]) == 1
    assert capsys.readouterr().err


def test_missing_file_exit_code(capsys):
    assert main(["solve", "nonexistent.lchc"]) == 1


def test_verify_model(capsys):
    assert main(["verify-model", fx("integral256.lchc"),
                 fx("integral256.model.json")]) == 0
    assert "true" in capsys.readouterr().out
    assert main(["verify-model", fx("integral255.lchc"),
                 fx("integral256.model.json")]) == 2


def test_eval(capsys):
    rc = main(["eval", fx("integral256.lchc"), fx("integral256.model.json"),
               "(Exp (tuple 0 100))"])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "true"
    main(["eval", fx("integral256.lchc"), fx("integral256.model.json"),
          "(Exp (tuple 0 128))"])
    assert capsys.readouterr().out.strip() == "false"


def test_encode_lcm(capsys, tmp_path):
    out = tmp_path / "m.lchc"
    rc = main(["encode-lcm", fx("lcm", "m1.json"), "--target", "q2,1",
               "-o", str(out)])
    assert rc == 0
    assert main(["solve", str(out)]) == 10  # unreachable -> satisfiable


def test_encode_lcm_bad_target(capsys):
    rc = main(["encode-lcm", fx("lcm", "m1.json"), "--target", "q2,1,2"])
    assert rc == 1
    assert capsys.readouterr().err


def test_encode_lcm_simulate(capsys):
    rc = main(["encode-lcm", fx("lcm", "m1.json"), "--target", "q1,5",
               "--simulate"])
    assert rc == 0
    assert "reachable" in capsys.readouterr().out
