import random
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intlog.cli import main, parse_interval, parse_member
from intlog.fileio import InputError, dump_structure, dump_theory, load_instance, parse_instance, parse_structure
from intlog.lattice import Literal
from intlog.logic import constant, parse_theory, relation
from intlog.measure import make_space
from intlog.structure import interpret

FIX = Path(__file__).resolve().parent.parent / "fixtures"
INSTANCES = sorted(FIX.glob("*.inst"))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(out):
    return dict(line.split(" = ", 1) for line in out.splitlines() if " = " in line and not line.startswith("["))


# --------------------------------------------------------------------------
# check


def test_check_pass(capsys):
    code, out, _ = run(capsys, "check", FIX / "pair.struct", FIX / "pair_pass.theory")
    assert code == 0
    r = report(out)
    assert r["status"] == "pass" and r["failed"] == "0"


def test_check_fail_names_label(capsys):
    code, out, _ = run(capsys, "check", FIX / "pair.struct", FIX / "pair_fail.theory")
    assert code == 1
    assert report(out)["failures"] == "wrong_int"


def test_check_malformed(capsys):
    code, out, err = run(capsys, "check", FIX / "pair.struct", FIX / "pair_malformed.theory")
    assert code == 2 and out == ""
    assert err.startswith("error: ") and "pair_malformed.theory:2:" in err


def test_check_epsilon_slack(capsys, tmp_path):
    t = tmp_path / "near.theory"
    t.write_text("near: int[x](R(x)) == 1.8\n")
    assert run(capsys, "check", FIX / "pair.struct", t)[0] == 1
    assert run(capsys, "check", FIX / "pair.struct", t, "--epsilon", "0.1")[0] == 0


def test_check_missing_file(capsys):
    code, _, err = run(capsys, "check", FIX / "nope.struct", FIX / "pair_pass.theory")
    assert code == 2 and "nope.struct" in err


def test_check_max_points(capsys):
    code, _, err = run(capsys, "check", FIX / "pair.struct", FIX / "pair_pass.theory", "--max-points", "1")
    assert code == 2 and "limit" in err


def test_bad_flag_values(capsys):
    assert run(capsys, "check", FIX / "pair.struct", FIX / "pair_pass.theory", "--tol", "0")[0] == 2
    assert run(capsys, "check", FIX / "pair.struct", FIX / "pair_pass.theory", "--epsilon", "-1")[0] == 2


# --------------------------------------------------------------------------
# construct


def test_construct_stone(capsys):
    code, out, _ = run(capsys, "construct", "stone", FIX / "stone_2atom.inst")
    assert code == 0
    assert "residual_max = 0\n" in out


def test_construct_daniell_hidden(capsys):
    code, out, _ = run(capsys, "construct", "daniell", FIX / "daniell_hidden.inst")
    assert code == 0
    r = report(out)
    assert r["epsilon"] == "0.01"
    gens = out.split("[generators]\n")[1].split("[weights]")[0].splitlines()
    assert gens and all(" = pass residual=" in g for g in gens)


def test_construct_daniell_table(capsys):
    code, out, _ = run(capsys, "construct", "daniell", FIX / "daniell_table.inst")
    assert code == 0 and report(out)["status"] == "pass"


def test_construct_riesz(capsys):
    code, out, _ = run(capsys, "construct", "riesz", FIX / "riesz_desk.inst")
    assert code == 0
    assert report(out)["dini.flagged"] == "none"


def test_construct_riesz_step_flagged(capsys):
    code, out, _ = run(capsys, "construct", "riesz", FIX / "riesz_step.inst")
    r = report(out)
    assert code == 1 and r["dini.flagged"] == "step" and r["check.dini"] == "fail"


def test_construct_kind_mismatch(capsys):
    code, _, err = run(capsys, "construct", "daniell", FIX / "mismatch.inst")
    assert code == 2 and "not 'daniell'" in err


def test_construct_epsilon_override(capsys):
    code, out, _ = run(capsys, "construct", "daniell", FIX / "daniell_table.inst", "--epsilon", "0.2")
    assert code == 0 and report(out)["epsilon"] == "0.2"


@pytest.mark.parametrize("path", INSTANCES, ids=lambda p: p.stem)
def test_emit_then_check(capsys, tmp_path, path):
    kind = load_instance(path).kind
    s, t = tmp_path / "m.struct", tmp_path / "m.theory"
    code, out, _ = run(capsys, "construct", kind, path, "--emit-structure", s, "--emit-theory", t)
    eps = report(out).get("epsilon", "0")
    assert code in (0, 1)
    code2, out2, _ = run(capsys, "check", s, t, "--epsilon", eps)
    assert code2 == 0, out2


@pytest.mark.parametrize("path", INSTANCES, ids=lambda p: p.stem)
def test_reports_are_deterministic(capsys, path):
    kind = load_instance(path).kind
    first = run(capsys, "construct", kind, path, "--seed", "5")
    second = run(capsys, "construct", kind, path, "--seed", "5")
    assert first == second


def test_entry_point_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "intlog.cli", "construct", "stone", str(FIX / "stone_2atom.inst")],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and "status = pass" in proc.stdout


# --------------------------------------------------------------------------
# lemma


def test_lemma_tendtochar_example(capsys):
    code, out, _ = run(capsys, "lemma", "tendtochar", "--f", "0,1,2,3", "--interval", "(0.5,inf)")
    r = report(out)
    assert code == 0
    assert r["n_star"] == "2" and r["indicator"] == "0,1.0,1.0,1.0"


def test_lemma_tendtochar_closed_point(capsys):
    code, out, _ = run(capsys, "lemma", "tendtochar", "--f", "0,0.25,0.5", "--interval", "{0.25}")
    r = report(out)
    assert code == 0 and r["mode"] == "closed" and r["indicator"] == "0,1.0,0"


def test_lemma_tendtochar_mixed_intervals(capsys):
    code, _, err = run(capsys, "lemma", "tendtochar", "--f", "0,1", "--interval", "[0,1)")
    assert code == 2 and "open or all closed" in err


def test_lemma_inessential_midpoint(capsys):
    code, out, _ = run(capsys, "lemma", "inessential", "--f", "0,1,2,3", "--interval", "(1.2,1.9)")
    r = report(out)
    assert code == 0 and r["midpoint"] == "true" and r["alpha"] == repr((1.2 + 1.9) / 2)


def test_lemma_inessential_skips_value(capsys):
    code, out, _ = run(capsys, "lemma", "inessential", "--f", "0.5,0", "--f", "1,0.5", "--interval", "(0.4,0.6)")
    r = report(out)
    assert code == 0 and r["alpha"] == "0.45"


def test_lemma_refine_identity(capsys):
    code, out, _ = run(capsys, "lemma", "refine_cover", "--f", "1,-1,2", "--member", "f0>0")
    r = report(out)
    assert code == 0 and r["identity"] == "true" and r["members_out"] == "1"


def test_lemma_refine_clauses(capsys):
    code, out, _ = run(
        capsys, "lemma", "refine_cover", "--f", "0,0.5,-1,2", "--member", "f0>=0", "--epsilon", "0.01"
    )
    r = report(out)
    assert code == 0 and r["identity"] == "false"
    assert all(r[f"invariant.{k}"] == "pass" for k in ("nice_form", "null_zero_sets", "covers", "measure_sum"))


def test_lemma_special_pair(capsys):
    assert run(capsys, "lemma", "special_pair", "--f", "1,0", "--g", "1,-1")[0] == 0
    code, out, _ = run(capsys, "lemma", "special_pair", "--f", "1,1", "--g", "1,-1")
    assert code == 1 and report(out)["classification"] == "neither"
    code, out, _ = run(capsys, "lemma", "special_pair", "--f", "1,1", "--g", "1,-1", "--weights", "1,0")
    assert code == 0 and report(out)["classification"] == "almost"


@pytest.mark.parametrize(
    "argv",
    [
        ["lemma", "tendtochar", "--interval", "(0,1)"],
        ["lemma", "tendtochar", "--f", "0,x", "--interval", "(0,1)"],
        ["lemma", "tendtochar", "--f", "0,1", "--interval", "(0;1)"],
        ["lemma", "inessential", "--f", "0,1", "--interval", "(0,inf)"],
        ["lemma", "refine_cover", "--f", "0,1", "--member", "f3>0"],
        ["lemma", "refine_cover", "--f", "1,1,-1", "--member", "1"],
        ["lemma", "special_pair", "--f", "0,1", "--g", "1"],
        ["lemma", "special_pair", "--f", "0,1", "--g", "1,1", "--weights", "1,-1"],
        ["lemma", "bogus"],
    ],
)
def test_lemma_input_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_parse_interval_forms():
    iv = parse_interval("[0, inf]")
    assert iv.left_closed and not iv.right_closed
    assert parse_interval("{2}").lo == 2.0
    assert parse_interval("(-inf,1)").is_open


def test_parse_member_forms():
    assert parse_member("0b101", 1) == 5
    assert parse_member("f0>0 & -f1>=0 | f1>0", 2) == [
        [Literal(0, True, False), Literal(1, False, True)],
        [Literal(1, True, False)],
    ]


# --------------------------------------------------------------------------
# file formats


def test_instance_errors_carry_line():
    with pytest.raises(InputError) as info:
        parse_instance("kind = daniell\nepsilon = 0.1\n[space]\npoint a\n[generators]\ngen f a=x\n", "t.inst")
    assert info.value.line == 6 and str(info.value).startswith("t.inst:6:")
    with pytest.raises(InputError, match="not 'riesz'"):
        parse_instance("kind = stone\n[algebra]\natoms 1\n", "t.inst", expect="riesz")


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_structure_round_trip(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 5)
    raw = [rng.random() + 0.01 for _ in range(n)]
    weights = [w / sum(raw) for w in raw]
    lang = [relation("R", 1, 2.0), relation("S", 2, 1.0), constant("c")]
    tables = {
        "R": [rng.uniform(-2, 2) for _ in range(n)],
        "S": [[rng.uniform(-1, 1) for _ in range(n)] for _ in range(n)],
    }
    M = interpret(make_space(n, weights), lang, tables, {"c": rng.randrange(n)}, tol=1e-9)
    M2 = parse_structure(dump_structure(M))
    assert M2.space.points == M.space.points and M2.space.weights == M.space.weights
    for name in ("R", "S", "e"):
        assert (M2.tables[name] == M.tables[name]).all()
    assert dict(M2.constants) == dict(M.constants)
    assert dump_structure(M2) == dump_structure(M)


def test_theory_round_trip():
    M = parse_structure((FIX / "pair.struct").read_text())
    T = parse_theory((FIX / "pair_pass.theory").read_text(), M.language)
    assert parse_theory(dump_theory(T), M.language) == T
