import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intlog.logic import (
    EQUALITY,
    Abs,
    Add,
    Const,
    Integral,
    Language,
    Mul,
    ParseError,
    Real,
    Rel,
    Statement,
    Theory,
    Var,
    constant,
    derive_lattice,
    formula_bound,
    free_vars,
    is_closed,
    parse_formula,
    parse_statement,
    parse_theory,
    relation,
    render_formula,
    render_statement,
)
from intlog.structure import eval_formula, interpret
from intlog.measure import make_space

from oracles import naive_free, random_formula

LANG = Language(
    [
        relation("R_f", 1, 3.0),
        relation("R_g", 1, 2.0),
        relation("R_h", 1, 1.0),
        relation("S", 2, 1.0),
        relation("R", 1, 2.0),
        constant("c_a"),
        constant("c"),
    ]
)
x, y, z = Var("x"), Var("y"), Var("z")
Rf = Rel("R_f", (x,))
Rg = Rel("R_g", (x,))


# --------------------------------------------------------------------------
# symbols


def test_equality_always_present():
    lang = Language()
    assert lang["e"] == EQUALITY
    assert EQUALITY.arity == 2 and EQUALITY.bound == 1.0


def test_equality_cannot_be_redeclared():
    with pytest.raises(ValueError):
        Language([relation("e", 1, 1.0)])


def test_constants_have_no_arity_or_bound():
    c = constant("c")
    assert c.arity is None and c.bound is None


@pytest.mark.parametrize("arity,bound", [(0, 1.0), (1, -1.0), (1, math.inf)])
def test_bad_relation_symbols(arity, bound):
    with pytest.raises(ValueError):
        relation("R", arity, bound)


def test_conflicting_declarations():
    with pytest.raises(ValueError):
        Language([relation("R", 1), relation("R", 2)])


def test_reserved_word_rejected():
    with pytest.raises(ValueError):
        Language([relation("int", 1)])


def test_real_literals_must_be_finite():
    with pytest.raises(ValueError):
        Real(math.nan)
    with pytest.raises(ValueError):
        Real(math.inf)


# --------------------------------------------------------------------------
# parsing


def test_parse_integral():
    assert parse_formula("int[y](R_f(y))", LANG) == Integral(Rel("R_f", (y,)), "y")


def test_parse_max_desugars():
    f = parse_formula("max(R_f(x),R_g(x))", LANG)
    expected = Mul(Real(0.5), Add(Add(Rf, Rg), Abs(Add(Rf, Mul(Real(-1.0), Rg)))))
    assert f == expected
    assert f == derive_lattice("max", Rf, Rg)


def test_parse_min_desugars():
    f = parse_formula("min(R_f(x),R_g(x))", LANG)
    assert f == derive_lattice("min", Rf, Rg)


def test_parse_subtraction_and_division():
    assert parse_formula("R_f(x) - R_g(x)", LANG) == Add(Rf, Mul(Real(-1.0), Rg))
    assert parse_formula("R_f(x)/4", LANG) == Mul(Rf, Real(0.25))
    assert parse_formula("1/4", LANG) == Real(0.25)


def test_arity_mismatch():
    with pytest.raises(ParseError, match="arity"):
        parse_formula("R_f(x,y)", LANG)


def test_unknown_symbol():
    with pytest.raises(ParseError, match="unknown"):
        parse_formula("Q(x)", LANG)


def test_shadowing_rejected():
    with pytest.raises(ParseError, match="shadow"):
        parse_formula("int[x](int[x](R_f(x)))", LANG)


def test_division_by_formula_rejected():
    with pytest.raises(ParseError):
        parse_formula("R_f(x)/R_g(x)", LANG)
    with pytest.raises(ParseError):
        parse_formula("R_f(x)/0", LANG)


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_formula("R_f(x) + + 1", LANG)
    assert info.value.pos == 9


@pytest.mark.parametrize("text", ["1e400", "12345678901234567890.5"])
def test_number_literals_validated(text):
    with pytest.raises(ParseError):
        parse_formula(text, LANG)


def test_constant_used_as_term():
    f = parse_formula("R_f(c_a)", LANG)
    assert f == Rel("R_f", (Const("c_a"),))


def test_parse_statement_and_label():
    s = parse_statement("ax1: int[x](R_f(x)) >= -0.5", LANG)
    assert s.label == "ax1" and s.relation == ">=" and s.threshold == -0.5


def test_parse_theory_reports_line():
    with pytest.raises(ParseError) as info:
        parse_theory("# comment\nint[x](R_f(x)) == 1\nint[x](R_f(x) == 1\n", LANG)
    assert info.value.line == 3


def test_theory_rejects_open_statements():
    with pytest.raises(ParseError, match="free"):
        parse_theory("R_f(x) == 1", LANG)
    with pytest.raises(ValueError):
        Theory((Statement(Rf, "==", 1.0),))


# --------------------------------------------------------------------------
# rendering


def test_render_examples():
    assert render_formula(Real(2.5)) == "2.5"
    assert render_formula(Integral(Rel("R_f", (y,)), "y")) == "int[y](R_f(y))"


def test_render_nested_add_round_trips():
    f = Add(Add(Rf, Rg), Add(Real(1.0), Rf))
    text = render_formula(f)
    assert "(" in text
    assert parse_formula(text, LANG) == f


def test_render_statement_round_trips():
    s = Statement(Integral(Mul(Rf, Real(-2.0)), "x"), "==", 0.1 + 0.2, "lbl")
    assert parse_statement(render_statement(s), LANG) == s


@st.composite
def formulas(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    depth = draw(st.integers(0, 6))
    return random_formula(random.Random(seed), depth)


RT_LANG = Language([relation("R", 1, 2.0), relation("S", 2, 1.0), constant("c")])


@given(formulas())
@settings(max_examples=300, deadline=None)
def test_round_trip_property(f):
    assert parse_formula(render_formula(f), RT_LANG) == f


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_real_round_trip(v):
    assert parse_formula(render_formula(Real(v)), RT_LANG) == Real(v)


# --------------------------------------------------------------------------
# free variables


def test_free_vars_example():
    f = parse_formula("int[y](R_f(x)+R_g(y)) + |2*R_h(z)|", LANG)
    assert free_vars(f) == ["x", "z"]


def test_free_vars_trivial():
    assert free_vars(Real(3.0)) == []
    assert free_vars(Rel("e", (x, x))) == ["x"]


def test_is_closed_examples():
    assert is_closed(parse_formula("int[x](1)", LANG))
    assert not is_closed(parse_formula("R_f(x)", LANG))
    f = parse_formula("int[x](R_f(x)*R_f(c_a))", LANG)
    assert is_closed(f) and naive_free(f) == set()


@given(formulas())
@settings(max_examples=200, deadline=None)
def test_free_vars_match_oracle(f):
    assert set(free_vars(f)) == naive_free(f)
    assert len(set(free_vars(f))) == len(free_vars(f))


# --------------------------------------------------------------------------
# lattice operations and bounds


def _structure(values_f, values_g, weights=(0.5, 0.5)):
    space = make_space(["p", "q"], weights)
    return interpret(space, LANG.relations, {"R_f": values_f, "R_g": values_g, "R_h": [0, 0], "S": [[0, 0], [0, 0]], "R": [0, 0]})


def test_derive_lattice_constants():
    M = _structure([0, 0], [0, 0])
    assert eval_formula(M, derive_lattice("max", Real(2.0), Real(3.0))) == 3.0
    assert eval_formula(M, derive_lattice("min", Rf, Rf), {"x": "p"}) == 0.0


def test_derive_lattice_structure():
    assert derive_lattice("max", Rf, Rg) == Mul(Real(0.5), Add(Add(Rf, Rg), Abs(Add(Rf, Mul(Real(-1.0), Rg)))))
    with pytest.raises(ValueError):
        derive_lattice("avg", Rf, Rg)


@given(
    st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    st.lists(st.floats(-2, 2), min_size=2, max_size=2),
)
def test_derive_lattice_is_pointwise_max_min(fv, gv):
    M = _structure(fv, gv)
    for p in ("p", "q"):
        for kind, op in (("max", max), ("min", min)):
            got = eval_formula(M, derive_lattice(kind, Rf, Rg), {"x": p}, exact=True)
            i = M.space.index(p)
            assert got == op(fv[i], gv[i])


def test_formula_bound_examples():
    assert formula_bound(Rf, LANG) == 3.0
    assert formula_bound(Add(Rf, Rg), LANG) == 5.0
    assert formula_bound(Integral(Rel("R_f", (y,)), "y"), LANG) == 3.0


@given(formulas(), st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_formula_bound_sound(f, seed):
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    raw = [rng.random() + 0.1 for _ in range(n)]
    space = make_space(n, [w / sum(raw) for w in raw])
    tables = {
        "R": [rng.uniform(-2, 2) for _ in range(n)],
        "S": [[rng.uniform(-1, 1) for _ in range(n)] for _ in range(n)],
    }
    M = interpret(space, RT_LANG.relations + RT_LANG.constants, tables, {"c": "p0"})
    env = {v: rng.randrange(n) for v in ("x", "y", "z")}
    assert abs(eval_formula(M, f, env)) <= formula_bound(f, RT_LANG) + 1e-9
