import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intlog.lattice import (
    MAX_INDEX,
    ConvergenceError,
    Interval,
    LatticeFn,
    Literal,
    PositiveFunctional,
    check_special_pair,
    find_inessential,
    indicator_seq,
    is_inessential,
    refine_cover,
    stabilization_index,
    star_combine,
    value_seq,
)
from intlog.measure import make_space

from generators import random_inessential_case, random_refine_instance, refinement_failures
from oracles import brute_stabilization, exact_seq, exact_target, preimage_weight

INF = math.inf
F0123 = LatticeFn([0, 1, 2, 3])


def uniform(n):
    return PositiveFunctional.from_weights([1 / n] * n)


# --------------------------------------------------------------------------
# lattice functions and functionals


def test_lattice_fn_operations():
    f, g = LatticeFn([1, -2, 3]), LatticeFn([0, 1, 5])
    assert (f + g) == LatticeFn([1, -1, 8])
    assert (f - g) == LatticeFn([1, -3, -2])
    assert (f * 2) == (2 * f) == LatticeFn([2, -4, 6])
    assert f.join(g) == LatticeFn([1, 1, 5]) and (f | g) == f.join(g)
    assert f.meet(0) == LatticeFn([0, -2, 0]) and (f & g) == f.meet(g)
    assert abs(f) == LatticeFn([1, 2, 3]) and -f == LatticeFn([-1, 2, -3])
    assert f.positive_set() == 0b101 and LatticeFn([0, 1, 0]).zero_set() == 0b101
    assert f.sup == 3 and f.inf == -2
    assert f.preimage(0, 3) == 0b001


def test_lattice_fn_is_immutable():
    f = LatticeFn([1, 2])
    with pytest.raises((AttributeError, ValueError)):
        f.values[0] = 5
    with pytest.raises(AttributeError):
        f.values = np.zeros(2)


def test_lattice_fn_product_not_in_lattice():
    with pytest.raises(TypeError):
        LatticeFn([1]) * LatticeFn([2])


def test_functional_from_weights_is_positive_linear():
    I = PositiveFunctional.from_weights([0.2, 0.3, 0.5])
    f, g = LatticeFn([1, 2, 3]), LatticeFn([0, -1, 4])
    assert I(f * 2 + g) == pytest.approx(2 * I(f) + I(g))
    assert I(abs(g)) >= 0
    assert I.one == pytest.approx(1.0)
    with pytest.raises(ValueError):
        PositiveFunctional.from_weights([0.5, -0.1])


def test_functional_size_checked():
    with pytest.raises(ValueError):
        uniform(3)(LatticeFn([1, 2]))


def test_functional_from_table():
    f, g = LatticeFn([0, 1, 2, 3]), LatticeFn([1, 0, 1, 0])
    one = LatticeFn.const(4, 1.0)
    I = PositiveFunctional.from_table([one, f, g], [1.0, 1.5, 0.5])
    assert I(one) == pytest.approx(1.0) and I(f) == pytest.approx(1.5) and I(g) == pytest.approx(0.5)
    assert all(w >= 0 for w in I.weights)
    with pytest.raises(ValueError):
        # no positive functional has I(1) = 1 and I(f) = 5 with f <= 3
        PositiveFunctional.from_table([one, f], [1.0, 5.0])


# --------------------------------------------------------------------------
# intervals and indicator sequences


def test_interval_validation():
    assert Interval.open(0, 1).is_open and Interval.closed(0, 1).is_closed
    assert Interval.point(2.0).contains(np.array([2.0, 2.5])).tolist() == [True, False]
    assert Interval.closed(0, INF).is_closed
    with pytest.raises(ValueError):
        Interval(1, 0)
    with pytest.raises(ValueError):
        Interval(0, INF, True, True)


def test_tendtochar_example():
    seq = indicator_seq([(F0123, (0.5, INF))], "open")
    assert seq(2) == LatticeFn([0, 1, 1, 1])
    assert stabilization_index(seq) == 2


def test_boundary_value_is_excluded_in_open_mode():
    seq = indicator_seq([(LatticeFn([1.0, 1.0]), (1.0, INF))], "open")
    for n in (1, 10, 1000):
        assert seq(n) == LatticeFn([0, 0])


def test_point_sequence_support():
    f = LatticeFn([0.0, 0.3, 0.5, 0.52, 0.9])
    seq = indicator_seq([(f, Interval.point(0.5))], "closed")
    prev = None
    for n in range(1, 60):
        v = seq.values_at(n)
        outside = np.abs(f.values - 0.5) >= 1 / n
        assert np.all(v[outside] == 0)
        assert v[2] == 1.0
        if prev is not None:
            assert np.all(v <= prev)
        prev = v
    assert seq(stabilization_index(seq)) == LatticeFn([0, 0, 1, 0, 0])


def test_constraint_excluding_range_stabilizes_at_one():
    seq = indicator_seq([(F0123, (10.0, 20.0))], "open")
    assert stabilization_index(seq) == 1


def test_mixed_interval_types_rejected():
    with pytest.raises(ValueError):
        indicator_seq([(F0123, Interval.closed(0, 1))], "open")
    with pytest.raises(ValueError):
        indicator_seq([(F0123, Interval(0, 1, True, False))], "closed")
    with pytest.raises(ValueError):
        indicator_seq([], "open")


def test_stabilization_cap():
    f = LatticeFn([0.0, 1e-5])
    seq = indicator_seq([(f, (0.0, INF))], "open")
    assert stabilization_index(seq) == brute_stabilization([([0.0, 1e-5], (0.0, INF))], "open", "intersection", cap=10**6)
    with pytest.raises(ConvergenceError):
        stabilization_index(seq, cap=1000)
    assert MAX_INDEX == 10**6


def test_union_and_intersection():
    f, g = LatticeFn([0, 1, 2, 3]), LatticeFn([3, 2, 1, 0])
    cons = [(f, (0.5, INF)), (g, (0.5, INF))]
    inter = indicator_seq(cons, "open", "intersection")
    union = indicator_seq(cons, "open", "union")
    assert inter(stabilization_index(inter)) == LatticeFn([0, 1, 1, 0])
    assert union(stabilization_index(union)) == LatticeFn([1, 1, 1, 1])


# exact dyadic arithmetic keeps the float implementation and the rational oracle in lockstep
dyadic_values = st.lists(st.integers(-16, 16).map(lambda k: k / 8), min_size=1, max_size=6)
dyadic_end = st.integers(-40, 40).map(lambda k: k / 16)


@st.composite
def seq_cases(draw):
    mode = draw(st.sampled_from(["open", "closed"]))
    combine = draw(st.sampled_from(["intersection", "union"]))
    size = draw(st.integers(1, 6))
    cons = []
    for _ in range(draw(st.integers(1, 3))):
        f = draw(st.lists(st.integers(-16, 16).map(lambda k: k / 8), min_size=size, max_size=size))
        lo, hi = sorted([draw(dyadic_end), draw(dyadic_end)])
        shape = draw(st.sampled_from(["both", "left", "right", "point"]))
        if shape == "left":
            lo = -INF
        elif shape == "right":
            hi = INF
        elif shape == "point":
            if mode == "open":
                hi = lo + 1 / 16
            else:
                hi = lo
        if mode == "open" and lo == hi:
            hi = lo + 1 / 16
        cons.append((f, (lo, hi)))
    return mode, combine, cons


@given(seq_cases())
@settings(max_examples=300, deadline=None)
def test_sequence_matches_exact_formulas(case):
    mode, combine, cons = case
    seq = indicator_seq([(LatticeFn(f), iv) for f, iv in cons], mode, combine)
    for n in (1, 2, 3, 5, 8, 17):
        assert seq.values_at(n).tolist() == [float(v) for v in exact_seq(cons, mode, combine, n)]
    assert seq.target_flags().astype(int).tolist() == exact_target(cons, mode, combine)
    assert stabilization_index(seq) == brute_stabilization(cons, mode, combine)


@given(seq_cases())
@settings(max_examples=200, deadline=None)
def test_sequence_laws(case):
    mode, combine, cons = case
    seq = indicator_seq([(LatticeFn(f), iv) for f, iv in cons], mode, combine)
    target = np.array(exact_target(cons, mode, combine))
    n_star = stabilization_index(seq)
    prev = None
    for n in range(1, n_star + 3):
        v = seq.values_at(n)
        assert np.all((0 <= v) & (v <= 1))
        if mode == "open":
            assert np.all(v[target == 0] == 0)
            if prev is not None:
                assert np.all(v >= prev)
        else:
            assert np.all(v[target == 1] == 1)
            if prev is not None:
                assert np.all(v <= prev)
        if n >= n_star:
            assert v.tolist() == target.astype(float).tolist()
        prev = v


# --------------------------------------------------------------------------
# value sequences and inessential values


def test_value_seq_examples():
    assert value_seq(LatticeFn([0, 1]), -5.0, 1) == LatticeFn([0, 0])
    for n in (1, 5, 50):
        assert value_seq(LatticeFn([2.0, 2.0]), 2.0, n) == LatticeFn([1, 1])
    assert value_seq(LatticeFn([0, 1]), 0.5, 4) == LatticeFn([0, 0])


def test_is_inessential_examples():
    ok, L = is_inessential(F0123, 0.5, uniform(4))
    assert ok and L == 0
    ok, L = is_inessential(F0123, 1.0, uniform(4))
    assert not ok and L == pytest.approx(0.25)
    zero = PositiveFunctional.from_weights([0.0] * 4)
    assert all(is_inessential(F0123, a, zero)[0] for a in (0.0, 1.0, 2.5))


def test_find_inessential_examples():
    assert find_inessential([F0123], (0.2, 0.8), uniform(4)) == 0.5
    assert find_inessential([F0123], (1.2, 1.9), uniform(4)) == pytest.approx(1.55)
    a = find_inessential([LatticeFn([0.5, 0.0]), LatticeFn([1.0, 0.5])], (0.4, 0.6), uniform(2))
    assert a != 0.5 and 0.4 < a < 0.6
    assert a == 0.45


def test_find_inessential_zero_functional_returns_midpoint():
    zero = PositiveFunctional.from_weights([0.0, 0.0])
    assert find_inessential([LatticeFn([0.5, 0.5])], (0.0, 1.0), zero) == 0.5


def test_find_inessential_value_with_null_weight_is_fine():
    I = PositiveFunctional.from_weights([0.0, 1.0])
    # 0.5 is attained only at a null point, but candidates equal to values are skipped anyway
    a = find_inessential([LatticeFn([0.5, 3.0])], (0.0, 1.0), I)
    assert a != 0.5 and is_inessential(LatticeFn([0.5, 3.0]), a, I)[0]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_find_inessential_sound(seed):
    weights, fs, (r, s) = random_inessential_case(random.Random(seed))
    I = PositiveFunctional.from_weights(weights)
    a = find_inessential([LatticeFn(f) for f in fs], (r, s), I)
    assert r < a < s
    for f in fs:
        assert preimage_weight(f, a, weights) == 0
        assert is_inessential(f, a, I)[0]


# --------------------------------------------------------------------------
# special pairs


def _special_oracle(f, g, weights=None):
    def ok(x):
        return 0 <= f[x] <= 1 and not (g[x] < 0 and f[x] != 0)

    if all(ok(x) for x in range(len(f))):
        return "exact"
    if weights is not None and all(ok(x) for x in range(len(f)) if weights[x] > 0):
        return "almost"
    return "neither"


def test_special_pair_examples():
    g = LatticeFn([-1.0, 0.5, 2.0, 0.0])
    f = LatticeFn((g.values > 0).astype(float))
    assert check_special_pair(f, g) == "exact"
    bad = LatticeFn([1.0, 1.0, 1.0, 0.0])
    assert check_special_pair(bad, g, [0.0, 0.5, 0.5, 0.0]) == "almost"
    assert check_special_pair(bad, g) == "neither"
    for gv in ([1, 2, 3, 4], [-1, -2, 0, 5]):
        assert check_special_pair(LatticeFn.const(4, 0.0), LatticeFn(gv)) == "exact"


def test_special_pair_almost_needs_measure():
    with pytest.raises(ValueError):
        check_special_pair(LatticeFn([0.5]), LatticeFn([1.0]), query="almost")


def test_star_combine_value():
    f, g = LatticeFn([0.5, 0.5, 0.0]), LatticeFn([-1.0, 1.0, -1.0])
    assert star_combine(f, g) == LatticeFn([-0.5, 0.0, 0.0])


grid = st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])


@given(st.lists(st.tuples(grid, grid, st.sampled_from([0.0, 0.25, 1.0])), min_size=1, max_size=6))
@settings(max_examples=300)
def test_special_pair_matches_definition(rows):
    f = [r[0] for r in rows]
    g = [r[1] for r in rows]
    w = [r[2] for r in rows]
    assert check_special_pair(LatticeFn(f), LatticeFn(g)) == _special_oracle(f, g)
    assert check_special_pair(LatticeFn(f), LatticeFn(g), w) == _special_oracle(f, g, w)


# --------------------------------------------------------------------------
# cover refinement


def test_refine_identity():
    space = make_space(4, [0.25] * 4)
    f, g = LatticeFn([1, -1, 2, -3]), LatticeFn([-1, 1, -1, 1])
    out = refine_cover(space, [f, g], [[[Literal(0)]], [[Literal(1)]]], 0.1)
    assert out.identity and out.ok
    assert [m.fn for m in out.members] == [f, g]


def test_refine_shift_type_two_member():
    space = make_space(4, [0.25] * 4)
    g = LatticeFn([0.0, 1.0, -2.0, -0.5])
    out = refine_cover(space, [g], [[[Literal(0, strict=False)]]], 0.1)
    (m,) = out.members
    assert m.kind == "shifted"
    assert out.deltas == (0.25,)
    assert m.fn == g + 0.25
    assert m.mask == 0b0011
    assert out.input_sum == out.output_sum == 0.5
    assert not refinement_failures(space, [0b0011], out, 0.1)


def test_refine_mixed_clauses():
    space = make_space(4, [0.25] * 4)
    f = LatticeFn([0.0, 0.0, 1.0, 2.0])
    g = LatticeFn([1.0, 1.0, 1.0, 1.0])
    cover = [[[Literal(0)], [Literal(1), Literal(0, strict=False, negate=True)]]]
    out = refine_cover(space, [f, g], cover, 0.1)
    assert out.ok
    assert out.input_masks == (0b1111,)
    assert not refinement_failures(space, list(out.input_masks), out, 0.1)


def test_refine_upper_and_bands():
    space = make_space(5, [0.2] * 5)
    f = LatticeFn([0.0, 0.1, 0.5, 1.0, 2.0])
    h = LatticeFn.const(5, 0.0)
    # F = min(f, h + delta) vanishes on the weighted point where f = 0
    out = refine_cover(space, [f, h], [[[Literal(0), Literal(1, strict=False)]]], 0.1)
    assert out.ok
    assert {m.kind for m in out.members} >= {"upper"}
    assert not refinement_failures(space, list(out.input_masks), out, 0.1)


def test_refine_rejects_unrepresentable_mask():
    space = make_space(3)
    f = LatticeFn([1.0, 1.0, -1.0])
    with pytest.raises(ValueError, match="representable"):
        refine_cover(space, [f], [0b001], 0.1)
    with pytest.raises(ValueError):
        refine_cover(space, [f], [0b011], 0.0)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.01]))
@settings(max_examples=150, deadline=None)
def test_refine_cover_conditions(seed, eps):
    rng = random.Random(seed)
    space, fns, cover = random_refine_instance(rng)
    out = refine_cover(space, fns, cover, eps)
    assert out.ok
    assert not refinement_failures(space, list(out.input_masks), out, eps)
