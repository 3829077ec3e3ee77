import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from rootamort.exactnum import Dyadic
from rootamort.polynomial import IntPolynomial, derivative, mobius_variation, sturm_chain, square_free_check
from rootamort.predicates import (
    EXCLUDE,
    INCLUDE,
    SPLIT,
    b_csturm,
    b_descartes,
    b_sqfree_ceval,
    b_sqfree_eval,
    b_sturm,
    ceval_conditions,
    one_circle_holds,
    sign_sqrt_sum,
    two_circle_holds,
)
from rootamort.roots_oracle import approximate_roots, count_in_square, count_real_in_open
from rootamort.subdivide import Interval1D, Square2D

P = IntPolynomial
D = Dyadic


def test_sturm_examples():
    assert b_sturm(sturm_chain(P([-2, 0, 1])), (0, 2)).outcome == INCLUDE
    assert b_sturm(sturm_chain(P([-1, 0, 1])), (-2, 2)).outcome == SPLIT
    assert b_sturm(sturm_chain(P([1, 0, 1])), (0, 1)).outcome == EXCLUDE


def test_sturm_open_mode_drops_right_endpoint_root():
    ch = sturm_chain(P([-1, 0, 1]))
    assert b_sturm(ch, (0, 1)).outcome == INCLUDE
    assert b_sturm(ch, (0, 1), open_interval=True).outcome == EXCLUDE


def test_descartes_examples():
    assert b_descartes(P([-2, 0, 1]), (0, 2)).outcome == INCLUDE
    assert b_descartes(P([1, 0, 1]), (0, 1)).outcome == EXCLUDE
    assert b_descartes(P([-1, 0, 1]), (-2, 2)).outcome == SPLIT


def test_eval_examples():
    p = P([0, 1])
    dp = derivative(p)
    v = b_sqfree_eval(p, dp, (1, 2))
    assert v.outcome == EXCLUDE and v.detail == "eval:cond1"
    v = b_sqfree_eval(p, dp, (-1, 1))
    assert v.outcome == INCLUDE and v.detail == "eval:cond2"
    p = P([-1, 0, 1])
    assert b_sqfree_eval(p, derivative(p), (-2, 2)).outcome == SPLIT


def test_eval_monotone_without_sign_change_excludes():
    # x on [1/2, 1]: cond 1 already fires; x^2 - 9 on [1, 2] is monotone with no root
    p = P([-9, 0, 1])
    v = b_sqfree_eval(p, derivative(p), (1, 2))
    assert v.outcome == EXCLUDE


def test_csturm_examples():
    rs = approximate_roots(P([1, 0, 1]))
    assert b_csturm(rs, (-2, 2, -2, 2)).outcome == SPLIT
    assert b_csturm(approximate_roots(P([0, 1])), (-2, 2, -2, 2)).outcome == INCLUDE
    assert b_csturm(approximate_roots(P([-5, 1])), (-2, 2, -2, 2)).outcome == EXCLUDE


def test_ceval_examples():
    p = P([0, 1])
    rs = approximate_roots(p)
    # unit square centred at 4
    v = b_sqfree_ceval(p, derivative(p), Square2D(D(7, -1), D(9, -1), D(-1, -1), D(1, -1)), rs)
    assert v.outcome == EXCLUDE
    a, b, c, _ = ceval_conditions(p, Square2D(0, D(1, -1), D(-1, -2), D(1, -2)))
    assert (a, b, c) == (False, True, True)
    v = b_sqfree_ceval(p, derivative(p), Square2D(0, D(1, -1), D(-1, -2), D(1, -2)), rs)
    assert v.outcome == INCLUDE
    q = P([-1, 0, 1])
    v = b_sqfree_ceval(q, derivative(q), Square2D(-2, 2, -2, 2), approximate_roots(q))
    assert v.outcome == SPLIT


def test_ceval_condition_a_threshold_is_exact():
    # p = x at center 4 with w = 2: sum = |1| * w / sqrt 2 = sqrt 2 < 4
    a, _, _, m = ceval_conditions(P([0, 1]), Square2D(3, 5, -1, 1))
    assert a and m.re == D(4)
    # centre 1 with w = 2: sqrt 2 > 1, so the condition fails
    a, _, _, _ = ceval_conditions(P([0, 1]), Square2D(0, 2, -1, 1))
    assert not a


def test_circle_examples():
    assert one_circle_holds(approximate_roots(P([1, 0, 1])), (D(-1, -1), D(1, -1)))
    assert two_circle_holds(approximate_roots(P([-2, 0, 1])), (D.from_float(1.3), D.from_float(1.5)))
    assert not one_circle_holds(approximate_roots(P([-1, 0, 1])), (-2, 2))


def test_interval_and_tuple_regions_agree():
    p = P([-2, 0, 1])
    assert b_descartes(p, Interval1D(0, 2)).outcome == b_descartes(p, (0, 2)).outcome


def test_sign_sqrt_sum_exact_zero():
    assert sign_sqrt_sum([(1, 8), (-2, 2)]) == 0
    # sqrt 2 + sqrt 3 = 3.14626... sits just below sqrt 9.9 = 3.14643...
    assert sign_sqrt_sum([(1, 2), (1, 3), (-1, Fraction(99, 10))]) == -1
    assert sign_sqrt_sum([(1, 2), (1, 3), (-1, Fraction(98, 10))]) == 1
    assert sign_sqrt_sum([(3, 2), (-1, 18)]) == 0
    assert sign_sqrt_sum([]) == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(0, 50)), max_size=6))
def test_sign_sqrt_sum_matches_high_precision(terms):
    import mpmath
    mpmath.mp.dps = 80
    try:
        v = sum(s * mpmath.sqrt(q) for s, q in terms)
        got = sign_sqrt_sum(terms)
        if abs(v) > mpmath.mpf(10) ** -60:
            assert got == (1 if v > 0 else -1)
        else:
            assert got == 0
    finally:
        mpmath.mp.dps = 15


# ---------------------------------------------------------------------------
# properties against the root oracle


def _random_square_free(rng, dmax=8, L=6):
    while True:
        d = rng.randint(1, dmax)
        c = [rng.randint(-(2**L) + 1, 2**L - 1) for _ in range(d + 1)]
        if c[-1] and square_free_check(P(c)):
            return P(c)


def _random_interval(rng, L):
    R = 2**L
    k = rng.randint(0, 10)
    w = D(1, L + 1 - k)
    lo = D(rng.randint(-(2**k), 2**k - 1)) * w.half() if k else D(-R)
    lo = max(D(-R), min(lo, D(R) - w))
    return lo, lo + w


def test_1d_predicates_sound():
    rng = random.Random(21)
    for _ in range(300):
        p = _random_square_free(rng)
        rs = approximate_roots(p)
        a, b = _random_interval(rng, p.bit_height)
        n_open = count_real_in_open(rs, a, b)
        # open mode: a root exactly at b is not in (a, b)
        v = b_sturm(sturm_chain(p), (a, b), open_interval=True)
        assert v.outcome == (EXCLUDE if n_open == 0 else INCLUDE if n_open == 1 else SPLIT)
        v = b_descartes(p, (a, b))
        if v.terminal:
            assert n_open == {EXCLUDE: 0, INCLUDE: 1}[v.outcome]
        if p.degree >= 2 and square_free_check(derivative(p)):
            v = b_sqfree_eval(p, derivative(p), (a, b))
            if v.terminal:
                assert n_open == {EXCLUDE: 0, INCLUDE: 1}[v.outcome]


def test_2d_predicates_sound():
    rng = random.Random(22)
    for _ in range(300):
        p = _random_square_free(rng, dmax=6, L=4)
        rs = approximate_roots(p)
        L = p.bit_height
        a, b = _random_interval(rng, L)
        c, _ = _random_interval(rng, L)
        S = Square2D(a, b, c, c + (b - a))
        n = count_in_square(rs, a, b, c, c + (b - a))
        v = b_csturm(rs, S)
        assert v.outcome == (EXCLUDE if n == 0 else INCLUDE if n == 1 else SPLIT)
        if p.degree >= 2 and square_free_check(derivative(p)):
            v = b_sqfree_ceval(p, derivative(p), S, rs)
            if v.terminal:
                assert n == {EXCLUDE: 0, INCLUDE: 1}[v.outcome]


def test_circle_theorems_imply_variation_bounds():
    rng = random.Random(23)
    hits1 = hits2 = 0
    for _ in range(300):
        p = _random_square_free(rng)
        rs = approximate_roots(p)
        a, b = _random_interval(rng, p.bit_height)
        if one_circle_holds(rs, (a, b)):
            hits1 += 1
            assert mobius_variation(p, a, b) == 0
        elif two_circle_holds(rs, (a, b)):
            hits2 += 1
            assert mobius_variation(p, a, b) <= 1
    assert hits1 > 20 and hits2 > 5


def test_sturm_count_vs_descartes_variation():
    rng = random.Random(24)
    for _ in range(300):
        p = _random_square_free(rng)
        a, b = _random_interval(rng, p.bit_height)
        ch = sturm_chain(p)
        n = ch.variations(a) - ch.variations(b)
        if IntPolynomial(p.coeffs)(b) == 0:
            n -= 1  # Descartes counts the open interval
        v = mobius_variation(p, a, b)
        assert v >= n and (v - n) % 2 == 0
