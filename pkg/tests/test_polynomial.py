import random
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from rootamort.errors import DomainError
from rootamort.exactnum import Dyadic, DyadicComplex
from rootamort.polynomial import (
    IntPolynomial,
    count_roots_interval,
    derivative,
    discriminant,
    eval_at_dyadic,
    eval_complex_enclosure,
    mobius_coeffs,
    mobius_variation,
    norms_and_bounds,
    sign_variations,
    square_free_check,
    sturm_chain,
    sylvester_resultant,
    taylor_shift,
)
from rootamort.roots_oracle import approximate_roots, count_real_in_halfopen, count_real_in_open

P = IntPolynomial


def test_eval_examples():
    p = P([-2, 0, 1])
    assert eval_at_dyadic(p, Dyadic(1)) == Dyadic(-1)
    assert eval_at_dyadic(p, Dyadic(0)) == Dyadic(-2)
    assert eval_at_dyadic(P([1, -3, 0, 2]), Dyadic(1, -1)) == Dyadic(-1, -2)


def test_eval_complex_enclosure():
    re, im = eval_complex_enclosure(P([1, 0, 1]), DyadicComplex(0, 1), 64)
    assert re.contains(0) and im.contains(0)
    re, im = eval_complex_enclosure(P([0, 1]), DyadicComplex(3, 4), 64)
    assert re.contains(3) and im.contains(4)
    re, _ = eval_complex_enclosure(P([-2, 0, 1]), DyadicComplex(Dyadic(3, -1), 0), 64)
    assert re.contains(Dyadic(1, -2))
    with pytest.raises(DomainError):
        eval_complex_enclosure(P([1]), DyadicComplex(0, 0), 8)


def test_derivative_examples():
    assert derivative(P([-2, 0, 1])) == P([0, 2])
    assert derivative(P([5])).is_zero()
    assert derivative(P([1, -3, 0, 2])) == P([-3, 0, 6])


def test_taylor_shift_examples():
    assert taylor_shift(P([0, 0, 1]), Dyadic(1)).to_int() == P([1, 2, 1])
    assert taylor_shift(P([0, 1]), Dyadic(3)).to_int() == P([3, 1])
    assert taylor_shift(P([1, -3, 2]), Dyadic(1)).to_int() == P([0, 1, 2])


def test_mobius_examples():
    assert mobius_variation(P([-2, 0, 1]), Dyadic(0), Dyadic(2)) == 1
    assert mobius_variation(P([1, 0, 1]), Dyadic(0), Dyadic(1)) == 0
    assert mobius_variation(P([-5, 1]), Dyadic(0), Dyadic(1)) == 0


def test_mobius_transform_is_a_positive_multiple():
    # (x+1)^2 p((a x + b)/(x+1)) for x^2 - 2, a = 0, b = 2 is 2 - 4x - 2x^2
    c = mobius_coeffs(P([-2, 0, 1]), Dyadic(0), Dyadic(2))
    g = Fraction(c[0], 2)
    assert g > 0 and [Fraction(x) / g for x in c] == [2, -4, -2]


def test_mobius_rejects_empty_interval():
    with pytest.raises(DomainError):
        mobius_variation(P([0, 1]), Dyadic(1), Dyadic(1))


def test_sign_variation_examples():
    assert sign_variations([1, -1, 1]) == 2
    assert sign_variations([-1, 0, 1]) == 1
    assert sign_variations([0, 0, 0]) == 0


def _proportional(a: IntPolynomial, b: IntPolynomial) -> bool:
    if a.degree != b.degree:
        return False
    r = Fraction(a.lead, b.lead)
    return r > 0 and all(Fraction(x) == r * y for x, y in zip(a.coeffs, b.coeffs))


def test_sturm_chain_examples():
    ch = sturm_chain(P([-1, 0, 1]))
    assert all(_proportional(a, b) for a, b in zip(ch.polys, [P([-1, 0, 1]), P([0, 2]), P([1])]))
    ch = sturm_chain(P([-2, 0, 1]))
    assert all(_proportional(a, b) for a, b in zip(ch.polys, [P([-2, 0, 1]), P([0, 2]), P([2])]))
    assert len(sturm_chain(P([0, 1]))) == 2
    with pytest.raises(DomainError):
        sturm_chain(P([1, -2, 1]))


def test_count_roots_examples():
    assert count_roots_interval(sturm_chain(P([-1, 0, 1])), Dyadic(-2), Dyadic(2)) == 2
    assert count_roots_interval(sturm_chain(P([-2, 0, 1])), Dyadic(0), Dyadic(2)) == 1
    assert count_roots_interval(sturm_chain(P([1, 0, 1])), Dyadic(-2), Dyadic(2)) == 0
    # half-open on the right: a root at b counts, a root at a does not
    ch = sturm_chain(P([-1, 0, 1]))
    assert count_roots_interval(ch, Dyadic(0), Dyadic(1)) == 1
    assert count_roots_interval(ch, Dyadic(1), Dyadic(2)) == 0


def test_discriminant_examples():
    assert discriminant(P([-2, 0, 1])) == 8
    assert discriminant(P([1, 0, 1])) == -4
    assert discriminant(P([-1, 0, 1])) == 4
    # cubic: -4 p^3 - 27 q^2 for x^3 + p x + q
    assert discriminant(P([1, -1, 0, 1])) == -4 * (-1) ** 3 - 27


def test_norms_examples():
    nb = norms_and_bounds(P([-2, 0, 1]))
    assert (nb.two_norm_sq, nb.height, nb.root_bound) == (5, 2, Dyadic(4))
    nb = norms_and_bounds(P([1, 0, 1]))
    assert (nb.two_norm_sq, nb.height, nb.root_bound) == (2, 1, Dyadic(2))
    nb = norms_and_bounds(P([0, 1]))
    assert (nb.two_norm_sq, nb.height, nb.root_bound) == (1, 1, Dyadic(2))


def test_square_free_examples():
    assert square_free_check(P([-1, 0, 1]))
    assert not square_free_check(P([1, -2, 1]))
    assert square_free_check(P([0, -1, 0, 1]))


def test_bit_height_tracks_coeffs():
    assert P([255]).bit_height == 8
    assert P([256]).bit_height == 9
    assert P([-2, 0, 1]).bit_height == 2


def test_parse_format():
    p = P.parse("-2 0 1")
    assert p == P([-2, 0, 1])
    assert P.parse(" ".join(map(str, p.coeffs))) == p


# ---------------------------------------------------------------------------
# properties

int_polys = st.lists(st.integers(min_value=-255, max_value=255), min_size=2, max_size=9).map(P).filter(
    lambda p: p.degree >= 1)
dyadic_points = st.builds(lambda m, e: Dyadic(m, e), st.integers(-2**12, 2**12), st.integers(-8, 0))


@settings(max_examples=60, deadline=None)
@given(int_polys, dyadic_points)
def test_taylor_shift_roundtrip(p, c):
    q = taylor_shift(p, c)
    back = taylor_shift(q, -c)
    assert back.to_int() == p


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=-20, max_value=20), min_size=2, max_size=7),
       st.lists(st.integers(min_value=-5, max_value=5), min_size=2, max_size=3), st.booleans())
def test_discriminant_zero_iff_not_square_free(c, f, square):
    p = P(c)
    if square:
        g = P(f)
        assume(g.degree >= 1)
        p = p * g * g if p.degree >= 0 else g * g
    assume(p.degree >= 1)
    assert (discriminant(p) != 0) == square_free_check(p)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(min_value=-30, max_value=30), min_size=2, max_size=7))
def test_subresultant_matches_sylvester(c):
    p = P(c)
    assume(p.degree >= 2)
    d = p.degree
    # disc = (-1)^{d(d-1)/2} res(p, p') / lc
    res = sylvester_resultant(p.coeffs, derivative(p).coeffs)
    assert discriminant(p) == (-1) ** (d * (d - 1) // 2) * res // p.lead


def _random_square_free(rng, dmax=10, L=8):
    while True:
        d = rng.randint(1, dmax)
        c = [rng.randint(-(2**L) + 1, 2**L - 1) for _ in range(d + 1)]
        if c[-1] == 0:
            continue
        p = P(c)
        if square_free_check(p):
            return p


def _random_interval(rng, p):
    R = 2 ** p.bit_height
    a = Dyadic.from_float(rng.uniform(-R, R))
    b = Dyadic.from_float(rng.uniform(-R, R))
    if rng.random() < 0.2:
        a = Dyadic(rng.randint(-R, R))
    if a == b:
        b = a + 1
    return (a, b) if a < b else (b, a)


def test_sturm_matches_certified_roots():
    rng = random.Random(11)
    for _ in range(200):
        p = _random_square_free(rng)
        a, b = _random_interval(rng, p)
        rs = approximate_roots(p)
        assert count_roots_interval(sturm_chain(p), a, b) == count_real_in_halfopen(rs, a, b)


def test_descartes_bounds_root_count():
    rng = random.Random(12)
    for _ in range(200):
        p = _random_square_free(rng)
        a, b = _random_interval(rng, p)
        rs = approximate_roots(p)
        n = count_real_in_open(rs, a, b)
        v = mobius_variation(p, a, b)
        assert v >= n and (v - n) % 2 == 0
