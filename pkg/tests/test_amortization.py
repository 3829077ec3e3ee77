import math
import random

import mpmath
import numpy as np
import pytest

from rootamort.errors import DomainError
from rootamort.exactnum import Dyadic, DyadicComplex
from rootamort.polynomial import IntPolynomial, derivative, square_free_check
from rootamort.amortization import (
    bit_integral,
    ca_integral,
    ca_integral_1d,
    ca_integral_2d,
    check_ca_soundness,
    csturm_annulus_bound,
    eval_stopping,
    leaf_cost_sum,
    log_cost,
    mahler_davenport,
    make_stopping,
    sigma,
    sigma2,
    sqfree_ceval_annulus_bound,
    sturm_closed_form_bound,
)
from rootamort.roots_oracle import approximate_roots, build_graph
from rootamort.subdivide import Interval1D, Square2D, isolate, make_predicate

P = IntPolynomial
D = Dyadic
LN4R2 = math.log(4 * math.sqrt(2))


def _in(enc, value, rel=1e-9):
    return float(enc.lo) <= value * (1 + rel) and value * (1 - rel) <= float(enc.hi)


def test_sigma_examples():
    rs = approximate_roots(P([1, 0, 1]))
    assert sigma(rs, 0).contains(2) and sigma2(rs, 0).contains(2)
    assert sigma(approximate_roots(P([0, 1])), 2).contains(D(1, -1))
    assert sigma(approximate_roots(P([0, -3, 1])), 1).contains(D(3, -1))


def test_eval_stopping_examples():
    F = make_stopping(P([0, -1, 1]), "sturm", L=1)
    assert _in(eval_stopping(F, D.from_float(0.1)), 0.9)
    F = make_stopping(P([1, 0, 1]), "csturm")
    assert eval_stopping(F, 0).contains(D(1, -1))
    F = make_stopping(P([-1, 0, 1]), "descartes")
    assert _in(eval_stopping(F, 1), 2 / math.sqrt(3))
    F = make_stopping(P([-2, 0, 1]), "eval")
    x = D.from_float(math.sqrt(2))
    assert _in(eval_stopping(F, x), (2 / 3) * math.sqrt(2), rel=1e-12)


def test_degenerate_stopping_is_infinite():
    assert eval_stopping(make_stopping(P([0, 1]), "csturm"), 3) is None
    assert eval_stopping(make_stopping(P([1, 0, 1]), "sturm"), 0) is None


def test_unknown_stopping_id():
    with pytest.raises(DomainError):
        make_stopping(P([0, 1]), "bisect")


# ---------------------------------------------------------------------------
# integrals


def test_sturm_integral_4ln3():
    F = make_stopping(P([-1, 0, 1]), "sturm", L=1)
    v = ca_integral_1d(F, (-2, 2), tol=1e-8)
    assert _in(v, 4 * math.log(3), rel=1e-7)
    assert _in(sturm_closed_form_bound(F.rs, 1), 4 * math.log(3))


def test_descartes_integral_asinh():
    F = make_stopping(P([1, 0, 1]), "descartes", L=1)
    v = ca_integral_1d(F, (-2, 2), tol=1e-8)
    assert _in(v, 4 * math.asinh(2), rel=1e-7)


def test_sturm_closed_form_examples():
    rs = approximate_roots(P([0, -1, 1]))
    cf = sturm_closed_form_bound(rs, 1)
    want = 2 * math.log(3) + 2 * math.log(2) + 2 * math.log(4)
    assert _in(cf, want) and abs(want - 6.356) < 1e-3
    rs = approximate_roots(P([0, -1, 0, 1]))
    F = make_stopping(P([0, -1, 0, 1]), "sturm", L=1, rs=rs)
    q = ca_integral_1d(F, (-2, 2), tol=1e-8)
    cf = sturm_closed_form_bound(rs, 1)
    assert abs(float(cf.hi) - float(q.hi)) <= 1e-6 * float(cf.hi)
    with pytest.raises(DomainError):
        sturm_closed_form_bound(approximate_roots(P([0, 1])), 1)


def test_csturm_annulus_examples():
    rs = approximate_roots(P([1, 0, 1]))
    b = csturm_annulus_bound(rs, 1)
    assert _in(b, 32 * math.pi * LN4R2) and abs(float(b.hi) - 174.2) < 0.1
    # roots 0 and 2^-10: each term is 16 pi (ln 4 sqrt2 + 11 ln 2)
    rs = approximate_roots(P([0, -1, 1024]))
    b = csturm_annulus_bound(rs, 1)
    assert _in(b, 2 * 16 * math.pi * (LN4R2 + 11 * math.log(2)))


def test_csturm_annulus_decreases_with_separation():
    vals = [float(csturm_annulus_bound(approximate_roots(P([-(k * k), 0, 1])), 4).hi) for k in (1, 2, 3, 4)]
    assert vals == sorted(vals, reverse=True)


def test_csturm_annulus_dominates_quadrature():
    rs = approximate_roots(P([1, 0, 1]))
    F = make_stopping(P([1, 0, 1]), "csturm", L=1, rs=rs)
    q = ca_integral_2d(F)
    assert float(q.hi) <= float(csturm_annulus_bound(rs, 1).lo)


def test_ceval_annulus_x2_minus_2():
    p = P([-2, 0, 1])
    b = sqfree_ceval_annulus_bound(approximate_roots(p), approximate_roots(derivative(p)), 1)
    term = LN4R2 - math.log(math.sqrt(2) / 2)
    assert _in(b, 2 * 72 * math.pi * term + 14112 * math.pi * term)


def test_ceval_annulus_linear_is_empty():
    assert sqfree_ceval_annulus_bound(approximate_roots(P([0, 1])), None, 1).contains(0)


def test_2d_degenerate_integral_is_zero():
    F = make_stopping(P([0, 1]), "csturm", L=1)
    assert ca_integral_2d(F).contains(0)


# ---------------------------------------------------------------------------
# Mahler-Davenport


def test_md_anchors():
    p = P([-2, 0, 1])
    r = mahler_davenport(p, approximate_roots(p), [(0, 1)])
    assert _in(r.lhs_product, 2 * math.sqrt(2))
    assert _in(r.rhs_bound, math.sqrt(8) / 2 / (2 / math.sqrt(3)) / 2)
    assert r.holds
    p = P([1, 0, 1])
    r = mahler_davenport(p, approximate_roots(p), [(0, 1)])
    assert _in(r.lhs_product, 2) and _in(r.rhs_bound, math.sqrt(3) / 2) and r.holds


def test_md_empty_edge_set():
    p = P([-2, 0, 1])
    r = mahler_davenport(p, approximate_roots(p), [])
    assert r.lhs_product.contains(1) and r.holds


def test_md_rejects_self_loop():
    p = P([-2, 0, 1])
    with pytest.raises(DomainError):
        mahler_davenport(p, approximate_roots(p), [(0, 0)])


# ---------------------------------------------------------------------------
# bit integrals


def test_bit_integral_g1_is_ca_integral():
    F = make_stopping(P([-1, 0, 1]), "sturm", L=1)
    a = bit_integral(F, None, (-2, 2), tol=1e-6)
    b = ca_integral(F, (-2, 2), tol=1e-6)
    assert (a.lo, a.hi) == (b.lo, b.hi)


def test_bit_integral_log_cost_covers_leaves():
    p = P([-1, 0, 1])
    F = make_stopping(p, "sturm", L=1)
    g = log_cost(4.0)
    tree = isolate(p, "sturm", L=1)
    assert tree.leaf_count == 2
    assert leaf_cost_sum(tree, g) == pytest.approx(6.0)
    assert float(bit_integral(F, g, (-2, 2)).hi) >= 6.0


def test_bit_integral_linearity():
    F = make_stopping(P([-1, 0, 1]), "sturm", L=1)
    five = bit_integral(F, lambda w: 5.0 * np.ones_like(np.asarray(w, dtype=float)), (-2, 2), tol=1e-4)
    base = ca_integral_1d(F, (-2, 2), tol=1e-8)
    assert float(five.lo) <= 5 * float(base.hi) and 5 * float(base.lo) <= float(five.hi)
    assert float(five.hi) == pytest.approx(5 * float(base.hi), rel=2e-4)


def test_bit_integral_rejects_increasing_cost():
    F = make_stopping(P([-1, 0, 1]), "sturm", L=1)
    with pytest.raises(DomainError):
        bit_integral(F, lambda w: 1.0 + np.asarray(w, dtype=float), (-2, 2))


def test_bit_integral_2d_log_cost_covers_leaves():
    p = P([1, 0, 1])
    F = make_stopping(p, "csturm")
    tree = isolate(p, "csturm", rs=F.rs)
    g = log_cost(float(2 ** (F.L + 1)))
    assert leaf_cost_sum(tree, g) <= float(bit_integral(F, g).hi)


# ---------------------------------------------------------------------------
# soundness


def test_soundness_examples():
    r = check_ca_soundness(P([-1, 0, 1]), "sturm", region=Interval1D(-2, 2))
    assert r.measured_leaves == 2 and r.holds
    r = check_ca_soundness(P([1, 0, 1]), "csturm")
    assert r.measured_leaves == 4 and r.holds and float(r.closed_form_bound.hi) == pytest.approx(174.2, abs=0.1)
    for alg in ("sturm", "descartes", "eval", "csturm", "ceval"):
        r = check_ca_soundness(P([-5, 1]), alg)
        assert r.measured_leaves == 1 and r.holds


def _random_sf(rng, dmax, L):
    while True:
        d = rng.randint(2, dmax)
        c = [rng.randint(-(2**L) + 1, 2**L - 1) for _ in range(d + 1)]
        p = P(c)
        if c[-1] and square_free_check(p) and square_free_check(derivative(p)):
            return p


def _sample_point(rng, rs, R, dim):
    if rng.random() < 0.5:
        x = rng.uniform(-R, R)
        y = rng.uniform(-R, R) if dim == 2 else 0.0
    else:
        z = complex(rng.choice(rs.roots))
        eps = 2.0 ** rng.uniform(-20, 0)
        x = z.real + eps * rng.uniform(-1, 1)
        y = (z.imag if dim == 2 else 0.0) + eps * rng.uniform(-1, 1)
    x = min(max(x, -R), R - 1e-9)
    y = min(max(y, -R + 1e-9), R)
    return D.from_float(x), D.from_float(y)


def _region_around(rng, x, y, width_bound, R, dim):
    """A dyadic interval / square containing (x, y) with width < width_bound."""
    k = max(0, math.floor(-math.log2(width_bound)) + 1)
    w = D(1, -k)
    if w.to_fraction() >= width_bound:
        w = w.half()
    # random offset of the cell grid keeps the point away from a fixed position
    lo = D.from_float(float(x) - rng.uniform(0, 1) * float(w))
    lo = max(lo, D(-R)) if lo + w <= D(R) else D(R) - w
    if dim == 1:
        return Interval1D(lo, lo + w)
    c = D.from_float(float(y) - rng.uniform(0, 1) * float(w))
    c = max(c, D(-R)) if c + w <= D(R) else D(R) - w
    return Square2D(lo, lo + w, c, c + w)


@pytest.mark.parametrize("fid", ["sturm", "descartes", "eval", "csturm", "ceval"])
def test_stopping_function_validity(fid):
    rng = random.Random("validity-" + fid)
    dim = 2 if fid in ("csturm", "ceval") else 1
    tried = 0
    while tried < 100:
        p = _random_sf(rng, 5, 3)
        F = make_stopping(p, fid)
        R = 2**F.L
        pred = make_predicate(fid, p, F.rs)
        for _ in range(10):
            x, y = _sample_point(rng, F.rs, R, dim)
            v = eval_stopping(F, DyadicComplex(x, y))
            bound = math.inf if v is None else float(v.lo)
            if dim == 2:
                bound = math.sqrt(bound)  # the 2D value bounds the area
            if not bound > 0:
                continue
            J = _region_around(rng, x, y, min(bound, R), R, dim)
            assert pred(J).terminal, (p.coeffs, fid, J.format(), bound)
            tried += 1


def test_harmonic_derivative_bound():
    rng = random.Random(31)
    mpmath.mp.dps = 50
    try:
        for _ in range(100):
            p = _random_sf(rng, 8, 6)
            rs = approximate_roots(p)
            x = DyadicComplex(D.from_float(rng.uniform(-8, 8)), D.from_float(rng.uniform(-8, 8)))
            s = float(sigma(rs, x).hi)
            z = mpmath.mpc(x.re.to_mpf(), x.im.to_mpf())
            px = mpmath.polyval(list(reversed(p.coeffs)), z)
            q = p
            for k in range(1, p.degree + 1):
                q = derivative(q)
                ratio = abs(mpmath.polyval(list(reversed(q.coeffs)), z) / px)
                assert float(ratio) <= s**k * (1 + 1e-12)
    finally:
        mpmath.mp.dps = 15


def test_cauchy_schwarz_link():
    rng = random.Random(32)
    for _ in range(100):
        p = _random_sf(rng, 8, 6)
        rs = approximate_roots(p)
        x = DyadicComplex(D.from_float(rng.uniform(-8, 8)), D.from_float(rng.uniform(-8, 8)))
        s, s2 = sigma(rs, x), sigma2(rs, x)
        assert s.lo * s.lo <= s2.hi * p.degree


def test_md_on_random_graphs():
    rng = random.Random(33)
    for _ in range(20):
        p = _random_sf(rng, 8, 6)
        rs = approximate_roots(p)
        for kind in ("real_chain", "nearest_neighbor", "conjugate_pairs"):
            r = mahler_davenport(p, rs, build_graph(rs, kind))
            assert r.holds and r.corollary_holds


def test_clustered_roots_closed_form_matches_quadrature():
    # x^12 - 2 (180 x - 1)^2 has two real roots about 1e-16 apart near 1/180
    from rootamort.harness import mignotte
    p = mignotte(12, 180)
    F = make_stopping(p, "sturm")
    q = ca_integral_1d(F, tol=1e-8)
    cf = sturm_closed_form_bound(F.rs, F.L)
    assert abs(float(cf.hi) - float(q.hi)) <= 1e-6 * float(cf.hi)
    assert float(q.lo) <= float(cf.hi) and float(cf.lo) <= float(q.hi)
