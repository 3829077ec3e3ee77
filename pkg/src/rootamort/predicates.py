"""Terminal predicates for the five bisection algorithms.

Every verdict is exact.  The 1D predicates work on intervals with dyadic
endpoints; the 2D predicates work on half-open squares ``[x0, x1) x (y0, y1]``.
Conditions that involve moduli of complex Taylor coefficients or powers of
``sqrt 2`` are decided by :func:`sign_sqrt_sum`, which never rounds a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError
from .exactnum import Dyadic, DyadicComplex
from .polynomial import (
    IntPolynomial,
    SturmChain,
    count_roots_interval,
    eval_at_dyadic,
    mobius_variation,
    scaled_coeffs,
    shift_gaussian,
    sign_at,
    taylor_shift,
)
from . import roots_oracle

EXCLUDE = "Exclude"
INCLUDE = "Include"
SPLIT = "Split"


@dataclass(frozen=True)
class PredicateVerdict:
    outcome: str
    detail: str = ""

    @property
    def terminal(self) -> bool:
        return self.outcome != SPLIT


def _by_count(n: int, detail: str) -> PredicateVerdict:
    if n == 0:
        return PredicateVerdict(EXCLUDE, detail)
    if n == 1:
        return PredicateVerdict(INCLUDE, detail)
    return PredicateVerdict(SPLIT, detail)


def _ends(J) -> tuple[Dyadic, Dyadic]:
    if hasattr(J, "lo"):
        return J.lo, J.hi
    a, b = J
    return Dyadic.coerce(a), Dyadic.coerce(b)


def _square(S) -> tuple[Dyadic, Dyadic, Dyadic, Dyadic]:
    if hasattr(S, "x0"):
        return S.x0, S.x1, S.y0, S.y1
    return tuple(Dyadic.coerce(v) for v in S)


# ---------------------------------------------------------------------------
# exact sign of sums of square roots


def _is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    if _is_square(n) and _is_square(d):
        return Fraction(math.isqrt(n), math.isqrt(d))
    return None


def sign_sqrt_sum(terms: Sequence[tuple[Fraction, Fraction]], max_bits: int = 1 << 16) -> int:
    """Exact sign of ``sum s * sqrt(q)`` over ``(s, q)`` pairs with rational ``s`` and ``q >= 0``.

    Terms whose radicands differ by a rational square are merged; what is left
    is a combination of square roots with distinct square-free kernels, which
    vanishes only when every coefficient does.  A nonzero sum is then signed by
    interval evaluation at growing precision.
    """
    terms = [(Fraction(s), Fraction(q)) for s, q in terms if s and q]
    if any(q < 0 for _, q in terms):
        raise DomainError("negative radicand")
    if not terms:
        return 0
    quick = _interval_sign(terms, 64)
    if quick:
        return quick
    groups: list[list] = []  # [base_q, coefficient]
    for s, q in terms:
        for g in groups:
            ratio = _rational_sqrt(q / g[0])
            if ratio is not None:
                g[1] += s * ratio
                break
        else:
            groups.append([q, s])
    groups = [(g[1], g[0]) for g in groups if g[1] != 0]
    if not groups:
        return 0
    bits = 128
    while bits <= max_bits:
        got = _interval_sign(groups, bits)
        if got:
            return got
        bits *= 2
    raise AssertionError("nonzero surd sum not resolved")  # unreachable in exact arithmetic


def _interval_sign(terms, bits: int) -> int:
    """Sign of the surd sum if a fixed-point enclosure at ``bits`` decides it, else 0."""
    # s sqrt(q) = sign(s) sqrt(s^2 q); every term is scaled by 2^B and rounded
    # outward with an integer square root
    sq = [(1 if s > 0 else -1, s * s * q) for s, q in terms]
    top = max((t.numerator.bit_length() - t.denominator.bit_length()) // 2 for _, t in sq)
    B = bits - top
    lo = hi = 0
    for sgn, t in sq:
        if B >= 0:
            n, d = t.numerator << (2 * B), t.denominator
        else:
            n, d = t.numerator, t.denominator << (-2 * B)
        r = math.isqrt(n // d)
        exact = r * r * d == n
        r_hi = r if exact else r + 1
        if sgn > 0:
            lo += r
            hi += r_hi
        else:
            lo -= r_hi
            hi -= r
    if lo > 0:
        return 1
    if hi < 0:
        return -1
    return 0


# ---------------------------------------------------------------------------
# 1D predicates


def b_sturm(chain: SturmChain, J, open_interval: bool = False) -> PredicateVerdict:
    """Root count from the Sturm chain on ``(a, b]`` (or ``(a, b)`` if ``open_interval``)."""
    a, b = _ends(J)
    n = count_roots_interval(chain, a, b)
    if open_interval and sign_at(chain.polys[0].coeffs, b) == 0:
        n -= 1
    return _by_count(n, "sturm")


def b_descartes(p: IntPolynomial, J) -> PredicateVerdict:
    a, b = _ends(J)
    return _by_count(mobius_variation(p, a, b), "descartes")


def _taylor_real(p: IntPolynomial, m: Dyadic) -> list[Dyadic]:
    c = list(taylor_shift(p, m).coeffs)
    return c + [Dyadic(0)] * (len(p.coeffs) - len(c))


def b_sqfree_eval(p: IntPolynomial, p_prime: IntPolynomial | None, J) -> PredicateVerdict:
    """Taylor-based exclusion / monotonicity test at the midpoint of ``J``.

    With ``c_j = p^(j)(m) / j!`` the first condition reads
    ``|c_0| > sum_j |c_j| r^j`` and the second
    ``|c_1| > sum_i (i+1) |c_{i+1}| r^i`` where ``r = w / 2``.
    """
    a, b = _ends(J)
    m = (a + b).half()
    r = (b - a).half()
    c = _taylor_real(p, m)
    d = len(c) - 1
    tail = Dyadic(0)
    rk = Dyadic(1)
    for j in range(1, d + 1):
        rk = rk * r
        tail = tail + abs(c[j]) * rk
    if abs(c[0]) > tail:
        return PredicateVerdict(EXCLUDE, "eval:cond1")
    tail = Dyadic(0)
    rk = Dyadic(1)
    for i in range(1, d):
        rk = rk * r
        tail = tail + abs(c[i + 1]) * (i + 1) * rk
    if d >= 1 and abs(c[1]) > tail:
        sa = eval_at_dyadic(p, a).sign()
        sb = eval_at_dyadic(p, b).sign()
        if sa * sb < 0:
            return PredicateVerdict(INCLUDE, "eval:cond2")
        return PredicateVerdict(EXCLUDE, "eval:cond2-nosignchange")
    return PredicateVerdict(SPLIT, "eval:none")


# ---------------------------------------------------------------------------
# 2D predicates


def b_csturm(rs, S) -> PredicateVerdict:
    """Exact root count in the half-open square from certified enclosures."""
    x0, x1, y0, y1 = _square(S)
    return _by_count(roots_oracle.count_in_square(rs, x0, x1, y0, y1), "csturm")


def taylor_complex(p: IntPolynomial, z: DyadicComplex) -> list[DyadicComplex]:
    """Exact Taylor coefficients ``p^(j)(z) / j!`` at a Gaussian dyadic point."""
    # scale so the shift is by a Gaussian integer: with z = M / 2^k,
    # 2^{kd} p(z + t / 2^k) = sum_j c_j 2^{k(d-j)} t^j
    k = max(0, -z.re.exponent, -z.im.exponent)
    mre = z.re.mantissa << (z.re.exponent + k)
    mim = z.im.mantissa << (z.im.exponent + k)
    d = len(p.coeffs) - 1
    q = shift_gaussian(scaled_coeffs(p.coeffs, k), mre, mim)
    return [DyadicComplex(Dyadic(re, -k * (d - j)), Dyadic(im, -k * (d - j))) for j, (re, im) in enumerate(q)]


def _abs_terms(c: DyadicComplex, scale: Fraction, rad: Fraction) -> tuple[Fraction, Fraction]:
    """Term ``scale * |c| * sqrt(rad)`` as a pair ``(scale, |c|^2 * rad)``."""
    return scale, c.abs2().to_fraction() * rad


def ceval_conditions(p: IntPolynomial, S) -> tuple[bool, bool, bool, DyadicComplex]:
    """Evaluate conditions (a), (b), (c) at the center of ``S`` exactly.

    diam = sqrt(2) w, so ``(diam/2)^k = w^k sqrt(2^-k)``,
    ``(2 diam)^k = (2w)^k sqrt(2^k)``, ``(4 diam)^k = (4w)^k sqrt(2^k)``.
    Returns ``(a, b, c, midpoint)``; (b) and (c) are False when ``p'(m) = 0``.
    """
    x0, x1, y0, y1 = _square(S)
    w = (x1 - x0).to_fraction()
    if (y1 - y0).to_fraction() != w:
        raise DomainError("not a square")
    m = DyadicComplex((x0 + x1).half(), (y0 + y1).half())
    c = taylor_complex(p, m)
    d = len(c) - 1
    # (a): |c0| - sum_k |c_k| (diam/2)^k > 0
    terms = [(Fraction(1), c[0].abs2().to_fraction())]
    for k in range(1, d + 1):
        terms.append(_abs_terms(c[k], -(w**k), Fraction(1, 2**k)))
    cond_a = not c[0].abs2().is_zero() and sign_sqrt_sum(terms) > 0
    if d < 1 or c[1].abs2().is_zero():
        return cond_a, False, False, m
    # (b): |c1| / 6 - sum_k (k+1) |c_{k+1}| (2 diam)^k > 0
    terms = [(Fraction(1, 6), c[1].abs2().to_fraction())]
    for k in range(1, d):
        terms.append(_abs_terms(c[k + 1], -(k + 1) * (2 * w) ** k, Fraction(2**k)))
    cond_b = sign_sqrt_sum(terms) > 0
    # (c): |c1| / sqrt 2 - sum_k (k+1) |c_{k+1}| (4 diam)^k > 0
    terms = [(Fraction(1), c[1].abs2().to_fraction() / 2)]
    for k in range(1, d):
        terms.append(_abs_terms(c[k + 1], -(k + 1) * (4 * w) ** k, Fraction(2**k)))
    cond_c = sign_sqrt_sum(terms) > 0
    return cond_a, cond_b, cond_c, m


def b_sqfree_ceval(p: IntPolynomial, p_prime: IntPolynomial | None, S, rs) -> PredicateVerdict:
    """Condition (a) excludes; (b) and (c) together make a candidate resolved by root counting.

    A midpoint that is an exact root of ``p`` only disables (a); a midpoint
    that is a root of ``p'`` leaves (b) and (c) undefined and forces a split.
    """
    cond_a, cond_b, cond_c, m = ceval_conditions(p, S)
    if cond_a:
        return PredicateVerdict(EXCLUDE, "ceval:a")
    if cond_b and cond_c:
        x0, x1, y0, y1 = _square(S)
        n = roots_oracle.count_in_square(rs, x0, x1, y0, y1)
        return _by_count(n, "ceval:bc")
    return PredicateVerdict(SPLIT, "ceval:none")


# ---------------------------------------------------------------------------
# circle oracles (re-exported for symmetry with the predicates)


def one_circle_holds(rs, J) -> bool:
    a, b = _ends(J)
    return roots_oracle.one_circle_holds(rs, a, b)


def two_circle_holds(rs, J) -> bool:
    a, b = _ends(J)
    return roots_oracle.two_circle_holds(rs, a, b)
