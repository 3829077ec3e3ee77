"""Exact integer polynomials and the classical root-counting machinery.

Coefficients are stored in ascending degree order.  Everything here is exact:
evaluation at dyadic points, Taylor shifts, Moebius-transformed Descartes
counts, Sturm chains built from primitive pseudo-remainders, and the
discriminant via the subresultant remainder sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError
from .exactnum import DEFAULT_PRECISION, Dyadic, DyadicComplex, RealEnclosure, round_fraction


def _strip(coeffs: Iterable) -> tuple:
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


class IntPolynomial:
    """Integer-coefficient univariate polynomial, ascending coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[int]):
        c = _strip(int(x) for x in coeffs)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("IntPolynomial is immutable")

    @classmethod
    def parse(cls, line: str) -> "IntPolynomial":
        """Parse ``"-2 0 1"`` (ascending decimal coefficients) into ``x^2 - 2``."""
        parts = line.replace(",", " ").split()
        if not parts:
            raise DomainError("empty polynomial line")
        return cls(int(t) for t in parts)

    @classmethod
    def from_roots(cls, roots: Sequence[int]) -> "IntPolynomial":
        c = [1]
        for r in roots:
            c = [0] + c
            for i in range(len(c) - 1):
                c[i] -= r * c[i + 1]
        return cls(c)

    def format(self) -> str:
        return " ".join(str(c) for c in self.coeffs) if self.coeffs else "0"

    @property
    def degree(self):
        """Degree, or ``-inf`` for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else -math.inf

    @property
    def bit_height(self) -> int:
        """Minimal ``L`` with every ``|coeff| < 2**L``."""
        return max((abs(c) for c in self.coeffs), default=0).bit_length()

    @property
    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, IntPolynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        return IntPolynomial(_mul(self.coeffs, other.coeffs))

    def __call__(self, x):
        if isinstance(x, Dyadic):
            return eval_at_dyadic(self, x)
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __repr__(self):
        return f"IntPolynomial({list(self.coeffs)})"

    def __str__(self):
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            coef = str(c) if (abs(c) != 1 or i == 0) else ("-" if c < 0 else "")
            terms.append(f"{coef}{'*' if mono and coef not in ('', '-') else ''}{mono}")
        return " + ".join(terms).replace("+ -", "- ") if terms else "0"


@dataclass(frozen=True)
class DyadicPolynomial:
    """Polynomial with exact dyadic coefficients (ascending)."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _strip(Dyadic.coerce(c) for c in self.coeffs))

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else -math.inf

    def __call__(self, x):
        acc = Dyadic(0)
        x = Dyadic.coerce(x)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def to_int(self) -> IntPolynomial:
        if any(c.exponent < 0 for c in self.coeffs):
            raise DomainError("polynomial has non-integer coefficients")
        return IntPolynomial(c.mantissa << c.exponent for c in self.coeffs)


# ---------------------------------------------------------------------------
# low-level coefficient helpers (plain lists of ints / Fractions)


def _mul(a: Sequence, b: Sequence) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _deriv(c: Sequence) -> list:
    return [i * c[i] for i in range(1, len(c))]


def _content(c: Sequence[int]) -> int:
    g = 0
    for x in c:
        g = math.gcd(g, x)
    return g


def _primitive(c: Sequence[int]) -> list:
    g = _content(c)
    return [x // g for x in c] if g > 1 else list(c)


def shift_int(c: Sequence[int], a: int) -> list:
    """Coefficients of ``q(t) = c(t + a)`` for an integer ``a`` (Horner, O(d^2))."""
    out = list(c)
    n = len(out)
    if a == 0:
        return out
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] += a * out[j + 1]
    return out


def shift_gaussian(c: Sequence[int], a: int, b: int) -> list[tuple[int, int]]:
    """Coefficients of ``q(t) = c(t + a + ib)`` as (re, im) integer pairs."""
    re = list(c)
    im = [0] * len(c)
    n = len(c)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            r1, i1 = re[j + 1], im[j + 1]
            re[j] += a * r1 - b * i1
            im[j] += a * i1 + b * r1
    return list(zip(re, im))


def scaled_coeffs(c: Sequence[int], k: int) -> list:
    """Coefficients of ``2**(k d) * c(y / 2**k)``, integral for ``k >= 0``."""
    d = len(c) - 1
    return [x << (k * (d - i)) for i, x in enumerate(c)]


def _split_dyadic(x: Dyadic) -> tuple[int, int]:
    """Write ``x = M / 2**k`` with ``k >= 0``."""
    if x.exponent >= 0:
        return x.mantissa << x.exponent, 0
    return x.mantissa, -x.exponent


def sign_at(c: Sequence[int], x: Dyadic) -> int:
    """Exact sign of the integer polynomial ``c`` at a dyadic point."""
    M, k = _split_dyadic(x)
    acc = 0
    scale = 1
    # evaluate 2^{kd} c(M / 2^k) by Horner with a running power of 2^k
    for coef in reversed(c):
        acc = acc * M + coef * scale
        scale <<= k
    return (acc > 0) - (acc < 0)


# ---------------------------------------------------------------------------
# public operations


def eval_at_dyadic(p: IntPolynomial, x: Dyadic) -> Dyadic:
    M, k = _split_dyadic(Dyadic.coerce(x))
    d = len(p.coeffs) - 1
    if d < 0:
        return Dyadic(0)
    acc = 0
    for i in range(d, -1, -1):
        acc = acc * M + (p.coeffs[i] << (k * (d - i)))
    return Dyadic(acc, -k * d)


def eval_complex_exact(p: IntPolynomial, z: DyadicComplex) -> DyadicComplex:
    acc = DyadicComplex(0, 0)
    for c in reversed(p.coeffs):
        acc = acc * z + DyadicComplex(c, 0)
    return acc


def eval_complex_enclosure(p: IntPolynomial, z: DyadicComplex,
                           precision: int = DEFAULT_PRECISION) -> tuple[RealEnclosure, RealEnclosure]:
    """Rectangular enclosure of ``p(z)``; exact value rounded outward to ``precision`` bits."""
    if precision < 16:
        raise DomainError("precision must be at least 16 bits")
    v = eval_complex_exact(p, DyadicComplex.coerce(z))
    return (RealEnclosure(round_fraction(v.re, precision, False), round_fraction(v.re, precision, True)),
            RealEnclosure(round_fraction(v.im, precision, False), round_fraction(v.im, precision, True)))


def derivative(p: IntPolynomial) -> IntPolynomial:
    return IntPolynomial(_deriv(p.coeffs))


def taylor_shift(p: IntPolynomial | DyadicPolynomial, c: Dyadic) -> DyadicPolynomial:
    """Exact coefficients of ``p(x + c)``."""
    c = Dyadic.coerce(c)
    if isinstance(p, DyadicPolynomial):
        out = list(p.coeffs)
        n = len(out)
        for i in range(n - 1):
            for j in range(n - 2, i - 1, -1):
                out[j] = out[j] + c * out[j + 1]
        return DyadicPolynomial(tuple(out))
    coeffs = p.coeffs
    d = len(coeffs) - 1
    if d < 0:
        return DyadicPolynomial(())
    M, k = _split_dyadic(c)
    q = shift_int(scaled_coeffs(coeffs, k), M)
    return DyadicPolynomial(tuple(Dyadic(q[j], k * (j - d)) for j in range(d + 1)))


def sign_variations(seq: Iterable) -> int:
    """Sign changes in ``seq`` after deleting zeros."""
    count = 0
    last = 0
    for v in seq:
        s = v.sign() if isinstance(v, Dyadic) else ((v > 0) - (v < 0))
        if s == 0:
            continue
        if last and s != last:
            count += 1
        last = s
    return count


def mobius_coeffs(p: IntPolynomial, a: Dyadic, b: Dyadic) -> list[int]:
    """Integer multiple (positive) of the coefficients of ``(x+1)^d p((a x + b)/(x + 1))``."""
    a, b = Dyadic.coerce(a), Dyadic.coerce(b)
    if not a < b:
        raise DomainError("mobius transform needs a < b")
    A, ka = _split_dyadic(a)
    B, kb = _split_dyadic(b)
    k = max(ka, kb)
    A <<= k - ka
    B <<= k - kb
    # P(y) = 2^{kd} p(y / 2^k); r(t) = P(A + (B - A) t) is a positive multiple of p(a + (b-a) t)
    r = shift_int(scaled_coeffs(p.coeffs, k), A)
    w = B - A
    r = [x * w**i for i, x in enumerate(r)]
    # (x+1)^d r(1/(x+1)) = reverse(r) shifted by 1
    return shift_int(r[::-1], 1)


def mobius_variation(p: IntPolynomial, a: Dyadic, b: Dyadic) -> int:
    """Descartes count of ``p`` on the open interval ``(a, b)``."""
    return sign_variations(mobius_coeffs(p, a, b))


def _prem(f: list, g: list) -> list:
    """Pseudo-remainder ``lc(g)^(deg f - deg g + 1) f mod g`` over the integers."""
    r = list(f)
    dg = len(g) - 1
    lc = g[-1]
    delta = len(f) - len(g) + 1
    while r and len(r) - 1 >= dg:
        top = r[-1]
        shift = len(r) - 1 - dg
        r = [lc * x for x in r]
        for i, gc in enumerate(g):
            r[i + shift] -= top * gc
        r = list(_strip(r))
        delta -= 1
    if delta > 0:
        r = [x * lc**delta for x in r]
    return r


@dataclass(frozen=True)
class SturmChain:
    polys: tuple  # tuple[IntPolynomial, ...]

    def variations(self, x: Dyadic) -> int:
        return sign_variations(sign_at(q.coeffs, x) for q in self.polys)

    def __len__(self):
        return len(self.polys)


def sturm_chain(p: IntPolynomial) -> SturmChain:
    """Signed remainder sequence ``p, p', -rem(p_{i-2}, p_{i-1}), ...`` realized over Z."""
    if p.is_zero() or p.degree < 1:
        raise DomainError("sturm chain needs degree >= 1")
    f = _primitive(list(p.coeffs))
    chain = [f, _primitive(_deriv(p.coeffs))]
    while True:
        f, g = chain[-2], chain[-1]
        if len(g) == 1:
            break
        r = _prem(f, g)
        if not r:
            raise DomainError("polynomial is not square-free")
        # prem = lc(g)^(delta+1) * rem, so -rem has the sign of -prem * sign(lc)^(delta+1)
        delta = len(f) - len(g)
        sgn = -1 if (g[-1] < 0 and (delta + 1) % 2 == 1) else 1
        chain.append([-sgn * x for x in _primitive(r)])
    return SturmChain(tuple(IntPolynomial(c) for c in chain))


def count_roots_interval(chain: SturmChain, a: Dyadic, b: Dyadic) -> int:
    """Number of distinct real roots in ``(a, b]``."""
    a, b = Dyadic.coerce(a), Dyadic.coerce(b)
    if not a < b:
        raise DomainError("interval needs a < b")
    return chain.variations(a) - chain.variations(b)


def resultant(f: Sequence[int], g: Sequence[int]) -> int:
    """Resultant via the subresultant remainder sequence (Collins)."""
    A, B = list(_strip(f)), list(_strip(g))
    if not A or not B:
        return 0
    da, db = len(A) - 1, len(B) - 1
    s = 1
    if da < db:
        A, B, da, db = B, A, db, da
        if da % 2 and db % 2:
            s = -1
    if db == 0:
        return s * B[0] ** da
    ca, cb = _content(A), _content(B)
    A = [x // ca for x in A]
    B = [x // cb for x in B]
    t = ca**db * cb**da
    g = Fraction(1)
    h = Fraction(1)
    while True:
        da, db = len(A) - 1, len(B) - 1
        delta = da - db
        if da % 2 and db % 2:
            s = -s
        R = _prem(A, B)
        A = B
        denom = g * h**delta
        B = [Fraction(x) / denom for x in R]
        if any(x.denominator != 1 for x in B):
            raise ArithmeticError("subresultant division not exact")
        B = [int(x) for x in B]
        B = list(_strip(B))
        if not B:
            return 0
        g = Fraction(A[-1])
        h = h ** (1 - delta) * g**delta
        if len(B) == 1:
            dA = len(A) - 1
            h = h ** (1 - dA) * Fraction(B[0]) ** dA
            val = s * t * h
            if val.denominator != 1:
                raise ArithmeticError("non-integral resultant")
            return int(val)


def discriminant(p: IntPolynomial) -> int:
    """``(-1)^(d(d-1)/2) res(p, p') / lc(p)``."""
    d = p.degree
    if p.is_zero() or d < 1:
        raise DomainError("discriminant needs degree >= 1")
    if d == 1:
        return 1
    r = resultant(p.coeffs, _deriv(p.coeffs))
    sign = -1 if (d * (d - 1) // 2) % 2 else 1
    q, rem = divmod(sign * r, p.lead)
    if rem:
        raise ArithmeticError("resultant not divisible by the leading coefficient")
    return q


def sylvester_resultant(f: Sequence[int], g: Sequence[int]) -> int:
    """Determinant of the Sylvester matrix by fraction-free elimination (independent check)."""
    f, g = list(_strip(f)), list(_strip(g))
    m, n = len(f) - 1, len(g) - 1
    size = m + n
    if size == 0:
        return 1
    rows = []
    for i in range(n):
        row = [0] * size
        for j, c in enumerate(reversed(f)):
            row[i + j] = c
        rows.append(row)
    for i in range(m):
        row = [0] * size
        for j, c in enumerate(reversed(g)):
            row[i + j] = c
        rows.append(row)
    # Bareiss
    sign = 1
    prev = 1
    M = rows
    for k in range(size - 1):
        if M[k][k] == 0:
            for r in range(k + 1, size):
                if M[r][k] != 0:
                    M[k], M[r] = M[r], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[-1][-1]


@dataclass(frozen=True)
class NormsAndBounds:
    two_norm_sq: int
    height: int
    bit_height: int
    root_bound: Dyadic


def norms_and_bounds(p: IntPolynomial) -> NormsAndBounds:
    if p.is_zero() or p.degree < 1:
        raise DomainError("norms_and_bounds needs degree >= 1")
    L = p.bit_height
    return NormsAndBounds(
        two_norm_sq=sum(c * c for c in p.coeffs),
        height=max(abs(c) for c in p.coeffs),
        bit_height=L,
        root_bound=Dyadic(1, L),
    )


def int_gcd(f: Sequence[int], g: Sequence[int]) -> list:
    """Primitive gcd of two integer polynomials (primitive PRS)."""
    a, b = _primitive(list(_strip(f))), _primitive(list(_strip(g)))
    if len(a) < len(b):
        a, b = b, a
    while b:
        r = _prem(a, b)
        a, b = b, (_primitive(r) if r else [])
    if a and a[-1] < 0:
        a = [-x for x in a]
    return a


def square_free_check(p: IntPolynomial) -> bool:
    if p.is_zero() or p.degree < 1:
        raise DomainError("square_free_check needs degree >= 1")
    return len(int_gcd(p.coeffs, _deriv(p.coeffs))) == 1


def clear_fractions(c: Sequence[Fraction]) -> list[int]:
    """Positive integer multiple of a rational coefficient list, made primitive."""
    den = 1
    for x in c:
        den = den * Fraction(x).denominator // math.gcd(den, Fraction(x).denominator)
    return _primitive([int(Fraction(x) * den) for x in c])
