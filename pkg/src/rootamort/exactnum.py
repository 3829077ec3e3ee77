"""Exact binary rationals, complex dyadics and outward-rounded enclosures.

A :class:`Dyadic` is ``mantissa * 2**exponent`` held in canonical form
(odd mantissa, or the pair ``(0, 0)``).  Sums, differences, products and
halvings of dyadics are exact, which is all the bisection machinery needs.

:class:`RealEnclosure` is a closed interval with dyadic endpoints.  Every
operation rounds the lower end down and the upper end up to a working
precision given in bits, so the exact result of the pointwise operation is
always contained in the returned enclosure.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from typing import Union

import mpmath
from mpmath.libmp import from_man_exp

from .errors import DomainError, ResourceError

MAX_EXPONENT = 2**31
DEFAULT_PRECISION = int(os.environ.get("ROOTAMORT_PRECISION", "128"))

Number = Union["Dyadic", int, Fraction]


def _odd_part(m: int, e: int) -> tuple[int, int]:
    if m == 0:
        return 0, 0
    tz = (m & -m).bit_length() - 1
    return m >> tz, e + tz


class Dyadic:
    """Exact value ``mantissa * 2**exponent``."""

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        m, e = _odd_part(int(mantissa), int(exponent))
        if abs(e) > MAX_EXPONENT:
            raise ResourceError(f"dyadic exponent {e} out of range")
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    # -- construction -------------------------------------------------
    @classmethod
    def coerce(cls, x: Number | float) -> "Dyadic":
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, int):
            return cls(x, 0)
        if isinstance(x, Fraction):
            return cls.from_fraction(x)
        if isinstance(x, float):
            return cls.from_float(x)
        if isinstance(x, mpmath.mpf):
            return cls.from_mpf(x)
        raise TypeError(f"cannot convert {type(x).__name__} to Dyadic")

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Dyadic":
        den = q.denominator
        if den & (den - 1):
            raise DomainError(f"{q} is not a dyadic rational")
        return cls(q.numerator, -(den.bit_length() - 1))

    @classmethod
    def from_float(cls, x: float) -> "Dyadic":
        if not math.isfinite(x):
            raise DomainError("non-finite float")
        n, d = x.as_integer_ratio()
        return cls(n, -(d.bit_length() - 1))

    @classmethod
    def from_mpf(cls, x) -> "Dyadic":
        # read the raw tuple: mpmath.mpf(x) would round to the ambient precision
        raw = x._mpf_ if isinstance(x, mpmath.mpf) else mpmath.mpf(x)._mpf_
        sign, man, exp, _ = raw
        if man == 0 and exp != 0:
            raise DomainError("non-finite mpf")
        return cls(-int(man) if sign else int(man), int(exp))

    # -- conversion ---------------------------------------------------
    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def to_mpf(self):
        """Exact mpmath value (no rounding to the context precision)."""
        return mpmath.mp.make_mpf(from_man_exp(self.mantissa, self.exponent))

    def __float__(self) -> float:
        return math.ldexp(float(self.mantissa), self.exponent) if self.mantissa.bit_length() < 1000 \
            else float(self.to_fraction())

    def to_json(self) -> dict:
        return {"m": str(self.mantissa), "e": self.exponent}

    @classmethod
    def from_json(cls, obj: dict) -> "Dyadic":
        return cls(int(obj["m"]), int(obj["e"]))

    # -- arithmetic ---------------------------------------------------
    def _align(self, other: "Dyadic") -> tuple[int, int, int]:
        e = min(self.exponent, other.exponent)
        return self.mantissa << (self.exponent - e), other.mantissa << (other.exponent - e), e

    def __add__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        a, b, e = self._align(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        a, b, e = self._align(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        return Dyadic(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.mantissa, self.exponent)

    def __abs__(self):
        return Dyadic(abs(self.mantissa), self.exponent)

    def __pow__(self, k: int):
        if k < 0:
            raise DomainError("negative power of a dyadic")
        return Dyadic(self.mantissa**k, self.exponent * k)

    def half(self) -> "Dyadic":
        return Dyadic(self.mantissa, self.exponent - 1)

    def double(self) -> "Dyadic":
        return Dyadic(self.mantissa, self.exponent + 1)

    def shift(self, k: int) -> "Dyadic":
        """Multiply by ``2**k``."""
        return Dyadic(self.mantissa, self.exponent + k)

    def sign(self) -> int:
        return (self.mantissa > 0) - (self.mantissa < 0)

    def is_zero(self) -> bool:
        return self.mantissa == 0

    # -- comparison ---------------------------------------------------
    def _cmp(self, other) -> int:
        if isinstance(other, Fraction) and other.denominator & (other.denominator - 1):
            q = self.to_fraction()
            return (q > other) - (q < other)
        a, b, _ = self._align(Dyadic.coerce(other))
        return (a > b) - (a < b)

    def __eq__(self, other):
        if not isinstance(other, (Dyadic, int, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash(self.to_fraction())

    def __repr__(self):
        return f"Dyadic({self.mantissa}, {self.exponent})"

    def __str__(self):
        # exact and readable: integers as is, fractions as m/2^k
        if self.exponent >= 0:
            return str(self.mantissa << self.exponent)
        return f"{self.mantissa}/2^{-self.exponent}"


def _maybe(x):
    if isinstance(x, Dyadic):
        return x
    if isinstance(x, int):
        return Dyadic(x)
    return NotImplemented


ZERO = Dyadic(0)
ONE = Dyadic(1)


def dyadic_arith(a: Dyadic, b: Dyadic | None, op: str) -> Dyadic:
    """Functional form of the exact operations: ``add``, ``sub``, ``mul``, ``half``."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "half":
        return a.half()
    raise DomainError(f"unknown dyadic op {op!r}")


class DyadicComplex:
    __slots__ = ("re", "im")

    def __init__(self, re: Number = 0, im: Number = 0):
        object.__setattr__(self, "re", Dyadic.coerce(re))
        object.__setattr__(self, "im", Dyadic.coerce(im))

    def __setattr__(self, name, value):
        raise AttributeError("DyadicComplex is immutable")

    @classmethod
    def coerce(cls, z) -> "DyadicComplex":
        if isinstance(z, DyadicComplex):
            return z
        if isinstance(z, complex):
            return cls(Dyadic.from_float(z.real), Dyadic.from_float(z.imag))
        return cls(z, 0)

    def __add__(self, o):
        o = DyadicComplex.coerce(o)
        return DyadicComplex(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        o = DyadicComplex.coerce(o)
        return DyadicComplex(self.re - o.re, self.im - o.im)

    def __mul__(self, o):
        o = DyadicComplex.coerce(o)
        return DyadicComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __neg__(self):
        return DyadicComplex(-self.re, -self.im)

    def conjugate(self) -> "DyadicComplex":
        return DyadicComplex(self.re, -self.im)

    def abs2(self) -> Dyadic:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im.is_zero()

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __eq__(self, o):
        if not isinstance(o, DyadicComplex):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"DyadicComplex({self.re!r}, {self.im!r})"

    def to_json(self) -> dict:
        return {"re": self.re.to_json(), "im": self.im.to_json()}


# ---------------------------------------------------------------------------
# directed rounding


def round_fraction(q: Fraction | Dyadic | int, prec: int, up: bool) -> Dyadic:
    """Nearest dyadic with at most ``prec`` significant bits, rounded toward +inf if ``up``."""
    if isinstance(q, Dyadic):
        if q.mantissa.bit_length() <= prec:
            return q
        drop = q.mantissa.bit_length() - prec
        m = -((-q.mantissa) >> drop) if up else q.mantissa >> drop
        return Dyadic(m, q.exponent + drop)
    q = Fraction(q)
    n, d = q.numerator, q.denominator
    if n == 0:
        return ZERO
    k = prec - (abs(n).bit_length() - d.bit_length()) + 1
    if k >= 0:
        num, den = n << k, d
    else:
        num, den = n, d << -k
    m = -((-num) // den) if up else num // den
    return Dyadic(m, -k)


def _fr(x) -> Fraction:
    if isinstance(x, Dyadic):
        return x.to_fraction()
    return Fraction(x)


class RealEnclosure:
    """Closed interval ``[lo, hi]`` with dyadic endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Number, hi: Number | None = None):
        lo = Dyadic.coerce(lo)
        hi = lo if hi is None else Dyadic.coerce(hi)
        if hi < lo:
            raise DomainError(f"empty enclosure [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("RealEnclosure is immutable")

    @classmethod
    def around(cls, q, prec: int = DEFAULT_PRECISION) -> "RealEnclosure":
        """Tightest enclosure of an exact rational at ``prec`` bits."""
        if isinstance(q, RealEnclosure):
            return q
        if isinstance(q, (Dyadic, int)):
            return cls(q)
        return cls(round_fraction(q, prec, False), round_fraction(q, prec, True))

    @classmethod
    def from_floats(cls, lo: float, hi: float) -> "RealEnclosure":
        return cls(Dyadic.from_float(lo), Dyadic.from_float(hi))

    @classmethod
    def from_mpi(cls, x) -> "RealEnclosure":
        return cls(Dyadic.from_mpf(x.a), Dyadic.from_mpf(x.b))

    def to_mpi(self):
        return mpmath.iv.mpf([self.lo.to_mpf(), self.hi.to_mpf()])

    # -- queries ------------------------------------------------------
    def width(self) -> Dyadic:
        return self.hi - self.lo

    def mid(self) -> Dyadic:
        return (self.lo + self.hi).half()

    def contains(self, x) -> bool:
        if isinstance(x, RealEnclosure):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo.sign() <= 0 <= self.hi.sign()

    def certainly_lt(self, other) -> bool:
        return self.hi < RealEnclosure.around(other).lo

    def certainly_gt(self, other) -> bool:
        return self.lo > RealEnclosure.around(other).hi

    def __float__(self):
        return float(self.mid())

    # -- arithmetic ---------------------------------------------------
    def _pack(self, lo, hi, prec: int) -> "RealEnclosure":
        return RealEnclosure(round_fraction(lo, prec, False), round_fraction(hi, prec, True))

    def add(self, other, prec: int = DEFAULT_PRECISION) -> "RealEnclosure":
        o = RealEnclosure.around(other, prec)
        return self._pack(self.lo + o.lo, self.hi + o.hi, prec)

    def sub(self, other, prec: int = DEFAULT_PRECISION) -> "RealEnclosure":
        o = RealEnclosure.around(other, prec)
        return self._pack(self.lo - o.hi, self.hi - o.lo, prec)

    def mul(self, other, prec: int = DEFAULT_PRECISION) -> "RealEnclosure":
        o = RealEnclosure.around(other, prec)
        prods = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi]
        return self._pack(min(prods), max(prods), prec)

    def div(self, other, prec: int = DEFAULT_PRECISION) -> "RealEnclosure":
        o = RealEnclosure.around(other, prec)
        if o.contains_zero():
            raise DomainError("division by an enclosure containing 0")
        a = [self.lo.to_fraction(), self.hi.to_fraction()]
        b = [o.lo.to_fraction(), o.hi.to_fraction()]
        qs = [x / y for x in a for y in b]
        return self._pack(min(qs), max(qs), prec)

    def neg(self) -> "RealEnclosure":
        return RealEnclosure(-self.hi, -self.lo)

    def abs(self) -> "RealEnclosure":
        if self.lo.sign() >= 0:
            return self
        if self.hi.sign() <= 0:
            return self.neg()
        return RealEnclosure(ZERO, max(-self.lo, self.hi))

    def sqrt(self, prec: int = DEFAULT_PRECISION) -> "RealEnclosure":
        if self.hi.sign() < 0:
            raise DomainError("sqrt of a negative enclosure")
        lo = sqrt_bound(max(self.lo, ZERO), prec, up=False)
        hi = sqrt_bound(self.hi, prec, up=True)
        return RealEnclosure(lo, hi)

    def hull(self, other: "RealEnclosure") -> "RealEnclosure":
        return RealEnclosure(min(self.lo, other.lo), max(self.hi, other.hi))

    def __add__(self, o):
        return self.add(o)

    __radd__ = __add__

    def __sub__(self, o):
        return self.sub(o)

    def __rsub__(self, o):
        return RealEnclosure.around(o).sub(self)

    def __mul__(self, o):
        return self.mul(o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self.div(o)

    def __rtruediv__(self, o):
        return RealEnclosure.around(o).div(self)

    def __neg__(self):
        return self.neg()

    def __eq__(self, o):
        if not isinstance(o, RealEnclosure):
            return NotImplemented
        return self.lo == o.lo and self.hi == o.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"RealEnclosure([{float(self.lo):.17g}, {float(self.hi):.17g}])"

    def to_json(self) -> dict:
        return {"lo": self.lo.to_json(), "hi": self.hi.to_json()}


def enclosure_arith(a: RealEnclosure, b: RealEnclosure, op: str,
                    prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    """Functional form: ``op`` in ``add``, ``sub``, ``mul``, ``div``."""
    if op not in ("add", "sub", "mul", "div"):
        raise DomainError(f"unknown enclosure op {op!r}")
    return getattr(a, op)(b, prec)


def sqrt_bound(x: Dyadic | Fraction, prec: int, up: bool) -> Dyadic:
    """Directed-rounded square root of a nonnegative rational."""
    q = _fr(x)
    if q < 0:
        raise DomainError("sqrt of a negative number")
    if q == 0:
        return ZERO
    # scale by 4**k so the integer square root carries ~prec bits
    k = max(0, prec - (q.numerator.bit_length() - q.denominator.bit_length()) // 2 + 2)
    n = (q.numerator << (2 * k)) // q.denominator
    r = math.isqrt(n)
    if up:
        exact = r * r * q.denominator == q.numerator << (2 * k)
        if not exact:
            r += 1
    return round_fraction(Dyadic(r, -k), prec, up)


# ---------------------------------------------------------------------------
# transcendental enclosures (mpmath interval context)


def _iv(prec: int):
    ctx = mpmath.iv
    ctx.prec = prec + 8
    return ctx


def enclose_ln(x: RealEnclosure | Number, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    x = RealEnclosure.around(x, prec)
    if x.lo.sign() <= 0:
        raise DomainError("log of a nonpositive enclosure")
    iv = _iv(prec)
    return RealEnclosure.from_mpi(iv.log(x.to_mpi()))


def enclose_asinh(x: RealEnclosure | Number, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    # asinh is odd and increasing; ln(t + sqrt(t^2 + 1)) is only well
    # conditioned for t >= 0, so each endpoint is handled by symmetry
    x = RealEnclosure.around(x, prec)
    iv = _iv(prec)

    def at(t: Dyadic) -> RealEnclosure:
        v = iv.mpf(abs(t).to_mpf())
        r = RealEnclosure.from_mpi(iv.log(v + iv.sqrt(v * v + 1)))
        return r if t.sign() >= 0 else r.neg()

    return RealEnclosure(at(x.lo).lo, at(x.hi).hi)


def enclose_pi(prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    iv = _iv(prec)
    return RealEnclosure.from_mpi(iv.pi)


def enclose_sqrt(x: RealEnclosure | Number, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    return RealEnclosure.around(x, prec).sqrt(prec)


def enclose_pow(x: RealEnclosure, k: int, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    if k < 0:
        return RealEnclosure(ONE).div(enclose_pow(x, -k, prec), prec)
    out = RealEnclosure(ONE)
    for _ in range(k):
        out = out.mul(x, prec)
    return out
