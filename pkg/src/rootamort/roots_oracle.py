"""Certified complex root enclosures and root-geometry queries.

Roots are approximated by Aberth-Ehrlich iteration in mpmath and then
certified exactly: with dyadic centers ``z_i`` the Weierstrass corrections
``W_i = p(z_i) / (lc * prod_{j != i}(z_i - z_j))`` are exact rationals, and the
disks ``D(z_i, d |W_i|)`` contain all roots with each connected component
holding as many roots as disks.  Pairwise disjoint disks therefore isolate one
root each.  Precision doubles until that holds and every radius is below the
requested tolerance.

The geometric queries (distances, cells, graphs, half-open square counts,
one/two-circle tests) work on the enclosures and refine the root set on
demand when a comparison cannot be decided at the current radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath

from .errors import DomainError, ResourceError
from .exactnum import DEFAULT_PRECISION, Dyadic, DyadicComplex, RealEnclosure, sqrt_bound
from .polynomial import (
    IntPolynomial,
    _deriv,
    _strip,
    clear_fractions,
    count_roots_interval,
    eval_complex_exact,
    int_gcd,
    square_free_check,
    sturm_chain,
    taylor_shift,
)

MAX_ROOT_PRECISION = 1 << 14
MAX_REFINEMENTS = 6
DEFAULT_EPS = Dyadic(1, -60)


@dataclass(frozen=True)
class CertifiedRoot:
    center: DyadicComplex
    radius: Dyadic
    is_real: bool

    def __complex__(self):
        return complex(self.center)

    def dist_enclosure(self, x: DyadicComplex, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
        """Enclosure of ``|x - root|``."""
        c = (self.center - x).abs2()
        lo = sqrt_bound(c, prec, up=False) - self.radius
        hi = sqrt_bound(c, prec, up=True) + self.radius
        return RealEnclosure(max(lo, Dyadic(0)), hi)


class RootSet:
    """All roots of a square-free polynomial, certified and ordered.

    Real roots come first in ascending order, then conjugate pairs sorted by
    real part with the positive-imaginary member first.
    """

    def __init__(self, poly: IntPolynomial, roots: Sequence[CertifiedRoot], eps: Dyadic):
        self.poly = poly
        self.roots = tuple(roots)
        self.eps = eps
        pairing = {}
        for i, r in enumerate(self.roots):
            if not r.is_real:
                for j, s in enumerate(self.roots):
                    if j != i and s.center == r.center.conjugate():
                        pairing[i] = j
        self.pairing = pairing
        self._refined: RootSet | None = None
        self._separations: tuple | None = None

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def __getitem__(self, i):
        return self.roots[i]

    @property
    def degree(self) -> int:
        return len(self.roots)

    def real_indices(self) -> list[int]:
        return [i for i, r in enumerate(self.roots) if r.is_real]

    def complex_values(self) -> list[complex]:
        return [complex(r) for r in self.roots]

    def max_radius(self) -> Dyadic:
        return max((r.radius for r in self.roots), default=Dyadic(0))

    @property
    def separations(self) -> tuple:
        """Per-root enclosure of the distance to the nearest other root."""
        if self._separations is None:
            self._separations = tuple(separations(self.roots))
        return self._separations

    def refine(self) -> "RootSet":
        """Tighter certified set with the same index order."""
        if self._refined is None:
            eps = min(self.eps, max(self.max_radius(), Dyadic(1, -4096))).shift(-64)
            if eps.exponent < -MAX_ROOT_PRECISION // 2:
                raise ResourceError("root refinement budget exhausted")
            fresh = approximate_roots(self.poly, eps)
            self._refined = RootSet(self.poly, _match_order(self.roots, fresh.roots), eps)
        return self._refined

    def levels(self, limit: int = MAX_REFINEMENTS):
        rs = self
        yield rs
        for _ in range(limit):
            rs = rs.refine()
            yield rs

    def __repr__(self):
        vals = ", ".join(f"{complex(r):.6g}" for r in self.roots)
        return f"RootSet([{vals}])"


class CombinedRoots:
    """Roots of ``p`` followed by roots of ``p'`` as one universe (the roots of ``p p'``)."""

    def __init__(self, rs_p: RootSet, rs_dp: RootSet):
        self.rs_p = rs_p
        self.rs_dp = rs_dp
        self.roots = tuple(rs_p.roots) + tuple(rs_dp.roots)
        self.n_p = len(rs_p.roots)
        self._refined = None
        self._separations = None

    def __len__(self):
        return len(self.roots)

    @property
    def separations(self) -> tuple:
        if self._separations is None:
            self._separations = tuple(separations(self.roots))
        return self._separations

    def refine(self) -> "CombinedRoots":
        if self._refined is None:
            self._refined = CombinedRoots(self.rs_p.refine(), self.rs_dp.refine())
        return self._refined

    def levels(self, limit: int = MAX_REFINEMENTS):
        rs = self
        yield rs
        for _ in range(limit):
            rs = rs.refine()
            yield rs


def separations(roots: Sequence[CertifiedRoot], prec: int = DEFAULT_PRECISION) -> list[RealEnclosure]:
    out = []
    for i, r in enumerate(roots):
        best = None
        for j, s in enumerate(roots):
            if i == j:
                continue
            c2 = (r.center - s.center).abs2()
            lo = max(sqrt_bound(c2, prec, False) - r.radius - s.radius, Dyadic(0))
            hi = sqrt_bound(c2, prec, True) + r.radius + s.radius
            best = RealEnclosure(lo, hi) if best is None else RealEnclosure(min(best.lo, lo), min(best.hi, hi))
        out.append(best if best is not None else RealEnclosure(Dyadic(0)))
    return out


# ---------------------------------------------------------------------------
# approximation and certification


def _horner(coeffs, z):
    acc = mpmath.mpc(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _initial_points(coeffs: Sequence[int]) -> list:
    d = len(coeffs) - 1
    lc = coeffs[-1]
    center = mpmath.mpf(-coeffs[-2]) / (d * lc)
    radius = max(
        (abs(mpmath.mpf(coeffs[d - k]) / lc) ** (mpmath.mpf(1) / k) for k in range(1, d + 1)),
        default=mpmath.mpf(1),
    ) * 2 + abs(center)
    if radius == 0:
        radius = mpmath.mpf(1)
    return [center + radius * mpmath.expj(2 * mpmath.pi * k / d + mpmath.mpf("0.4")) for k in range(d)]


def _aberth(coeffs: Sequence[int], z: list, prec: int) -> list:
    d = len(coeffs) - 1
    dcoeffs = _deriv(coeffs)
    with mpmath.workprec(prec):
        z = [mpmath.mpc(v) for v in z]
        tol = mpmath.mpf(2) ** (-prec + 6)
        for _ in range(100 + 20 * d):
            done = True
            for k in range(d):
                zk = z[k]
                pv = _horner(coeffs, zk)
                if pv == 0:
                    continue
                dv = _horner(dcoeffs, zk)
                s = mpmath.mpc(0)
                for j in range(d):
                    if j != k:
                        diff = zk - z[j]
                        if diff != 0:
                            s += 1 / diff
                ratio = pv / dv if dv != 0 else mpmath.mpc(tol, tol)
                denom = 1 - ratio * s
                step = ratio / denom if denom != 0 else ratio
                z[k] = zk - step
                if abs(step) > tol * max(1, abs(z[k])):
                    done = False
            if done:
                break
    return z


def _to_dyadic(x) -> Dyadic:
    return Dyadic.from_mpf(x)


def _snap(p: IntPolynomial, z: DyadicComplex, tol: float) -> DyadicComplex:
    """Replace ``z`` by a short dyadic exact root nearby, if one exists."""
    zr, zi = float(z.re), float(z.im)
    for k in range(0, 24):
        s = 2.0**k
        cr, ci = round(zr * s) / s, round(zi * s) / s
        if abs(cr - zr) > tol or abs(ci - zi) > tol:
            continue
        cand = DyadicComplex(Dyadic.from_float(cr), Dyadic.from_float(ci))
        v = eval_complex_exact(p, cand)
        if v.re.is_zero() and v.im.is_zero():
            return cand
    return z


def _symmetrize(p: IntPolynomial, approx: list, prec: int) -> list[DyadicComplex] | None:
    thresh = mpmath.mpf(2) ** (-(prec // 2))
    reals, uppers, lowers = [], [], []
    for v in approx:
        scale = max(1, abs(v))
        if abs(v.imag) <= thresh * scale:
            reals.append(v.real)
        elif v.imag > 0:
            uppers.append(v)
        else:
            lowers.append(v)
    if len(uppers) != len(lowers):
        return None
    centers: list[DyadicComplex] = []
    tol = float(thresh) * 4
    for x in sorted(reals):
        c = DyadicComplex(_to_dyadic(x), 0)
        centers.append(_snap(p, c, tol * max(1.0, abs(float(x)))))
    # keep upper approximations; lowers become exact mirrors
    for v in sorted(uppers, key=lambda t: (t.real, t.imag)):
        c = DyadicComplex(_to_dyadic(v.real), _to_dyadic(v.imag))
        c = _snap(p, c, tol * max(1.0, abs(complex(v))))
        centers.append(c)
        centers.append(c.conjugate())
    return centers


def _radius_sq(p: IntPolynomial, centers: list[DyadicComplex], i: int) -> Fraction | None:
    z = centers[i]
    num = eval_complex_exact(p, z).abs2()
    if num.is_zero():
        return Fraction(0)
    den = Dyadic(p.lead * p.lead)
    for j, w in enumerate(centers):
        if j != i:
            a = (z - w).abs2()
            if a.is_zero():
                return None
            den = den * a
    d = len(centers)
    return Fraction(d * d) * num.to_fraction() / den.to_fraction()


def _certify(p: IntPolynomial, centers: list[DyadicComplex], n_real: int) -> list[CertifiedRoot] | None:
    radii = []
    for i in range(len(centers)):
        r2 = _radius_sq(p, centers, i)
        if r2 is None:
            return None
        radii.append(sqrt_bound(r2, 64, up=True))
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            gap2 = (centers[i] - centers[j]).abs2()
            rr = radii[i] + radii[j]
            if not gap2 > rr * rr:
                return None
    return [CertifiedRoot(c, r, i < n_real) for i, (c, r) in enumerate(zip(centers, radii))]


@lru_cache(maxsize=512)
def _approximate_cached(coeffs: tuple, eps_m: int, eps_e: int) -> tuple:
    p = IntPolynomial(coeffs)
    eps = Dyadic(eps_m, eps_e)
    d = p.degree
    prec = max(64, 2 * max(0, -eps.exponent) // 1 + 16)
    prec = min(prec, MAX_ROOT_PRECISION)
    with mpmath.workprec(prec):
        z = _initial_points(p.coeffs)
    while prec <= MAX_ROOT_PRECISION:
        z = _aberth(p.coeffs, z, prec)
        centers = _symmetrize(p, z, prec)
        if centers is not None and len(centers) == d:
            n_real = sum(1 for c in centers if c.is_real())
            cert = _certify(p, centers, n_real)
            if cert is not None and all(r.radius <= eps for r in cert):
                return tuple(cert)
        prec *= 2
    raise ResourceError("root certification failed at maximum precision")


def approximate_roots(p: IntPolynomial, eps: Dyadic | float = DEFAULT_EPS) -> RootSet:
    """Certified enclosures of every root of the square-free ``p``, radii <= ``eps``."""
    if p.is_zero() or p.degree < 1:
        raise DomainError("approximate_roots needs degree >= 1")
    if not square_free_check(p):
        raise DomainError("polynomial is not square-free")
    eps = Dyadic.coerce(eps)
    if eps.sign() <= 0:
        raise DomainError("eps must be positive")
    roots = _approximate_cached(p.coeffs, eps.mantissa, eps.exponent)
    return RootSet(p, roots, eps)


def _match_order(old: Sequence[CertifiedRoot], new: Sequence[CertifiedRoot]) -> list[CertifiedRoot]:
    out = []
    used = set()
    for r in old:
        hits = []
        for j, s in enumerate(new):
            reach = r.radius + s.radius
            if (r.center - s.center).abs2() <= reach * reach:
                hits.append(j)
        hits = [j for j in hits if j not in used]
        if len(hits) != 1:
            raise ResourceError("refined roots could not be matched to previous enclosures")
        used.add(hits[0])
        out.append(new[hits[0]])
    return out


# ---------------------------------------------------------------------------
# distance queries


def _dist_table(roots: Sequence[CertifiedRoot], x: DyadicComplex, prec: int) -> list[RealEnclosure]:
    return [r.dist_enclosure(x, prec) for r in roots]


def dist_and_dist2(rs, x, restrict_real: bool = False,
                   prec: int = DEFAULT_PRECISION) -> tuple[RealEnclosure, RealEnclosure]:
    """Enclosures of the distances from ``x`` to the nearest and second-nearest root."""
    x = DyadicComplex.coerce(x)
    roots = [r for r in rs.roots if r.is_real] if restrict_real else list(rs.roots)
    if len(roots) < 2:
        raise DomainError("need at least two eligible roots")
    ds = _dist_table(roots, x, prec)
    los = sorted(e.lo for e in ds)
    his = sorted(e.hi for e in ds)
    return RealEnclosure(los[0], his[0]), RealEnclosure(los[1], his[1])


def _drop_mirrors(roots: Sequence[CertifiedRoot], cands: list[int]) -> list[int]:
    """For a real query point, a conjugate pair is an exact tie: keep the lower index."""
    out = []
    for j in cands:
        c = roots[j].center
        if not c.im.is_zero() and any(roots[k].center == c.conjugate() for k in out):
            continue
        out.append(j)
    return out


def _nearest(roots: Sequence[CertifiedRoot], x: DyadicComplex, exclude: int | None,
             prec: int) -> int | None:
    """Index of the nearest root (ties to lowest index), or None if undecidable now."""
    idx = [i for i in range(len(roots)) if i != exclude]
    ds = {i: roots[i].dist_enclosure(x, prec) for i in idx}
    best_hi = min(ds[i].hi for i in idx)
    cands = [i for i in idx if ds[i].lo <= best_hi]
    if x.im.is_zero():
        cands = _drop_mirrors(roots, cands)
    if len(cands) == 1:
        return cands[0]
    if all(roots[i].radius.is_zero() for i in cands):
        exact = {i: (roots[i].center - x).abs2() for i in cands}
        m = min(exact.values())
        return min(i for i in cands if exact[i] == m)
    return None


def cell_index(rs, x, prec: int = DEFAULT_PRECISION) -> int:
    """Index of the root nearest to ``x``; exact ties go to the lowest index."""
    x = DyadicComplex.coerce(x)
    for level in rs.levels():
        got = _nearest(level.roots, x, None, prec)
        if got is not None:
            return got
    raise ResourceError("cell membership undecidable at maximum precision")


def build_graph(rs, kind: str) -> list[tuple[int, int]]:
    """Edge list of the ``real_chain``, ``nearest_neighbor`` or ``conjugate_pairs`` graph."""
    roots = rs.roots
    if kind == "real_chain":
        reals = sorted((i for i, r in enumerate(roots) if r.is_real),
                       key=lambda i: roots[i].center.re)
        return list(zip(reals, reals[1:]))
    if kind == "conjugate_pairs":
        return [(i, j) for i, j in sorted(rs.pairing.items()) if roots[i].center.im.sign() > 0]
    if kind == "nearest_neighbor":
        if len(roots) < 2:
            return []
        edges = []
        for i in range(len(roots)):
            choice = None
            for level in rs.levels(3):
                choice = _nearest(level.roots, level.roots[i].center, i, DEFAULT_PRECISION) \
                    if level.roots[i].radius.is_zero() else _nearest_to_root(level.roots, i)
                if choice is not None:
                    break
            if choice is None:
                # numerically tied distances: any nearest candidate is acceptable
                choice = _nearest_candidates(rs.roots, i)[0]
            edges.append((i, choice))
        return edges
    raise DomainError(f"unknown graph kind {kind!r}")


def _pair_dist(a: CertifiedRoot, b: CertifiedRoot, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    c2 = (a.center - b.center).abs2()
    lo = max(sqrt_bound(c2, prec, False) - a.radius - b.radius, Dyadic(0))
    return RealEnclosure(lo, sqrt_bound(c2, prec, True) + a.radius + b.radius)


def _nearest_candidates(roots, i) -> list[int]:
    ds = {j: _pair_dist(roots[i], roots[j]) for j in range(len(roots)) if j != i}
    best_hi = min(e.hi for e in ds.values())
    return sorted(j for j, e in ds.items() if e.lo <= best_hi)


def _nearest_to_root(roots, i) -> int | None:
    cands = _nearest_candidates(roots, i)
    if roots[i].is_real:
        cands = _drop_mirrors(roots, cands)
    if len(cands) == 1:
        return cands[0]
    if all(roots[j].radius.is_zero() for j in cands + [i]):
        exact = {j: (roots[j].center - roots[i].center).abs2() for j in cands}
        m = min(exact.values())
        return min(j for j in cands if exact[j] == m)
    return None


# ---------------------------------------------------------------------------
# exact position of a root relative to an axis-parallel line


def _line_restriction(p: IntPolynomial, axis: str, value: Dyadic) -> list[int]:
    """Integer polynomial whose real roots ``t`` give the roots of ``p`` on the line.

    ``axis == "re"``: the line ``Re z = value`` parametrized by ``Im z = t``.
    ``axis == "im"``: the line ``Im z = value`` parametrized by ``Re z = t``.
    """
    coeffs = p.coeffs
    d = len(coeffs) - 1
    if axis == "re":
        c = [x.to_fraction() for x in taylor_shift(p, value).coeffs]
        c += [Fraction(0)] * (d + 1 - len(c))
        A = [Fraction(0)] * (d + 1)
        B = [Fraction(0)] * (d + 1)
        for j, cj in enumerate(c):
            unit = j % 4  # i^j = 1, i, -1, -i
            if unit == 0:
                A[j] = cj
            elif unit == 1:
                B[j] = cj
            elif unit == 2:
                A[j] = -cj
            else:
                B[j] = -cj
    else:
        b = value.to_fraction()
        A = [Fraction(0)] * (d + 1)
        B = [Fraction(0)] * (d + 1)
        for k in range(d + 1):
            # k-th Taylor coefficient polynomial D_k(x) = sum_j C(j,k) a_j x^(j-k)
            dk = [Fraction(math.comb(j, k) * coeffs[j]) for j in range(k, d + 1)]
            w = b**k
            unit = k % 4
            target, sgn = (A, 1) if unit == 0 else (B, 1) if unit == 1 else (A, -1) if unit == 2 else (B, -1)
            for m, v in enumerate(dk):
                target[m] += sgn * w * v
    a_int = list(_strip(clear_fractions(A))) if any(A) else []
    b_int = list(_strip(clear_fractions(B))) if any(B) else []
    if not a_int:
        g = b_int
    elif not b_int:
        g = a_int
    else:
        g = int_gcd(a_int, b_int)
    return _squarefree_part(g)


def _squarefree_part(c: list[int]) -> list[int]:
    if len(c) <= 2:
        return c
    h = int_gcd(c, _deriv(c))
    if len(h) == 1:
        return c
    # exact division c / h over Q
    num = [Fraction(x) for x in c]
    q = [Fraction(0)] * (len(c) - len(h) + 1)
    for k in range(len(q) - 1, -1, -1):
        q[k] = num[k + len(h) - 1] / h[-1]
        for j, y in enumerate(h):
            num[k + j] -= q[k] * y
    return clear_fractions(q)


def _on_line(p: IntPolynomial, root: CertifiedRoot, axis: str, value: Dyadic,
             line_poly: list[int]) -> bool | None:
    """True if the root lies exactly on the line, False if certainly not, None if undecided."""
    if root.is_real:
        if axis == "im":
            return value.is_zero()
        return eval_complex_exact(p, DyadicComplex(value, 0)).re.is_zero() and \
            abs(root.center.re - value) <= root.radius
    if len(line_poly) <= 1:
        return False
    other = root.center.im if axis == "re" else root.center.re
    lo, hi = other - root.radius, other + root.radius
    if lo == hi:
        # exact center: test directly
        return eval_complex_exact(p, _point(axis, value, other)).abs2().is_zero()
    chain = sturm_chain(IntPolynomial(line_poly))
    n = count_roots_interval(chain, lo, hi)
    if _eval_sign(line_poly, lo) == 0:
        n += 1
    if n == 0:
        return False
    # isolate the on-line roots inside [lo, hi] and test containment in the disk
    stack = [(lo, hi)]
    target = root.radius.shift(-12)
    while stack:
        a, b = stack.pop()
        cnt = count_roots_interval(chain, a, b) + (1 if _eval_sign(line_poly, a) == 0 else 0)
        if cnt == 0:
            continue
        if b - a > target:
            m = (a + b).half()
            stack.append((a, m))
            stack.append((m, b))
            continue
        pa, pb = _point(axis, value, a), _point(axis, value, b)
        r2 = root.radius * root.radius
        if (pa - root.center).abs2() <= r2 and (pb - root.center).abs2() <= r2:
            return True
        return None
    return False


def _eval_sign(c: list[int], x: Dyadic) -> int:
    from .polynomial import sign_at
    return sign_at(c, x)


def _point(axis: str, value: Dyadic, t: Dyadic) -> DyadicComplex:
    return DyadicComplex(value, t) if axis == "re" else DyadicComplex(t, value)


def root_side(rs, i: int, axis: str, value) -> int:
    """Sign of ``coord(root_i) - value`` decided exactly (coord = Re or Im)."""
    value = Dyadic.coerce(value)
    line_poly = None
    for level in rs.levels():
        r = level.roots[i]
        c = r.center.re if axis == "re" else r.center.im
        if c - r.radius > value:
            return 1
        if c + r.radius < value:
            return -1
        if r.radius.is_zero():
            return (c > value) - (c < value)
        if r.is_real and axis == "im":
            return -value.sign()
        if line_poly is None and not r.is_real:
            line_poly = _line_restriction(level_poly(rs, i), axis, value)
        on = _on_line(level_poly(rs, i), r, axis, value, line_poly or [])
        if on:
            return 0
    raise ResourceError("root position relative to a grid line undecidable")


def level_poly(rs, i: int) -> IntPolynomial:
    if isinstance(rs, CombinedRoots):
        return rs.rs_p.poly if i < rs.n_p else rs.rs_dp.poly
    return rs.poly


def in_halfopen_square(rs, i: int, x0, x1, y0, y1) -> bool:
    """Whether root ``i`` lies in ``[x0, x1) x (y0, y1]``."""
    r = rs.roots[i]
    c = r.center
    if (c.re + r.radius < x0 or c.re - r.radius > x1 or
            c.im + r.radius < y0 or c.im - r.radius > y1):
        return False
    return (root_side(rs, i, "re", x0) >= 0 and root_side(rs, i, "re", x1) < 0 and
            root_side(rs, i, "im", y0) > 0 and root_side(rs, i, "im", y1) <= 0)


def count_in_square(rs, x0, x1, y0, y1) -> int:
    x0, x1, y0, y1 = (Dyadic.coerce(v) for v in (x0, x1, y0, y1))
    return sum(1 for i in range(len(rs.roots)) if in_halfopen_square(rs, i, x0, x1, y0, y1))


def count_real_in_open(rs, a, b) -> int:
    """Real roots strictly inside ``(a, b)``."""
    a, b = Dyadic.coerce(a), Dyadic.coerce(b)
    n = 0
    for i, r in enumerate(rs.roots):
        if r.is_real and root_side(rs, i, "re", a) > 0 and root_side(rs, i, "re", b) < 0:
            n += 1
    return n


def count_real_in_halfopen(rs, a, b) -> int:
    """Real roots in ``(a, b]``."""
    a, b = Dyadic.coerce(a), Dyadic.coerce(b)
    n = 0
    for i, r in enumerate(rs.roots):
        if r.is_real and root_side(rs, i, "re", a) > 0 and root_side(rs, i, "re", b) <= 0:
            n += 1
    return n


# ---------------------------------------------------------------------------
# circle tests used as Descartes oracles


def _strict_inside(rs, center_re: RealEnclosure, center_im: RealEnclosure,
                   radius_sq: RealEnclosure) -> int:
    """Number of roots strictly inside the open disk; refines until decidable."""
    for level in rs.levels():
        count = 0
        undecided = False
        for r in level.roots:
            dx = RealEnclosure(r.center.re).sub(center_re)
            dy = RealEnclosure(r.center.im).sub(center_im)
            d2 = dx.mul(dx).add(dy.mul(dy))
            # distance enclosure including the root radius
            dist = d2.sqrt()
            lo = max(dist.lo - r.radius, Dyadic(0))
            hi = dist.hi + r.radius
            rad = radius_sq.sqrt()
            if hi < rad.lo:
                count += 1
            elif lo >= rad.hi:
                continue
            else:
                undecided = True
        if not undecided:
            return count
    raise ResourceError("circle membership undecidable at maximum precision")


def one_circle_holds(rs, a, b) -> bool:
    """No root in the open disk whose diameter is ``[a, b]``."""
    a, b = Dyadic.coerce(a), Dyadic.coerce(b)
    m = (a + b).half()
    w = b - a
    return _strict_inside(rs, RealEnclosure(m), RealEnclosure(0),
                          RealEnclosure(w.half() * w.half())) == 0


def two_circle_holds(rs, a, b) -> bool:
    """Exactly one root in the union of the two open disks circumscribing
    the equilateral triangles on ``[a, b]``."""
    a, b = Dyadic.coerce(a), Dyadic.coerce(b)
    m = (a + b).half()
    w = b - a
    # centers m +- i w / (2 sqrt 3), radius w / sqrt 3
    off = RealEnclosure(w).div(RealEnclosure(12).sqrt())
    r2 = RealEnclosure(w * w).div(RealEnclosure(3))
    for level in rs.levels():
        total = 0
        undecided = False
        for r in level.roots:
            inside_any = False
            maybe = False
            for sgn in (1, -1):
                cy = off if sgn > 0 else off.neg()
                dx = RealEnclosure(r.center.re - m)
                dy = RealEnclosure(r.center.im).sub(cy)
                dist = dx.mul(dx).add(dy.mul(dy)).sqrt()
                lo = max(dist.lo - r.radius, Dyadic(0))
                hi = dist.hi + r.radius
                rad = r2.sqrt()
                if hi < rad.lo:
                    inside_any = True
                elif lo < rad.hi:
                    maybe = True
            if inside_any:
                total += 1
            elif maybe:
                undecided = True
        if not undecided:
            return total == 1
    raise ResourceError("two-circle membership undecidable at maximum precision")
