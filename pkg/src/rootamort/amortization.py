"""Stopping functions, continuous-amortization integrals and separation bounds.

A stopping function ``F`` for a predicate guarantees that a region around
``x`` smaller than ``F(x)`` is terminal (in 2D, ``F`` bounds the area).  The
leaf count of any run is then at most ``max(1, int 2 dx / F)`` in 1D and
``max(1, int 4 dA / F)`` in 2D, and the cost-weighted analogue holds for a
nonincreasing per-leaf cost ``g``.

Pointwise evaluation (:func:`eval_stopping`) is done on certified root
enclosures.  The integrals are computed numerically with floating-point
brackets that are widened outward; see :func:`ca_integral_1d` and
:func:`ca_integral_2d` for the schemes.  An ``F`` value of ``None`` means
``+inf`` (every region containing the point is terminal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from .errors import DomainError, ResourceError, SingularityError
from .exactnum import (
    DEFAULT_PRECISION,
    Dyadic,
    DyadicComplex,
    RealEnclosure,
    enclose_ln,
    enclose_pi,
    enclose_sqrt,
)
from .polynomial import IntPolynomial, derivative, discriminant, square_free_check
from .roots_oracle import CombinedRoots, RootSet, approximate_roots, cell_index, dist_and_dist2

STOPPING_IDS = ("sturm", "descartes", "eval", "csturm", "ceval")
ZONE_FACTOR = 1 / (1 + math.sqrt(3))

_FLOAT_PAD = 1e-12  # relative outward widening of float brackets


# ---------------------------------------------------------------------------
# stopping functions


@dataclass
class StoppingFn:
    id: str
    p: IntPolynomial
    rs: RootSet
    L: int
    rs_dp: Optional[RootSet] = None
    _combined: Optional[CombinedRoots] = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.p.degree

    @property
    def dim(self) -> int:
        return 2 if self.id in ("csturm", "ceval") else 1

    @property
    def combined(self) -> CombinedRoots:
        if self._combined is None:
            empty = self.rs_dp if self.rs_dp is not None else _EmptyRoots()
            self._combined = CombinedRoots(self.rs, empty)
        return self._combined

    def dp_roots(self) -> tuple:
        return self.rs_dp.roots if self.rs_dp is not None else ()


class _EmptyRoots:
    roots = ()
    poly = None

    def refine(self):
        return self


def make_stopping(p: IntPolynomial, fid: str, L: int | None = None, rs: RootSet | None = None,
                  rs_dp: RootSet | None = None) -> StoppingFn:
    if fid not in STOPPING_IDS:
        raise DomainError(f"unknown stopping function {fid!r}")
    if p.is_zero() or p.degree < 1:
        raise DomainError("stopping functions need degree >= 1")
    rs = rs if rs is not None else approximate_roots(p)
    L = p.bit_height if L is None else L
    if fid in ("eval", "ceval") and p.degree >= 2 and rs_dp is None:
        dp = derivative(p)
        if not square_free_check(dp):
            raise DomainError("derivative is not square-free")
        rs_dp = approximate_roots(dp)
    return StoppingFn(fid, p, rs, L, rs_dp)


def _recip_sum(roots: Sequence, x: DyadicComplex, power: int, prec: int) -> RealEnclosure:
    total = RealEnclosure(0)
    for r in roots:
        dist = r.dist_enclosure(x, prec)
        if dist.lo.sign() <= 0:
            raise SingularityError("point lies in a root enclosure")
        t = dist if power == 1 else dist.mul(dist, prec)
        total = total.add(RealEnclosure(1).div(t, prec), prec)
    return total


def sigma(rs, x, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    """Enclosure of ``sum_alpha 1 / |x - alpha|`` over the roots held by ``rs``."""
    roots = rs.roots if hasattr(rs, "roots") else rs
    return _recip_sum(roots, DyadicComplex.coerce(x), 1, prec)


def sigma2(rs, x, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    """Enclosure of ``sum_alpha 1 / |x - alpha|^2``."""
    roots = rs.roots if hasattr(rs, "roots") else rs
    return _recip_sum(roots, DyadicComplex.coerce(x), 2, prec)


def _zone_status(F: StoppingFn, x: DyadicComplex, prec: int) -> int:
    """1 if ``x`` is certainly in a zone, 0 if certainly not, -1 if undecided."""
    k = 1 / RealEnclosure(1).add(enclose_sqrt(3, prec), prec)
    undecided = False
    for i, r in enumerate(F.rs.roots):
        if not r.is_real:
            continue
        rad = F.rs.separations[i].mul(k, prec)
        dist = r.dist_enclosure(x, prec)
        if dist.hi <= rad.lo:
            return 1
        if dist.lo <= rad.hi:
            undecided = True
    return -1 if undecided else 0


def eval_stopping(F: StoppingFn, x, prec: int = DEFAULT_PRECISION) -> RealEnclosure | None:
    """Enclosure of ``F(x)``; ``None`` stands for ``+inf``."""
    x = DyadicComplex.coerce(x)
    fid = F.id
    if fid == "sturm":
        if len(F.rs.real_indices()) < 2:
            return None
        return dist_and_dist2(F.rs, x, restrict_real=True, prec=prec)[1]
    if fid == "csturm":
        if F.d < 2:
            return None
        d2 = dist_and_dist2(F.rs, x, prec=prec)[1]
        return d2.mul(d2, prec).mul(RealEnclosure(Dyadic(1, -1)), prec)
    if fid == "descartes":
        if F.d < 2:
            return None
        d1, d2 = dist_and_dist2(F.rs, x, prec=prec)
        f2 = d2.div(enclose_sqrt(3, prec), prec)
        status = _zone_status(F, x, prec)
        if status == 1:
            return f2
        if status == 0:
            return d1
        # both pieces are valid stopping functions, so the hull is sound
        return RealEnclosure(min(d1.lo, f2.lo), max(d1.hi, f2.hi))
    if fid in ("eval", "ceval"):
        comb = F.combined
        i = cell_index(comb, x, prec)
        in_p_cell = i < comb.n_p
        other = F.dp_roots() if in_p_cell else F.rs.roots
        if not other:
            return None
        if fid == "eval":
            return RealEnclosure.around(Fraction(2, 3), prec).div(sigma(other, x, prec), prec)
        s2 = sigma2(other, x, prec)
        if in_p_cell:
            return RealEnclosure(1).div(s2.mul(882 * F.d, prec), prec)
        return RealEnclosure(2).div(s2.mul(9 * F.d, prec), prec)
    raise DomainError(f"unknown stopping function {fid!r}")


# ---------------------------------------------------------------------------
# 1D integrand structure


_MP_PREC = 256  # breakpoints and root offsets are formed at this precision


def _mp_roots(roots) -> list:
    return [mpmath.mpc(r.center.re.to_mpf(), r.center.im.to_mpf()) for r in roots]


def _equidistant_points(zs: Sequence) -> list:
    """Real points where two roots are at equal distance (cell / order changes)."""
    out = []
    for i in range(len(zs)):
        for j in range(i + 1, len(zs)):
            a, b = zs[i], zs[j]
            if a.real == b.real:
                continue
            out.append((abs(b) ** 2 - abs(a) ** 2) / (2 * (b.real - a.real)))
    return out


def _shape_points(zs: Sequence) -> list:
    """Real parts and inflection points of ``1 / |x - z|`` for each root."""
    out = []
    for z in zs:
        out.append(z.real)
        if z.imag != 0:
            s = abs(z.imag) / mpmath.sqrt(2)
            out.extend((z.real - s, z.real + s))
    return out


def _pieces(a, b, pts: Sequence) -> list:
    cuts = sorted({a, b} | {t for t in pts if a < t < b})
    return [(u, v) for u, v in zip(cuts, cuts[1:]) if v > u]


def _nearest_order(m, zs) -> list[int]:
    return sorted(range(len(zs)), key=lambda k: (abs(m - zs[k]), k))


def integrand_terms_1d(F: StoppingFn, a, b) -> list[tuple[float, list]]:
    """Split ``[a, b]`` into pieces on which ``2 / F = sum_k c_k / |x - z_k|``.

    Every term is monotone and of one convexity on each piece.  Pieces come
    back in local coordinates ``(width, [(c_k, offset_k)])``: each piece is
    halved, and each half is measured from its outer end (the right half is
    reflected), so a root next to either end sits next to an origin.
    Breakpoints and offsets are formed at high precision from the exact root
    centres, which keeps tightly clustered roots accurate once rounded to
    floats.
    """
    with mpmath.workprec(_MP_PREC):
        a, b = mpmath.mpf(Dyadic.coerce(a).to_mpf()), mpmath.mpf(Dyadic.coerce(b).to_mpf())
        out = []
        for u, v, terms in _terms_mp(F, a, b):
            h = float((v - u) / 2)
            out.append((h, [(c, complex(z - u)) for c, z in terms]))
            out.append((h, [(c, complex(v - z)) for c, z in terms]))
        return out


def _terms_mp(F: StoppingFn, a, b) -> list:
    fid = F.id
    zs = _mp_roots(F.rs.roots)
    if fid == "sturm":
        reals = sorted(z.real for z, r in zip(zs, F.rs.roots) if r.is_real)
        if len(reals) < 2:
            return []
        pts = reals + _equidistant_points([mpmath.mpc(t) for t in reals])
        out = []
        for u, v in _pieces(a, b, pts):
            m = (u + v) / 2
            order = sorted(reals, key=lambda t: abs(m - t))
            out.append((u, v, [(2.0, mpmath.mpc(order[1]))]))
        return out
    if fid == "descartes":
        if F.d < 2:
            return []
        factor = 1 / (1 + mpmath.sqrt(3))
        zones = []
        for i, r in enumerate(F.rs.roots):
            if r.is_real:
                zones.append((zs[i].real, F.rs.separations[i].lo.to_mpf() * factor))
        pts = _shape_points(zs) + _equidistant_points(zs)
        for c, rad in zones:
            pts.extend((c - rad, c + rad))
        out = []
        for u, v in _pieces(a, b, pts):
            m = (u + v) / 2
            order = _nearest_order(m, zs)
            if any(abs(m - c) < rad for c, rad in zones):
                out.append((u, v, [(2.0 * math.sqrt(3), zs[order[1]])]))
            else:
                out.append((u, v, [(2.0, zs[order[0]])]))
        return out
    if fid == "eval":
        zp = zs
        zd = _mp_roots(F.dp_roots())
        allz = zp + zd
        pts = _shape_points(allz) + _equidistant_points(allz)
        out = []
        for u, v in _pieces(a, b, pts):
            i = _nearest_order((u + v) / 2, allz)[0]
            other = zd if i < len(zp) else zp
            # 2 / ((2/3) / Sigma) = 3 Sigma
            out.append((u, v, [(3.0, z) for z in other]))
        return out
    raise DomainError(f"{fid} is not a 1D stopping function")


def _term_values(x: np.ndarray, terms) -> np.ndarray:
    """Matrix of ``c_k / |x - z_k|`` (rows: points, cols: terms)."""
    cs = np.array([c for c, _ in terms])
    zr = np.array([z.real for _, z in terms])
    zi = np.array([z.imag for _, z in terms])
    dx = x[:, None] - zr[None, :]
    return cs[None, :] / np.sqrt(dx * dx + zi[None, :] ** 2)


def _convex_flags(u: float, v: float, terms) -> np.ndarray:
    m = 0.5 * (u + v)
    return np.array([abs(m - z.real) * math.sqrt(2) >= abs(z.imag) for _, z in terms])


def _bracket_segments(s, t, terms, convex):
    """Lower / upper integral brackets per segment (midpoint vs trapezoid)."""
    h = t - s
    fm = _term_values(0.5 * (s + t), terms)
    fs = _term_values(s, terms)
    ft = _term_values(t, terms)
    mid = fm * h[:, None]
    trap = 0.5 * (fs + ft) * h[:, None]
    lo = np.where(convex[None, :], mid, trap).sum(axis=1)
    hi = np.where(convex[None, :], trap, mid).sum(axis=1)
    return lo, hi


def _integrate_piece(v: float, terms, tol: float, budget: int) -> tuple[float, float]:
    """Bracket of the piece integral over ``[0, v]`` in local coordinates."""
    if not terms:
        return 0.0, 0.0
    convex = _convex_flags(0.0, v, terms)
    s = np.linspace(0.0, v, 9)[:-1]
    t = np.append(s[1:], v)
    for _ in range(200):
        lo, hi = _bracket_segments(s, t, terms, convex)
        err = hi - lo
        total = lo.sum()
        if err.sum() <= tol * total:
            return float(total), float(hi.sum())
        if len(s) > budget:
            raise ResourceError("quadrature budget exhausted")
        cut = err > 0.25 * tol * total / len(s)
        mid = 0.5 * (s[cut] + t[cut])
        s = np.concatenate([s[~cut], s[cut], mid])
        t = np.concatenate([t[~cut], mid, t[cut]])
    raise ResourceError("quadrature did not converge")


def _as_interval(a) -> tuple[Dyadic, Dyadic]:
    if hasattr(a, "lo"):
        return a.lo, a.hi
    x, y = a
    return Dyadic.coerce(x), Dyadic.coerce(y)


def _interval_or_benchmark(F: StoppingFn, I) -> tuple[Dyadic, Dyadic]:
    if I is None:
        R = Dyadic(1, F.L)
        return -R, R
    return _as_interval(I)


def ca_integral_1d(F: StoppingFn, I=None, tol: float = 1e-4, budget: int = 2_000_000) -> RealEnclosure:
    """Enclosure of ``int_I 2 dx / F(x)`` with relative width about ``tol``.

    Each piece's terms ``c / |x - z|`` are convex or concave throughout, so the
    midpoint and trapezoid rules bracket every term; segments are bisected
    until the brackets agree.
    """
    a, b = _interval_or_benchmark(F, I)
    lo_sum = hi_sum = 0.0
    for v, terms in integrand_terms_1d(F, a, b):
        lo, hi = _integrate_piece(v, terms, tol, budget)
        lo_sum += lo
        hi_sum += hi
    return RealEnclosure.from_floats(lo_sum * (1 - _FLOAT_PAD), hi_sum * (1 + _FLOAT_PAD))


# ---------------------------------------------------------------------------
# 2D integrals over box enclosures


def _box_distance_bounds(x0, x1, y0, y1, z: complex, r: float):
    """Min / max distance from each box to a disk of radius ``r`` about ``z``."""
    dx_lo = np.maximum(np.maximum(x0 - z.real, z.real - x1), 0.0)
    dy_lo = np.maximum(np.maximum(y0 - z.imag, z.imag - y1), 0.0)
    dx_hi = np.maximum(np.abs(x0 - z.real), np.abs(x1 - z.real))
    dy_hi = np.maximum(np.abs(y0 - z.imag), np.abs(y1 - z.imag))
    pad = r + 1e-15 * (abs(z) + 1)
    dmin = np.maximum(np.hypot(dx_lo, dy_lo) * (1 - _FLOAT_PAD) - pad, 0.0)
    dmax = np.hypot(dx_hi, dy_hi) * (1 + _FLOAT_PAD) + pad
    return dmin, dmax


def _recip_sq_bounds(dmin_rows, dmax_rows):
    with np.errstate(divide="ignore"):
        hi = (1.0 / dmin_rows**2).sum(axis=0)
        lo = (1.0 / dmax_rows**2).sum(axis=0)
    return lo, hi


def _recip_sq_mean_bounds(x0, x1, y0, y1, roots, dmin_rows, lo1, hi1):
    """Mean of ``sum 1/|x - z|^2`` over each box, second order where finite.

    Midpoint rule with remainder ``|H| E|u|^2 / 2``; the Hessian norm of
    ``1/r^2`` is ``6/r^4`` and the mean of ``|u|^2`` over a square of side
    ``h`` is ``h^2/6``.
    """
    if not len(roots):
        return lo1, hi1
    cx = 0.5 * (x0 + x1)
    cy = 0.5 * (y0 + y1)
    h = x1 - x0
    c_lo = np.zeros(len(x0))
    c_hi = np.zeros(len(x0))
    for r in roots:
        z = complex(r)
        rad = float(r.radius) + 1e-15 * (abs(z) + 1)
        dist = np.hypot(cx - z.real, cy - z.imag)
        with np.errstate(divide="ignore"):
            c_lo += 1.0 / (dist * (1 + _FLOAT_PAD) + rad) ** 2
            c_hi += 1.0 / np.maximum(dist * (1 - _FLOAT_PAD) - rad, 0.0) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        rem = (h * h / 2.0) * (1.0 / dmin_rows**4).sum(axis=0)
        lo2 = np.nan_to_num(c_lo - rem, nan=0.0, neginf=0.0)
        hi2 = np.nan_to_num(c_hi + rem, nan=np.inf)
    return np.maximum(lo1, lo2), np.minimum(hi1, hi2)


def _halfplane_fraction(x0, x1, y0, y1, za, zb):
    """Bounds on the fraction of each box closer to ``za`` than to ``zb``."""
    h = x1 - x0
    nx, ny = zb.real - za.real, zb.imag - za.imag
    mx, my = 0.5 * (za.real + zb.real), 0.5 * (za.imag + zb.imag)
    # closer to za  <=>  nx (x - mx) + ny (y - my) <= 0; unit-box coordinates
    t = -(nx * (x0 - mx) + ny * (y0 - my)) / h
    al, be = nx * np.ones_like(h), ny * np.ones_like(h)
    # reflect so that both normal components are nonnegative
    t = np.where(al < 0, t - al, t)
    al = np.abs(al)
    t = np.where(be < 0, t - be, t)
    be = np.abs(be)
    big = np.maximum(al, be)
    small = np.minimum(al, be)
    with np.errstate(divide="ignore", invalid="ignore"):
        R = lambda s: np.maximum(s, 0.0) ** 2
        full = (R(t) - R(t - al) - R(t - be) + R(t - al - be)) / (2 * al * be)
        # nearly axis-parallel cut: the region lies between two parallel cuts
        f_lo = np.clip((t - small) / big, 0.0, 1.0)
        f_hi = np.clip(t / big, 0.0, 1.0)
    degenerate = small <= 1e-6 * big
    lo = np.where(degenerate, f_lo, full - 1e-9)
    hi = np.where(degenerate, f_hi, full + 1e-9)
    return np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)


def _domination(x0, x1, y0, y1, sites):
    """``dom[j, k]``: site ``k`` is strictly closer than site ``j`` on the whole box.

    ``|x - z_j|^2 - |x - z_k|^2`` is affine in ``x`` so the four corners decide
    it; the margin covers the enclosure radii.
    """
    zs = [complex(r) for r in sites]
    rads = [float(r.radius) for r in sites]
    corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
    d2 = np.array([[(cx - z.real) ** 2 + (cy - z.imag) ** 2 for cx, cy in corners] for z in zs])
    m = len(zs)
    dom = np.zeros((m, m, len(x0)), dtype=bool)
    for j in range(m):
        for k in range(m):
            if j == k:
                continue
            D = np.sqrt(np.maximum(d2[j], d2[k]).max(axis=0)) + rads[j] + rads[k]
            margin = 2 * (rads[j] + rads[k]) * D + 1e-12 * (D * D + 1)
            dom[j, k] = (d2[j] - d2[k]).min(axis=0) > margin
    return dom


def _voronoi_candidates(x0, x1, y0, y1, sites):
    """Mask of sites whose nearest-site cell may meet each box."""
    return ~_domination(x0, x1, y0, y1, sites).any(axis=1)


def _integrand_bounds_2d(F: StoppingFn, x0, x1, y0, y1, pointwise: bool = False):
    """Per-box bounds of ``4 / F``: of its mean, or pointwise if ``pointwise``."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _integrand_bounds_2d_raw(F, x0, x1, y0, y1, pointwise)


def _integrand_bounds_2d_raw(F: StoppingFn, x0, x1, y0, y1, pointwise: bool):
    n = len(x0)
    if F.id == "csturm":
        if F.d < 2:
            return np.zeros(n), np.zeros(n)
        dmin = []
        dmax = []
        for r in F.rs.roots:
            a, b = _box_distance_bounds(x0, x1, y0, y1, complex(r), float(r.radius))
            dmin.append(a)
            dmax.append(b)
        dmin = np.sort(np.array(dmin), axis=0)
        dmax = np.sort(np.array(dmax), axis=0)
        # 4 / F = 8 / dist2^2
        with np.errstate(divide="ignore"):
            hi = 8.0 / dmin[1] ** 2
        lo = 8.0 / dmax[1] ** 2
        if pointwise:
            return lo, hi
        # where one root is second nearest on the whole box the integrand is smooth
        roots = list(F.rs.roots)
        dom = _domination(x0, x1, y0, y1, roots)
        beaten = dom.sum(axis=1)  # sites closer on the whole box
        beats = dom.sum(axis=0)  # sites farther on the whole box
        second = (beaten <= 1) & (beats < len(roots) - 1)
        single = second.sum(axis=0) == 1
        if single.any():
            k2 = np.argmax(second, axis=0)
            for k in np.unique(k2[single]):
                sel = np.nonzero(single & (k2 == k))[0]
                r = roots[k]
                a, _ = _box_distance_bounds(x0[sel], x1[sel], y0[sel], y1[sel], complex(r), float(r.radius))
                ml, mh = _recip_sq_mean_bounds(x0[sel], x1[sel], y0[sel], y1[sel], [r], a[None, :],
                                               lo[sel] / 8.0, hi[sel] / 8.0)
                lo[sel] = 8.0 * ml
                hi[sel] = 8.0 * mh
        return lo, hi
    if F.id == "ceval":
        rp = list(F.rs.roots)
        rd = list(F.dp_roots())
        sites = rp + rd
        bounds = [_box_distance_bounds(x0, x1, y0, y1, complex(r), float(r.radius)) for r in sites]
        dmin = np.array([b[0] for b in bounds])
        dmax = np.array([b[1] for b in bounds])
        cand = _voronoi_candidates(x0, x1, y0, y1, sites)
        np_ = len(rp)
        in_p = cand[:np_].any(axis=0)
        in_dp = cand[np_:].any(axis=0) if rd else np.zeros(n, dtype=bool)
        d = F.d
        # p-root cells: 4 * 882 d * Sigma^2_{p'}
        if rd:
            l1, h1 = _recip_sq_bounds(dmin[np_:], dmax[np_:])
            if not pointwise:
                l1, h1 = _recip_sq_mean_bounds(x0, x1, y0, y1, rd, dmin[np_:], l1, h1)
            l1, h1 = 3528.0 * d * l1, 3528.0 * d * h1
        else:
            l1 = h1 = np.zeros(n)
        # p'-root cells: 4 * (9 d / 2) * Sigma^2_p
        l2, h2 = _recip_sq_bounds(dmin[:np_], dmax[:np_])
        if not pointwise:
            l2, h2 = _recip_sq_mean_bounds(x0, x1, y0, y1, rp, dmin[:np_], l2, h2)
        l2, h2 = 18.0 * d * l2, 18.0 * d * h2
        both = in_p & in_dp
        lo = np.where(in_p, l1, l2)
        hi = np.where(in_p, h1, h2)
        lo = np.where(both, np.minimum(l1, l2), lo)
        hi = np.where(both, np.maximum(h1, h2), hi)
        if pointwise or not both.any():
            return lo, hi
        # a box met by exactly one p site and one p' site is cut by their bisector
        two = both & (cand.sum(axis=0) == 2)
        idx = np.nonzero(two)[0]
        if len(idx):
            ia = np.argmax(cand[:np_, idx], axis=0)
            ib = np.argmax(cand[np_:, idx], axis=0) + np_
            for a_site in np.unique(ia):
                for b_site in np.unique(ib[ia == a_site]):
                    sel = idx[(ia == a_site) & (ib == b_site)]
                    f_lo, f_hi = _halfplane_fraction(x0[sel], x1[sel], y0[sel], y1[sel],
                                                     complex(sites[a_site]), complex(sites[b_site]))
                    # mean = f * m1 + (1 - f) * m2, linear in f
                    cand_lo = [f * l1[sel] + (1 - f) * l2[sel] for f in (f_lo, f_hi)]
                    cand_hi = [f * h1[sel] + (1 - f) * h2[sel] for f in (f_lo, f_hi)]
                    with np.errstate(invalid="ignore"):
                        lo[sel] = np.nan_to_num(np.minimum(*cand_lo), nan=0.0)
                        hi[sel] = np.nan_to_num(np.maximum(*cand_hi), nan=np.inf)
        return lo, hi
    raise DomainError(f"{F.id} is not a 2D stopping function")


def _square_of(R, L: int):
    if R is None:
        s = 2.0**L
        return -s, s, -s, s
    if hasattr(R, "x0"):
        return float(R.x0), float(R.x1), float(R.y0), float(R.y1)
    return tuple(float(v) for v in R)


def _adaptive_boxes(bounds_fn, R, tol: float, budget: int, transform=None):
    """Refine a box partition of ``R`` until the enclosure is within ``tol`` (relative)."""
    X0, X1, Y0, Y1 = R
    n0 = 16
    hs = (X1 - X0) / n0
    gx, gy = np.meshgrid(np.arange(n0), np.arange(n0))

    def evaluate(x0, y0, h):
        if len(x0) > 200_000:
            parts = [evaluate(x0[i:i + 200_000], y0[i:i + 200_000], h[i:i + 200_000])
                     for i in range(0, len(x0), 200_000)]
            return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
        lo, hi = bounds_fn(x0, x0 + h, y0, y0 + h)
        if transform is not None:
            lo, hi = transform(lo), transform(hi)
        with np.errstate(over="ignore", invalid="ignore"):
            return h * h * lo, np.nan_to_num(h * h * hi, nan=np.inf, posinf=np.inf)

    x0 = X0 + gx.ravel() * hs
    y0 = Y0 + gy.ravel() * hs
    h = np.full(x0.shape, hs)
    clo, chi = evaluate(x0, y0, h)
    processed = len(x0)
    for _ in range(400):
        with np.errstate(over="ignore", invalid="ignore"):
            err = chi - clo
            total_lo = clo.sum()
            total_err = err.sum()
            cum = None
        if np.isfinite(total_err) and total_err <= tol * total_lo:
            return total_lo, chi.sum()
        if processed > budget:
            raise ResourceError("2D quadrature budget exhausted")
        split = ~np.isfinite(err)
        if not split.any():
            # split the worst boxes until they carry half the excess
            excess = total_err - 0.5 * tol * total_lo
            order = np.argsort(-err)
            with np.errstate(over="ignore"):
                cum = np.cumsum(err[order])
            k = int(np.searchsorted(cum, excess)) + 1
            split[order[:k]] = True
        keep = ~split
        hx = h[split] / 2
        sx, sy = x0[split], y0[split]
        nx = np.concatenate([sx, sx + hx, sx, sx + hx])
        ny = np.concatenate([sy, sy, sy + hx, sy + hx])
        nh = np.concatenate([hx, hx, hx, hx])
        nlo, nhi = evaluate(nx, ny, nh)
        processed += len(nx)
        x0 = np.concatenate([x0[keep], nx])
        y0 = np.concatenate([y0[keep], ny])
        h = np.concatenate([h[keep], nh])
        clo = np.concatenate([clo[keep], nlo])
        chi = np.concatenate([chi[keep], nhi])
    raise ResourceError("2D quadrature did not converge")


DEFAULT_TOL_2D = {"csturm": 1e-3, "ceval": 1e-3}


def ca_integral_2d(F: StoppingFn, R=None, tol: float | None = None, budget: int = 6_000_000) -> RealEnclosure:
    """Enclosure of ``int_R 4 dA / F`` from adaptive box enclosures (first order)."""
    if F.id == "csturm" and F.d < 2:
        return RealEnclosure(0)
    if F.id == "ceval" and F.d < 2:
        return RealEnclosure(0)
    sq = _square_of(R, F.L)
    tol = DEFAULT_TOL_2D[F.id] if tol is None else tol
    lo, hi = _adaptive_boxes(lambda a, b, c, d: _integrand_bounds_2d(F, a, b, c, d), sq, tol, budget)
    return RealEnclosure.from_floats(lo * (1 - _FLOAT_PAD), hi * (1 + _FLOAT_PAD))


def ca_integral(F: StoppingFn, region=None, tol: float | None = None) -> RealEnclosure:
    if F.dim == 1:
        return ca_integral_1d(F, region, 1e-4 if tol is None else tol)
    return ca_integral_2d(F, region, tol)


# ---------------------------------------------------------------------------
# closed forms


def _iv_root(r, ctx):
    # endpoints are formed in interval arithmetic, not at the mp context precision
    c = ctx.mpf(r.center.re.to_mpf())
    rad = ctx.mpf(r.radius.to_mpf())
    return c + ctx.mpf([-1, 1]) * rad


def sturm_closed_form_bound(rs: RootSet, L: int, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    """Exact piecewise antiderivative of ``2 / dist_2`` over ``[-2^L, 2^L]``.

    On each piece between consecutive points of {roots, pairwise midpoints}
    the second-nearest root ``alpha`` is fixed and lies outside the piece, so
    the piece contributes ``2 |ln(|v - alpha| / |u - alpha|)|``.
    """
    reals = [r for r in rs.roots if r.is_real]
    if len(reals) < 2:
        raise DomainError("closed form needs at least two real roots")
    iv = mpmath.iv
    iv.prec = prec + 8
    ivr = [_iv_root(r, iv) for r in reals]
    # ordering keys at high precision: float positions merge clustered roots
    with mpmath.workprec(max(_MP_PREC, prec + 64)):
        key = [r.center.re.to_mpf() for r in reals]
        B = iv.mpf(2) ** L
        pts = [(-mpmath.mpf(2) ** L, -B), (mpmath.mpf(2) ** L, B)]
        for i, v in enumerate(ivr):
            pts.append((key[i], v))
        for i in range(len(ivr)):
            for j in range(i + 1, len(ivr)):
                pts.append(((key[i] + key[j]) / 2, (ivr[i] + ivr[j]) / 2))
        lim = mpmath.mpf(2) ** L
        pts = sorted((p for p in pts if -lim <= p[0] <= lim), key=lambda p: p[0])
        total = iv.mpf(0)
        for (ku, u), (kv, v) in zip(pts, pts[1:]):
            if kv <= ku:
                continue
            m = (ku + kv) / 2
            j = sorted(range(len(key)), key=lambda k: (abs(m - key[k]), k))[1]
            a = ivr[j]
            total += _iv_abs(2 * iv.log(abs(v - a) / abs(u - a)))
    return RealEnclosure.from_mpi(total)


def _iv_abs(x):
    if x.a >= 0:
        return x
    if x.b <= 0:
        return -x
    return mpmath.iv.mpf([0, max(-x.a, x.b)])


def _annulus_terms(seps: Sequence[RealEnclosure], coef_fn, L: int, prec: int) -> RealEnclosure:
    outer = enclose_ln(RealEnclosure(Dyadic(1, L + 1)), prec).add(
        enclose_ln(RealEnclosure(2), prec).mul(RealEnclosure(Dyadic(1, -1)), prec), prec)
    pi = enclose_pi(prec)
    total = RealEnclosure(0)
    for i, s in enumerate(seps):
        if s.lo.sign() <= 0:
            raise DomainError("separation lower bound is not positive")
        inner = enclose_ln(RealEnclosure(s.lo.half(), s.hi.half()), prec)
        # upper end uses the lower separation bound
        term = outer.sub(inner, prec).mul(pi, prec).mul(coef_fn(i), prec)
        total = total.add(term, prec)
    return total


def csturm_annulus_bound(rs: RootSet, L: int, prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    """``sum_i 16 pi (ln(sqrt2 2^{L+1}) - ln(d_i / 2))``."""
    if len(rs.roots) < 2:
        raise DomainError("annulus bound needs degree >= 2")
    return _annulus_terms(rs.separations, lambda i: RealEnclosure(16), L, prec)


def sqfree_ceval_annulus_bound(rs_p: RootSet, rs_dp: RootSet | None, L: int,
                               prec: int = DEFAULT_PRECISION) -> RealEnclosure:
    """``sum_{p roots} 36 d pi (...) + sum_{p' roots} 7056 d pi (...)`` with
    separations taken among the roots of ``p p'``."""
    d = len(rs_p.roots)
    if rs_dp is None or not rs_dp.roots:
        if d < 2:
            return RealEnclosure(0)
        raise DomainError("missing derivative roots")
    if rs_dp.poly is not None and not square_free_check(rs_dp.poly):
        raise DomainError("derivative is not square-free")
    comb = CombinedRoots(rs_p, rs_dp)
    return _annulus_terms(comb.separations,
                          lambda i: RealEnclosure(36 * d if i < d else 7056 * d), L, prec)


# ---------------------------------------------------------------------------
# Mahler-Davenport


@dataclass
class MDResult:
    lhs_product: RealEnclosure
    rhs_bound: RealEnclosure
    neg_log_sum: RealEnclosure
    corollary_bound: float
    layers: int
    valence: int
    edges: int
    holds: bool
    corollary_holds: bool


def orient_and_layer(rs, edges: Sequence[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    """Orient edges toward decreasing magnitude (ties by index) and split into
    layers in which every node has in-degree at most one."""
    mags = [float(r.center.abs2()) for r in rs.roots]

    def key(i):
        return (mags[i], i)

    layers: list[list] = []
    indeg: dict[int, int] = {}
    for i, j in edges:
        if i == j:
            raise DomainError("self-loop in root graph")
        tail, head = (i, j) if key(i) > key(j) else (j, i)
        lab = indeg.get(head, 0)
        indeg[head] = lab + 1
        while len(layers) <= lab:
            layers.append([])
        layers[lab].append((tail, head))
    return layers


def _mahler_measure(p: IntPolynomial, rs, prec: int) -> RealEnclosure:
    m = RealEnclosure(abs(p.lead))
    for r in rs.roots:
        mod = RealEnclosure(r.center.abs2()).sqrt(prec)
        lo = max(mod.lo - r.radius, Dyadic(1))
        hi = max(mod.hi + r.radius, Dyadic(1))
        m = m.mul(RealEnclosure(lo, hi), prec)
    return m


def _pair_dist(a, b, prec: int) -> RealEnclosure:
    d = RealEnclosure((a.center - b.center).abs2()).sqrt(prec)
    rr = a.radius + b.radius
    return RealEnclosure(max(d.lo - rr, Dyadic(0)), d.hi + rr)


def mahler_davenport(p: IntPolynomial, rs: RootSet, edges: Sequence[tuple[int, int]],
                     L: int | None = None, prec: int = DEFAULT_PRECISION) -> MDResult:
    d = p.degree
    L = p.bit_height if L is None else L
    layers = orient_and_layer(rs, edges)
    n_layers = len(layers)
    lhs = RealEnclosure(1)
    nls = RealEnclosure(0)
    for i, j in edges:
        dist = _pair_dist(rs.roots[i], rs.roots[j], prec)
        if dist.lo.sign() <= 0:
            raise DomainError("edge joins overlapping root enclosures")
        lhs = lhs.mul(dist, prec)
        nls = nls.sub(enclose_ln(dist, prec), prec)
    disc = abs(discriminant(p))
    M = _mahler_measure(p, rs, prec)
    base = enclose_sqrt(disc, prec)
    base = base.div(_pow_enc(M, d - 1, prec), prec)
    base = base.div(_pow_enc(enclose_sqrt(d, prec), d, prec), prec)  # d^{-d/2}
    rhs = _pow_enc(base, n_layers, prec)
    factor = RealEnclosure(d).div(enclose_sqrt(3, prec), prec)
    rhs = rhs.div(_pow_enc(factor, len(edges), prec), prec)
    val = {}
    for i, j in edges:
        val[i] = val.get(i, 0) + 1
        val[j] = val.get(j, 0) + 1
    k = max(val.values(), default=0)
    cor = k * d * L * math.log(2) + (k * d + len(edges)) * math.log(d) if d > 1 else 0.0
    return MDResult(lhs, rhs, nls, cor, n_layers, k, len(edges),
                    holds=lhs.lo >= rhs.hi, corollary_holds=float(nls.hi) <= cor + 1e-9 * max(1.0, cor))


def _pow_enc(x: RealEnclosure, k: int, prec: int) -> RealEnclosure:
    out = RealEnclosure(1)
    for _ in range(k):
        out = out.mul(x, prec)
    return out


# ---------------------------------------------------------------------------
# bit-complexity integrals


def log_cost(W: float) -> Callable:
    """``g(w) = 1 + log2(2 W / min(w, W))``: positive and nonincreasing."""
    def g(w):
        w = np.minimum(np.asarray(w, dtype=float), W)
        return 1.0 + np.log2(2.0 * W / w)
    g.W = W
    # S g(1/sqrt S) and S g(1/S) are convex and increasing in S for this g
    g.convex_density = True
    return g


def check_cost_function(g: Callable, W: float, samples: int = 257) -> None:
    ws = W * np.logspace(-60, 0, samples, base=2.0)
    vals = np.asarray(g(ws), dtype=float)
    if np.any(vals <= 0) or np.any(np.diff(vals) > 1e-12 * np.abs(vals[:-1])):
        raise DomainError("cost function must be positive and nonincreasing in the width")


def _bit_piece(v, terms, g, tol, budget):
    """First-order bracket of ``int_0^v S g(1 / S)`` with ``S = sum_k c_k / |x - z_k|``."""
    if not terms:
        return 0.0, 0.0

    def h(S):
        with np.errstate(divide="ignore"):
            return S * np.asarray(g(1.0 / S), dtype=float)

    s = np.linspace(0.0, v, 17)[:-1]
    t = np.append(s[1:], v)
    for _ in range(300):
        fs = _term_values(s, terms)
        ft = _term_values(t, terms)
        S_lo = np.minimum(fs, ft).sum(axis=1)
        S_hi = np.maximum(fs, ft).sum(axis=1)
        w = t - s
        lo = w * h(S_lo)
        hi = w * h(S_hi)
        err = hi - lo
        total = lo.sum()
        if err.sum() <= tol * total:
            return float(total), float(hi.sum())
        if len(s) > budget:
            raise ResourceError("bit quadrature budget exhausted")
        cut = err > 0.25 * tol * total / len(s)
        mid = 0.5 * (s[cut] + t[cut])
        s = np.concatenate([s[~cut], s[cut], mid])
        t = np.concatenate([t[~cut], mid, t[cut]])
    raise ResourceError("bit quadrature did not converge")


def bit_integral(F: StoppingFn, g: Callable | None, region=None, tol: float | None = None,
                 budget: int = 4_000_000) -> RealEnclosure:
    """Enclosure of ``int 2 g(F/2) / F dx`` (1D) or ``int 4 g(sqrt(F)/2) / F dA`` (2D).

    ``g = None`` means ``g = 1`` and returns exactly :func:`ca_integral`.
    """
    if g is None:
        return ca_integral(F, region, tol)
    if tol is None:
        tol = 1e-3
    if F.dim == 1:
        a, b = _interval_or_benchmark(F, region)
        check_cost_function(g, float(b - a))
        lo_sum = hi_sum = 0.0
        for v, terms in integrand_terms_1d(F, a, b):
            lo, hi = _bit_piece(v, terms, g, tol, budget)
            lo_sum += lo
            hi_sum += hi
        return RealEnclosure.from_floats(lo_sum * (1 - 1e-9), hi_sum * (1 + 1e-9))
    sq = _square_of(region, F.L)
    check_cost_function(g, sq[1] - sq[0])
    if F.d < 2:
        return RealEnclosure(0)

    def transform(S2):
        # 4 g(sqrt(F)/2) / F with S2 = 4 / F:  S2 * g(1 / sqrt(S2))
        with np.errstate(divide="ignore"):
            return S2 * np.asarray(g(1.0 / np.sqrt(S2)), dtype=float)

    if not getattr(g, "convex_density", False):
        lo, hi = _adaptive_boxes(lambda a, b, c, d: _integrand_bounds_2d(F, a, b, c, d, pointwise=True),
                                 sq, tol, budget, transform=transform)
        return RealEnclosure.from_floats(lo * (1 - 1e-9), hi * (1 + 1e-9))

    def bounds(a, b, c, d):
        # Jensen below, chord through the pointwise range above
        plo, phi = _integrand_bounds_2d(F, a, b, c, d, pointwise=True)
        mlo, mhi = _integrand_bounds_2d(F, a, b, c, d)
        mlo, mhi = np.maximum(mlo, plo), np.minimum(mhi, phi)
        tlo, thi = transform(plo), transform(phi)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            chord = tlo + (mhi - plo) * (thi - tlo) / (phi - plo)
        hi = np.where(phi > plo, chord, thi)
        hi = np.where(np.isfinite(phi), hi, np.inf)
        return transform(mlo), np.nan_to_num(hi, nan=np.inf)

    lo, hi = _adaptive_boxes(bounds, sq, tol, budget)
    return RealEnclosure.from_floats(lo * (1 - 1e-9), hi * (1 + 1e-9))


def leaf_cost_sum(tree, g: Callable | None) -> float:
    """``sum_{leaves} g(w(J))``."""
    if g is None:
        return float(tree.leaf_count)
    widths = np.array([float(tree.nodes[i].region.width) for i in tree.leaves])
    return float(np.sum(g(widths)))


# ---------------------------------------------------------------------------
# end-to-end soundness check


@dataclass
class BoundResult:
    integral_bound: RealEnclosure
    closed_form_bound: Optional[RealEnclosure]
    measured_leaves: int
    holds: bool
    tree: object = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "integral_bound": self.integral_bound.to_json(),
            "integral_bound_float": [float(self.integral_bound.lo), float(self.integral_bound.hi)],
            "closed_form_bound": None if self.closed_form_bound is None else self.closed_form_bound.to_json(),
            "measured_leaves": self.measured_leaves,
            "holds": self.holds,
        }


def closed_form_for(F: StoppingFn) -> RealEnclosure | None:
    if F.id == "sturm" and len(F.rs.real_indices()) >= 2:
        return sturm_closed_form_bound(F.rs, F.L)
    if F.id == "csturm" and F.d >= 2:
        return csturm_annulus_bound(F.rs, F.L)
    if F.id == "ceval" and F.d >= 2:
        return sqfree_ceval_annulus_bound(F.rs, F.rs_dp, F.L)
    return None


def check_ca_soundness(p: IntPolynomial, predicate_id: str, region=None, tol: float | None = None,
                       tree=None, F: StoppingFn | None = None, max_depth: int | None = None) -> BoundResult:
    from .subdivide import isolate

    F = F if F is not None else make_stopping(p, predicate_id)
    if tree is None:
        tree = isolate(p, predicate_id, max_depth=max_depth, rs=F.rs, L=F.L)
    if tree.truncated:
        raise ResourceError("subdivision truncated at max depth")
    integral = ca_integral(F, region, tol)
    bound = max(1.0, float(integral.hi))
    return BoundResult(integral, closed_form_for(F), tree.leaf_count, tree.leaf_count <= bound, tree)
