"""Polynomial families, experiment orchestration and the ``rootamort`` CLI."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import random
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

from .amortization import (
    bit_integral,
    check_ca_soundness,
    leaf_cost_sum,
    log_cost,
    mahler_davenport,
    make_stopping,
)
from .errors import DomainError, RootAmortError
from .polynomial import IntPolynomial, derivative, square_free_check
from .roots_oracle import build_graph, count_in_square, count_real_in_open
from .subdivide import ALGORITHMS, isolate
from .predicates import EXCLUDE, INCLUDE

log = logging.getLogger("rootamort")

FAMILIES = ("mignotte", "wilkinson", "chebyshev", "random", "file")
GRAPH_KINDS = ("real_chain", "nearest_neighbor", "conjugate_pairs")


# ---------------------------------------------------------------------------
# families


def mignotte(d: int, a: int) -> IntPolynomial:
    """``x^d - 2 (a x - 1)^2``."""
    if d < 3:
        raise DomainError("mignotte needs d >= 3")
    c = [0] * (d + 1)
    c[d] = 1
    c[0] -= 2
    c[1] += 4 * a
    c[2] -= 2 * a * a
    return IntPolynomial(c)


def mignotte_a_for(L: int) -> int:
    """Largest ``a`` keeping every mignotte coefficient below ``2^L``."""
    a = max(1, math.isqrt((2**L - 1) // 2))
    while a > 1 and max(2 * a * a, 4 * a) >= 2**L:
        a -= 1
    return a


def wilkinson(n: int) -> IntPolynomial:
    return IntPolynomial.from_roots(range(1, n + 1))


def chebyshev(n: int) -> IntPolynomial:
    """``2 T_n(x / 2)``: monic with integer coefficients and roots ``2 cos(...)``."""
    if n < 1:
        raise DomainError("chebyshev needs n >= 1")
    prev, cur = [2], [0, 1]  # 2 T_0(x/2) = 2, 2 T_1(x/2) = x
    for _ in range(n - 1):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return IntPolynomial(cur)


def random_poly(d: int, L: int, seed: int, tries: int = 64) -> IntPolynomial:
    """Uniform coefficients in ``(-2^L, 2^L)``, nonzero leading term, square-free."""
    rng = random.Random(seed)
    bound = 2**L - 1
    for _ in range(tries):
        c = [rng.randint(-bound, bound) for _ in range(d)]
        lead = 0
        while lead == 0:
            lead = rng.randint(-bound, bound)
        p = IntPolynomial(c + [lead])
        if p.degree == d and square_free_check(p):
            return p
    raise DomainError("no square-free random polynomial found")


def gen_family(name: str, **params) -> IntPolynomial:
    if name == "mignotte":
        a = params.get("a")
        if a is None:
            a = mignotte_a_for(params.get("L", 8))
        return mignotte(params["d"], a)
    if name == "wilkinson":
        return wilkinson(params.get("n", params.get("d")))
    if name == "chebyshev":
        return chebyshev(params.get("n", params.get("d")))
    if name == "random":
        return random_poly(params["d"], params.get("L", 8), params.get("seed", 0))
    if name == "file":
        return read_poly(params["path"])
    raise DomainError(f"unknown family {name!r}")


def read_poly(spec: str) -> IntPolynomial:
    """A file holding ascending coefficients, or the coefficients inline."""
    if os.path.exists(spec):
        with open(spec) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.startswith("#")]
        return IntPolynomial.parse(" ".join(lines))
    return IntPolynomial.parse(spec)


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    family: str
    d: Optional[int] = None
    L: int = 8
    a: Optional[int] = None
    seed: int = 0
    path: Optional[str] = None
    algorithms: list = field(default_factory=lambda: ["sturm"])
    tol_1d: float = 1e-4
    tol_2d: Optional[float] = None
    bit_tol: Optional[float] = None
    max_depth: Optional[int] = None
    out: Optional[str] = None
    workers: int = 1
    with_bit: bool = True

    def polynomial(self) -> IntPolynomial:
        params = {"d": self.d, "L": self.L, "seed": self.seed, "path": self.path}
        if self.a is not None:
            params["a"] = self.a
        return gen_family(self.family, **params)


def check_isolation(tree, rs) -> tuple[bool, str]:
    """Include leaves biject with the certified roots in the root region.

    1D trees are checked against real roots (open leaves plus exact midpoint
    roots), 2D trees against all roots.  Exclude leaves must be root-free.
    """
    if tree.truncated:
        return False, "truncated"
    root = tree.nodes[0].region
    found = 0
    for i in tree.leaves:
        node = tree.nodes[i]
        r = node.region
        if tree.dim == 1:
            n = count_real_in_open(rs, r.lo, r.hi)
        else:
            n = count_in_square(rs, r.x0, r.x1, r.y0, r.y1)
        want = {EXCLUDE: 0, INCLUDE: 1}.get(node.verdict.outcome)
        if n != want:
            return False, f"{node.verdict.outcome} leaf {r.format()} holds {n} roots"
        found += n
    if tree.dim == 1:
        mids = tree.midpoint_roots
        if len(set(mids)) != len(mids):
            return False, "duplicate midpoint root"
        for m in mids:
            if not any(c.radius.is_zero() and c.center.re == m and c.center.im.is_zero() for c in rs.roots):
                return False, f"midpoint {m} is not a certified exact root"
        total = count_real_in_open(rs, root.lo, root.hi)
        found += len(mids)
    else:
        total = count_in_square(rs, root.x0, root.x1, root.y0, root.y1)
    if found != total:
        return False, f"{found} roots isolated, {total} in region"
    return True, f"{total} roots"


def _enc(x) -> Optional[dict]:
    if x is None:
        return None
    return {"lo": float(x.lo), "hi": float(x.hi), "exact": x.to_json()}


def run_case(coeffs: tuple, alg: str, tol_1d: float = 1e-4, tol_2d: Optional[float] = None,
             bit_tol: Optional[float] = None, max_depth: Optional[int] = None, with_bit: bool = True,
             key: str = "") -> dict:
    """One (polynomial, algorithm) record; errors are captured, never raised."""
    p = IntPolynomial(coeffs)
    rec = {"key": key or f"{p.format()}|{alg}", "poly": list(map(str, p.coeffs)), "alg": alg}
    t0 = time.perf_counter()
    try:
        if p.degree < 1:
            raise DomainError("degree must be at least 1")
        if not square_free_check(p):
            raise DomainError("not square-free")
        rec.update(d=p.degree, L=p.bit_height)
        if alg in ("eval", "ceval") and p.degree >= 2 and not square_free_check(derivative(p)):
            raise DomainError("derivative not square-free")
        F = make_stopping(p, alg)
        tree = isolate(p, alg, max_depth=max_depth, rs=F.rs)
        res = check_ca_soundness(p, alg, tol=tol_1d if F.dim == 1 else tol_2d, tree=tree, F=F)
        iso_ok, iso_detail = check_isolation(tree, F.rs)
        rec.update(
            isolation_ok=iso_ok,
            isolation=iso_detail,
            measured_leaves=res.measured_leaves,
            node_count=tree.node_count,
            max_depth=tree.max_depth,
            midpoint_roots=[r.to_json() for r in tree.midpoint_roots],
            ca_bound=_enc(res.integral_bound),
            closed_form_bound=_enc(res.closed_form_bound),
            ca_holds=res.holds,
        )
        md = {}
        for kind in GRAPH_KINDS:
            edges = build_graph(F.rs, kind)
            r = mahler_davenport(p, F.rs, edges)
            md[kind] = {"edges": len(edges), "lhs": _enc(r.lhs_product), "rhs": _enc(r.rhs_bound),
                        "neg_log_sum": _enc(r.neg_log_sum), "corollary": r.corollary_bound,
                        "holds": r.holds, "corollary_holds": r.corollary_holds}
        rec["md"] = md
        holds = res.holds and all(v["holds"] and v["corollary_holds"] for v in md.values())
        if with_bit:
            W = float(tree.nodes[0].region.width)
            g = log_cost(W)
            bound = bit_integral(F, g, tol=bit_tol)
            total = leaf_cost_sum(tree, g)
            bit_ok = total <= max(float(g(W)), float(bound.hi))
            rec["bit"] = {"g1_sum": tree.leaf_count, "g1_bound": _enc(res.integral_bound),
                          "log_sum": total, "log_bound": _enc(bound), "holds": bit_ok}
            holds = holds and bit_ok
        rec["holds"] = holds
    except RootAmortError as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
        rec["holds"] = False
    rec["wall_time"] = round(time.perf_counter() - t0, 4)
    return rec


def _write_jsonl(records: Iterable[dict], path: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    os.replace(tmp, path)


def run_cases(cases: list[tuple], workers: int = 1, **kw) -> list[dict]:
    """``cases`` holds ``(coeffs, alg, key)`` triples; order of the result matches."""
    if workers <= 1 or len(cases) <= 1:
        return [run_case(c, a, key=k, **kw) for c, a, k in cases]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(run_case, c, a, key=k, **kw) for c, a, k in cases]
        return [f.result() for f in futs]


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    try:
        p = cfg.polynomial()
    except RootAmortError as exc:
        recs = [{"key": f"{cfg.family}|{a}", "alg": a, "error": f"{type(exc).__name__}: {exc}",
                 "holds": False} for a in cfg.algorithms]
    else:
        cases = [(p.coeffs, a, f"{cfg.family}:d={cfg.d}:L={cfg.L}:seed={cfg.seed}|{a}")
                 for a in cfg.algorithms]
        recs = run_cases(cases, cfg.workers, tol_1d=cfg.tol_1d, tol_2d=cfg.tol_2d, bit_tol=cfg.bit_tol,
                         max_depth=cfg.max_depth, with_bit=cfg.with_bit)
    if cfg.out:
        _write_jsonl(recs, cfg.out)
    return recs


def scaling_study(family: str, d_values: Iterable[int], L: int, alg: str, seed: int = 0) -> dict:
    """Leaf counts against ``d (L ln 2 + ln d)``."""
    rows = []
    for d in d_values:
        p = gen_family(family, d=d, L=L, seed=seed)
        tree = isolate(p, alg)
        ref = d * (L * math.log(2) + math.log(d))
        rows.append({"d": d, "leaves": tree.leaf_count, "reference": ref, "ratio": tree.leaf_count / ref})
    ratios = [r["ratio"] for r in rows]
    return {"family": family, "L": L, "alg": alg, "rows": rows,
            "max_over_min": max(ratios) / min(ratios) if rows else None}


# ---------------------------------------------------------------------------
# CLI


def _parse_range(s: str) -> list[int]:
    parts = [int(t) for t in s.split(":")]
    if len(parts) == 1:
        return parts
    a, b = parts[0], parts[1]
    step = parts[2] if len(parts) > 2 else 1
    return list(range(a, b + 1, step))


def _cmd_isolate(args) -> int:
    p = read_poly(args.poly)
    tree = isolate(p, args.alg, max_depth=args.depth)
    print(tree.dump())
    print(f"# leaves={tree.leaf_count} nodes={tree.node_count} max_depth={tree.max_depth}"
          f" truncated={tree.truncated}")
    for r in tree.leaf_regions("Include"):
        print(f"root in {r.format()}")
    for m in tree.midpoint_roots:
        print(f"exact root {m}")
    return 1 if tree.truncated else 0


def _cmd_verify(args) -> int:
    algs = [a.strip() for a in args.alg.split(",") if a.strip()]
    for a in algs:
        if a not in ALGORITHMS:
            raise SystemExit(f"unknown algorithm {a}")
    cfg = ExperimentConfig(family=args.family, d=args.d, L=args.L, a=args.a, seed=args.seed,
                           path=args.path, algorithms=algs, out=args.out, workers=args.workers,
                           max_depth=args.depth)
    recs = run_experiment(cfg)
    for r in recs:
        status = "ok" if r.get("holds") else ("ERROR " + r["error"] if "error" in r else "VIOLATION")
        print(f"{r['key']}: leaves={r.get('measured_leaves')} "
              f"bound={(r.get('ca_bound') or {}).get('hi')} {status}")
    return 0 if all(r.get("holds") for r in recs) else 1


def _cmd_scaling(args) -> int:
    out = scaling_study(args.family, _parse_range(args.d_range), args.L, args.alg, args.seed)
    print(f"{'d':>4} {'leaves':>8} {'reference':>10} {'ratio':>8}")
    for r in out["rows"]:
        print(f"{r['d']:>4} {r['leaves']:>8} {r['reference']:>10.3f} {r['ratio']:>8.4f}")
    print(f"max/min ratio: {out['max_over_min']:.4f}")
    if args.out:
        _write_jsonl(out["rows"], args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rootamort", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("isolate", help="isolate roots and dump the subdivision tree")
    p.add_argument("--poly", required=True, help="file or inline ascending coefficients, e.g. '-2 0 1'")
    p.add_argument("--alg", choices=ALGORITHMS, default="sturm")
    p.add_argument("--depth", type=int, default=None)
    p.set_defaults(fn=_cmd_isolate)

    p = sub.add_parser("verify", help="check amortization bounds on a generated polynomial")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--L", type=int, default=8)
    p.add_argument("--a", type=int, default=None, help="mignotte parameter (default: largest fitting L)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--path", default=None, help="polynomial file for --family file")
    p.add_argument("--alg", default="sturm", help="comma-separated list")
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--depth", type=int, default=None)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("scaling", help="leaf counts against d (L ln2 + ln d)")
    p.add_argument("--family", choices=FAMILIES[:-1], required=True)
    p.add_argument("--d-range", required=True, help="a:b[:step]")
    p.add_argument("--L", type=int, default=8)
    p.add_argument("--alg", choices=ALGORITHMS, default="descartes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_scaling)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except RootAmortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
