"""Generic bisection engine over dyadic intervals and half-open squares."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import DomainError, ResourceError
from .exactnum import Dyadic, MAX_EXPONENT
from .polynomial import IntPolynomial, derivative, eval_at_dyadic, sturm_chain
from .predicates import (
    EXCLUDE,
    INCLUDE,
    SPLIT,
    PredicateVerdict,
    b_csturm,
    b_descartes,
    b_sqfree_ceval,
    b_sqfree_eval,
    b_sturm,
)

ALGORITHMS_1D = ("sturm", "descartes", "eval")
ALGORITHMS_2D = ("csturm", "ceval")
ALGORITHMS = ALGORITHMS_1D + ALGORITHMS_2D


@dataclass(frozen=True)
class Interval1D:
    """``(lo, hi)`` with midpoint checks (``open``) or ``(lo, hi]`` (``halfopen``)."""

    lo: Dyadic
    hi: Dyadic
    convention: str = "open"

    dim = 1

    def __post_init__(self):
        object.__setattr__(self, "lo", Dyadic.coerce(self.lo))
        object.__setattr__(self, "hi", Dyadic.coerce(self.hi))
        if not self.lo < self.hi:
            raise DomainError("interval needs lo < hi")

    @property
    def width(self) -> Dyadic:
        return self.hi - self.lo

    @property
    def mid(self) -> Dyadic:
        return (self.lo + self.hi).half()

    def bisect(self) -> list["Interval1D"]:
        m = self.mid
        if abs(m.exponent) >= MAX_EXPONENT - 1:
            raise ResourceError("bisection exponent overflow")
        return [Interval1D(self.lo, m, self.convention), Interval1D(m, self.hi, self.convention)]

    def contains(self, x) -> bool:
        if self.convention == "open":
            return self.lo < x < self.hi
        return self.lo < x <= self.hi

    def format(self) -> str:
        left = "("
        right = ")" if self.convention == "open" else "]"
        return f"{left}{self.lo}, {self.hi}{right}"


@dataclass(frozen=True)
class Square2D:
    """Half-open square ``[x0, x1) x (y0, y1]``."""

    x0: Dyadic
    x1: Dyadic
    y0: Dyadic
    y1: Dyadic

    dim = 2

    def __post_init__(self):
        for name in ("x0", "x1", "y0", "y1"):
            object.__setattr__(self, name, Dyadic.coerce(getattr(self, name)))
        if not (self.x0 < self.x1 and self.x1 - self.x0 == self.y1 - self.y0):
            raise DomainError("square needs equal positive side lengths")

    @property
    def width(self) -> Dyadic:
        return self.x1 - self.x0

    @property
    def area(self) -> Dyadic:
        return self.width * self.width

    @property
    def mid(self) -> tuple[Dyadic, Dyadic]:
        return (self.x0 + self.x1).half(), (self.y0 + self.y1).half()

    def bisect(self) -> list["Square2D"]:
        mx, my = self.mid
        if abs(mx.exponent) >= MAX_EXPONENT - 1 or abs(my.exponent) >= MAX_EXPONENT - 1:
            raise ResourceError("bisection exponent overflow")
        return [
            Square2D(self.x0, mx, self.y0, my),
            Square2D(mx, self.x1, self.y0, my),
            Square2D(self.x0, mx, my, self.y1),
            Square2D(mx, self.x1, my, self.y1),
        ]

    def contains(self, z) -> bool:
        re, im = (z.re, z.im) if hasattr(z, "re") else z
        return self.x0 <= re < self.x1 and self.y0 < im <= self.y1

    def format(self) -> str:
        return f"[{self.x0}, {self.x1})x({self.y0}, {self.y1}]"


def bisect(r):
    return r.bisect()


def benchmark_region(L: int, dim: int = 1, convention: str = "open"):
    R = Dyadic(1, L)
    if dim == 1:
        return Interval1D(-R, R, convention)
    return Square2D(-R, R, -R, R)


def default_max_depth(d: int, L: int) -> int:
    return 4 * d * (L + math.ceil(math.log2(d + 1))) + 64


@dataclass
class Node:
    region: object
    depth: int
    verdict: PredicateVerdict
    parent: Optional[int] = None
    children: list = field(default_factory=list)


@dataclass
class SubdivisionTree:
    nodes: list
    dim: int
    midpoint_roots: list = field(default_factory=list)
    truncated: bool = False

    @property
    def leaves(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if not n.children]

    @property
    def leaf_count(self) -> int:
        return len(self.leaves)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def max_depth(self) -> int:
        return max(n.depth for n in self.nodes)

    def leaf_regions(self, outcome: str | None = None) -> list:
        return [self.nodes[i].region for i in self.leaves
                if outcome is None or self.nodes[i].verdict.outcome == outcome]

    def stats(self) -> dict:
        return {"leaf_count": self.leaf_count, "node_count": self.node_count,
                "max_depth": self.max_depth, "truncated": self.truncated}

    def dump(self) -> str:
        """One line per node: depth, region with exact endpoints, verdict."""
        lines = []
        for n in self.nodes:
            lines.append(f"{n.depth} {n.region.format()} {n.verdict.outcome}")
        return "\n".join(lines)


def run_bisection(p: IntPolynomial, predicate: Callable, root_region, max_depth: int | None = None,
                  ) -> SubdivisionTree:
    """Bisect breadth-first until every leaf is terminal.

    In the open 1D convention each split midpoint is tested for an exact root,
    which is recorded separately.  A node that still splits at ``max_depth`` is
    left as a non-terminal leaf and the tree is flagged as truncated.
    """
    if max_depth is None:
        d = max(p.degree, 1) if not p.is_zero() else 1
        max_depth = default_max_depth(d, p.bit_height if not p.is_zero() else 1)
    dim = root_region.dim
    tree = SubdivisionTree(nodes=[], dim=dim)
    tree.nodes.append(Node(root_region, 0, predicate(root_region)))
    queue = deque([0])
    seen_mid = set()
    while queue:
        i = queue.popleft()
        node = tree.nodes[i]
        if node.verdict.outcome != SPLIT:
            continue
        if node.depth >= max_depth:
            tree.truncated = True
            continue
        region = node.region
        if dim == 1 and region.convention == "open":
            m = region.mid
            if m not in seen_mid and eval_at_dyadic(p, m).is_zero():
                seen_mid.add(m)
                tree.midpoint_roots.append(m)
        for child in region.bisect():
            tree.nodes.append(Node(child, node.depth + 1, predicate(child), parent=i))
            node.children.append(len(tree.nodes) - 1)
            queue.append(len(tree.nodes) - 1)
    return tree


# ---------------------------------------------------------------------------
# algorithm set-up


def make_predicate(alg: str, p: IntPolynomial, rs=None) -> Callable:
    """Region -> verdict callable for one of the five algorithms."""
    if alg == "sturm":
        chain = sturm_chain(p)
        return lambda J: b_sturm(chain, J, open_interval=(J.convention == "open"))
    if alg == "descartes":
        return lambda J: b_descartes(p, J)
    if alg == "eval":
        dp = derivative(p)
        return lambda J: b_sqfree_eval(p, dp, J)
    if alg in ALGORITHMS_2D:
        if rs is None:
            from .roots_oracle import approximate_roots
            rs = approximate_roots(p)
        if alg == "csturm":
            return lambda S: b_csturm(rs, S)
        dp = derivative(p)
        return lambda S: b_sqfree_ceval(p, dp, S, rs)
    raise DomainError(f"unknown algorithm {alg!r}")


def isolate(p: IntPolynomial, alg: str, max_depth: int | None = None, rs=None,
            L: int | None = None) -> SubdivisionTree:
    """Run ``alg`` on the benchmark region of ``p``."""
    if p.is_zero() or p.degree < 1:
        raise DomainError("isolation needs degree >= 1")
    L = p.bit_height if L is None else L
    dim = 2 if alg in ALGORITHMS_2D else 1
    region = benchmark_region(L, dim)
    return run_bisection(p, make_predicate(alg, p, rs), region, max_depth)


# ---------------------------------------------------------------------------
# leaf charging


def _log_factor_default(d: int, L: int, h: int) -> float:
    return max(1.0, math.log2(d + L + h + 2)) ** 2


@dataclass(frozen=True)
class CostModel:
    """Per-node bit cost ``g_node(h)`` at depth ``h``.

    ``classical``: ``C (d^3 L + d^3 h)``; ``fast``: ``(d^2 L + d^2 h) k(d, L, h)``;
    ``eval_fast``: ``(d L + d^2 h) k(d, L, h)``; ``unit``: 1.
    """

    kind: str
    d: int
    L: int
    C: int | Fraction = 1
    log_factor: Callable[[int, int, int], float] = _log_factor_default

    def node_cost(self, h: int):
        d, L = self.d, self.L
        if self.kind == "classical":
            return Fraction(self.C) * (d**3 * L + d**3 * h)
        if self.kind == "fast":
            return (d * d * L + d * d * h) * self.log_factor(d, L, h)
        if self.kind == "eval_fast":
            return (d * L + d * d * h) * self.log_factor(d, L, h)
        if self.kind == "unit":
            return Fraction(1)
        raise DomainError(f"unknown cost model {self.kind!r}")


@dataclass
class LeafCharges:
    per_leaf: list
    total: object


def accumulate_leaf_costs(tree: SubdivisionTree, cm: CostModel | Callable[[int], object]) -> LeafCharges:
    """Push each node's cost down to the leaves, halving (1D) or quartering (2D) per level."""
    if tree.truncated:
        raise DomainError("cannot charge a truncated tree")
    g = cm.node_cost if isinstance(cm, CostModel) else cm
    ratio = 2 if tree.dim == 1 else 4
    inherited = {0: Fraction(0)}
    per_leaf = []
    for i, node in enumerate(tree.nodes):  # parents precede children
        own = inherited.pop(i) + g(node.depth)
        if node.children:
            share = own / ratio
            for c in node.children:
                inherited[c] = share
        else:
            per_leaf.append(own)
    return LeafCharges(per_leaf, sum(per_leaf, Fraction(0)))
