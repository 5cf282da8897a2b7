"""Exact interval arithmetic over rational endpoints.

Provides the sound range enclosure `expr_interval` used for pruning in the
builtin solver and for seeding optimization brackets, plus a three-valued
formula evaluator `formula_interval` (true everywhere / false everywhere by
more than delta / unknown) over boxes.

Domains mix continuous intervals, integer intervals, finite numeric grids,
and finite categorical value sets; a Box maps variable names to domains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import SortMismatchError
from .terms import (
    Add,
    And,
    BoolConst,
    Cmp,
    CmpOp,
    Const,
    Expr,
    Formula,
    Implies,
    Ite,
    Max2,
    Min2,
    Mul,
    Neg,
    Not,
    Or,
    Pow,
    SetVal,
    Sort,
    Value,
    Var,
)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def width(self) -> Fraction:
        return self.hi - self.lo

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return None if lo > hi else Interval(lo, hi)

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(products), max(products))

    def power(self, n: int) -> "Interval":
        if n == 0:
            return Interval(Fraction(1), Fraction(1))
        if n % 2 == 1 or self.lo >= 0:
            return Interval(self.lo**n, self.hi**n)
        if self.hi <= 0:
            return Interval(self.hi**n, self.lo**n)
        # Even power over a sign-crossing interval.
        return Interval(Fraction(0), max(self.lo**n, self.hi**n))


def point(x: Fraction) -> Interval:
    return Interval(x, x)


@dataclass(frozen=True)
class VarDomain:
    """Domain of one variable: an interval, a finite value list, or both absent sides.

    `values` is set for finite domains (knob grids, categorical value sets);
    `interval` is set for real/int ranges. Exactly one of the two is set.
    """

    sort: Sort
    interval: Interval | None = None
    values: tuple[Value, ...] | None = None

    def __post_init__(self) -> None:
        if (self.interval is None) == (self.values is None):
            raise ValueError("domain needs exactly one of interval/values")
        if self.values is not None and len(self.values) == 0:
            raise ValueError("finite domain must be nonempty")

    @staticmethod
    def real(lo, hi) -> "VarDomain":
        return VarDomain(Sort.REAL, Interval(Fraction(lo), Fraction(hi)))

    @staticmethod
    def integer(lo, hi) -> "VarDomain":
        return VarDomain(Sort.INT, Interval(Fraction(lo), Fraction(hi)))

    @staticmethod
    def grid(sort: Sort, values) -> "VarDomain":
        return VarDomain(sort, values=tuple(Fraction(v) for v in values))

    @staticmethod
    def categorical(labels) -> "VarDomain":
        return VarDomain(Sort.SET, values=tuple(str(v) for v in labels))

    def is_categorical(self) -> bool:
        return self.sort is Sort.SET

    def numeric_hull(self) -> Interval:
        if self.interval is not None:
            return self.interval
        if self.sort is Sort.SET:
            raise SortMismatchError("categorical domain has no numeric hull")
        vals = [v for v in self.values]  # type: ignore[union-attr]
        return Interval(min(vals), max(vals))

    def sample_values(self) -> tuple[Value, ...]:
        """All values for finite domains; endpoints/midpoint otherwise."""
        if self.values is not None:
            return self.values
        iv = self.interval
        assert iv is not None
        if self.sort is Sort.INT:
            lo = math.ceil(iv.lo)
            hi = math.floor(iv.hi)
            return tuple(Fraction(k) for k in range(lo, hi + 1))
        if iv.lo == iv.hi:
            return (iv.lo,)
        return (iv.lo, iv.midpoint(), iv.hi)


Box = dict[str, VarDomain]


class Tri(Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


def expr_interval(e: Expr, box: Box) -> Interval:
    """Sound rational enclosure of `e` over `box`.

    Ite conditions are decided three-valued: a decided condition narrows the
    enclosure to one branch, an undecided one yields the hull of both.
    """
    if isinstance(e, Const):
        return point(e.value)
    if isinstance(e, Var):
        if e.sort is Sort.SET:
            raise SortMismatchError(f"categorical variable {e.name!r} in arithmetic")
        try:
            dom = box[e.name]
        except KeyError:
            raise SortMismatchError(f"variable {e.name!r} missing from box") from None
        return dom.numeric_hull()
    if isinstance(e, Add):
        return expr_interval(e.lhs, box) + expr_interval(e.rhs, box)
    if isinstance(e, Mul):
        return expr_interval(e.lhs, box) * expr_interval(e.rhs, box)
    if isinstance(e, Neg):
        return -expr_interval(e.arg, box)
    if isinstance(e, Pow):
        return expr_interval(e.base, box).power(e.exponent)
    if isinstance(e, Ite):
        t = formula_interval(e.cond, box)
        if t is Tri.TRUE:
            return expr_interval(e.then, box)
        if t is Tri.FALSE:
            return expr_interval(e.orelse, box)
        return expr_interval(e.then, box).hull(expr_interval(e.orelse, box))
    if isinstance(e, Max2):
        a, b = expr_interval(e.lhs, box), expr_interval(e.rhs, box)
        return Interval(max(a.lo, b.lo), max(a.hi, b.hi))
    if isinstance(e, Min2):
        a, b = expr_interval(e.lhs, box), expr_interval(e.rhs, box)
        return Interval(min(a.lo, b.lo), min(a.hi, b.hi))
    if isinstance(e, SetVal):
        raise SortMismatchError("categorical literal in arithmetic")
    raise TypeError(f"not an expression: {e!r}")


def _set_side(e: Expr, box: Box) -> tuple[str, ...] | None:
    """Possible categorical values of a comparison side, or None if numeric."""
    if isinstance(e, SetVal):
        return (e.value,)
    if isinstance(e, Var) and e.sort is Sort.SET:
        dom = box.get(e.name)
        if dom is None or dom.values is None:
            raise SortMismatchError(f"categorical variable {e.name!r} missing finite domain")
        return tuple(str(v) for v in dom.values)
    return None


def _cmp_interval(c: Cmp, box: Box, delta: Fraction) -> Tri:
    sa = _set_side(c.lhs, box)
    sb = _set_side(c.rhs, box)
    if sa is not None or sb is not None:
        if sa is None or sb is None:
            raise SortMismatchError("comparison mixes categorical and numeric operands")
        if c.op not in (CmpOp.EQ, CmpOp.NE):
            raise SortMismatchError("categorical values support only ==/!=")
        equal_possible = any(x == y for x in sa for y in sb)
        must_equal = len(sa) == 1 and len(sb) == 1 and sa[0] == sb[0]
        if c.op is CmpOp.EQ:
            if must_equal:
                return Tri.TRUE
            return Tri.UNKNOWN if equal_possible else Tri.FALSE
        if must_equal:
            return Tri.FALSE
        return Tri.TRUE if not equal_possible else Tri.UNKNOWN

    d = expr_interval(c.lhs, box) + (-expr_interval(c.rhs, box))
    if c.op is CmpOp.LE:
        if d.hi <= 0:
            return Tri.TRUE
        if d.lo > delta:
            return Tri.FALSE
        return Tri.UNKNOWN
    if c.op is CmpOp.LT:
        if d.hi < 0:
            return Tri.TRUE
        if d.lo >= 0 and d.lo >= delta:
            return Tri.FALSE
        return Tri.UNKNOWN
    if c.op is CmpOp.GE:
        if d.lo >= 0:
            return Tri.TRUE
        if d.hi < -delta:
            return Tri.FALSE
        return Tri.UNKNOWN
    if c.op is CmpOp.GT:
        if d.lo > 0:
            return Tri.TRUE
        if d.hi <= 0 and d.hi <= -delta:
            return Tri.FALSE
        return Tri.UNKNOWN
    if c.op is CmpOp.EQ:
        if d.lo == d.hi == 0:
            return Tri.TRUE
        if d.lo > delta or d.hi < -delta:
            return Tri.FALSE
        return Tri.UNKNOWN
    # NE
    if d.lo == d.hi == 0:
        return Tri.FALSE
    if d.lo > 0 or d.hi < 0:
        return Tri.TRUE
    return Tri.UNKNOWN


def formula_interval(f: Formula, box: Box, delta: Fraction = Fraction(0)) -> Tri:
    """Three-valued truth of `f` over `box`.

    TRUE means every point of the box satisfies the exact formula; FALSE
    means no point satisfies it, with numeric atoms refuted by more than
    `delta` (so boxes containing delta-near-solutions are never refuted).
    """
    if isinstance(f, BoolConst):
        return Tri.TRUE if f.value else Tri.FALSE
    if isinstance(f, Cmp):
        return _cmp_interval(f, box, delta)
    if isinstance(f, And):
        out = Tri.TRUE
        for a in f.args:
            t = formula_interval(a, box, delta)
            if t is Tri.FALSE:
                return Tri.FALSE
            if t is Tri.UNKNOWN:
                out = Tri.UNKNOWN
        return out
    if isinstance(f, Or):
        out = Tri.FALSE
        for a in f.args:
            t = formula_interval(a, box, delta)
            if t is Tri.TRUE:
                return Tri.TRUE
            if t is Tri.UNKNOWN:
                out = Tri.UNKNOWN
        return out
    if isinstance(f, Not):
        t = formula_interval(f.arg, box, delta)
        if t is Tri.TRUE:
            return Tri.FALSE
        if t is Tri.FALSE:
            return Tri.TRUE
        return Tri.UNKNOWN
    if isinstance(f, Implies):
        return formula_interval(Or((Not(f.antecedent), f.consequent)), box, delta)
    raise TypeError(f"not a formula: {f!r}")
