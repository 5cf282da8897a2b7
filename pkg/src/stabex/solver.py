"""Delta-decision solving for quantifier-free formulas over boxed domains.

The contract, shared by the builtin solver and the external SMT client:

- Sat(witness): the witness satisfies every atom with slack delta
  (a <= b accepted iff a <= b + delta; equality iff |a - b| <= delta).
- Unsat: the exact formula has no solution in the box. Pruning only ever
  discards boxes where some atom is violated by MORE than delta at every
  point, so an Unsat answer is exact (and then some).
- Unknown(reason): timeout, cell budget, resolution floor, or external
  solver trouble.

The builtin solver is branch-and-prune: contract the box against the
top-level conjuncts, refute or accept by interval evaluation, test the box
midpoint exactly, then split (finite dimensions halved first, then the
widest real/int dimension bisected; real widths are never split below
delta/4).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Union

from .errors import ScopeError
from .intervals import (
    Box,
    Interval,
    Tri,
    VarDomain,
    expr_interval,
    formula_interval,
)
from .terms import (
    And,
    Assignment,
    BoolConst,
    Cmp,
    CmpOp,
    Expr,
    Formula,
    SetVal,
    Sort,
    Value,
    Var,
    delta_satisfies,
    free_vars,
    nnf,
)


@dataclass(frozen=True)
class SolverQuery:
    """A quantifier-free formula plus a box covering all its free variables.

    Grids and categorical domains ride along inside the VarDomain entries.
    prefer_upper asks the search to explore upper halves first; witness
    choice is otherwise arbitrary, but counterexample searches want the
    topmost violation so that exclusion regions cover fresh ground.
    """

    formula: Formula
    box: Box
    prefer_upper: bool = False

    def validate(self) -> None:
        for name, sort in free_vars(self.formula).items():
            if name not in self.box:
                raise ScopeError(f"free variable {name!r} is not boxed")
            if self.box[name].sort is not sort:
                raise ScopeError(
                    f"variable {name!r}: formula uses sort {sort.value}, "
                    f"box declares {self.box[name].sort.value}"
                )


@dataclass(frozen=True)
class SolverConfig:
    delta: Fraction = Fraction(1, 1000)
    timeout: float | None = None
    seed: int = 0
    backend: str = "builtin"  # "builtin" | "external"
    command: tuple[str, ...] | None = None  # external solver argv
    max_cells: int = 200_000

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def with_delta(self, delta: Fraction) -> "SolverConfig":
        return replace(self, delta=Fraction(delta))


@dataclass
class SolverStats:
    cells: int = 0
    prunes: int = 0
    point_checks: int = 0
    max_depth: int = 0
    elapsed: float = 0.0
    queries: int = 1

    def merge(self, other: "SolverStats") -> None:
        self.cells += other.cells
        self.prunes += other.prunes
        self.point_checks += other.point_checks
        self.max_depth = max(self.max_depth, other.max_depth)
        self.elapsed += other.elapsed
        self.queries += other.queries


@dataclass(frozen=True)
class Sat:
    witness: dict[str, Value]
    stats: SolverStats = field(default_factory=SolverStats)


@dataclass(frozen=True)
class Unsat:
    stats: SolverStats = field(default_factory=SolverStats)


@dataclass(frozen=True)
class Unknown:
    reason: str
    stats: SolverStats = field(default_factory=SolverStats)


SolverResult = Union[Sat, Unsat, Unknown]
Backend = Callable[[SolverQuery, SolverConfig], SolverResult]


def check_sat(query: SolverQuery, cfg: SolverConfig) -> SolverResult:
    """Dispatch a query to the configured backend."""
    if cfg.backend == "external":
        from .smtlib import external_solve

        return external_solve(query, cfg)
    return builtin_solve(query, cfg)


# ---------------------------------------------------------------------------
# Builtin branch-and-prune


def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out: list[Formula] = []
        for g in f.args:
            out.extend(_conjuncts(g))
        return out
    return [f]


def _ceil(x: Fraction) -> Fraction:
    return Fraction(math.ceil(x))


def _floor(x: Fraction) -> Fraction:
    return Fraction(math.floor(x))


def _narrow_numeric(
    dom: VarDomain, lo: Fraction | None, hi: Fraction | None
) -> VarDomain | None:
    """Intersect a numeric domain with [lo, hi]; None means empty."""
    if dom.values is not None:
        vals = [
            v
            for v in dom.values
            if (lo is None or v >= lo) and (hi is None or v <= hi)
        ]
        if not vals:
            return None
        if vals == list(dom.values):
            return dom
        return VarDomain(dom.sort, values=tuple(vals))
    assert dom.interval is not None
    new_lo, new_hi = dom.interval.lo, dom.interval.hi
    if lo is not None and lo > new_lo:
        new_lo = lo
    if hi is not None and hi < new_hi:
        new_hi = hi
    if dom.sort is Sort.INT:
        new_lo, new_hi = _ceil(new_lo), _floor(new_hi)
    if new_lo > new_hi:
        return None
    if new_lo == dom.interval.lo and new_hi == dom.interval.hi:
        return dom
    return VarDomain(dom.sort, interval=Interval(new_lo, new_hi))


def _narrow_categorical(dom: VarDomain, keep: set[str], invert: bool) -> VarDomain | None:
    assert dom.values is not None
    vals = [v for v in dom.values if (v in keep) != invert]
    if not vals:
        return None
    if len(vals) == len(dom.values):
        return dom
    return VarDomain(dom.sort, values=tuple(vals))


def _contract_atom(atom: Cmp, box: Box, delta: Fraction) -> bool | None:
    """Narrow box domains in place from one conjunct.

    Returns None if the atom empties a domain (prune), True if something
    changed, False otherwise. Only delta-inflated bounds are applied, so no
    delta-satisfying point is ever removed.
    """
    changed = False
    for var_side, expr_side, op in (
        (atom.lhs, atom.rhs, atom.op),
        (atom.rhs, atom.lhs, _FLIP[atom.op]),
    ):
        if not isinstance(var_side, Var) or var_side.name not in box:
            continue
        dom = box[var_side.name]
        if dom.is_categorical():
            if atom.op in (CmpOp.EQ, CmpOp.NE) and isinstance(expr_side, SetVal):
                narrowed = _narrow_categorical(
                    dom, {expr_side.value}, invert=atom.op is CmpOp.NE
                )
                if narrowed is None:
                    return None
                if narrowed is not dom:
                    box[var_side.name] = narrowed
                    changed = True
            continue
        if isinstance(expr_side, SetVal):
            continue
        try:
            iv = expr_interval(expr_side, box)
        except (KeyError, ZeroDivisionError):
            continue
        lo: Fraction | None = None
        hi: Fraction | None = None
        if op is CmpOp.EQ:
            lo, hi = iv.lo - delta, iv.hi + delta
        elif op in (CmpOp.LE, CmpOp.LT):
            hi = iv.hi + delta
        elif op in (CmpOp.GE, CmpOp.GT):
            lo = iv.lo - delta
        else:  # NE narrows nothing
            continue
        narrowed = _narrow_numeric(dom, lo, hi)
        if narrowed is None:
            return None
        if narrowed is not dom:
            box[var_side.name] = narrowed
            changed = True
    return changed


_FLIP = {
    CmpOp.LT: CmpOp.GT,
    CmpOp.LE: CmpOp.GE,
    CmpOp.GT: CmpOp.LT,
    CmpOp.GE: CmpOp.LE,
    CmpOp.EQ: CmpOp.EQ,
    CmpOp.NE: CmpOp.NE,
}


def _contract(conjuncts: list[Formula], box: Box, delta: Fraction) -> Box | None:
    """Fixpoint contraction of a box against Cmp conjuncts; None = empty."""
    box = dict(box)
    for _round in range(8):
        changed = False
        for atom in conjuncts:
            if not isinstance(atom, Cmp):
                continue
            res = _contract_atom(atom, box, delta)
            if res is None:
                return None
            changed = changed or res
        if not changed:
            break
    return box


def sample_point(box: Box) -> Assignment:
    """Deterministic representative of a box (midpoints, middle grid values)."""
    point: dict[str, Value] = {}
    for name, dom in box.items():
        if dom.values is not None:
            point[name] = dom.values[len(dom.values) // 2]
            continue
        assert dom.interval is not None
        mid = dom.interval.midpoint()
        if dom.sort is Sort.INT:
            m = _floor(mid)
            if m < dom.interval.lo:
                m = _ceil(dom.interval.lo)
            point[name] = m
        else:
            point[name] = mid
    return point


def _pick_split(box: Box, floor: Fraction) -> str | None:
    """Finite dimensions with >1 value first, else widest splittable interval."""
    for name, dom in box.items():
        if dom.values is not None and len(dom.values) > 1:
            return name
    best: str | None = None
    best_width = floor
    for name, dom in box.items():
        if dom.interval is None:
            continue
        width = dom.interval.width()
        if dom.sort is Sort.INT:
            if width >= 1 and (best is None or width > best_width):
                best, best_width = name, width
        elif width > best_width:
            best, best_width = name, width
    return best


def _split(box: Box, name: str) -> tuple[Box, Box]:
    dom = box[name]
    lo_box, hi_box = dict(box), dict(box)
    if dom.values is not None:
        mid = len(dom.values) // 2
        lo_box[name] = VarDomain(dom.sort, values=dom.values[:mid])
        hi_box[name] = VarDomain(dom.sort, values=dom.values[mid:])
        return lo_box, hi_box
    assert dom.interval is not None
    mid = dom.interval.midpoint()
    if dom.sort is Sort.INT:
        m = _floor(mid)
        lo_box[name] = VarDomain.integer(dom.interval.lo, m)
        hi_box[name] = VarDomain.integer(m + 1, dom.interval.hi)
    else:
        lo_box[name] = VarDomain.real(dom.interval.lo, mid)
        hi_box[name] = VarDomain.real(mid, dom.interval.hi)
    return lo_box, hi_box


def builtin_solve(query: SolverQuery, cfg: SolverConfig) -> SolverResult:
    query.validate()
    start = time.monotonic()
    stats = SolverStats()
    delta = cfg.delta
    formula = nnf(query.formula)
    if formula == BoolConst(False):
        stats.elapsed = time.monotonic() - start
        return Unsat(stats)

    conjuncts = _conjuncts(formula)
    width_floor = delta / 4
    # (box, depth) stack; lower halves are explored first unless the query
    # asks for the opposite.
    stack: list[tuple[Box, int]] = [(dict(query.box), 0)]
    floored = False

    while stack:
        if cfg.timeout is not None and time.monotonic() - start > cfg.timeout:
            stats.elapsed = time.monotonic() - start
            return Unknown("timeout", stats)
        stats.cells += 1
        if stats.cells > cfg.max_cells:
            stats.elapsed = time.monotonic() - start
            return Unknown("cell budget exhausted", stats)

        box, depth = stack.pop()
        stats.max_depth = max(stats.max_depth, depth)

        contracted = _contract(conjuncts, box, delta)
        if contracted is None:
            stats.prunes += 1
            continue
        box = contracted

        tv = formula_interval(formula, box, delta)
        if tv is Tri.FALSE:
            stats.prunes += 1
            continue

        point = sample_point(box)
        stats.point_checks += 1
        if delta_satisfies(query.formula, point, delta):
            stats.elapsed = time.monotonic() - start
            return Sat(dict(point), stats)

        name = _pick_split(box, width_floor)
        if name is None:
            # Cell at resolution floor and the midpoint failed: undecided.
            floored = True
            continue
        lo_box, hi_box = _split(box, name)
        if query.prefer_upper:
            stack.append((lo_box, depth + 1))
            stack.append((hi_box, depth + 1))
        else:
            stack.append((hi_box, depth + 1))
            stack.append((lo_box, depth + 1))

    stats.elapsed = time.monotonic() - start
    if floored:
        return Unknown("resolution floor reached", stats)
    return Unsat(stats)


def interval_bounds(e: Expr, box: Box) -> Interval:
    """Sound enclosure of an expression over a box (used to seed optimization)."""
    return expr_interval(e, box)
