"""Stability regions around knob assignments.

A stability region is a per-knob box: absolute radii give |p' - p| <= r,
relative radii scale with the magnitude of the center value
(|p' - p| <= r * |p|), and knobs without a radius (including categorical
knobs) demand equality. All radii zero reduces the region to a single point,
which turns the stable queries into their plain (non-robust) forms.

Candidates must keep their whole region inside the declared knob ranges;
`containment_formula` renders that obligation over a symbolic center and
`check_containment` decides it for a concrete one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import SpecError
from .intervals import Interval, VarDomain
from .spec import ProblemSpec, VarDecl
from .terms import (
    Add,
    Assignment,
    Cmp,
    CmpOp,
    Const,
    Expr,
    Formula,
    Ite,
    Mul,
    Neg,
    Not,
    SetVal,
    Sort,
    Value,
    Var,
    conj,
    constant_fold,
)


@dataclass(frozen=True)
class KnobRadius:
    """Radius of one knob's stability interval: absolute, relative, or exact."""

    kind: str  # "abs" | "rel" | "exact"
    amount: Fraction = Fraction(0)

    def radius_at(self, center: Value) -> Fraction:
        if self.kind == "exact" or isinstance(center, str):
            return Fraction(0)
        if self.kind == "abs":
            return self.amount
        return self.amount * abs(center)

    def radius_expr(self, center: Expr) -> Expr:
        """Radius as an expression of a symbolic center."""
        if self.kind == "exact":
            return Const(Fraction(0))
        if self.kind == "abs":
            return Const(self.amount)
        magnitude = Ite(Cmp(CmpOp.GE, center, Const(Fraction(0))), center, Neg(center))
        return Mul(Const(self.amount), magnitude)


@dataclass(frozen=True)
class StabilitySpec:
    radii: Mapping[str, KnobRadius]

    @staticmethod
    def from_spec(spec: ProblemSpec) -> "StabilitySpec":
        radii: dict[str, KnobRadius] = {}
        for v in spec.knobs:
            if v.rad_abs is not None:
                radii[v.label] = KnobRadius("abs", v.rad_abs)
            elif v.rad_rel is not None:
                radii[v.label] = KnobRadius("rel", v.rad_rel)
            else:
                radii[v.label] = KnobRadius("exact")
        return StabilitySpec(radii)

    @staticmethod
    def identity(spec: ProblemSpec) -> "StabilitySpec":
        return StabilitySpec({v.label: KnobRadius("exact") for v in spec.knobs})

    def of(self, label: str) -> KnobRadius:
        try:
            return self.radii[label]
        except KeyError:
            raise SpecError(f"no stability radius declared for knob {label!r}") from None

    def is_identity(self) -> bool:
        return all(r.kind == "exact" or r.amount == 0 for r in self.radii.values())


def _center_expr(knob: VarDecl, center: Mapping[str, Expr | Value]) -> Expr:
    c = center[knob.label]
    if isinstance(c, Expr):
        return c
    if isinstance(c, str):
        return SetVal(c)
    return Const(Fraction(c))


def region_formula(
    knobs: tuple[VarDecl, ...],
    center: Mapping[str, Expr | Value],
    shadow: Mapping[str, Expr | Value],
    stability: StabilitySpec,
    pad_radius: Fraction | None = None,
) -> Formula:
    """Formula stating that `shadow` lies in the stability region of `center`.

    Both maps may mix concrete values and expressions, so the same builder
    serves the verification query (concrete center, symbolic shadow) and the
    exclusion constraints (symbolic center, concrete counterexample shadow).
    `pad_radius` is added onto every numeric radius; exclusion regions use it
    so that a delta-relaxed exclusion atom still strictly covers every center
    within the nominal radius of the counterexample (and so that zero-radius
    knobs still get positive-measure exclusions).
    """
    parts: list[Formula] = []
    for knob in knobs:
        c = _center_expr(knob, center)
        s = _center_expr(knob, shadow)
        if knob.sort is Sort.SET:
            parts.append(Cmp(CmpOp.EQ, s, c))
            continue
        rad = stability.of(knob.label)
        r: Expr = rad.radius_expr(c)
        if pad_radius is not None and pad_radius > 0:
            r = Add(r, Const(pad_radius))
        r = constant_fold(r)
        if isinstance(r, Const) and r.value == 0:
            parts.append(Cmp(CmpOp.EQ, s, c))
            continue
        diff = constant_fold(Add(s, Neg(c)))
        parts.append(Cmp(CmpOp.LE, diff, r))
        parts.append(Cmp(CmpOp.GE, diff, constant_fold(Neg(r))))
    return conj(parts)


def containment_formula(knobs: tuple[VarDecl, ...], stability: StabilitySpec) -> Formula:
    """Obligation that the whole region around a symbolic center stays in range.

    Real knobs shrink the admissible centers by the radius; int knobs only by
    floor(radius), because only integer perturbations exist; relative radii
    stay symbolic. Grid knobs need no special casing: the same constraints
    simply rule out grid values too close to the boundary.
    """
    parts: list[Formula] = []
    for knob in knobs:
        if knob.sort is Sort.SET:
            continue
        rad = stability.of(knob.label)
        if rad.kind == "exact" or rad.amount == 0:
            continue
        assert knob.lo is not None and knob.hi is not None
        p = Var(knob.label, knob.sort)
        if rad.kind == "abs":
            r = rad.amount if knob.sort is Sort.REAL else Fraction(math.floor(rad.amount))
            if r == 0:
                continue
            parts.append(Cmp(CmpOp.GE, p, Const(knob.lo + r)))
            parts.append(Cmp(CmpOp.LE, p, Const(knob.hi - r)))
        else:
            # Relative radius: margin depends on the center value. For int
            # knobs this is conservative (floor() of the radius is not
            # expressible linearly), never admitting an unsafe center.
            r_expr = rad.radius_expr(p)
            parts.append(Cmp(CmpOp.GE, Add(p, Neg(r_expr)), Const(knob.lo)))
            parts.append(Cmp(CmpOp.LE, Add(p, r_expr), Const(knob.hi)))
    return conj(parts)


def check_containment(
    knobs: tuple[VarDecl, ...], center: Assignment, stability: StabilitySpec
) -> tuple[bool, dict[str, Value] | None]:
    """Decide containment for a concrete center.

    Returns (ok, violation) where `violation` is a point of the region that
    escapes the declared range, as evidence.
    """
    for knob in knobs:
        if knob.sort is Sort.SET:
            continue
        c = center[knob.label]
        assert isinstance(c, Fraction)
        assert knob.lo is not None and knob.hi is not None
        if not (knob.lo <= c <= knob.hi):
            bad = dict(center)
            bad[knob.label] = c
            return False, bad
        r = stability.of(knob.label).radius_at(c)
        if knob.sort is Sort.INT:
            lo_pt = Fraction(math.ceil(c - r))
            hi_pt = Fraction(math.floor(c + r))
        else:
            lo_pt = c - r
            hi_pt = c + r
        if lo_pt < knob.lo:
            bad = dict(center)
            bad[knob.label] = lo_pt
            return False, bad
        if hi_pt > knob.hi:
            bad = dict(center)
            bad[knob.label] = hi_pt
            return False, bad
    return True, None


def region_domain(
    knob: VarDecl, center_value: Value, stability: StabilitySpec
) -> VarDomain:
    """Solver domain of the shadow variable: the region hull, clipped to range.

    Containment makes the clip a no-op for admissible centers; it is kept for
    defensive use on fixed points supplied by the user.
    """
    if knob.sort is Sort.SET:
        return VarDomain.categorical([str(center_value)])
    assert isinstance(center_value, Fraction)
    r = stability.of(knob.label).radius_at(center_value)
    lo, hi = center_value - r, center_value + r
    if knob.lo is not None:
        lo = max(lo, knob.lo)
    if knob.hi is not None:
        hi = min(hi, knob.hi)
    if lo > hi:
        lo = hi = center_value
    if knob.sort is Sort.INT:
        ilo, ihi = math.ceil(lo), math.floor(hi)
        if ilo > ihi:
            ilo = ihi = round(center_value)
        return VarDomain.integer(ilo, ihi)
    return VarDomain.real(lo, hi)


@dataclass(frozen=True)
class ExclusionRegion:
    """Record of one excluded neighborhood around a counterexample center."""

    center: tuple[tuple[str, Value], ...]
    radii: tuple[tuple[str, Fraction | None], ...]

    @staticmethod
    def around(
        knobs: tuple[VarDecl, ...],
        cex_point: Assignment,
        stability: StabilitySpec,
        pad_radius: Fraction,
    ) -> "ExclusionRegion":
        center = tuple((k.label, cex_point[k.label]) for k in knobs)
        radii: list[tuple[str, Fraction | None]] = []
        for k in knobs:
            if k.sort is Sort.SET:
                radii.append((k.label, None))
            else:
                nominal = stability.of(k.label).radius_at(cex_point[k.label])
                radii.append((k.label, nominal + pad_radius))
        return ExclusionRegion(center, tuple(radii))


def exclusion_formula(
    knobs: tuple[VarDecl, ...],
    cex_point: Assignment,
    stability: StabilitySpec,
    pad_radius: Fraction,
) -> Formula:
    """Constraint removing every center whose region contains `cex_point`.

    This is the negation of the region predicate with the center symbolic and
    the shadow fixed at the counterexample. Radii are padded by `pad_radius`:
    the candidate search sees atoms only up to delta, so without padding a
    candidate sitting exactly at the exclusion boundary would survive its own
    exclusion and the loop would stall. Padding trades a sliver of
    completeness (centers within pad of a counterexample ball) for progress.
    """
    symbolic_center = {k.label: Var(k.label, k.sort) for k in knobs}
    shadow = {k.label: cex_point[k.label] for k in knobs}
    return Not(
        region_formula(knobs, symbolic_center, shadow, stability, pad_radius=pad_radius)
    )
