"""Problem-specification documents.

A specification is a JSON document declaring typed variables (knobs, inputs,
outputs) with ranges, optional knob grids, and optional per-knob stability
radii, plus constraint strings: `eta` (legal knob combinations), `alpha`
(assumptions over knobs and inputs), `beta` (guarantees), named `assertions`,
and named `objectives`.

All numeric fields are read exactly: JSON floats are parsed as decimal
strings into rationals, and strings like "0.2" or "1/3" are accepted wherever
a number is expected.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

from .errors import (
    GridOnNonKnobError,
    GridOutOfRangeError,
    MalformedJsonError,
    MissingRangeError,
    RadiusOnNonKnobError,
    ScopeError,
    SortMismatchError,
    SpecError,
    UndeclaredVariableError,
    UnknownInterfaceError,
    UnknownTypeError,
)
from .intervals import Box, VarDomain
from .parser import parse_formula, parse_node
from .terms import (
    TRUE,
    Cmp,
    CmpOp,
    Expr,
    Formula,
    SetVal,
    Sort,
    Var,
    format_rational,
    free_vars,
    iter_nodes,
    to_source,
)

SUPPORTED_VERSION = "1.2"

_INTERFACES = ("knob", "input", "output")


def _to_rational(x, where: str) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise MalformedJsonError(f"{where}: expected a rational, got {x!r}")
    try:
        if isinstance(x, str) and "/" in x:
            num, den = x.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(str(x))
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedJsonError(f"{where}: expected a rational, got {x!r}") from exc


def _emit_rational(x: Fraction):
    """Round-trippable JSON value: int when integral, exact string otherwise."""
    if x.denominator == 1:
        return int(x)
    return format_rational(x)


@dataclass(frozen=True)
class VarDecl:
    """One declared variable."""

    label: str
    interface: str
    sort: Sort
    lo: Fraction | None = None
    hi: Fraction | None = None
    set_values: tuple[str, ...] | None = None
    grid: tuple[Fraction, ...] | None = None
    rad_abs: Fraction | None = None
    rad_rel: Fraction | None = None

    @property
    def is_knob(self) -> bool:
        return self.interface == "knob"

    def domain(self) -> VarDomain:
        if self.sort is Sort.SET:
            assert self.set_values is not None
            return VarDomain.categorical(self.set_values)
        if self.grid is not None:
            return VarDomain.grid(self.sort, self.grid)
        if self.lo is None or self.hi is None:
            raise MissingRangeError(f"variable {self.label!r} has no range")
        if self.sort is Sort.INT:
            return VarDomain.integer(self.lo, self.hi)
        return VarDomain.real(self.lo, self.hi)


def _parse_var(obj, index: int) -> VarDecl:
    if not isinstance(obj, dict):
        raise MalformedJsonError(f"variables[{index}]: expected an object")
    try:
        label = obj["label"]
        interface = obj["interface"]
        vtype = obj["type"]
    except KeyError as exc:
        raise MalformedJsonError(f"variables[{index}]: missing key {exc.args[0]!r}") from None
    if not isinstance(label, str) or not label:
        raise MalformedJsonError(f"variables[{index}]: label must be a nonempty string")
    if interface not in _INTERFACES:
        raise UnknownInterfaceError(f"variable {label!r}: unknown interface {interface!r}")
    try:
        sort = Sort(vtype)
    except ValueError:
        raise UnknownTypeError(f"variable {label!r}: unknown type {vtype!r}") from None

    rng = obj.get("range")
    lo = hi = None
    set_values = None
    if sort is Sort.SET:
        if not isinstance(rng, list) or not rng or not all(isinstance(v, str) for v in rng):
            raise MalformedJsonError(
                f"variable {label!r}: set type needs a nonempty list of string values"
            )
        set_values = tuple(rng)
    elif rng is not None:
        if not isinstance(rng, list) or len(rng) != 2:
            raise MalformedJsonError(f"variable {label!r}: range must be [lo, hi]")
        lo = _to_rational(rng[0], f"variable {label!r} range")
        hi = _to_rational(rng[1], f"variable {label!r} range")
        if lo > hi:
            raise MalformedJsonError(f"variable {label!r}: empty range [{lo}, {hi}]")
    elif interface in ("knob", "input"):
        raise MissingRangeError(f"variable {label!r}: {interface}s require a range")

    rad_abs = obj.get("rad-abs")
    rad_rel = obj.get("rad-rel")
    if rad_abs is not None and rad_rel is not None:
        raise SpecError(f"variable {label!r}: at most one of rad-abs/rad-rel")
    if (rad_abs is not None or rad_rel is not None) and interface != "knob":
        raise RadiusOnNonKnobError(f"variable {label!r}: radius on non-knob {interface!r}")
    if (rad_abs is not None or rad_rel is not None) and sort is Sort.SET:
        raise SpecError(f"variable {label!r}: categorical knobs cannot carry a radius")
    if rad_abs is not None:
        rad_abs = _to_rational(rad_abs, f"variable {label!r} rad-abs")
        if rad_abs < 0:
            raise SpecError(f"variable {label!r}: negative radius")
    if rad_rel is not None:
        rad_rel = _to_rational(rad_rel, f"variable {label!r} rad-rel")
        if rad_rel < 0:
            raise SpecError(f"variable {label!r}: negative radius")

    grid = obj.get("grid")
    if grid is not None:
        if interface != "knob":
            raise GridOnNonKnobError(f"variable {label!r}: grid on non-knob {interface!r}")
        if sort is Sort.SET:
            raise GridOnNonKnobError(f"variable {label!r}: grid on categorical knob")
        if not isinstance(grid, list) or not grid:
            raise MalformedJsonError(f"variable {label!r}: grid must be a nonempty list")
        gvals = tuple(_to_rational(v, f"variable {label!r} grid") for v in grid)
        if sort is Sort.INT and any(v.denominator != 1 for v in gvals):
            raise GridOutOfRangeError(f"variable {label!r}: non-integer grid value on int knob")
        assert lo is not None and hi is not None
        for v in gvals:
            if not (lo <= v <= hi):
                raise GridOutOfRangeError(
                    f"variable {label!r}: grid value {v} outside range [{lo}, {hi}]"
                )
        grid = gvals

    return VarDecl(
        label=label,
        interface=interface,
        sort=sort,
        lo=lo,
        hi=hi,
        set_values=set_values,
        grid=grid,
        rad_abs=rad_abs,
        rad_rel=rad_rel,
    )


@dataclass(frozen=True)
class ProblemSpec:
    version: str
    variables: tuple[VarDecl, ...]
    alpha: Formula = TRUE
    beta: Formula = TRUE
    eta: Formula = TRUE
    assertions: Mapping[str, Formula] = field(default_factory=dict)
    objectives: Mapping[str, Expr] = field(default_factory=dict)

    @property
    def knobs(self) -> tuple[VarDecl, ...]:
        return tuple(v for v in self.variables if v.interface == "knob")

    @property
    def inputs(self) -> tuple[VarDecl, ...]:
        return tuple(v for v in self.variables if v.interface == "input")

    @property
    def outputs(self) -> tuple[VarDecl, ...]:
        return tuple(v for v in self.variables if v.interface == "output")

    def interface_partition(self) -> tuple[tuple[VarDecl, ...], tuple[VarDecl, ...], tuple[VarDecl, ...]]:
        return self.knobs, self.inputs, self.outputs

    def var(self, label: str) -> VarDecl:
        for v in self.variables:
            if v.label == label:
                return v
        raise UndeclaredVariableError(label)

    def sorts(self) -> dict[str, Sort]:
        return {v.label: v.sort for v in self.variables}

    def domain_box(self, labels=None) -> Box:
        """Box over knobs+inputs (grids folded in), or over a label subset."""
        chosen = (
            [v for v in self.variables if v.interface in ("knob", "input")]
            if labels is None
            else [self.var(l) for l in labels]
        )
        return {v.label: v.domain() for v in chosen}

    def serialize(self) -> str:
        doc: dict = {"version": self.version, "variables": []}
        for v in self.variables:
            entry: dict = {"label": v.label, "interface": v.interface, "type": v.sort.value}
            if v.sort is Sort.SET:
                entry["range"] = list(v.set_values or ())
            elif v.lo is not None and v.hi is not None:
                entry["range"] = [_emit_rational(v.lo), _emit_rational(v.hi)]
            if v.grid is not None:
                entry["grid"] = [_emit_rational(g) for g in v.grid]
            if v.rad_abs is not None:
                entry["rad-abs"] = _emit_rational(v.rad_abs)
            if v.rad_rel is not None:
                entry["rad-rel"] = _emit_rational(v.rad_rel)
            doc["variables"].append(entry)
        doc["alpha"] = to_source(self.alpha)
        doc["beta"] = to_source(self.beta)
        doc["eta"] = to_source(self.eta)
        doc["assertions"] = {k: to_source(f) for k, f in self.assertions.items()}
        doc["objectives"] = {k: to_source(e) for k, e in self.objectives.items()}
        return json.dumps(doc, indent=2)


def _check_scope(label: str, f: Formula | Expr, allowed: set[str], kind: str) -> None:
    for name in free_vars(f):
        if name not in allowed:
            raise ScopeError(f"{label}: {kind} may not reference {name!r}")


def _check_categorical_usage(label: str, node: Formula | Expr, sorts: Mapping[str, Sort]) -> None:
    for n in iter_nodes(node):
        if isinstance(n, Cmp):
            lhs_set = isinstance(n.lhs, SetVal) or (
                isinstance(n.lhs, Var) and n.lhs.sort is Sort.SET
            )
            rhs_set = isinstance(n.rhs, SetVal) or (
                isinstance(n.rhs, Var) and n.rhs.sort is Sort.SET
            )
            if lhs_set != rhs_set:
                raise SortMismatchError(f"{label}: comparison mixes categorical and numeric")
            if lhs_set and n.op not in (CmpOp.EQ, CmpOp.NE):
                raise SortMismatchError(f"{label}: categorical values support only ==/!=")


def parse_spec(text: str) -> ProblemSpec:
    """Parse and validate a problem-specification document."""
    try:
        doc = json.loads(text, parse_float=lambda s: Fraction(s), parse_int=int)
    except json.JSONDecodeError as exc:
        raise MalformedJsonError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedJsonError("top level must be an object")

    version = doc.get("version")
    if version is None:
        version = ""
    version = str(version)
    if version != SUPPORTED_VERSION:
        warnings.warn(
            f"specification version {version!r} differs from supported {SUPPORTED_VERSION!r};"
            " parsing anyway",
            stacklevel=2,
        )

    raw_vars = doc.get("variables")
    if not isinstance(raw_vars, list) or not raw_vars:
        raise MalformedJsonError("variables: expected a nonempty list")
    variables = tuple(_parse_var(obj, i) for i, obj in enumerate(raw_vars))
    seen: set[str] = set()
    for v in variables:
        if v.label in seen:
            raise SpecError(f"duplicate variable label {v.label!r}")
        seen.add(v.label)

    sorts = {v.label: v.sort for v in variables}
    knob_names = {v.label for v in variables if v.interface == "knob"}
    input_names = {v.label for v in variables if v.interface == "input"}
    all_names = set(sorts)

    def formula_field(key: str) -> Formula:
        raw = doc.get(key, "true")
        if not isinstance(raw, str):
            raise MalformedJsonError(f"{key}: expected an expression string")
        return parse_formula(raw, sorts)

    alpha = formula_field("alpha")
    beta = formula_field("beta")
    eta = formula_field("eta")

    _check_scope("alpha", alpha, knob_names | input_names, "assumptions")
    _check_scope("eta", eta, knob_names, "knob constraints")
    _check_categorical_usage("alpha", alpha, sorts)
    _check_categorical_usage("beta", beta, sorts)
    _check_categorical_usage("eta", eta, sorts)

    assertions: dict[str, Formula] = {}
    raw_asserts = doc.get("assertions", {})
    if not isinstance(raw_asserts, dict):
        raise MalformedJsonError("assertions: expected an object of named expressions")
    for name, raw in raw_asserts.items():
        if not isinstance(raw, str):
            raise MalformedJsonError(f"assertion {name!r}: expected an expression string")
        f = parse_formula(raw, sorts)
        _check_scope(f"assertion {name!r}", f, all_names, "assertions")
        _check_categorical_usage(f"assertion {name!r}", f, sorts)
        assertions[name] = f

    objectives: dict[str, Expr] = {}
    raw_objs = doc.get("objectives", {})
    if not isinstance(raw_objs, dict):
        raise MalformedJsonError("objectives: expected an object of named expressions")
    for name, raw in raw_objs.items():
        if not isinstance(raw, str):
            raise MalformedJsonError(f"objective {name!r}: expected an expression string")
        node = parse_node(raw, sorts)
        if isinstance(node, Formula):
            raise MalformedJsonError(f"objective {name!r}: must be numeric, not a condition")
        _check_scope(f"objective {name!r}", node, all_names, "objectives")
        _check_categorical_usage(f"objective {name!r}", node, sorts)
        objectives[name] = node

    return ProblemSpec(
        version=version,
        variables=variables,
        alpha=alpha,
        beta=beta,
        eta=eta,
        assertions=assertions,
        objectives=objectives,
    )


def load_spec(path: str) -> ProblemSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())


def with_identity_radii(spec: ProblemSpec) -> ProblemSpec:
    """Copy of the spec with all knob radii zeroed (plain, non-stable reading)."""
    new_vars = tuple(
        replace(v, rad_abs=None, rad_rel=None) if v.is_knob else v for v in spec.variables
    )
    return replace(spec, variables=new_vars)
