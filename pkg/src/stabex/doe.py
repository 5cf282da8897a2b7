"""Design-of-experiments generation and the model-refinement loop.

Three sampling plans over the declared knob/input space: full factorial
(finite dimensions only), Latin hypercube (one sample per stratum per real
dimension, seeded permutations), and uniform random. All draws are exact
rationals and byte-deterministic for a fixed seed.

The refinement loop samples the system inside the stability region of a
found solution, compares it to the model, and emits an augmented training
CSV plus an ADEQUATE/REFINE verdict against a discrepancy tolerance.
"""

from __future__ import annotations

import csv
import io
import math
import subprocess
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Mapping, Sequence

from .errors import (
    AlphaRejectionExhaustedError,
    OracleFailureError,
    SpecError,
    UngriddedFactorialDimensionError,
)
from .models import ModelArtifact, eval_model
from .spec import ProblemSpec, VarDecl
from .stability import StabilitySpec
from .terms import Assignment, Expr, Sort, Value, evaluate, format_rational

METHODS = ("full_factorial", "latin_hypercube", "uniform_random")


@dataclass(frozen=True)
class Design:
    labels: tuple[str, ...]
    rows: tuple[tuple[Value, ...], ...]
    method: str
    seed: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.labels)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def assignments(self) -> list[dict[str, Value]]:
        return [dict(zip(self.labels, row)) for row in self.rows]


def _cell(v: Value) -> str:
    return v if isinstance(v, str) else format_rational(v)


def _unit(rng: Random) -> Fraction:
    return Fraction(rng.getrandbits(53), 1 << 53)


def _finite_values(v: VarDecl) -> list[Value]:
    if v.set_values is not None:
        return list(v.set_values)
    if v.grid is not None:
        return list(v.grid)
    if v.sort is Sort.INT:
        assert v.lo is not None and v.hi is not None
        return [Fraction(i) for i in range(math.ceil(v.lo), math.floor(v.hi) + 1)]
    raise UngriddedFactorialDimensionError(
        f"dimension {v.label!r} is a real range without a grid; "
        "full factorial needs finite dimensions"
    )


def _draw(v: VarDecl, rng: Random) -> Value:
    if v.set_values is not None:
        return v.set_values[rng.randrange(len(v.set_values))]
    if v.grid is not None:
        return v.grid[rng.randrange(len(v.grid))]
    assert v.lo is not None and v.hi is not None
    if v.sort is Sort.INT:
        return Fraction(rng.randint(math.ceil(v.lo), math.floor(v.hi)))
    return v.lo + _unit(rng) * (v.hi - v.lo)


def doe_generate(
    spec: ProblemSpec,
    method: str,
    n: int | None = None,
    seed: int = 0,
    labels: Sequence[str] | None = None,
) -> Design:
    """Generate a sampling plan over knobs+inputs (or a label subset)."""
    if method not in METHODS:
        raise SpecError(f"unknown DOE method {method!r}; expected one of {METHODS}")
    dims: list[VarDecl] = [
        v for v in spec.variables if v.interface in ("knob", "input")
    ]
    if labels is not None:
        by_label = {v.label: v for v in dims}
        missing = [l for l in labels if l not in by_label]
        if missing:
            raise SpecError(f"unknown or non-sampleable columns: {missing}")
        dims = [by_label[l] for l in labels]
    if not dims:
        raise SpecError("nothing to sample: no knobs or inputs selected")
    names = tuple(v.label for v in dims)

    if method == "full_factorial":
        rows: list[tuple[Value, ...]] = [()]
        for v in dims:
            values = _finite_values(v)
            rows = [row + (val,) for row in rows for val in values]
        return Design(names, tuple(rows), method, seed)

    if n is None or n < 1:
        raise SpecError(f"method {method!r} needs a sample count n >= 1")
    rng = Random(seed)

    if method == "uniform_random":
        rows = [tuple(_draw(v, rng) for v in dims) for _ in range(n)]
        return Design(names, tuple(rows), method, seed)

    # latin_hypercube: stratify every ungridded real dimension.
    columns: list[list[Value]] = []
    for v in dims:
        if v.sort is Sort.REAL and v.grid is None and v.set_values is None:
            assert v.lo is not None and v.hi is not None
            width = (v.hi - v.lo) / n
            strata = list(range(n))
            rng.shuffle(strata)
            columns.append([v.lo + (k + _unit(rng)) * width for k in strata])
        else:
            columns.append([_draw(v, rng) for _ in range(n)])
    rows = [tuple(col[i] for col in columns) for i in range(n)]
    return Design(names, tuple(rows), method, seed)


# ---------------------------------------------------------------------------
# System oracle and refinement


@dataclass(frozen=True)
class SystemOracle:
    """The measured system: builtin expressions per output, or an external command.

    The external protocol is one CSV row of knob+input values on stdin,
    one CSV row of output values on stdout, exit 0.
    """

    exprs: Mapping[str, Expr] | None = None
    command: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if (self.exprs is None) == (self.command is None):
            raise SpecError("oracle needs exactly one of exprs or command")

    def outputs_at(
        self,
        point: Assignment,
        columns: Sequence[str],
        output_labels: Sequence[str],
        row_index: int,
    ) -> dict[str, Fraction]:
        if self.exprs is not None:
            out = {}
            for label in output_labels:
                if label not in self.exprs:
                    raise OracleFailureError(row_index, f"oracle has no expression for {label!r}")
                val = evaluate(self.exprs[label], point)
                if isinstance(val, (bool, str)):
                    raise OracleFailureError(row_index, f"oracle output {label!r} is not numeric")
                out[label] = val
            return out
        assert self.command is not None
        line = ",".join(_cell(point[c]) for c in columns)
        try:
            proc = subprocess.run(
                list(self.command),
                input=line + "\n",
                capture_output=True,
                text=True,
                timeout=60,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise OracleFailureError(row_index, f"oracle command failed: {exc}") from exc
        if proc.returncode != 0:
            raise OracleFailureError(
                row_index, f"oracle exited {proc.returncode}: {proc.stderr.strip()[:200]}"
            )
        fields = next(csv.reader(io.StringIO(proc.stdout.strip().splitlines()[0])))
        if len(fields) != len(output_labels):
            raise OracleFailureError(
                row_index,
                f"oracle returned {len(fields)} fields, expected {len(output_labels)}",
            )
        try:
            return {
                label: Fraction(chunk.strip())
                for label, chunk in zip(output_labels, fields)
            }
        except (ValueError, ZeroDivisionError) as exc:
            raise OracleFailureError(row_index, f"unparseable oracle output: {exc}") from exc


@dataclass(frozen=True)
class RefinementRow:
    point: dict[str, Value]
    model_outputs: dict[str, Fraction]
    system_outputs: dict[str, Fraction]
    discrepancies: dict[str, Fraction]


@dataclass(frozen=True)
class RefinementReport:
    center: dict[str, Value]
    radii: dict[str, Fraction | None]
    rows: tuple[RefinementRow, ...]
    max_discrepancy: dict[str, Fraction]
    tolerance: Fraction
    verdict: str  # "ADEQUATE" | "REFINE"
    augmented_csv: str


def _sample_in_region(
    v: VarDecl, center: Value, theta: StabilitySpec, rng: Random
) -> Value:
    if v.sort is Sort.SET:
        return center
    assert isinstance(center, Fraction)
    r = theta.of(v.label).radius_at(center)
    lo = center - r if v.lo is None else max(v.lo, center - r)
    hi = center + r if v.hi is None else min(v.hi, center + r)
    if v.grid is not None:
        options = [g for g in v.grid if lo <= g <= hi] or [center]
        return options[rng.randrange(len(options))]
    if v.sort is Sort.INT:
        ilo, ihi = math.ceil(lo), math.floor(hi)
        if ilo > ihi:
            return center
        return Fraction(rng.randint(ilo, ihi))
    return lo + _unit(rng) * (hi - lo)


def refine_region(
    center: Assignment,
    spec: ProblemSpec,
    model: ModelArtifact,
    oracle: SystemOracle,
    n: int,
    seed: int = 0,
    tolerance: Fraction = Fraction(1, 10),
    theta: StabilitySpec | None = None,
) -> RefinementReport:
    """Sample the system around a solution and measure model adequacy.

    Knob values stay inside the theta-ball of the center (clipped to the
    declared ranges/grids); inputs are drawn uniformly and rejected until
    alpha holds, with a global cap of 100*n attempts.
    """
    if n < 1:
        raise SpecError("refinement needs n >= 1 samples")
    theta = theta if theta is not None else StabilitySpec.from_spec(spec)
    rng = Random(seed)
    knobs, inputs = spec.knobs, spec.inputs
    columns = [v.label for v in knobs] + [v.label for v in inputs]
    output_labels = [v.label for v in spec.outputs]

    points: list[dict[str, Value]] = []
    attempts = 0
    while len(points) < n:
        if attempts >= 100 * n:
            raise AlphaRejectionExhaustedError(
                f"could not find {n} alpha-satisfying samples in {attempts} attempts"
            )
        attempts += 1
        point: dict[str, Value] = {
            v.label: _sample_in_region(v, center[v.label], theta, rng) for v in knobs
        }
        for v in inputs:
            point[v.label] = _draw(v, rng)
        if evaluate(spec.alpha, point) is True:
            points.append(point)

    rows: list[RefinementRow] = []
    max_disc = {label: Fraction(0) for label in output_labels}
    for i, point in enumerate(points):
        model_out = eval_model(model, point)
        system_out = oracle.outputs_at(point, columns, output_labels, i)
        disc = {
            label: abs(model_out[label] - system_out[label]) for label in output_labels
        }
        for label in output_labels:
            if disc[label] > max_disc[label]:
                max_disc[label] = disc[label]
        rows.append(RefinementRow(point, model_out, system_out, disc))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns + output_labels + ["weight"])
    for row in rows:
        writer.writerow(
            [_cell(row.point[c]) for c in columns]
            + [_cell(row.system_outputs[label]) for label in output_labels]
            + ["1"]
        )

    worst = max(max_disc.values()) if max_disc else Fraction(0)
    radii = {
        v.label: (
            None
            if v.sort is Sort.SET
            else theta.of(v.label).radius_at(center[v.label])
        )
        for v in knobs
    }
    return RefinementReport(
        center={v.label: center[v.label] for v in knobs},
        radii=radii,
        rows=tuple(rows),
        max_discrepancy=max_disc,
        tolerance=Fraction(tolerance),
        verdict="ADEQUATE" if worst <= tolerance else "REFINE",
        augmented_csv=buf.getvalue(),
    )
