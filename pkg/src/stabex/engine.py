"""Counterexample-guided search for stable knob assignments.

The target sentence is

    exists p [ eta(p) and forall p', x, y
        [ theta(p, p') -> (M(p', x) = y -> cond(p', x, y)) ] ]

solved by alternating two quantifier-free queries:

- CANDIDATE: eta(p) and region-containment and not-excluded and
  cond strengthened by delta, with model outputs substituted in. A Sat
  answer proposes a knob center p-hat.
- VERIFY: the theta-region around p-hat (shadow variables reuse the knob
  names; the center is concrete) and alpha and not(cond). Unsat proves
  p-hat stable (exactly - Unsat answers are exact); Sat yields a
  counterexample whose theta-ball is excluded from further candidates,
  widened to at least 2*delta per dimension so every iteration makes
  measurable progress.

Containment: a candidate's whole stability region must lie inside the
declared knob ranges, so every point the universal quantifier ranges over
is a legal knob setting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .intervals import Box
from .models import EncodedModel, ModelArtifact, encode_model
from .solver import (
    Sat,
    SolverConfig,
    SolverQuery,
    SolverStats,
    Unsat,
    check_sat,
)
from .solver import Unknown as SolverUnknown
from .spec import ProblemSpec
from .stability import (
    ExclusionRegion,
    StabilitySpec,
    check_containment,
    containment_formula,
    exclusion_formula,
    region_domain,
    region_formula,
)
from .terms import (
    Assignment,
    Formula,
    Implies,
    Not,
    Value,
    Var,
    conj,
    evaluate,
    free_vars,
    strengthen,
    substitute,
)


@dataclass(frozen=True)
class GearProblem:
    spec: ProblemSpec
    model: EncodedModel
    cond: Formula  # the mode condition over knobs, inputs, outputs
    theta: StabilitySpec
    eta: Formula
    alpha: Formula


def make_problem(
    spec: ProblemSpec,
    model: EncodedModel | ModelArtifact,
    cond: Formula,
    theta: StabilitySpec | None = None,
) -> GearProblem:
    if isinstance(model, ModelArtifact):
        model = encode_model(model, spec)
    return GearProblem(
        spec=spec,
        model=model,
        cond=cond,
        theta=theta if theta is not None else StabilitySpec.from_spec(spec),
        eta=spec.eta,
        alpha=spec.alpha,
    )


def synthesis_cond(spec: ProblemSpec) -> Formula:
    return Implies(spec.alpha, spec.beta)


def query_cond(
    spec: ProblemSpec, query: Formula, beta_prime: Formula | None = None
) -> Formula:
    base = spec.beta if beta_prime is None else beta_prime
    return Implies(spec.alpha, conj([base, query]))


@dataclass(frozen=True)
class StableWitness:
    p: dict[str, Value]
    iterations: int
    exclusions: tuple[ExclusionRegion, ...]
    stats: SolverStats = field(default_factory=SolverStats)


@dataclass(frozen=True)
class Infeasible:
    iterations: int
    exclusions: tuple[ExclusionRegion, ...]
    stats: SolverStats = field(default_factory=SolverStats)


@dataclass(frozen=True)
class Unknown:
    reason: str
    iterations: int = 0
    exclusions: tuple[ExclusionRegion, ...] = ()
    stats: SolverStats = field(default_factory=SolverStats)


GearResult = StableWitness | Infeasible | Unknown


@dataclass(frozen=True)
class Valid:
    stats: SolverStats = field(default_factory=SolverStats)


@dataclass(frozen=True)
class Cex:
    point: dict[str, Value]
    reason: str
    stats: SolverStats = field(default_factory=SolverStats)


VerifyResult = Valid | Cex | Unknown


def _restrict_box(formula: Formula, box: Box) -> Box:
    """Keep only the dimensions the formula actually mentions."""
    names = free_vars(formula)
    return {n: box[n] for n in box if n in names}


def _substituted_cond(problem: GearProblem) -> Formula:
    return substitute(problem.cond, dict(problem.model.output_exprs))


def candidate_query(
    problem: GearProblem,
    exclusions: tuple[Formula, ...],
    cfg: SolverConfig,
) -> SolverQuery:
    spec = problem.spec
    knobs = spec.knobs
    cond = _substituted_cond(problem)
    # Strengthen by 2*delta: the solver hands back delta-weak witnesses, so
    # this leaves a true margin of delta on cond's numeric atoms.  A bare
    # delta shift would net zero margin and livelock on boundary thresholds.
    formula = conj(
        [
            problem.eta,
            containment_formula(knobs, problem.theta),
            strengthen(cond, 2 * cfg.delta),
            *exclusions,
        ]
    )
    box = spec.domain_box([v.label for v in knobs] + [v.label for v in spec.inputs])
    return SolverQuery(formula, _restrict_box(formula, box))


def verify_query(problem: GearProblem, center: Assignment) -> SolverQuery:
    """Counterexample search inside the theta-region of a concrete center.

    Shadow knob variables reuse the knob names (the center is concrete, so
    there is no clash); zero-radius knobs are substituted away outright.
    """
    spec = problem.spec
    theta = problem.theta
    frozen: dict[str, Value] = {}
    moving = []
    for v in spec.knobs:
        c = center[v.label]
        if theta.of(v.label).radius_at(c) == 0:
            frozen[v.label] = c
        else:
            moving.append(v)

    region = region_formula(
        tuple(moving),
        {v.label: center[v.label] for v in moving},
        {v.label: Var(v.label, v.sort) for v in moving},
        theta,
    )
    negated = Not(substitute(_substituted_cond(problem), frozen))
    alpha = substitute(problem.alpha, frozen)
    formula = conj([region, alpha, negated])

    box: Box = {}
    for v in moving:
        box[v.label] = region_domain(v, center[v.label], theta)
    for v in spec.inputs:
        box[v.label] = v.domain()
    # Topmost counterexamples make the best exclusions: candidates are
    # enumerated from below, so a violation's upper edge clears the most
    # candidate ground per iteration.
    return SolverQuery(formula, _restrict_box(formula, box), prefer_upper=True)


def solve_gear(
    problem: GearProblem,
    cfg: SolverConfig,
    max_iterations: int = 200,
) -> GearResult:
    spec = problem.spec
    knobs = spec.knobs
    knob_labels = [v.label for v in knobs]
    total = SolverStats(queries=0)
    exclusion_formulas: list[Formula] = []
    exclusions: list[ExclusionRegion] = []
    pad = 2 * cfg.delta

    for iteration in range(1, max_iterations + 1):
        cand = check_sat(candidate_query(problem, tuple(exclusion_formulas), cfg), cfg)
        total.merge(cand.stats)
        if isinstance(cand, Unsat):
            return Infeasible(iteration, tuple(exclusions), total)
        if isinstance(cand, SolverUnknown):
            return Unknown(
                f"candidate search: {cand.reason}", iteration, tuple(exclusions), total
            )
        p_hat: dict[str, Value] = {
            k: cand.witness[k] for k in knob_labels if k in cand.witness
        }
        for v in knobs:  # dimensions the formula never mentioned
            p_hat.setdefault(v.label, v.domain().sample_values()[0])

        # The solver works up to delta; re-check the exact side conditions.
        exact_ok = evaluate(problem.eta, p_hat) is True
        if exact_ok:
            contained, _evidence = check_containment(knobs, p_hat, problem.theta)
            exact_ok = contained
        if not exact_ok:
            exclusions.append(ExclusionRegion.around(knobs, p_hat, problem.theta, pad))
            exclusion_formulas.append(
                exclusion_formula(knobs, p_hat, problem.theta, pad)
            )
            continue

        verdict = check_sat(verify_query(problem, p_hat), cfg)
        total.merge(verdict.stats)
        if isinstance(verdict, Unsat):
            return StableWitness(p_hat, iteration, tuple(exclusions), total)
        if isinstance(verdict, SolverUnknown):
            return Unknown(
                f"verification: {verdict.reason}", iteration, tuple(exclusions), total
            )
        cex = {k: verdict.witness[k] for k in knob_labels if k in verdict.witness}
        for v in knobs:
            cex.setdefault(v.label, p_hat[v.label])
        exclusions.append(ExclusionRegion.around(knobs, cex, problem.theta, pad))
        exclusion_formulas.append(exclusion_formula(knobs, cex, problem.theta, pad))

    return Unknown(
        "iteration budget exhausted", max_iterations, tuple(exclusions), total
    )


def check_witness(
    problem: GearProblem, p: Assignment, cfg: SolverConfig
) -> VerifyResult:
    """Independent validation of a knob assignment against the problem.

    eta is evaluated away; containment is checked arithmetically; the
    region obligation goes through one VERIFY query.
    """
    stats = SolverStats(queries=0)
    p = {v.label: p[v.label] for v in problem.spec.knobs}
    if evaluate(problem.eta, p) is not True:
        return Cex(dict(p), "eta rejects the knob assignment", stats)
    contained, evidence = check_containment(problem.spec.knobs, p, problem.theta)
    if not contained:
        return Cex(evidence, "stability region leaves the declared knob ranges", stats)
    verdict = check_sat(verify_query(problem, p), cfg)
    stats.merge(verdict.stats)
    if isinstance(verdict, Unsat):
        return Valid(stats)
    if isinstance(verdict, Sat):
        return Cex(dict(verdict.witness), "condition violated inside the region", stats)
    return Unknown(verdict.reason, stats=stats)


def solve_query(
    problem: GearProblem,
    cfg: SolverConfig,
    max_iterations: int = 200,
) -> GearResult:
    """Stable query mode: cond is alpha -> (beta' and query); same search."""
    return solve_gear(problem, cfg, max_iterations)
