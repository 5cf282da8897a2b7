"""Epsilon-accurate stable optimization by threshold bisection.

The stable optimum is approached through the parametric condition

    cond(z) := alpha -> (beta and objective >= z)

where the objective atom sits inside the universally quantified region
obligation, so a witness at threshold z certifies that the whole stability
region (under all admissible inputs) keeps the objective at or above z.
Bisection maintains lo = largest threshold with a verified witness and
hi = smallest refuted threshold; it stops once hi - lo <= epsilon - 2*delta,
which pays for the delta slack on the refuted side and yields

    z_tilde <= stable optimum < z_tilde + epsilon.

Exclusion sets are rebuilt from scratch at every threshold: a region
excluded while chasing threshold z says nothing at a different z.

optsyn conjoins the spec assertions into beta; rootcause is its dual
(negated assertions, sign-flipped objective); pareto sweeps a constraint
ladder over the first objective and re-optimizes the rest per level.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .engine import (
    GearProblem,
    Infeasible,
    StableWitness,
    Unknown,
    make_problem,
    solve_gear,
)
from .errors import UsageError
from .models import EncodedModel, ModelArtifact, encode_model
from .solver import SolverConfig, SolverStats, interval_bounds
from .spec import ProblemSpec
from .stability import StabilitySpec
from .terms import (
    Cmp,
    CmpOp,
    Const,
    Expr,
    Formula,
    Implies,
    Neg,
    Not,
    Value,
    conj,
    substitute,
)


@dataclass(frozen=True)
class EpsilonSolution:
    """A certified bracket around the stable optimum of one objective.

    z_tilde comes from a verified stable witness at that threshold; upper is
    either a refuted threshold or the interval enclosure bound plus epsilon.
    """

    p_tilde: dict[str, Value]
    z_tilde: Fraction
    upper: Fraction
    epsilon: Fraction
    objective: str
    trace: tuple[tuple[Fraction, str], ...]
    witness: StableWitness
    stats: SolverStats = field(default_factory=SolverStats)


@dataclass(frozen=True)
class OptimizationUnknown:
    reason: str
    trace: tuple[tuple[Fraction, str], ...]
    stats: SolverStats = field(default_factory=SolverStats)


OptResult = EpsilonSolution | Infeasible | OptimizationUnknown


def threshold_cond(
    spec: ProblemSpec, beta: Formula, objective: Expr, z: Fraction
) -> Formula:
    return Implies(spec.alpha, conj([beta, Cmp(CmpOp.GE, objective, Const(z))]))


def _objective_bounds(
    spec: ProblemSpec, model: EncodedModel, objective: Expr
) -> tuple[Fraction, Fraction]:
    substituted = substitute(objective, dict(model.output_exprs))
    box = spec.domain_box(
        [v.label for v in spec.knobs] + [v.label for v in spec.inputs]
    )
    iv = interval_bounds(substituted, box)
    return iv.lo, iv.hi


def optimize(
    spec: ProblemSpec,
    model: EncodedModel | ModelArtifact,
    objective: Expr,
    epsilon: Fraction,
    cfg: SolverConfig,
    *,
    beta: Formula | None = None,
    theta: StabilitySpec | None = None,
    label: str = "objective",
    max_iterations: int = 200,
) -> OptResult:
    if isinstance(model, ModelArtifact):
        model = encode_model(model, spec)
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise UsageError("epsilon must be positive")
    if cfg.delta > epsilon / 10:
        cfg = replace(cfg, delta=epsilon / 100)
    delta = cfg.delta

    lo_bound, hi_bound = _objective_bounds(spec, model, objective)
    lo = lo_bound - epsilon
    hi = hi_bound + epsilon
    trace: list[tuple[Fraction, str]] = []
    stats = SolverStats(queries=0)

    def attempt(z: Fraction):
        problem = make_problem(
            spec, model, threshold_cond(spec, beta if beta is not None else spec.beta,
                                        objective, z), theta
        )
        res = solve_gear(problem, cfg, max_iterations)
        stats.merge(res.stats)
        kind = {StableWitness: "witness", Infeasible: "infeasible"}.get(type(res), "unknown")
        trace.append((z, kind))
        return res

    first = attempt(lo)
    if isinstance(first, Infeasible):
        return first
    if isinstance(first, Unknown):
        return OptimizationUnknown(first.reason, tuple(trace), stats)
    best: StableWitness = first

    stop = epsilon - 2 * delta
    while hi - lo > stop:
        mid = (lo + hi) / 2
        # A probe landing delta-close to the true boundary can come back
        # undecided at the solver's resolution floor. Such knife edges are
        # single points, so sliding the probe within the bracket steps off
        # them without weakening either bound; the bracket still shrinks by
        # at least 3/8 per round.
        z = mid
        res = attempt(z)
        for nudge in ((hi - lo) / 8, -(hi - lo) / 8):
            if not isinstance(res, Unknown):
                break
            z = mid + nudge
            res = attempt(z)
        if isinstance(res, StableWitness):
            lo, best = z, res
        elif isinstance(res, Infeasible):
            hi = z
        else:
            return OptimizationUnknown(
                f"at threshold {z}: {res.reason}", tuple(trace), stats
            )

    return EpsilonSolution(
        p_tilde=dict(best.p),
        z_tilde=lo,
        upper=hi,
        epsilon=epsilon,
        objective=label,
        trace=tuple(trace),
        witness=best,
        stats=stats,
    )


def optsyn(
    spec: ProblemSpec,
    model: EncodedModel | ModelArtifact,
    objective: Expr,
    epsilon: Fraction,
    cfg: SolverConfig,
    *,
    assertions: list[Formula] | None = None,
    theta: StabilitySpec | None = None,
    label: str = "objective",
    max_iterations: int = 200,
) -> OptResult:
    """Optimize with the assertions conjoined into beta: the result is
    simultaneously assertion-valid across the region and epsilon-optimal."""
    conjuncts = (
        assertions if assertions is not None else list(spec.assertions.values())
    )
    beta = conj([spec.beta, *conjuncts])
    return optimize(
        spec, model, objective, epsilon, cfg,
        beta=beta, theta=theta, label=label, max_iterations=max_iterations,
    )


def rootcause(
    spec: ProblemSpec,
    model: EncodedModel | ModelArtifact,
    objective: Expr,
    epsilon: Fraction,
    cfg: SolverConfig,
    *,
    assertions: list[Formula] | None = None,
    theta: StabilitySpec | None = None,
    label: str = "objective",
    max_iterations: int = 200,
) -> OptResult:
    """Dual exploration: find a stable region where the requirements fail.

    The selected assertions are negated (their conjunction must fail across
    the whole region) and the objective sign is inverted, so the search
    homes in on the worst stable violation.
    """
    conjuncts = (
        assertions if assertions is not None else list(spec.assertions.values())
    )
    if not conjuncts:
        raise UsageError("rootcause needs at least one assertion to negate")
    beta = Not(conj(conjuncts))
    return optimize(
        spec, model, Neg(objective), epsilon, cfg,
        beta=beta, theta=theta, label=f"-({label})", max_iterations=max_iterations,
    )


@dataclass(frozen=True)
class ParetoPoint:
    p: dict[str, Value]
    bounds: tuple[tuple[str, Fraction], ...]  # per-objective certified lower bounds


def _eps_dominates(
    p: tuple[Fraction, ...], q: tuple[Fraction, ...], epsilon: Fraction
) -> bool:
    """p is at least as good everywhere (within epsilon) and clearly better
    somewhere (by more than epsilon)."""
    return all(a >= b - epsilon for a, b in zip(p, q)) and any(
        a > b + epsilon for a, b in zip(p, q)
    )


def pareto(
    spec: ProblemSpec,
    model: EncodedModel | ModelArtifact,
    objectives: list[tuple[str, Expr]],
    epsilon: Fraction,
    cfg: SolverConfig,
    *,
    beta: Formula | None = None,
    theta: StabilitySpec | None = None,
    levels: int = 5,
    max_iterations: int = 200,
) -> list[ParetoPoint]:
    """Trace the front by an epsilon-constraint sweep over the first objective.

    The first objective is optimized once; `levels` thresholds from that
    optimum minus epsilon down to its enclosure lower bound are then fixed
    as beta-conjuncts while the remaining objectives are optimized in order.
    Near-duplicate points (all bounds within epsilon) and epsilon-dominated
    points are dropped.
    """
    if len(objectives) < 2:
        raise UsageError("pareto needs at least two objectives")
    if levels < 1:
        raise UsageError("levels must be at least 1")
    if isinstance(model, ModelArtifact):
        model = encode_model(model, spec)
    base_beta = beta if beta is not None else spec.beta
    label1, obj1 = objectives[0]

    top = optimize(
        spec, model, obj1, epsilon, cfg,
        beta=base_beta, theta=theta, label=label1, max_iterations=max_iterations,
    )
    if not isinstance(top, EpsilonSolution):
        return []

    floor1 = _objective_bounds(spec, model, obj1)[0]
    peak = top.z_tilde - epsilon
    if levels == 1 or peak <= floor1:
        thresholds = [peak]
    else:
        step = (peak - floor1) / (levels - 1)
        thresholds = [peak - k * step for k in range(levels)]

    points: list[ParetoPoint] = []
    for t in thresholds:
        constraints: list[Formula] = [Cmp(CmpOp.GE, obj1, Const(t))]
        bounds: list[tuple[str, Fraction]] = [(label1, t)]
        solution: EpsilonSolution | None = None
        feasible = True
        for j, (label_j, obj_j) in enumerate(objectives[1:], start=1):
            res = optimize(
                spec, model, obj_j, epsilon, cfg,
                beta=conj([base_beta, *constraints]),
                theta=theta, label=label_j, max_iterations=max_iterations,
            )
            if not isinstance(res, EpsilonSolution):
                feasible = False
                break
            solution = res
            if j < len(objectives) - 1:
                constraints.append(Cmp(CmpOp.GE, obj_j, Const(res.z_tilde - epsilon)))
                bounds.append((label_j, res.z_tilde - epsilon))
            else:
                bounds.append((label_j, res.z_tilde))
        if not feasible or solution is None:
            continue
        points.append(ParetoPoint(dict(solution.p_tilde), tuple(bounds)))

    # Near-duplicates first, then epsilon-dominated points.
    kept: list[ParetoPoint] = []
    for pt in points:
        vec = tuple(b for _l, b in pt.bounds)
        if any(
            all(abs(a - b) <= epsilon for a, b in zip(vec, tuple(x for _l, x in other.bounds)))
            for other in kept
        ):
            continue
        kept.append(pt)
    result = [
        pt
        for pt in kept
        if not any(
            other is not pt
            and _eps_dominates(
                tuple(b for _l, b in other.bounds),
                tuple(b for _l, b in pt.bounds),
                epsilon,
            )
            for other in kept
        )
    ]
    return result
