"""Threshold bisection optimizer, optimized synthesis, duals, Pareto sweep."""

from fractions import Fraction

import pytest

from stabex import (
    EncodedModel,
    EpsilonSolution,
    Infeasible,
    SolverConfig,
    StabilitySpec,
    Valid,
    check_witness,
    make_problem,
    optimize,
    optsyn,
    pareto,
    parse_formula,
    rootcause,
    threshold_cond,
)
from stabex import OptimizationUnknown
from stabex.errors import UsageError
from stabex.terms import Add, Cmp, CmpOp, Const, Ite, Max2, Mul, Neg, Sort, Var

from conftest import const_model, make_spec, var

F = Fraction
CFG = SolverConfig()
EPS = F(1, 10)
p = Var("p", Sort.REAL)


def knob_spec(lo=0, hi=10, rad_abs=None, rad_rel=None, grid=None, **fields):
    extra = {}
    if rad_abs is not None:
        extra["rad_abs"] = rad_abs
    if rad_rel is not None:
        extra["rad_rel"] = rad_rel
    if grid is not None:
        extra["grid"] = grid
    return make_spec(
        [var("p", "knob", range=(lo, hi), **extra), var("y", "output")], **fields
    )


def identity_model():
    return EncodedModel.from_exprs({"y": p})


def spike_model():
    # y = p except a thin spike of height 100 around p = 2
    dist = Max2(Add(p, Const(F(-2))), Add(Const(F(2)), Neg(p)))
    band = Cmp(CmpOp.LE, dist, Const(F(1, 20)))
    return EncodedModel.from_exprs({"y": Ite(band, Const(F(100)), p)})


def test_stable_linear_objective_bracket():
    # containment keeps center balls inside [0,10]: max-min = 8 at p = 9
    spec = knob_spec(rad_abs=1)
    res = optimize(spec, identity_model(), Var("y", Sort.REAL), EPS, CFG)
    assert isinstance(res, EpsilonSolution)
    assert F(79, 10) <= res.z_tilde <= F(8)
    assert res.upper - res.z_tilde <= EPS
    assert abs(res.p_tilde["p"] - 9) <= F(1, 5)
    assert res.trace


def test_identity_theta_reaches_plain_maximum():
    spec = knob_spec(rad_abs=1)
    res = optimize(
        spec, identity_model(), Var("y", Sort.REAL), EPS, CFG,
        theta=StabilitySpec.identity(spec),
    )
    assert isinstance(res, EpsilonSolution)
    assert F(99, 10) <= res.z_tilde <= F(10)


def test_constant_objective():
    spec = knob_spec(rad_abs=0)
    model = const_model(["p"], {"y": "7/2"})
    res = optimize(spec, model, Var("y", Sort.REAL), EPS, CFG)
    assert isinstance(res, EpsilonSolution)
    assert res.z_tilde <= F(7, 2) < res.z_tilde + EPS


def test_infeasible_condition():
    spec = knob_spec(rad_abs=0, beta="y >= 1")
    model = const_model(["p"], {"y": 0})
    res = optimize(spec, model, Var("y", Sort.REAL), EPS, CFG)
    assert isinstance(res, Infeasible)


def test_epsilon_must_be_positive():
    spec = knob_spec(rad_abs=0)
    with pytest.raises(UsageError):
        optimize(spec, identity_model(), Var("y", Sort.REAL), F(0), CFG)


def test_spike_stable_vs_plain():
    """A thin spike wins plain optimization but not stable optimization."""
    spec = knob_spec(rad_abs="1/2")
    model = spike_model()
    eps = F(1, 5)

    plain = optimize(
        spec, model, Var("y", Sort.REAL), eps, CFG, theta=StabilitySpec.identity(spec)
    )
    assert isinstance(plain, EpsilonSolution)
    assert plain.z_tilde > F(99)  # spike value reachable without stability

    stable = optimize(spec, model, Var("y", Sort.REAL), eps, CFG)
    assert isinstance(stable, EpsilonSolution)
    assert F(9) - eps <= stable.z_tilde <= F(9)  # spike is unstable, ramp wins
    assert stable.p_tilde["p"] > F(8)


def test_witness_revalidates_at_z_tilde():
    spec = knob_spec(rad_abs=1)
    res = optimize(spec, identity_model(), Var("y", Sort.REAL), EPS, CFG)
    assert isinstance(res, EpsilonSolution)
    cond = threshold_cond(spec, spec.beta, Var("y", Sort.REAL), res.z_tilde)
    problem = make_problem(spec, identity_model(), cond)
    assert isinstance(check_witness(problem, res.p_tilde, CFG), Valid)


def test_bisection_trace_brackets():
    spec = knob_spec(rad_abs=1)
    res = optimize(spec, identity_model(), Var("y", Sort.REAL), EPS, CFG)
    assert isinstance(res, EpsilonSolution)
    # every witness threshold is <= z_tilde, every infeasible one >= upper
    for z, verdict in res.trace:
        if verdict == "witness":
            assert z <= res.z_tilde
        elif verdict == "infeasible":
            assert z >= res.upper - CFG.delta


def test_optsyn_assertion_restricts_region():
    # y = p on [-5,5], radius 1: y >= 0 over the ball forces p >= 1;
    # objective -p is universally bounded over the ball, so best value is -2
    spec = make_spec(
        [var("p", "knob", range=(-5, 5), rad_abs=1), var("y", "output")],
    )
    assertion = parse_formula("y >= 0", spec.sorts())
    res = optsyn(
        spec, identity_model(), Neg(p), EPS, CFG, assertions=[assertion]
    )
    assert isinstance(res, EpsilonSolution)
    assert F(-2) - EPS < res.z_tilde <= F(-2)
    assert abs(res.p_tilde["p"] - 1) <= F(1, 5)


def test_optsyn_no_assertions_equals_optimize():
    spec = knob_spec(rad_abs=1)
    a = optimize(spec, identity_model(), Var("y", Sort.REAL), EPS, CFG)
    b = optsyn(spec, identity_model(), Var("y", Sort.REAL), EPS, CFG, assertions=[])
    assert isinstance(a, EpsilonSolution) and isinstance(b, EpsilonSolution)
    assert a.z_tilde == b.z_tilde


def test_optsyn_unsatisfiable_assertion_infeasible():
    spec = knob_spec(rad_abs=0)
    bad = parse_formula("y >= 1 and y <= 0", spec.sorts())
    res = optsyn(spec, identity_model(), Var("y", Sort.REAL), EPS, CFG, assertions=[bad])
    assert isinstance(res, Infeasible)


def test_rootcause_finds_bad_region():
    # requirement y >= 5 fails stably on low p; the dual finds that region
    spec = knob_spec(rad_abs=1)
    requirement = parse_formula("y >= 5", spec.sorts())
    res = rootcause(
        spec, identity_model(), Var("y", Sort.REAL), EPS, CFG, assertions=[requirement]
    )
    assert isinstance(res, EpsilonSolution)
    # the whole ball must violate y >= 5: p + 1 < 5, i.e. p < 4
    assert res.p_tilde["p"] < F(4)
    # worst violation sits at the low containment edge p = 1, value -(p+1) = -2
    assert F(-2) - EPS < res.z_tilde <= F(-2)
    assert res.objective == "-(objective)"


def test_unknown_carries_partial_trace():
    spec = knob_spec(rad_abs=1)
    tiny = SolverConfig(max_cells=1)
    res = optimize(spec, identity_model(), Var("y", Sort.REAL), EPS, tiny)
    assert isinstance(res, OptimizationUnknown)
    assert "budget" in res.reason
    assert len(res.trace) >= 1
    assert res.trace[-1][1] == "unknown"


def test_rootcause_requires_assertions():
    spec = knob_spec(rad_abs=0)
    with pytest.raises(UsageError):
        rootcause(spec, identity_model(), Var("y", Sort.REAL), EPS, CFG, assertions=[])


def test_pareto_analytic_front():
    # y1 = p, y2 = 10 - p: the front is the line y1 + y2 = 10
    spec = make_spec(
        [var("p", "knob", range=(0, 10), rad_abs=0),
         var("y1", "output"), var("y2", "output")],
    )
    model = EncodedModel.from_exprs({"y1": p, "y2": Add(Const(F(10)), Neg(p))})
    objectives = [("y1", Var("y1", Sort.REAL)), ("y2", Var("y2", Sort.REAL))]
    pts = pareto(spec, model, objectives, EPS, CFG, levels=3)
    assert len(pts) >= 2
    vecs = [tuple(b for _l, b in pt.bounds) for pt in pts]
    # mutually non-dominated within epsilon
    from stabex.optimize import _eps_dominates

    for i, a in enumerate(vecs):
        for j, b in enumerate(vecs):
            if i != j:
                assert not _eps_dominates(a, b, EPS)
    # within epsilon of the front: certified bounds sum close to 10
    for v in vecs:
        assert v[0] + v[1] <= 10
        assert 10 - (v[0] + v[1]) <= 2 * EPS + 2 * CFG.delta


def test_pareto_identical_objectives_single_point():
    spec = knob_spec(rad_abs=0)
    model = identity_model()
    objectives = [("a", Var("y", Sort.REAL)), ("b", Var("y", Sort.REAL))]
    pts = pareto(spec, model, objectives, EPS, CFG, levels=4)
    assert len(pts) == 1
    bounds = dict(pts[0].bounds)
    assert abs(bounds["a"] - bounds["b"]) <= 2 * EPS


def test_pareto_needs_two_objectives():
    spec = knob_spec(rad_abs=0)
    with pytest.raises(UsageError):
        pareto(spec, identity_model(), [("y", Var("y", Sort.REAL))], EPS, CFG)


def test_pareto_constant_model_single_point():
    # constant outputs: the front collapses to one point with tight bounds
    spec = make_spec(
        [var("p", "knob", range=(0, 10), rad_abs=0),
         var("y1", "output"), var("y2", "output")],
    )
    model = const_model(["p"], {"y1": 5, "y2": 8})
    y1 = Var("y1", Sort.REAL)
    y2 = Var("y2", Sort.REAL)
    o1 = Mul(Const(F(1, 2)), Add(y1, y2))  # 13/2
    objectives = [("o1", o1), ("o2", y1)]
    pts = pareto(spec, model, objectives, EPS, CFG, levels=2)
    assert len(pts) == 1
    bounds = dict(pts[0].bounds)
    assert bounds["o1"] <= F(13, 2) < bounds["o1"] + 2 * EPS
    assert bounds["o2"] <= F(5) < bounds["o2"] + EPS


def test_vacuous_alpha_region_certifies_any_threshold():
    """A center whose region never satisfies alpha discharges cond trivially.

    alpha names an operating condition that this knob setting rules out, so
    the conditional guarantee holds vacuously and the threshold climbs to
    the enclosure cap. Faithful if surprising; gate with alpha only when
    some admissible scenario exists.
    """
    spec = make_spec(
        [var("p", "knob", range=(0, 10), rad_abs=0), var("y", "output")],
        alpha="p < 5",
    )
    model = const_model(["p"], {"y": 1})
    res = optimize(spec, model, Var("y", Sort.REAL), EPS, CFG)
    assert isinstance(res, EpsilonSolution)
    # a center with p >= 5 certifies more than the model ever outputs
    assert res.z_tilde > F(1)
    assert res.p_tilde["p"] >= F(5)
