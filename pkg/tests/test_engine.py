"""Counterexample-guided stable synthesis: soundness, progress, exclusions."""

import itertools
from fractions import Fraction

from stabex import (
    Cex,
    EncodedModel,
    Infeasible,
    SolverConfig,
    StabilitySpec,
    StableWitness,
    Valid,
    check_witness,
    evaluate,
    make_problem,
    parse_formula,
    solve_gear,
    solve_query,
    synthesis_cond,
)
from stabex.terms import Cmp, CmpOp, Const, Ite, Sort, Var

from conftest import DATA, const_model, make_spec, var

F = Fraction
CFG = SolverConfig()
p = Var("p", Sort.REAL)


def linear_knob_spec(grid=None, rad_abs=None, rad_rel=None, lo=0, hi=10, **fields):
    extra = {}
    if grid is not None:
        extra["grid"] = grid
    if rad_abs is not None:
        extra["rad_abs"] = rad_abs
    if rad_rel is not None:
        extra["rad_rel"] = rad_rel
    return make_spec(
        [var("p", "knob", range=(lo, hi), **extra), var("y", "output")], **fields
    )


def identity_model():
    return EncodedModel.from_exprs({"y": p})


def test_grid_synthesis_picks_satisfying_grid_point():
    spec = linear_knob_spec(grid=[2, 4, 7], rad_abs=0, beta="y >= 4")
    problem = make_problem(spec, identity_model(), synthesis_cond(spec))
    res = solve_gear(problem, CFG)
    assert isinstance(res, StableWitness)
    assert res.p["p"] in (F(2), F(4), F(7))
    assert res.p["p"] != F(2)  # y = 2 < 4 can never verify
    assert isinstance(check_witness(problem, res.p, CFG), Valid)


def test_grid_synthesis_infeasible_when_no_grid_point_works():
    spec = linear_knob_spec(grid=[2, 4, 7], rad_abs=0, beta="y >= 8")
    problem = make_problem(spec, identity_model(), synthesis_cond(spec))
    assert isinstance(solve_gear(problem, CFG), Infeasible)


def test_step_model_with_radius_one():
    # y = Ite(p <= 5, 10, 0); requiring y >= 1 over a +-1 ball forces p <= 4
    spec = linear_knob_spec(rad_abs=1, beta="y >= 1")
    model = EncodedModel.from_exprs(
        {"y": Ite(Cmp(CmpOp.LE, p, Const(F(5))), Const(F(10)), Const(F(0)))}
    )
    problem = make_problem(spec, model, synthesis_cond(spec))
    res = solve_gear(problem, CFG)
    assert isinstance(res, StableWitness)
    # containment also keeps the ball inside [0,10]
    assert F(1) <= res.p["p"] <= F(4)
    assert isinstance(check_witness(problem, res.p, CFG), Valid)


def test_unsatisfiable_condition_infeasible():
    spec = linear_knob_spec(rad_abs=0, beta="y >= 1 and y <= 0")
    problem = make_problem(spec, identity_model(), synthesis_cond(spec))
    assert isinstance(solve_gear(problem, CFG), Infeasible)


def test_check_witness_constant_model_valid(demo_spec):
    from stabex import encode_model, load_model

    model = encode_model(load_model(str(DATA / "demo_model.json")), demo_spec)
    cond = parse_formula("y1 >= 0", demo_spec.sorts())
    problem = make_problem(demo_spec, model, cond)
    res = check_witness(problem, {"p1": F(4), "p2": F(3)}, CFG)
    assert isinstance(res, Valid)


def test_check_witness_finds_counterexample():
    # y = x, assertion y < 5 fails on x in [5,10]
    spec = make_spec(
        [
            var("p", "knob", range=(0, 1)),
            var("x", "input", range=(0, 10)),
            var("y", "output"),
        ],
    )
    model = EncodedModel.from_exprs({"y": Var("x", Sort.REAL)})
    cond = parse_formula("y < 5", spec.sorts())
    problem = make_problem(spec, model, cond, StabilitySpec.identity(spec))
    res = check_witness(problem, {"p": F(0)}, CFG)
    assert isinstance(res, Cex)
    assert res.point["x"] >= F(5) - CFG.delta


def test_zero_radius_equals_identity_theta():
    spec = linear_knob_spec(rad_abs=0, beta="y >= 4")
    model = identity_model()
    cond = synthesis_cond(spec)
    for point in (F(3), F(4), F(8)):
        with_zero = check_witness(make_problem(spec, model, cond), {"p": point}, CFG)
        with_identity = check_witness(
            make_problem(spec, model, cond, StabilitySpec.identity(spec)), {"p": point}, CFG
        )
        assert type(with_zero) is type(with_identity)


def test_eta_rejection_reported():
    spec = linear_knob_spec(rad_abs=0, beta="y >= 0", eta="p == 4")
    problem = make_problem(spec, identity_model(), synthesis_cond(spec))
    res = check_witness(problem, {"p": F(5)}, CFG)
    assert isinstance(res, Cex) and "eta" in res.reason


def test_containment_rejection_reported():
    spec = linear_knob_spec(rad_abs=2, beta="y >= 0")
    problem = make_problem(spec, identity_model(), synthesis_cond(spec))
    res = check_witness(problem, {"p": F(1)}, CFG)  # ball [-1,3] leaves [0,10]
    assert isinstance(res, Cex) and "range" in res.reason


def test_query_equals_synthesis_when_query_is_beta():
    from stabex import query_cond

    spec = linear_knob_spec(grid=[2, 4, 7], rad_abs=0, beta="y >= 4")
    model = identity_model()
    synth = solve_gear(make_problem(spec, model, synthesis_cond(spec)), CFG)
    qres = solve_query(make_problem(spec, model, query_cond(spec, spec.beta)), CFG)
    assert type(synth) is type(qres)
    assert isinstance(synth, StableWitness)


def test_query_relaxation_flips_infeasible_to_witness():
    # constant model y = 3.5: beta y>=4 infeasible, relaxed query y>=3 feasible
    spec = make_spec(
        [var("p", "knob", range=(0, 10), rad_abs=0), var("y", "output")],
        beta="y >= 4",
    )
    model = const_model(["p"], {"y": "7/2"})
    strict = solve_gear(make_problem(spec, model, synthesis_cond(spec)), CFG)
    assert isinstance(strict, Infeasible)
    relaxed_cond = parse_formula("y >= 3", spec.sorts())
    from stabex import query_cond

    relaxed = solve_gear(
        make_problem(spec, model, query_cond(spec, relaxed_cond, beta_prime=relaxed_cond)),
        CFG,
    )
    assert isinstance(relaxed, StableWitness)


def test_query_false_is_infeasible():
    spec = linear_knob_spec(rad_abs=0)
    from stabex import query_cond

    cond = query_cond(spec, parse_formula("false", spec.sorts()))
    assert isinstance(solve_gear(make_problem(spec, identity_model(), cond), CFG), Infeasible)


def test_progress_iterations_bounded_by_grid_cardinality():
    spec = linear_knob_spec(grid=[1, 2, 3, 4, 5, 6, 7, 8], rad_abs=0, beta="y >= 100")
    problem = make_problem(spec, identity_model(), synthesis_cond(spec))
    res = solve_gear(problem, CFG)
    assert isinstance(res, Infeasible)
    assert res.iterations <= 8 + 1


def test_exclusion_soundness_brute_force():
    """No excluded box swallows a knob setting that would have verified."""
    # y = Ite(p >= 5, 10, 0), cond y >= 1, radius 1/2: stable centers are
    # exactly [5.5, 9.5] (ball must stay right of the step and inside [0,10]).
    # Low candidates fail verification first, so exclusions must appear.
    r = F(1, 2)
    spec = linear_knob_spec(rad_abs=r, beta="y >= 1")
    model = EncodedModel.from_exprs(
        {"y": Ite(Cmp(CmpOp.GE, p, Const(F(5))), Const(F(10)), Const(F(0)))}
    )
    problem = make_problem(spec, model, synthesis_cond(spec))
    res = solve_gear(problem, CFG)
    assert isinstance(res, StableWitness)
    assert F(11, 2) <= res.p["p"] <= F(19, 2)
    assert res.exclusions, "expected at least one counterexample exclusion"

    # brute force at step r/10: every truly stable center stays reachable
    step = r / 10
    truly_stable = []
    v = F(0)
    while v <= 10:
        if F(11, 2) <= v <= F(19, 2):
            truly_stable.append(v)
        v += step
    for center in truly_stable:
        for region in res.exclusions:
            centers, radii = dict(region.center), dict(region.radii)
            inside = all(abs(center - centers[k]) <= radii[k] for k in centers)
            assert not inside, f"stable center {center} lies in exclusion {region}"


def test_witnesses_revalidate_and_iterations_counted():
    spec = linear_knob_spec(rad_abs=1, beta="y >= 1", eta="p >= 1")
    model = EncodedModel.from_exprs(
        {"y": Ite(Cmp(CmpOp.LE, p, Const(F(5))), Const(F(10)), Const(F(0)))}
    )
    problem = make_problem(spec, model, synthesis_cond(spec))
    res = solve_gear(problem, CFG)
    assert isinstance(res, StableWitness)
    assert res.iterations >= 1
    assert isinstance(check_witness(problem, res.p, CFG), Valid)
