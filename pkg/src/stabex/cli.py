"""Command-line entry point.

One subcommand per exploration mode plus `encode` (dump the SMT-LIB2
candidate query), `doe`, `refine`, and `recheck` (re-validate a previously
emitted certificate against the same spec/model). Every run writes a JSON
certificate into --out-dir.

Exit codes: 0 goal achieved (Valid / witness / adequate), 1 definite
negative (Infeasible / counterexample / refine needed), 2 undecided
(solver Unknown), 3 usage or input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import shlex
import sys
from fractions import Fraction

from . import certificates as certs
from .doe import METHODS, SystemOracle, doe_generate, refine_region
from .engine import (
    Cex,
    Infeasible,
    StableWitness,
    Valid,
    candidate_query,
    check_witness,
    make_problem,
    query_cond,
    solve_gear,
    solve_query,
    synthesis_cond,
)
from .errors import BackendLaunchError, StabexError, UsageError
from .models import encode_model, load_model
from .optimize import (
    EpsilonSolution,
    optimize,
    optsyn,
    pareto,
    rootcause,
    threshold_cond,
)
from .parser import parse_arith, parse_formula
from .smtlib import emit_smtlib
from .solver import SolverConfig
from .spec import ProblemSpec, load_spec
from .stability import StabilitySpec
from .terms import (
    Cmp,
    CmpOp,
    Const,
    Neg,
    Not,
    Sort,
    Value,
    conj,
    format_rational,
    to_source,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3

SOLVER_ENV = "STABEX_SOLVER_CMD"
DEFAULT_EPSILON = Fraction(1, 20)
DEFAULT_TAU = Fraction(1, 10)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we own exit codes
        raise UsageError(message)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _build_parser() -> _Parser:
    top = _Parser(prog="stabex", description=__doc__)
    sub = top.add_subparsers(dest="mode", required=True)

    base = _Parser(add_help=False)
    base.add_argument("--spec", required=True, help="problem spec JSON")
    base.add_argument("--out-dir", default=".", help="directory for certificates and files")
    base.add_argument("--delta", type=_fraction, default=None, help="solver slack")
    base.add_argument("--timeout", type=float, default=None, help="per-query seconds")
    base.add_argument("--backend", choices=("builtin", "external"), default="builtin")
    base.add_argument(
        "--solver-cmd",
        default=None,
        help=f"external solver command (or set ${SOLVER_ENV})",
    )
    base.add_argument("--seed", type=int, default=0)
    base.add_argument("--max-iterations", type=int, default=200)

    modeled = _Parser(add_help=False, parents=[base])
    modeled.add_argument("--model", required=True, help="model artifact JSON")
    modeled.add_argument(
        "--theta",
        choices=("spec", "identity"),
        default="spec",
        help="stability radii from the spec, or all-zero (plain verification)",
    )

    p = sub.add_parser("verify", parents=[modeled], help="check assertions at fixed knobs")
    p.add_argument("--knobs", required=True, help='e.g. "p1=4,p2=3"')
    p.add_argument("--assertion", action="append", default=None, help="assertion name (repeatable)")

    p = sub.add_parser("query", parents=[modeled], help="stable query condition")
    p.add_argument("--query", required=True, help="condition over knobs/inputs/outputs")
    p.add_argument("--relax-beta", default=None, help="replacement for beta")

    sub.add_parser("synthesize", parents=[modeled], help="find a stable witness for beta")

    for name, hlp in (
        ("optimize", "epsilon-accurate stable optimization (2+ objectives: Pareto sweep)"),
        ("optsyn", "stable optimized synthesis (assertions conjoined)"),
        ("rootcause", "dual search: stable regions violating the assertions"),
    ):
        p = sub.add_parser(name, parents=[modeled], help=hlp)
        p.add_argument("--objective", action="append", default=None, help="objective name")
        p.add_argument("--epsilon", type=_fraction, default=DEFAULT_EPSILON)
        if name == "optimize":
            p.add_argument("--levels", type=int, default=5, help="Pareto sweep levels")
        else:
            p.add_argument("--assertion", action="append", default=None)

    p = sub.add_parser("doe", parents=[base], help="generate a sampling design CSV")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("-n", type=int, default=None, help="sample count")
    p.add_argument("--columns", default=None, help="comma-separated label subset")

    p = sub.add_parser("refine", parents=[modeled], help="sample the system in a region")
    p.add_argument("--center", default=None, help='knob assignment, e.g. "p1=4,p2=3"')
    p.add_argument("--cert", default=None, help="take the center from this certificate")
    p.add_argument("--oracle-cmd", default=None, help="system command (CSV row in/out)")
    p.add_argument(
        "--oracle-expr",
        action="append",
        default=None,
        help='builtin system output, e.g. "y1=p1+x1" (repeatable)',
    )
    p.add_argument("-n", type=int, default=20)
    p.add_argument("--tau", type=_fraction, default=DEFAULT_TAU, help="adequacy tolerance")

    sub.add_parser("encode", parents=[modeled], help="dump the SMT-LIB2 candidate query")

    p = sub.add_parser("recheck", parents=[base], help="re-validate a certificate")
    p.add_argument("--cert", required=True)
    p.add_argument("--model", default=None)

    return top


# ---------------------------------------------------------------------------
# Shared plumbing


def _solver_config(args, epsilon: Fraction | None = None) -> SolverConfig:
    delta = args.delta
    if delta is None:
        delta = epsilon / 100 if epsilon is not None else Fraction(1, 1000)
    if delta <= 0:
        raise UsageError("--delta must be positive")
    command = None
    if args.backend == "external":
        raw = args.solver_cmd or os.environ.get(SOLVER_ENV)
        if not raw:
            raise UsageError(
                f"--backend external needs --solver-cmd or ${SOLVER_ENV}"
            )
        command = tuple(shlex.split(raw))
    return SolverConfig(
        delta=delta,
        timeout=args.timeout,
        seed=args.seed,
        backend=args.backend,
        command=command,
    )


def _theta(args, spec: ProblemSpec) -> StabilitySpec:
    if getattr(args, "theta", "spec") == "identity":
        return StabilitySpec.identity(spec)
    return StabilitySpec.from_spec(spec)


def parse_knob_assignment(text: str, spec: ProblemSpec) -> dict[str, Value]:
    knob_decls = {v.label: v for v in spec.knobs}
    values: dict[str, Value] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise UsageError(f"--knobs entries look like label=value, got {chunk!r}")
        label, raw = chunk.split("=", 1)
        label, raw = label.strip(), raw.strip()
        if label not in knob_decls:
            raise UsageError(f"{label!r} is not a declared knob")
        if knob_decls[label].sort is Sort.SET:
            values[label] = raw.strip("\"'")
        else:
            try:
                values[label] = Fraction(raw)
            except (ValueError, ZeroDivisionError):
                raise UsageError(f"knob {label!r}: not a rational value: {raw!r}")
    missing = [l for l in knob_decls if l not in values]
    if missing:
        raise UsageError(f"missing knob values for: {', '.join(missing)}")
    return values


def _write_certificate(args, cert: dict) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, f"{cert['mode']}-certificate.json")
    certs.save_certificate(cert, path)
    print(f"certificate: {path}")
    return path


def _objective_exprs(args, spec: ProblemSpec) -> list[tuple[str, object]]:
    names = args.objective
    if not names:
        raise UsageError(f"{args.mode} needs at least one --objective")
    out = []
    for name in names:
        if name not in spec.objectives:
            raise UsageError(
                f"unknown objective {name!r}; declared: {', '.join(spec.objectives) or 'none'}"
            )
        out.append((name, spec.objectives[name]))
    return out


def _selected_assertions(args, spec: ProblemSpec) -> dict[str, object]:
    names = getattr(args, "assertion", None)
    if not names:
        return dict(spec.assertions)
    out = {}
    for name in names:
        if name not in spec.assertions:
            raise UsageError(
                f"unknown assertion {name!r}; declared: {', '.join(spec.assertions) or 'none'}"
            )
        out[name] = spec.assertions[name]
    return out


def _format_assignment(a: dict[str, Value]) -> str:
    return ", ".join(f"{k}={certs.value_to_json(v)}" for k, v in a.items())


# ---------------------------------------------------------------------------
# Mode handlers


def _cmd_verify(args) -> int:
    spec = load_spec(args.spec)
    model = encode_model(load_model(args.model), spec)
    theta = _theta(args, spec)
    cfg = _solver_config(args)
    knobs = parse_knob_assignment(args.knobs, spec)
    selected = _selected_assertions(args, spec)
    if not selected:
        raise UsageError("the spec declares no assertions to verify")

    results: dict[str, dict] = {}
    any_cex = any_unknown = False
    for name, assertion in selected.items():
        problem = make_problem(spec, model, assertion, theta)
        res = check_witness(problem, knobs, cfg)
        if isinstance(res, Valid):
            print(f"{name}: Valid")
            results[name] = {"verdict": "valid"}
        elif isinstance(res, Cex):
            any_cex = True
            print(f"{name}: Invalid ({res.reason}; at {_format_assignment(res.point)})")
            results[name] = {
                "verdict": "invalid",
                "reason": res.reason,
                "counterexample": certs.assignment_to_json(res.point),
            }
        else:
            any_unknown = True
            print(f"{name}: Unknown ({res.reason})")
            results[name] = {"verdict": "unknown", "reason": res.reason}

    overall = "invalid" if any_cex else ("unknown" if any_unknown else "valid")
    cert = certs.make_certificate(
        "verify",
        spec_path=args.spec,
        model_path=args.model,
        parameters={
            "knobs": certs.assignment_to_json(knobs),
            "theta": args.theta,
            "assertions": list(selected),
            "delta": format_rational(cfg.delta),
        },
        verdict=overall,
        payload={"results": results},
    )
    _write_certificate(args, cert)
    return EXIT_NEGATIVE if any_cex else (EXIT_UNKNOWN if any_unknown else EXIT_OK)


def _gear_mode_run(args, spec, model, theta, cfg, cond, mode: str, extra_params: dict) -> int:
    problem = make_problem(spec, model, cond, theta)
    solver = solve_query if mode == "query" else solve_gear
    res = solver(problem, cfg, args.max_iterations)
    params = {
        "theta": args.theta,
        "delta": format_rational(cfg.delta),
        **extra_params,
    }
    if isinstance(res, StableWitness):
        print(f"witness: {_format_assignment(res.p)} ({res.iterations} iterations)")
        payload = {
            "witness": certs.assignment_to_json(res.p),
            "condition": to_source(cond),
            "iterations": res.iterations,
            "exclusions": certs.exclusions_to_json(res.exclusions),
        }
        verdict, code = "witness", EXIT_OK
    elif isinstance(res, Infeasible):
        print(f"infeasible after {res.iterations} candidate rounds")
        payload = {
            "iterations": res.iterations,
            "exclusions": certs.exclusions_to_json(res.exclusions),
        }
        verdict, code = "infeasible", EXIT_NEGATIVE
    else:
        print(f"unknown: {res.reason}")
        payload = {"reason": res.reason, "iterations": res.iterations}
        verdict, code = "unknown", EXIT_UNKNOWN
    cert = certs.make_certificate(
        mode,
        spec_path=args.spec,
        model_path=args.model,
        parameters=params,
        verdict=verdict,
        payload=payload,
        stats=res.stats,
    )
    _write_certificate(args, cert)
    return code


def _cmd_synthesize(args) -> int:
    spec = load_spec(args.spec)
    model = encode_model(load_model(args.model), spec)
    return _gear_mode_run(
        args, spec, model, _theta(args, spec), _solver_config(args),
        synthesis_cond(spec), "synthesize", {},
    )


def _cmd_query(args) -> int:
    spec = load_spec(args.spec)
    model = encode_model(load_model(args.model), spec)
    env = spec.sorts()
    query = parse_formula(args.query, env)
    relax = parse_formula(args.relax_beta, env) if args.relax_beta else None
    cond = query_cond(spec, query, relax)
    extra = {"query": args.query}
    if args.relax_beta:
        extra["relax_beta"] = args.relax_beta
    return _gear_mode_run(
        args, spec, model, _theta(args, spec), _solver_config(args),
        cond, "query", extra,
    )


def _report_optimization(args, spec, res, mode: str, params: dict) -> int:
    if isinstance(res, EpsilonSolution):
        print(
            f"solution: {res.objective} >= {format_rational(res.z_tilde)} "
            f"(upper {format_rational(res.upper)}) at {_format_assignment(res.p_tilde)}"
        )
        beta_used = params.pop("_beta_formula")
        objective_used = params.pop("_objective_expr")
        cond = threshold_cond(spec, beta_used, objective_used, res.z_tilde)
        payload = {
            "witness": certs.assignment_to_json(res.p_tilde),
            "condition": to_source(cond),
            "objective": res.objective,
            "z_tilde": format_rational(res.z_tilde),
            "upper": format_rational(res.upper),
            "epsilon": format_rational(res.epsilon),
            "trace": certs.trace_to_json(res.trace),
        }
        verdict, code = "solution", EXIT_OK
    elif isinstance(res, Infeasible):
        print("infeasible: no stable point satisfies the condition at any threshold")
        params.pop("_beta_formula")
        params.pop("_objective_expr")
        payload = {"iterations": res.iterations}
        verdict, code = "infeasible", EXIT_NEGATIVE
    else:
        print(f"unknown: {res.reason}")
        params.pop("_beta_formula")
        params.pop("_objective_expr")
        payload = {"reason": res.reason, "trace": certs.trace_to_json(res.trace)}
        verdict, code = "unknown", EXIT_UNKNOWN
    cert = certs.make_certificate(
        mode,
        spec_path=args.spec,
        model_path=args.model,
        parameters=params,
        verdict=verdict,
        payload=payload,
        stats=getattr(res, "stats", None),
    )
    _write_certificate(args, cert)
    return code


def _cmd_optimize(args) -> int:
    spec = load_spec(args.spec)
    model = encode_model(load_model(args.model), spec)
    theta = _theta(args, spec)
    cfg = _solver_config(args, args.epsilon)
    objectives = _objective_exprs(args, spec)

    if len(objectives) >= 2:
        points = pareto(
            spec, model, objectives, args.epsilon, cfg,
            theta=theta, levels=args.levels, max_iterations=args.max_iterations,
        )
        payload_points = []
        for pt in points:
            bound_str = ", ".join(
                f"{label} >= {format_rational(b)}" for label, b in pt.bounds
            )
            print(f"pareto point: {bound_str} at {_format_assignment(pt.p)}")
            cond = threshold_cond(
                spec,
                conj(
                    [spec.beta]
                    + [
                        Cmp(CmpOp.GE, spec.objectives[label], Const(b))
                        for label, b in pt.bounds[:-1]
                    ]
                ),
                spec.objectives[pt.bounds[-1][0]],
                pt.bounds[-1][1],
            )
            payload_points.append(
                {
                    "knobs": certs.assignment_to_json(pt.p),
                    "bounds": {label: format_rational(b) for label, b in pt.bounds},
                    "condition": to_source(cond),
                }
            )
        if not points:
            print("no pareto points found")
        cert = certs.make_certificate(
            "optimize",
            spec_path=args.spec,
            model_path=args.model,
            parameters={
                "objectives": [label for label, _e in objectives],
                "epsilon": format_rational(args.epsilon),
                "delta": format_rational(cfg.delta),
                "theta": args.theta,
                "levels": args.levels,
            },
            verdict="points" if points else "infeasible",
            payload={"points": payload_points},
        )
        _write_certificate(args, cert)
        return EXIT_OK if points else EXIT_NEGATIVE

    label, expr = objectives[0]
    res = optimize(
        spec, model, expr, args.epsilon, cfg,
        theta=theta, label=label, max_iterations=args.max_iterations,
    )
    params = {
        "objective": label,
        "epsilon": format_rational(args.epsilon),
        "delta": format_rational(cfg.delta),
        "theta": args.theta,
        "_beta_formula": spec.beta,
        "_objective_expr": expr,
    }
    return _report_optimization(args, spec, res, "optimize", params)


def _cmd_optsyn(args) -> int:
    spec = load_spec(args.spec)
    model = encode_model(load_model(args.model), spec)
    theta = _theta(args, spec)
    cfg = _solver_config(args, args.epsilon)
    objectives = _objective_exprs(args, spec)
    if len(objectives) != 1:
        raise UsageError("optsyn takes exactly one --objective")
    label, expr = objectives[0]
    selected = _selected_assertions(args, spec)
    res = optsyn(
        spec, model, expr, args.epsilon, cfg,
        assertions=list(selected.values()), theta=theta, label=label,
        max_iterations=args.max_iterations,
    )
    params = {
        "objective": label,
        "assertions": list(selected),
        "epsilon": format_rational(args.epsilon),
        "delta": format_rational(cfg.delta),
        "theta": args.theta,
        "_beta_formula": conj([spec.beta, *selected.values()]),
        "_objective_expr": expr,
    }
    return _report_optimization(args, spec, res, "optsyn", params)


def _cmd_rootcause(args) -> int:
    spec = load_spec(args.spec)
    model = encode_model(load_model(args.model), spec)
    theta = _theta(args, spec)
    cfg = _solver_config(args, args.epsilon)
    objectives = _objective_exprs(args, spec)
    if len(objectives) != 1:
        raise UsageError("rootcause takes exactly one --objective")
    label, expr = objectives[0]
    selected = _selected_assertions(args, spec)
    if not selected:
        raise UsageError("rootcause needs at least one assertion to negate")
    res = rootcause(
        spec, model, expr, args.epsilon, cfg,
        assertions=list(selected.values()), theta=theta, label=label,
        max_iterations=args.max_iterations,
    )
    params = {
        "objective": label,
        "assertions": list(selected),
        "epsilon": format_rational(args.epsilon),
        "delta": format_rational(cfg.delta),
        "theta": args.theta,
        "_beta_formula": Not(conj(list(selected.values()))),
        "_objective_expr": Neg(expr),
    }
    return _report_optimization(args, spec, res, "rootcause", params)


def _cmd_doe(args) -> int:
    spec = load_spec(args.spec)
    labels = [c.strip() for c in args.columns.split(",")] if args.columns else None
    design = doe_generate(spec, args.method, args.n, args.seed, labels)
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "design.csv")
    text = design.to_csv()
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(f"design: {csv_path} ({len(design.rows)} rows)")
    cert = certs.make_certificate(
        "doe",
        spec_path=args.spec,
        model_path=None,
        parameters={
            "method": args.method,
            "n": args.n,
            "seed": args.seed,
            "columns": list(design.labels),
        },
        verdict="design",
        payload={
            "rows": len(design.rows),
            "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
        },
    )
    _write_certificate(args, cert)
    return EXIT_OK


def _build_oracle(args, spec: ProblemSpec) -> SystemOracle:
    if bool(args.oracle_cmd) == bool(args.oracle_expr):
        raise UsageError("refine needs exactly one of --oracle-cmd or --oracle-expr")
    if args.oracle_cmd:
        return SystemOracle(command=tuple(shlex.split(args.oracle_cmd)))
    env = {
        v.label: v.sort for v in spec.variables if v.interface in ("knob", "input")
    }
    exprs = {}
    for item in args.oracle_expr:
        if "=" not in item:
            raise UsageError(f'--oracle-expr entries look like "y=expr", got {item!r}')
        label, source = item.split("=", 1)
        label = label.strip()
        if label not in {v.label for v in spec.outputs}:
            raise UsageError(f"oracle output {label!r} is not a declared output")
        exprs[label] = parse_arith(source.strip(), env)
    missing = [v.label for v in spec.outputs if v.label not in exprs]
    if missing:
        raise UsageError(f"oracle is missing outputs: {', '.join(missing)}")
    return SystemOracle(exprs=exprs)


def _cmd_refine(args) -> int:
    spec = load_spec(args.spec)
    artifact = load_model(args.model)
    encode_model(artifact, spec)  # feature/output consistency check
    theta = _theta(args, spec)
    if bool(args.center) == bool(args.cert):
        raise UsageError("refine needs exactly one of --center or --cert")
    if args.center:
        center = parse_knob_assignment(args.center, spec)
    else:
        prev = certs.load_certificate(args.cert)
        stored = prev.get("payload", {}).get("witness") or prev.get(
            "parameters", {}
        ).get("knobs")
        if not stored:
            raise UsageError(f"certificate {args.cert!r} carries no knob assignment")
        center = certs.assignment_from_json(spec, stored)
    oracle = _build_oracle(args, spec)
    report = refine_region(
        center, spec, artifact, oracle, args.n,
        seed=args.seed, tolerance=args.tau, theta=theta,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "augmented.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.augmented_csv)
    worst = {k: format_rational(v) for k, v in report.max_discrepancy.items()}
    print(f"verdict: {report.verdict} (max discrepancy per output: {worst})")
    print(f"augmented data: {csv_path}")
    cert = certs.make_certificate(
        "refine",
        spec_path=args.spec,
        model_path=args.model,
        parameters={
            "center": certs.assignment_to_json(center),
            "n": args.n,
            "seed": args.seed,
            "tau": format_rational(args.tau),
            "theta": args.theta,
            "oracle": args.oracle_cmd or args.oracle_expr,
        },
        verdict=report.verdict.lower(),
        payload={
            "max_discrepancy": worst,
            "rows": len(report.rows),
        },
    )
    _write_certificate(args, cert)
    return EXIT_OK if report.verdict == "ADEQUATE" else EXIT_NEGATIVE


def _cmd_encode(args) -> int:
    spec = load_spec(args.spec)
    model = encode_model(load_model(args.model), spec)
    theta = _theta(args, spec)
    cfg = _solver_config(args)
    problem = make_problem(spec, model, synthesis_cond(spec), theta)
    script = emit_smtlib(candidate_query(problem, (), cfg))
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "candidate.smt2")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(script)
    print(f"smtlib: {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Certificate recheck


def _recheck_witness(spec, model, theta, cfg, condition_source: str, stored: dict) -> bool:
    cond = parse_formula(condition_source, spec.sorts())
    problem = make_problem(spec, model, cond, theta)
    point = certs.assignment_from_json(spec, stored)
    return isinstance(check_witness(problem, point, cfg), Valid)


def _cmd_recheck(args) -> int:
    cert = certs.load_certificate(args.cert)
    mode = cert.get("mode")
    inputs = cert.get("inputs", {})
    if inputs.get("spec_sha256") != certs.sha256_file(args.spec):
        raise UsageError("spec file does not match the certificate's spec hash")
    if inputs.get("model_sha256"):
        if not args.model:
            raise UsageError(f"certificate mode {mode!r} needs --model for recheck")
        if inputs["model_sha256"] != certs.sha256_file(args.model):
            raise UsageError("model file does not match the certificate's model hash")

    spec = load_spec(args.spec)
    params = cert.get("parameters", {})
    payload = cert.get("payload", {})
    verdict = cert.get("verdict")

    class _ThetaArgs:
        theta = params.get("theta", "spec")

    theta = _theta(_ThetaArgs, spec)
    delta = Fraction(params["delta"]) if "delta" in params else None
    cfg = _solver_config(args)
    if delta is not None:
        cfg = cfg.with_delta(delta)

    ok: bool
    if mode == "verify":
        model = encode_model(load_model(args.model), spec)
        knobs = certs.assignment_from_json(spec, params["knobs"])
        ok = True
        for name in params.get("assertions", []):
            problem = make_problem(spec, model, spec.assertions[name], theta)
            res = check_witness(problem, knobs, cfg)
            now = (
                "valid"
                if isinstance(res, Valid)
                else "invalid" if isinstance(res, Cex) else "unknown"
            )
            stored = payload["results"][name]["verdict"]
            if now != stored:
                print(f"{name}: stored {stored}, recheck got {now}")
                ok = False
    elif mode == "doe":
        design = doe_generate(
            spec,
            params["method"],
            params.get("n"),
            params.get("seed", 0),
            params.get("columns"),
        )
        ok = (
            hashlib.sha256(design.to_csv().encode()).hexdigest()
            == payload["csv_sha256"]
        )
    elif verdict in ("witness", "solution") and "condition" in payload:
        model = encode_model(load_model(args.model), spec)
        ok = _recheck_witness(
            spec, model, theta, cfg, payload["condition"], payload["witness"]
        )
    elif verdict == "points":
        model = encode_model(load_model(args.model), spec)
        ok = bool(payload.get("points"))
        for pt in payload.get("points", []):
            ok = ok and _recheck_witness(
                spec, model, theta, cfg, pt["condition"], pt["knobs"]
            )
    else:
        raise UsageError(
            f"cannot recheck a {mode!r} certificate with verdict {verdict!r}; "
            "re-run the original mode instead"
        )

    print("recheck: OK" if ok else "recheck: MISMATCH")
    return EXIT_OK if ok else EXIT_NEGATIVE


_HANDLERS = {
    "verify": _cmd_verify,
    "query": _cmd_query,
    "synthesize": _cmd_synthesize,
    "optimize": _cmd_optimize,
    "optsyn": _cmd_optsyn,
    "rootcause": _cmd_rootcause,
    "doe": _cmd_doe,
    "refine": _cmd_refine,
    "encode": _cmd_encode,
    "recheck": _cmd_recheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.mode](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendLaunchError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StabexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
