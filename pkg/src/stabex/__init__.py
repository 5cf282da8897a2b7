"""Stability-aware design space exploration over symbolic surrogate models.

The package encodes pre-trained surrogate models (polynomials, decision
trees, forests, ReLU networks) as exact arithmetic formulas and answers
existential-universal design questions about them: verification, stable
synthesis, accuracy-bounded optimization, root-cause search, Pareto
sweeps, design-of-experiments generation and model refinement sampling.
"""

from .certificates import load_certificate, make_certificate, save_certificate
from .doe import Design, RefinementReport, SystemOracle, doe_generate, refine_region
from .engine import (
    Cex,
    GearProblem,
    Infeasible,
    StableWitness,
    Unknown,
    Valid,
    candidate_query,
    check_witness,
    make_problem,
    query_cond,
    solve_gear,
    solve_query,
    synthesis_cond,
    verify_query,
)
from .errors import (
    AlphaRejectionExhaustedError,
    BackendLaunchError,
    ExprSyntaxError,
    MalformedJsonError,
    ModelError,
    OracleFailureError,
    ProtocolError,
    SpecError,
    StabexError,
    UsageError,
)
from .intervals import Box, Interval, VarDomain
from .models import ModelArtifact, EncodedModel, encode_model, eval_model, load_model, parse_model
from .optimize import (
    EpsilonSolution,
    OptimizationUnknown,
    ParetoPoint,
    optimize,
    optsyn,
    pareto,
    rootcause,
    threshold_cond,
)
from .parser import parse_arith, parse_formula
from .smtlib import emit_smtlib, external_solve
from .solver import Sat, SolverConfig, SolverQuery, SolverStats, Unsat, builtin_solve, check_sat
from .solver import Unknown as SolverUnknown
from .spec import ProblemSpec, VarDecl, load_spec, parse_spec, with_identity_radii
from .stability import (
    ExclusionRegion,
    KnobRadius,
    StabilitySpec,
    check_containment,
    containment_formula,
    exclusion_formula,
    region_formula,
)
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
    conj,
    delta_satisfies,
    disj,
    evaluate,
    format_rational,
    strengthen,
    substitute,
    to_source,
)

__version__ = "0.1.0"

__all__ = [
    "Add",
    "AlphaRejectionExhaustedError",
    "And",
    "BackendLaunchError",
    "BoolConst",
    "Box",
    "Cex",
    "Cmp",
    "CmpOp",
    "Const",
    "Design",
    "EncodedModel",
    "EpsilonSolution",
    "ExclusionRegion",
    "Expr",
    "ExprSyntaxError",
    "Formula",
    "GearProblem",
    "Implies",
    "Infeasible",
    "Interval",
    "Ite",
    "KnobRadius",
    "MalformedJsonError",
    "Max2",
    "Min2",
    "ModelArtifact",
    "ModelError",
    "Mul",
    "Neg",
    "Not",
    "OptimizationUnknown",
    "Or",
    "OracleFailureError",
    "ParetoPoint",
    "Pow",
    "ProblemSpec",
    "ProtocolError",
    "RefinementReport",
    "Sat",
    "SetVal",
    "SolverConfig",
    "SolverQuery",
    "SolverStats",
    "SolverUnknown",
    "Sort",
    "SpecError",
    "StabexError",
    "StabilitySpec",
    "StableWitness",
    "SystemOracle",
    "Unknown",
    "Unsat",
    "UsageError",
    "Valid",
    "Value",
    "Var",
    "VarDecl",
    "builtin_solve",
    "candidate_query",
    "check_containment",
    "check_sat",
    "check_witness",
    "conj",
    "containment_formula",
    "delta_satisfies",
    "disj",
    "doe_generate",
    "emit_smtlib",
    "encode_model",
    "eval_model",
    "evaluate",
    "exclusion_formula",
    "external_solve",
    "format_rational",
    "load_certificate",
    "load_model",
    "load_spec",
    "make_certificate",
    "make_problem",
    "optimize",
    "optsyn",
    "pareto",
    "parse_arith",
    "parse_formula",
    "parse_model",
    "parse_spec",
    "query_cond",
    "refine_region",
    "region_formula",
    "rootcause",
    "save_certificate",
    "solve_gear",
    "solve_query",
    "strengthen",
    "substitute",
    "synthesis_cond",
    "threshold_cond",
    "to_source",
    "verify_query",
    "with_identity_radii",
]
