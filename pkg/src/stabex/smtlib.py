"""SMT-LIB2 script emission and an external-solver process client.

`emit_smtlib` turns a SolverQuery into a deterministic SMT-LIB2 v2.6
script: options, set-logic (detected from the query), declare-const per
variable, box bounds and grid disjunctions as asserts, the formula, then
check-sat and get-value. Categorical variables are encoded as Int codes
(documented by comment lines in the script). Rationals are emitted exactly.

`external_solve` pipes the script through a configured solver command
(one process per query, stdin/stdout), parses the get-value s-expression,
decodes categorical codes, and re-checks the witness against the
delta-weakened formula before reporting Sat. Unsat and unknown are passed
through; timeouts surface as Unknown.
"""

from __future__ import annotations

import re
import subprocess
from fractions import Fraction

from .errors import BackendLaunchError, ProtocolError
from .intervals import VarDomain
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
    delta_satisfies,
    iter_nodes,
)

_CMP_SYM = {
    CmpOp.LT: "<",
    CmpOp.LE: "<=",
    CmpOp.GT: ">",
    CmpOp.GE: ">=",
    CmpOp.EQ: "=",
}


def _int_lit(v: Fraction) -> str:
    n = v.numerator
    return str(n) if n >= 0 else f"(- {-n})"


def _real_lit(v: Fraction) -> str:
    if v < 0:
        return f"(- {_real_lit(-v)})"
    if v.denominator == 1:
        return f"{v.numerator}.0"
    return f"(/ {v.numerator}.0 {v.denominator}.0)"


class _Emitter:
    def __init__(self, box: dict[str, VarDomain]):
        self.box = box
        # Global categorical code map, deterministic in box order.
        self.codes: dict[str, int] = {}
        for dom in box.values():
            if dom.is_categorical():
                assert dom.values is not None
                for label in dom.values:
                    self.codes.setdefault(label, len(self.codes))
        self.uses_int = False
        self.uses_real = False
        self.nonlinear = False

    def var_sort(self, v: Var) -> Sort:
        dom = self.box.get(v.name)
        if dom is not None:
            return Sort.INT if dom.sort is Sort.SET else dom.sort
        return Sort.INT if v.sort is Sort.SET else v.sort

    # --- sort analysis -----------------------------------------------------

    def expr_is_real(self, e: Expr) -> bool:
        if isinstance(e, Const):
            return e.value.denominator != 1
        if isinstance(e, SetVal):
            return False
        if isinstance(e, Var):
            return self.var_sort(e) is Sort.REAL
        if isinstance(e, (Add, Mul, Max2, Min2)):
            return self.expr_is_real(e.lhs) or self.expr_is_real(e.rhs)
        if isinstance(e, Neg):
            return self.expr_is_real(e.arg)
        if isinstance(e, Pow):
            return self.expr_is_real(e.base)
        if isinstance(e, Ite):
            return self.expr_is_real(e.then) or self.expr_is_real(e.orelse)
        raise ProtocolError(f"cannot emit expression node {type(e).__name__}")

    # --- emission ----------------------------------------------------------

    def expr(self, e: Expr, as_real: bool) -> str:
        if isinstance(e, Const):
            if e.value.denominator != 1 or as_real:
                self.uses_real = True
                return _real_lit(e.value)
            self.uses_int = True
            return _int_lit(e.value)
        if isinstance(e, SetVal):
            if e.value not in self.codes:
                self.codes[e.value] = len(self.codes)
            self.uses_int = True
            return _int_lit(Fraction(self.codes[e.value]))
        if isinstance(e, Var):
            sort = self.var_sort(e)
            if sort is Sort.REAL:
                self.uses_real = True
                return e.name
            self.uses_int = True
            return f"(to_real {e.name})" if as_real else e.name
        if isinstance(e, (Add, Mul)):
            real = as_real or self.expr_is_real(e)
            op = "+" if isinstance(e, Add) else "*"
            if isinstance(e, Mul) and self._has_var(e.lhs) and self._has_var(e.rhs):
                self.nonlinear = True
            return f"({op} {self.expr(e.lhs, real)} {self.expr(e.rhs, real)})"
        if isinstance(e, Neg):
            return f"(- {self.expr(e.arg, as_real)})"
        if isinstance(e, Pow):
            real = as_real or self.expr_is_real(e)
            if e.exponent == 0:
                return self.expr(Const(Fraction(1)), real)
            base = self.expr(e.base, real)
            if e.exponent == 1:
                return base
            if self._has_var(e.base):
                self.nonlinear = True
            return "(* " + " ".join([base] * e.exponent) + ")"
        if isinstance(e, Ite):
            real = as_real or self.expr_is_real(e)
            return (
                f"(ite {self.formula(e.cond)} "
                f"{self.expr(e.then, real)} {self.expr(e.orelse, real)})"
            )
        if isinstance(e, (Max2, Min2)):
            real = as_real or self.expr_is_real(e)
            a, b = self.expr(e.lhs, real), self.expr(e.rhs, real)
            cmp_op = ">=" if isinstance(e, Max2) else "<="
            return f"(ite ({cmp_op} {a} {b}) {a} {b})"
        raise ProtocolError(f"cannot emit expression node {type(e).__name__}")

    @staticmethod
    def _has_var(e: Expr) -> bool:
        return any(isinstance(n, Var) for n in iter_nodes(e))

    def formula(self, f: Formula) -> str:
        if isinstance(f, BoolConst):
            return "true" if f.value else "false"
        if isinstance(f, Cmp):
            real = self.expr_is_real(f.lhs) or self.expr_is_real(f.rhs)
            lhs, rhs = self.expr(f.lhs, real), self.expr(f.rhs, real)
            if f.op is CmpOp.NE:
                return f"(distinct {lhs} {rhs})"
            return f"({_CMP_SYM[f.op]} {lhs} {rhs})"
        if isinstance(f, And):
            return "(and " + " ".join(self.formula(g) for g in f.args) + ")"
        if isinstance(f, Or):
            return "(or " + " ".join(self.formula(g) for g in f.args) + ")"
        if isinstance(f, Not):
            return f"(not {self.formula(f.arg)})"
        if isinstance(f, Implies):
            return f"(=> {self.formula(f.antecedent)} {self.formula(f.consequent)})"
        raise ProtocolError(f"cannot emit formula node {type(f).__name__}")


def _emit(query) -> tuple[str, dict[int, str]]:
    em = _Emitter(query.box)
    decls: list[str] = []
    asserts: list[str] = []
    for name, dom in query.box.items():
        if dom.is_categorical():
            assert dom.values is not None
            decls.append(f"(declare-const {name} Int)")
            em.uses_int = True
            alts = " ".join(f"(= {name} {em.codes[v]})" for v in dom.values)
            asserts.append(f"(assert (or {alts}))" if len(dom.values) > 1 else f"(assert {alts})")
            continue
        smt_sort = "Int" if dom.sort is Sort.INT else "Real"
        if dom.sort is Sort.INT:
            em.uses_int = True
        else:
            em.uses_real = True
        decls.append(f"(declare-const {name} {smt_sort})")
        lit = _int_lit if dom.sort is Sort.INT else _real_lit
        if dom.values is not None:
            alts = " ".join(f"(= {name} {lit(v)})" for v in dom.values)
            asserts.append(f"(assert (or {alts}))" if len(dom.values) > 1 else f"(assert {alts})")
        else:
            assert dom.interval is not None
            asserts.append(f"(assert (>= {name} {lit(dom.interval.lo)}))")
            asserts.append(f"(assert (<= {name} {lit(dom.interval.hi)}))")

    body = em.formula(query.formula)
    asserts.append(f"(assert {body})")

    if em.uses_real and em.uses_int:
        logic = "QF_NIRA" if em.nonlinear else "QF_LIRA"
    elif em.uses_real:
        logic = "QF_NRA" if em.nonlinear else "QF_LRA"
    else:
        logic = "QF_NIA" if em.nonlinear else "QF_LIA"

    lines = ["(set-option :produce-models true)", f"(set-logic {logic})"]
    for label, code in em.codes.items():
        lines.append(f"; set value {label!r} -> {code}")
    lines.extend(decls)
    lines.extend(asserts)
    lines.append("(check-sat)")
    if query.box:
        lines.append("(get-value (" + " ".join(query.box) + "))")
    lines.append("(exit)")
    return "\n".join(lines) + "\n", {code: label for label, code in em.codes.items()}


def emit_smtlib(query) -> str:
    """Deterministic SMT-LIB2 script for a query (byte-stable per input)."""
    query.validate()
    return _emit(query)[0]


# ---------------------------------------------------------------------------
# External process client

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_sexprs(text: str) -> list:
    """Parse a stream of s-expressions into nested lists of atom strings."""
    tokens = _TOKEN.findall(text)
    pos = 0

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(read())
            if pos >= len(tokens):
                raise ProtocolError("unbalanced parenthesis in solver output")
            pos += 1
            return items
        if tok == ")":
            raise ProtocolError("unexpected ')' in solver output")
        return tok

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


def _sexpr_value(node) -> Fraction:
    if isinstance(node, str):
        try:
            return Fraction(node)
        except ValueError as exc:
            raise ProtocolError(f"unparseable value {node!r}") from exc
    if isinstance(node, list) and node:
        head = node[0]
        if head == "-" and len(node) == 2:
            return -_sexpr_value(node[1])
        if head == "/" and len(node) == 3:
            return _sexpr_value(node[1]) / _sexpr_value(node[2])
        if head == "to_real" and len(node) == 2:
            return _sexpr_value(node[1])
    raise ProtocolError(f"unparseable value {node!r}")


def external_solve(query, cfg):
    """Run one query through the configured external SMT solver."""
    from .solver import Sat, SolverStats, Unknown, Unsat

    query.validate()
    if not cfg.command:
        raise BackendLaunchError("no external solver command configured")
    script, code_map = _emit(query)
    stats = SolverStats()
    try:
        proc = subprocess.run(
            list(cfg.command),
            input=script,
            capture_output=True,
            text=True,
            timeout=cfg.timeout,
        )
    except FileNotFoundError as exc:
        raise BackendLaunchError(f"cannot launch {cfg.command[0]!r}: {exc}") from exc
    except subprocess.TimeoutExpired:
        return Unknown("timeout", stats)

    nodes = parse_sexprs(proc.stdout)
    verdict = next((n for n in nodes if n in ("sat", "unsat", "unknown")), None)
    if verdict is None:
        err = (proc.stderr or proc.stdout).strip().splitlines()
        raise ProtocolError(f"no verdict in solver output: {err[:3]!r}")
    if verdict == "unsat":
        return Unsat(stats)
    if verdict == "unknown":
        return Unknown("external solver returned unknown", stats)

    pairs = next(
        (n for n in nodes if isinstance(n, list) and n and isinstance(n[0], list)), None
    )
    if pairs is None and query.box:
        raise ProtocolError("sat verdict but no get-value model in solver output")
    witness: dict[str, Value] = {}
    for entry in pairs or []:
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str)):
            raise ProtocolError(f"malformed model entry {entry!r}")
        name, raw = entry
        if name not in query.box:
            continue
        value = _sexpr_value(raw)
        dom = query.box[name]
        if dom.is_categorical():
            if value.denominator != 1 or int(value) not in code_map:
                raise ProtocolError(f"bad categorical code {value} for {name!r}")
            witness[name] = code_map[int(value)]
        else:
            witness[name] = value
    missing = [n for n in query.box if n not in witness]
    if missing:
        raise ProtocolError(f"solver model missing values for {missing!r}")
    if not delta_satisfies(query.formula, witness, cfg.delta):
        return Unknown("external witness failed the delta recheck", stats)
    return Sat(witness, stats)
