"""Term and formula IR with exact rational semantics.

Expressions are small immutable trees over real/int/categorical variables.
All numeric constants are `fractions.Fraction`; nothing in the IR ever
evaluates through binary floats. Formulas are quantifier-free boolean
combinations of comparisons between expressions.

The evaluators here are the single source of truth for satisfaction:
`evaluate` is exact, `delta_satisfies` applies the delta-weakened atom
semantics used by the decision backends, and `strengthen` is its
polarity-aware dual used when candidate points must hold with margin.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, Mapping, Union

from .errors import SortMismatchError


class Sort(str, Enum):
    REAL = "real"
    INT = "int"
    SET = "set"


Value = Union[Fraction, str]
Assignment = Mapping[str, Value]


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self) -> None:
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class SetVal(Expr):
    """Categorical literal; participates in equality comparisons only."""

    value: str


@dataclass(frozen=True)
class Var(Expr):
    name: str
    sort: Sort = Sort.REAL


@dataclass(frozen=True)
class Add(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Mul(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    """base ** exponent with a nonnegative integer literal exponent."""

    base: Expr
    exponent: int


@dataclass(frozen=True)
class Ite(Expr):
    cond: "Formula"
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class Max2(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Min2(Expr):
    lhs: Expr
    rhs: Expr


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


class CmpOp(str, Enum):
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    EQ = "=="
    NE = "!="


_NEGATED_OP = {
    CmpOp.LT: CmpOp.GE,
    CmpOp.LE: CmpOp.GT,
    CmpOp.GT: CmpOp.LE,
    CmpOp.GE: CmpOp.LT,
    CmpOp.EQ: CmpOp.NE,
    CmpOp.NE: CmpOp.EQ,
}


@dataclass(frozen=True)
class Cmp(Formula):
    op: CmpOp
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Implies(Formula):
    antecedent: Formula
    consequent: Formula


def rat(x: int | str | Fraction) -> Fraction:
    """Exact rational from an int, a Fraction, or a decimal string."""
    return x if isinstance(x, Fraction) else Fraction(str(x))


def as_expr(x: Expr | Value | int | str) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        # Decimal strings become numeric constants; categorical values must
        # be wrapped in SetVal by the caller.
        return Const(Fraction(x))
    return Const(Fraction(x))


def conj(args) -> Formula:
    """And(...) with flattening and boolean-constant absorption."""
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, BoolConst):
            if not a.value:
                return FALSE
            continue
        if isinstance(a, And):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(args) -> Formula:
    """Or(...) with flattening and boolean-constant absorption."""
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, BoolConst):
            if a.value:
                return TRUE
            continue
        if isinstance(a, Or):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def iter_nodes(node: Expr | Formula) -> Iterator[Expr | Formula]:
    stack: list[Expr | Formula] = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, (Add, Mul, Max2, Min2)):
            stack.extend((n.lhs, n.rhs))
        elif isinstance(n, Neg):
            stack.append(n.arg)
        elif isinstance(n, Pow):
            stack.append(n.base)
        elif isinstance(n, Ite):
            stack.extend((n.cond, n.then, n.orelse))
        elif isinstance(n, Cmp):
            stack.extend((n.lhs, n.rhs))
        elif isinstance(n, (And, Or)):
            stack.extend(n.args)
        elif isinstance(n, Not):
            stack.append(n.arg)
        elif isinstance(n, Implies):
            stack.extend((n.antecedent, n.consequent))


def free_vars(node: Expr | Formula) -> dict[str, Sort]:
    """Free variables with their sorts, keyed by name (insertion-ordered)."""
    out: dict[str, Sort] = {}

    def walk(n: Expr | Formula) -> None:
        if isinstance(n, Var):
            out.setdefault(n.name, n.sort)
        elif isinstance(n, (Add, Mul, Max2, Min2)):
            walk(n.lhs)
            walk(n.rhs)
        elif isinstance(n, Neg):
            walk(n.arg)
        elif isinstance(n, Pow):
            walk(n.base)
        elif isinstance(n, Ite):
            walk(n.cond)
            walk(n.then)
            walk(n.orelse)
        elif isinstance(n, Cmp):
            walk(n.lhs)
            walk(n.rhs)
        elif isinstance(n, (And, Or)):
            for a in n.args:
                walk(a)
        elif isinstance(n, Not):
            walk(n.arg)
        elif isinstance(n, Implies):
            walk(n.antecedent)
            walk(n.consequent)

    walk(node)
    return out


def _num(v: Value, where: str) -> Fraction:
    if isinstance(v, Fraction):
        return v
    raise SortMismatchError(f"expected numeric value in {where}, got {v!r}")


def evaluate(node: Expr | Formula, env: Assignment):
    """Exact evaluation; returns Fraction/str for Expr, bool for Formula."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, SetVal):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise SortMismatchError(f"no value for variable {node.name!r}") from None
    if isinstance(node, Add):
        return _num(evaluate(node.lhs, env), "+") + _num(evaluate(node.rhs, env), "+")
    if isinstance(node, Mul):
        return _num(evaluate(node.lhs, env), "*") * _num(evaluate(node.rhs, env), "*")
    if isinstance(node, Neg):
        return -_num(evaluate(node.arg, env), "-")
    if isinstance(node, Pow):
        return _num(evaluate(node.base, env), "**") ** node.exponent
    if isinstance(node, Ite):
        return evaluate(node.then if evaluate(node.cond, env) else node.orelse, env)
    if isinstance(node, Max2):
        return max(_num(evaluate(node.lhs, env), "max"), _num(evaluate(node.rhs, env), "max"))
    if isinstance(node, Min2):
        return min(_num(evaluate(node.lhs, env), "min"), _num(evaluate(node.rhs, env), "min"))
    if isinstance(node, BoolConst):
        return node.value
    if isinstance(node, Cmp):
        return _eval_cmp(node.op, evaluate(node.lhs, env), evaluate(node.rhs, env))
    if isinstance(node, And):
        return all(evaluate(a, env) for a in node.args)
    if isinstance(node, Or):
        return any(evaluate(a, env) for a in node.args)
    if isinstance(node, Not):
        return not evaluate(node.arg, env)
    if isinstance(node, Implies):
        return (not evaluate(node.antecedent, env)) or evaluate(node.consequent, env)
    raise TypeError(f"cannot evaluate {node!r}")


def _eval_cmp(op: CmpOp, a, b) -> bool:
    a_str = isinstance(a, str)
    b_str = isinstance(b, str)
    if a_str or b_str:
        if not (a_str and b_str):
            raise SortMismatchError(f"comparison mixes categorical and numeric: {a!r} {op.value} {b!r}")
        if op is CmpOp.EQ:
            return a == b
        if op is CmpOp.NE:
            return a != b
        raise SortMismatchError(f"categorical values support only ==/!=, got {op.value}")
    if op is CmpOp.LT:
        return a < b
    if op is CmpOp.LE:
        return a <= b
    if op is CmpOp.GT:
        return a > b
    if op is CmpOp.GE:
        return a >= b
    if op is CmpOp.EQ:
        return a == b
    return a != b


def substitute(node: Expr | Formula, mapping: Mapping[str, Expr | Value]):
    """Replace variables by expressions or values; returns the same node kind."""

    def sub(n):
        if isinstance(n, Var):
            if n.name in mapping:
                repl = mapping[n.name]
                if isinstance(repl, Expr):
                    return repl
                if isinstance(repl, str):
                    return SetVal(repl)
                return Const(Fraction(repl))
            return n
        if isinstance(n, (Const, SetVal, BoolConst)):
            return n
        if isinstance(n, Add):
            return Add(sub(n.lhs), sub(n.rhs))
        if isinstance(n, Mul):
            return Mul(sub(n.lhs), sub(n.rhs))
        if isinstance(n, Neg):
            return Neg(sub(n.arg))
        if isinstance(n, Pow):
            return Pow(sub(n.base), n.exponent)
        if isinstance(n, Ite):
            return Ite(sub(n.cond), sub(n.then), sub(n.orelse))
        if isinstance(n, Max2):
            return Max2(sub(n.lhs), sub(n.rhs))
        if isinstance(n, Min2):
            return Min2(sub(n.lhs), sub(n.rhs))
        if isinstance(n, Cmp):
            return Cmp(n.op, sub(n.lhs), sub(n.rhs))
        if isinstance(n, And):
            return And(tuple(sub(a) for a in n.args))
        if isinstance(n, Or):
            return Or(tuple(sub(a) for a in n.args))
        if isinstance(n, Not):
            return Not(sub(n.arg))
        if isinstance(n, Implies):
            return Implies(sub(n.antecedent), sub(n.consequent))
        raise TypeError(f"cannot substitute in {n!r}")

    return sub(node)


def constant_fold(node: Expr | Formula):
    """Bottom-up constant folding; the only simplification the IR performs."""
    if isinstance(node, (Const, SetVal, Var, BoolConst)):
        return node
    if isinstance(node, Add):
        lhs, rhs = constant_fold(node.lhs), constant_fold(node.rhs)
        if isinstance(lhs, Const) and isinstance(rhs, Const):
            return Const(lhs.value + rhs.value)
        return Add(lhs, rhs)
    if isinstance(node, Mul):
        lhs, rhs = constant_fold(node.lhs), constant_fold(node.rhs)
        if isinstance(lhs, Const) and isinstance(rhs, Const):
            return Const(lhs.value * rhs.value)
        return Mul(lhs, rhs)
    if isinstance(node, Neg):
        arg = constant_fold(node.arg)
        if isinstance(arg, Const):
            return Const(-arg.value)
        return Neg(arg)
    if isinstance(node, Pow):
        base = constant_fold(node.base)
        if isinstance(base, Const):
            return Const(base.value**node.exponent)
        return Pow(base, node.exponent)
    if isinstance(node, Ite):
        cond = constant_fold(node.cond)
        then, orelse = constant_fold(node.then), constant_fold(node.orelse)
        if isinstance(cond, BoolConst):
            return then if cond.value else orelse
        return Ite(cond, then, orelse)
    if isinstance(node, Max2):
        lhs, rhs = constant_fold(node.lhs), constant_fold(node.rhs)
        if isinstance(lhs, Const) and isinstance(rhs, Const):
            return Const(max(lhs.value, rhs.value))
        return Max2(lhs, rhs)
    if isinstance(node, Min2):
        lhs, rhs = constant_fold(node.lhs), constant_fold(node.rhs)
        if isinstance(lhs, Const) and isinstance(rhs, Const):
            return Const(min(lhs.value, rhs.value))
        return Min2(lhs, rhs)
    if isinstance(node, Cmp):
        lhs, rhs = constant_fold(node.lhs), constant_fold(node.rhs)
        if isinstance(lhs, (Const, SetVal)) and isinstance(rhs, (Const, SetVal)):
            return BoolConst(_eval_cmp(node.op, lhs.value, rhs.value))
        return Cmp(node.op, lhs, rhs)
    if isinstance(node, And):
        return conj(constant_fold(a) for a in node.args)
    if isinstance(node, Or):
        return disj(constant_fold(a) for a in node.args)
    if isinstance(node, Not):
        arg = constant_fold(node.arg)
        if isinstance(arg, BoolConst):
            return BoolConst(not arg.value)
        return Not(arg)
    if isinstance(node, Implies):
        ant, con = constant_fold(node.antecedent), constant_fold(node.consequent)
        if isinstance(ant, BoolConst):
            return con if ant.value else TRUE
        if isinstance(con, BoolConst) and con.value:
            return TRUE
        return Implies(ant, con)
    raise TypeError(f"cannot fold {node!r}")


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form: negations pushed onto comparison atoms."""
    if isinstance(f, BoolConst):
        return BoolConst(f.value != negate)
    if isinstance(f, Cmp):
        return Cmp(_NEGATED_OP[f.op], f.lhs, f.rhs) if negate else f
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, And):
        args = tuple(nnf(a, negate) for a in f.args)
        return Or(args) if negate else And(args)
    if isinstance(f, Or):
        args = tuple(nnf(a, negate) for a in f.args)
        return And(args) if negate else Or(args)
    if isinstance(f, Implies):
        if negate:
            return And((nnf(f.antecedent, False), nnf(f.consequent, True)))
        return Or((nnf(f.antecedent, True), nnf(f.consequent, False)))
    raise TypeError(f"cannot normalize {f!r}")


def strengthen(f: Formula, delta: Fraction) -> Formula:
    """Shrink every inequality atom by `delta`, polarity-aware.

    Positive occurrences of a <= b become a <= b - delta (and dually for the
    other inequality operators); negative occurrences are widened so the
    overall formula is harder to satisfy. Equality atoms are left unchanged:
    there is no one-sided margin for them.
    """

    def walk(g: Formula, positive: bool) -> Formula:
        if isinstance(g, BoolConst):
            return g
        if isinstance(g, Cmp):
            if g.op in (CmpOp.EQ, CmpOp.NE):
                return g
            shift = -delta if positive else delta
            if g.op in (CmpOp.GT, CmpOp.GE):
                shift = -shift
            return Cmp(g.op, g.lhs, constant_fold(Add(g.rhs, Const(shift))))
        if isinstance(g, Not):
            return Not(walk(g.arg, not positive))
        if isinstance(g, And):
            return And(tuple(walk(a, positive) for a in g.args))
        if isinstance(g, Or):
            return Or(tuple(walk(a, positive) for a in g.args))
        if isinstance(g, Implies):
            return Implies(walk(g.antecedent, not positive), walk(g.consequent, positive))
        raise TypeError(f"cannot strengthen {g!r}")

    return walk(f, True)


def _atom_delta_holds(c: Cmp, env: Assignment, delta: Fraction) -> bool:
    a = evaluate(c.lhs, env)
    b = evaluate(c.rhs, env)
    if isinstance(a, str) or isinstance(b, str):
        return _eval_cmp(c.op, a, b)
    if c.op is CmpOp.LE:
        return a <= b + delta
    if c.op is CmpOp.LT:
        return a < b + delta
    if c.op is CmpOp.GE:
        return a >= b - delta
    if c.op is CmpOp.GT:
        return a > b - delta
    if c.op is CmpOp.EQ:
        return abs(a - b) <= delta
    return a != b


def delta_satisfies(f: Formula, env: Assignment, delta: Fraction) -> bool:
    """Point check under delta-weakened atom semantics.

    The formula is taken to NNF first so the slack is always granted to the
    atom as it appears under negation.
    """

    def hold(g: Formula) -> bool:
        if isinstance(g, BoolConst):
            return g.value
        if isinstance(g, Cmp):
            return _atom_delta_holds(g, env, delta)
        if isinstance(g, And):
            return all(hold(a) for a in g.args)
        if isinstance(g, Or):
            return any(hold(a) for a in g.args)
        raise TypeError(f"unexpected node after NNF: {g!r}")

    return hold(nnf(f))


_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_ADD = 5
_PREC_MUL = 6
_PREC_UNARY = 7
_PREC_POW = 8
_PREC_ATOM = 9


def format_rational(x: Fraction) -> str:
    """Exact textual form that the expression grammar parses back.

    Integers print bare, terminating decimals print as decimals, everything
    else prints as p/q.
    """
    if x.denominator == 1:
        return str(x.numerator)
    den = x.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        digits = max(twos, fives)
        scaled = x * 10**digits
        sign = "-" if scaled < 0 else ""
        whole, frac = divmod(abs(scaled.numerator), 10**digits)
        return f"{sign}{whole}.{str(frac).zfill(digits)}"
    return f"{x.numerator}/{x.denominator}"


def to_source(node: Expr | Formula) -> str:
    """Render a node in the expression grammar (inverse of parse where possible).

    Ite/Max2/Min2 have no surface syntax and render as ite(...)/max(...)/min(...)
    for diagnostics only.
    """

    def render(n, ctx: int) -> str:
        if isinstance(n, Const):
            text = format_rational(n.value)
            if n.value < 0 and ctx > _PREC_ADD:
                return f"({text})"
            if "/" in text and ctx > _PREC_MUL:
                return f"({text})"
            return text
        if isinstance(n, SetVal):
            return '"' + n.value.replace('"', '\\"') + '"'
        if isinstance(n, Var):
            return n.name
        if isinstance(n, BoolConst):
            return "true" if n.value else "false"
        if isinstance(n, Add):
            if isinstance(n.rhs, Neg):
                body = f"{render(n.lhs, _PREC_ADD)} - {render(n.rhs.arg, _PREC_ADD + 1)}"
            elif isinstance(n.rhs, Const) and n.rhs.value < 0:
                body = f"{render(n.lhs, _PREC_ADD)} - {render(Const(-n.rhs.value), _PREC_ADD + 1)}"
            else:
                body = f"{render(n.lhs, _PREC_ADD)} + {render(n.rhs, _PREC_ADD + 1)}"
            return f"({body})" if ctx > _PREC_ADD else body
        if isinstance(n, Mul):
            body = f"{render(n.lhs, _PREC_MUL)}*{render(n.rhs, _PREC_MUL + 1)}"
            return f"({body})" if ctx > _PREC_MUL else body
        if isinstance(n, Neg):
            body = f"-{render(n.arg, _PREC_UNARY)}"
            return f"({body})" if ctx > _PREC_UNARY else body
        if isinstance(n, Pow):
            body = f"{render(n.base, _PREC_POW + 1)}**{n.exponent}"
            return f"({body})" if ctx > _PREC_POW else body
        if isinstance(n, Ite):
            return f"ite({render(n.cond, 0)}, {render(n.then, 0)}, {render(n.orelse, 0)})"
        if isinstance(n, Max2):
            return f"max({render(n.lhs, 0)}, {render(n.rhs, 0)})"
        if isinstance(n, Min2):
            return f"min({render(n.lhs, 0)}, {render(n.rhs, 0)})"
        if isinstance(n, Cmp):
            body = f"{render(n.lhs, _PREC_CMP + 1)} {n.op.value} {render(n.rhs, _PREC_CMP + 1)}"
            return f"({body})" if ctx > _PREC_CMP else body
        if isinstance(n, And):
            body = " and ".join(render(a, _PREC_AND + 1) for a in n.args)
            return f"({body})" if ctx > _PREC_AND else body
        if isinstance(n, Or):
            body = " or ".join(render(a, _PREC_OR + 1) for a in n.args)
            return f"({body})" if ctx > _PREC_OR else body
        if isinstance(n, Not):
            body = f"not {render(n.arg, _PREC_NOT)}"
            return f"({body})" if ctx > _PREC_NOT else body
        if isinstance(n, Implies):
            # No surface syntax; print the equivalent disjunction.
            return render(Or((Not(n.antecedent), n.consequent)), ctx)
        raise TypeError(f"cannot render {n!r}")

    return render(node, 0)


def expr_sort(e: Expr) -> Sort:
    """Static sort of an expression (INT only if every path stays integral)."""
    if isinstance(e, Const):
        return Sort.INT if e.value.denominator == 1 else Sort.REAL
    if isinstance(e, SetVal):
        return Sort.SET
    if isinstance(e, Var):
        return e.sort
    if isinstance(e, (Add, Mul, Max2, Min2)):
        a, b = expr_sort(e.lhs), expr_sort(e.rhs)
        if Sort.SET in (a, b):
            raise SortMismatchError("categorical value in arithmetic")
        return Sort.INT if a is Sort.INT and b is Sort.INT else Sort.REAL
    if isinstance(e, Neg):
        return expr_sort(e.arg)
    if isinstance(e, Pow):
        return expr_sort(e.base)
    if isinstance(e, Ite):
        a, b = expr_sort(e.then), expr_sort(e.orelse)
        if Sort.SET in (a, b):
            raise SortMismatchError("categorical value in arithmetic ite")
        return Sort.INT if a is Sort.INT and b is Sort.INT else Sort.REAL
    raise TypeError(f"not an expression: {e!r}")
