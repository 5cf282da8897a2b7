"""Recursive-descent parser for the constraint expression grammar.

Grammar (tightest first):

    **            power; exponent must be a nonnegative integer literal
    - (unary)     negation
    * /           product; the divisor must be a nonzero rational literal
    + - (binary)  sum
    < <= > >= == != comparison (non-chaining)
    not
    and
    or

Atoms are rational literals (`3`, `0.25`), double-quoted categorical
literals, `true`/`false`, declared variable names, and parenthesized
expressions. All literals parse to exact rationals; `a / q` normalizes to
`(1/q) * a` at parse time so division never appears in the IR.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping

from .errors import (
    DivisionByNonConstantError,
    ExprSyntaxError,
    NonConstantExponentError,
    SpecError,
    UndeclaredVariableError,
)
from .terms import (
    FALSE,
    TRUE,
    Add,
    BoolConst,
    Cmp,
    CmpOp,
    Const,
    Expr,
    Formula,
    Mul,
    Neg,
    Not,
    Pow,
    SetVal,
    Sort,
    Var,
    conj,
    constant_fold,
    disj,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<op>\*\*|<=|>=|==|!=|[-+*/<>()])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "not", "true", "false"}

_CMP_OPS = {
    "<": CmpOp.LT,
    "<=": CmpOp.LE,
    ">": CmpOp.GT,
    ">=": CmpOp.GE,
    "==": CmpOp.EQ,
    "!=": CmpOp.NE,
}


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: int) -> None:
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, env: Mapping[str, Sort]) -> None:
        self.text = text
        self.env = env
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok.kind == "op" and tok.text == op:
            self.advance()
            return
        raise ExprSyntaxError(f"expected {op!r}", tok.pos)

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in ops

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "name" and tok.text == word

    # --- grammar, loosest binding first ---

    def parse(self) -> Expr | Formula:
        node = self.or_level()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {tok.text!r}", tok.pos)
        return node

    def or_level(self) -> Expr | Formula:
        node = self.and_level()
        while self.at_keyword("or"):
            self.advance()
            node = disj((self._as_formula(node), self._as_formula(self.and_level())))
        return node

    def and_level(self) -> Expr | Formula:
        node = self.not_level()
        while self.at_keyword("and"):
            self.advance()
            node = conj((self._as_formula(node), self._as_formula(self.not_level())))
        return node

    def not_level(self) -> Expr | Formula:
        if self.at_keyword("not"):
            tok = self.advance()
            arg = self._as_formula(self.not_level(), tok.pos)
            if isinstance(arg, BoolConst):
                return FALSE if arg.value else TRUE
            return Not(arg)
        return self.cmp_level()

    def cmp_level(self) -> Expr | Formula:
        node = self.add_level()
        tok = self.peek()
        if tok.kind == "op" and tok.text in _CMP_OPS:
            self.advance()
            rhs = self.add_level()
            lhs_e = self._as_expr(node, tok.pos)
            rhs_e = self._as_expr(rhs, tok.pos)
            return Cmp(_CMP_OPS[tok.text], lhs_e, rhs_e)
        return node

    def add_level(self) -> Expr | Formula:
        node = self.mul_level()
        while self.at_op("+", "-"):
            tok = self.advance()
            rhs = self._as_expr(self.mul_level(), tok.pos)
            lhs = self._as_expr(node, tok.pos)
            if tok.text == "-":
                rhs = self._fold_neg(rhs)
            node = self._fold_add(lhs, rhs)
        return node

    def mul_level(self) -> Expr | Formula:
        node = self.unary_level()
        while self.at_op("*", "/"):
            tok = self.advance()
            rhs = self._as_expr(self.unary_level(), tok.pos)
            lhs = self._as_expr(node, tok.pos)
            if tok.text == "/":
                if not isinstance(rhs, Const):
                    raise DivisionByNonConstantError(
                        f"divisor must be a nonzero rational literal (at position {tok.pos})"
                    )
                if rhs.value == 0:
                    raise DivisionByNonConstantError(
                        f"divisor must be a nonzero rational literal (at position {tok.pos})"
                    )
                recip = Const(Fraction(1) / rhs.value)
                node = Const(recip.value * lhs.value) if isinstance(lhs, Const) else Mul(recip, lhs)
            else:
                node = self._fold_mul(lhs, rhs)
        return node

    def unary_level(self) -> Expr | Formula:
        if self.at_op("-"):
            tok = self.advance()
            arg = self._as_expr(self.unary_level(), tok.pos)
            return self._fold_neg(arg)
        return self.power_level()

    def power_level(self) -> Expr | Formula:
        node = self.atom()
        if self.at_op("**"):
            tok = self.advance()
            exponent = self._as_expr(self.unary_level(), tok.pos)
            exponent = constant_fold(exponent)
            if (
                not isinstance(exponent, Const)
                or exponent.value.denominator != 1
                or exponent.value < 0
            ):
                raise NonConstantExponentError(
                    f"exponent must be a nonnegative integer literal (at position {tok.pos})"
                )
            base = self._as_expr(node, tok.pos)
            n = int(exponent.value)
            if isinstance(base, Const):
                return Const(base.value**n)
            return Pow(base, n)
        return node

    def atom(self) -> Expr | Formula:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Const(Fraction(tok.text))
        if tok.kind == "string":
            self.advance()
            body = tok.text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
            return SetVal(body)
        if tok.kind == "name":
            if tok.text == "true":
                self.advance()
                return TRUE
            if tok.text == "false":
                self.advance()
                return FALSE
            if tok.text in _KEYWORDS:
                raise ExprSyntaxError(f"unexpected keyword {tok.text!r}", tok.pos)
            self.advance()
            sort = self.env.get(tok.text)
            if sort is None:
                raise UndeclaredVariableError(tok.text)
            return Var(tok.text, sort)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.or_level()
            self.expect_op(")")
            return node
        raise ExprSyntaxError("expected a value, name, or '('", tok.pos)

    # --- helpers ---

    @staticmethod
    def _fold_add(lhs: Expr, rhs: Expr) -> Expr:
        if isinstance(lhs, Const) and isinstance(rhs, Const):
            return Const(lhs.value + rhs.value)
        return Add(lhs, rhs)

    @staticmethod
    def _fold_mul(lhs: Expr, rhs: Expr) -> Expr:
        if isinstance(lhs, Const) and isinstance(rhs, Const):
            return Const(lhs.value * rhs.value)
        return Mul(lhs, rhs)

    @staticmethod
    def _fold_neg(arg: Expr) -> Expr:
        if isinstance(arg, Const):
            return Const(-arg.value)
        if isinstance(arg, Neg):
            return arg.arg
        return Neg(arg)

    def _as_expr(self, node: Expr | Formula, pos: int | None = None) -> Expr:
        if isinstance(node, Expr):
            return node
        raise ExprSyntaxError("expected an arithmetic value, found a condition", pos or 0)

    def _as_formula(self, node: Expr | Formula, pos: int | None = None) -> Formula:
        if isinstance(node, Formula):
            return node
        raise ExprSyntaxError("expected a condition, found an arithmetic value", pos or 0)


def parse_node(text: str, env: Mapping[str, Sort]) -> Expr | Formula:
    """Parse `text` against declared variables `env` (label -> sort)."""
    if not env:
        raise SpecError("cannot parse expressions without declared variables")
    return _Parser(text, env).parse()


def parse_formula(text: str, env: Mapping[str, Sort]) -> Formula:
    node = parse_node(text, env)
    if not isinstance(node, Formula):
        raise ExprSyntaxError("expected a condition, found an arithmetic value", 0)
    return node


def parse_arith(text: str, env: Mapping[str, Sort]) -> Expr:
    node = parse_node(text, env)
    if not isinstance(node, Expr):
        raise ExprSyntaxError("expected an arithmetic value, found a condition", 0)
    return node
