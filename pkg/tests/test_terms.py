"""Term IR: evaluation, folding, NNF, strengthening, delta-satisfaction."""

import random
from fractions import Fraction

import pytest

from stabex import (
    Add,
    And,
    BoolConst,
    Cmp,
    CmpOp,
    Const,
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
from stabex.errors import SortMismatchError
from stabex.terms import constant_fold, expr_sort, free_vars, nnf

F = Fraction
x = Var("x", Sort.REAL)
n = Var("n", Sort.INT)
c = Var("c", Sort.SET)


def test_arithmetic_evaluation_is_exact():
    e = Add(Add(Mul(Const(F(1, 3)), x), Pow(x, 2)), Neg(Const(F(1))))
    assert evaluate(e, {"x": F(3, 2)}) == F(1, 2) + F(9, 4) - 1


def test_ite_max_min():
    e = Ite(Cmp(CmpOp.LE, x, Const(F(0))), Const(F(-1)), Const(F(1)))
    assert evaluate(e, {"x": F(0)}) == -1
    assert evaluate(e, {"x": F(1, 100)}) == 1
    assert evaluate(Max2(x, Const(F(2))), {"x": F(5)}) == 5
    assert evaluate(Min2(x, Const(F(2))), {"x": F(5)}) == 2


def test_categorical_compare():
    f = Cmp(CmpOp.EQ, c, SetVal("fast"))
    assert evaluate(f, {"c": "fast"}) is True
    assert evaluate(f, {"c": "slow"}) is False
    assert evaluate(Cmp(CmpOp.NE, c, SetVal("fast")), {"c": "slow"}) is True


def test_categorical_ordering_rejected():
    with pytest.raises(SortMismatchError):
        evaluate(Cmp(CmpOp.LT, c, SetVal("fast")), {"c": "slow"})


def test_conj_disj_flatten_and_units():
    assert conj([]) == BoolConst(True)
    assert disj([]) == BoolConst(False)
    a = Cmp(CmpOp.GE, x, Const(F(0)))
    b = Cmp(CmpOp.LE, x, Const(F(1)))
    f = conj([a, conj([b, BoolConst(True)])])
    assert isinstance(f, And) and set(f.args) == {a, b}
    assert conj([a, BoolConst(False)]) == BoolConst(False)
    assert disj([a, BoolConst(True)]) == BoolConst(True)


def test_free_vars():
    f = Implies(Cmp(CmpOp.GT, n, Const(F(0))), Cmp(CmpOp.LE, Add(x, n), Const(F(3))))
    assert free_vars(f) == {"n": Sort.INT, "x": Sort.REAL}


def test_substitute_then_evaluate():
    f = Cmp(CmpOp.EQ, Add(x, Mul(Const(F(2)), n)), Const(F(7)))
    g = substitute(f, {"n": F(2)})
    assert free_vars(g) == {"x": Sort.REAL}
    assert evaluate(g, {"x": F(3)}) is True


def _random_expr(rng, depth=3):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([x, n, Const(F(rng.randint(-4, 4), rng.randint(1, 4)))])
    k = rng.randint(0, 4)
    a = _random_expr(rng, depth - 1)
    b = _random_expr(rng, depth - 1)
    if k == 0:
        return Add(a, b)
    if k == 1:
        return Mul(a, b)
    if k == 2:
        return Neg(a)
    if k == 3:
        return Max2(a, Min2(b, Const(F(2))))
    return Pow(a, rng.randint(0, 3))


def test_constant_fold_preserves_value():
    rng = random.Random(7)
    for _ in range(200):
        e = _random_expr(rng)
        env = {"x": F(rng.randint(-50, 50), rng.randint(1, 9)), "n": F(rng.randint(-5, 5))}
        assert evaluate(constant_fold(e), env) == evaluate(e, env)


def test_nnf_no_negation_above_atoms_and_equivalent():
    rng = random.Random(11)
    a = Cmp(CmpOp.LT, x, Const(F(1)))
    b = Cmp(CmpOp.EQ, n, Const(F(2)))
    f = Not(Or((And((a, Not(b))), Implies(a, b))))
    g = nnf(f)

    def no_bad_not(h):
        if isinstance(h, Not):
            return False
        if isinstance(h, (And, Or)):
            return all(no_bad_not(arg) for arg in h.args)
        return not isinstance(h, Implies)

    assert no_bad_not(g)
    for _ in range(100):
        env = {"x": F(rng.randint(-3, 3), 2), "n": F(rng.randint(0, 4))}
        assert evaluate(g, env) == evaluate(f, env)


def test_strengthen_shifts_strict_and_nonstrict_atoms():
    d = F(1, 10)
    f = Cmp(CmpOp.GE, x, Const(F(1)))
    g = strengthen(f, d)
    assert evaluate(g, {"x": F(1)}) is False
    assert evaluate(g, {"x": F(11, 10) + F(1, 1000)}) is True
    # strengthened formula implies original on a sweep
    h = strengthen(Cmp(CmpOp.LT, x, Const(F(0))), d)
    for k in range(-20, 20):
        env = {"x": F(k, 10)}
        if evaluate(h, env):
            assert evaluate(Cmp(CmpOp.LT, x, Const(F(0))), env)


def test_strengthen_keeps_equalities():
    d = F(1, 10)
    f = Cmp(CmpOp.EQ, x, Const(F(2)))
    assert strengthen(f, d) == f


def test_strengthen_respects_polarity():
    # under a negation the atom is weakened, so the whole formula still strengthens
    d = F(1, 10)
    f = Not(Cmp(CmpOp.GE, x, Const(F(1))))
    g = strengthen(f, d)
    for k in range(0, 30):
        env = {"x": F(k, 10)}
        if evaluate(g, env):
            assert evaluate(f, env)


def test_delta_satisfies_slack():
    d = F(1, 100)
    f = Cmp(CmpOp.GE, x, Const(F(1)))
    assert delta_satisfies(f, {"x": F(1) - d}, d)
    assert not delta_satisfies(f, {"x": F(1) - 2 * d}, d)
    eq = Cmp(CmpOp.EQ, x, Const(F(5)))
    assert delta_satisfies(eq, {"x": F(5) + d}, d)
    assert not delta_satisfies(eq, {"x": F(5) + 2 * d}, d)


def test_format_rational_forms():
    assert format_rational(F(3)) == "3"
    assert format_rational(F(-7)) == "-7"
    assert format_rational(F(1, 2)) == "0.5"
    assert format_rational(F(-3, 8)) == "-0.375"
    assert format_rational(F(1, 3)) == "1/3"
    assert format_rational(F(0)) == "0"


def test_to_source_renders_grammar():
    f = And(
        (
            Cmp(CmpOp.LE, Add(x, Const(F(1, 2))), Const(F(3))),
            Not(Cmp(CmpOp.EQ, n, Const(F(0)))),
        )
    )
    s = to_source(f)
    assert "and" in s and "<=" in s
    assert "Cmp" not in s and "Add" not in s


def test_expr_sort():
    assert expr_sort(Add(x, Const(F(1)))) is Sort.REAL
    assert expr_sort(Add(n, Const(F(1)))) is Sort.INT
    assert expr_sort(Add(n, x)) is Sort.REAL
