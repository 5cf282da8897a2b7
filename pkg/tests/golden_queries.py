"""Ten canonical solver queries with checked-in SMT-LIB2 renderings.

Run this module directly to (re)generate the golden files:

    python3 tests/golden_queries.py
"""

from fractions import Fraction
from pathlib import Path

from stabex import SolverQuery, VarDomain, emit_smtlib
from stabex.terms import (
    Add,
    And,
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
)

F = Fraction
GOLDEN_DIR = Path(__file__).parent / "golden"

x = Var("x", Sort.REAL)
y = Var("y", Sort.REAL)
n = Var("n", Sort.INT)
c = Var("c", Sort.SET)


def _cases():
    yield (
        "q01_pinned_equality",
        SolverQuery(
            And((Cmp(CmpOp.GE, x, Const(F(4))), Cmp(CmpOp.LE, x, Const(F(4))))),
            {"x": VarDomain.real(0, 10)},
        ),
    )
    yield (
        "q02_sqrt2",
        SolverQuery(
            Cmp(CmpOp.EQ, Pow(x, 2), Const(F(2))),
            {"x": VarDomain.real(0, 4)},
        ),
    )
    yield (
        "q03_int_parity",
        SolverQuery(
            Cmp(CmpOp.EQ, Mul(Const(F(2)), n), Const(F(5))),
            {"n": VarDomain.integer(0, 5)},
        ),
    )
    yield (
        "q04_mixed_sorts",
        SolverQuery(
            And(
                (
                    Cmp(CmpOp.LE, Add(x, n), Const(F(3, 2))),
                    Cmp(CmpOp.GE, x, Const(F(-1, 3))),
                )
            ),
            {"x": VarDomain.real(-2, 2), "n": VarDomain.integer(0, 3)},
        ),
    )
    yield (
        "q05_categorical",
        SolverQuery(
            And(
                (
                    Cmp(CmpOp.NE, c, SetVal("slow")),
                    Or((Cmp(CmpOp.EQ, c, SetVal("fast")), Cmp(CmpOp.EQ, c, SetVal("off")))),
                )
            ),
            {"c": VarDomain.categorical(["fast", "slow", "off"])},
        ),
    )
    yield (
        "q06_ite_abs",
        SolverQuery(
            Cmp(CmpOp.LE, Ite(Cmp(CmpOp.GE, x, Const(F(0))), x, Neg(x)), Const(F(2))),
            {"x": VarDomain.real(-5, 5)},
        ),
    )
    yield (
        "q07_min_max",
        SolverQuery(
            And(
                (
                    Cmp(CmpOp.GE, Max2(x, y), Const(F(3))),
                    Cmp(CmpOp.LE, Min2(x, y), Const(F(1))),
                )
            ),
            {"x": VarDomain.real(0, 10), "y": VarDomain.real(0, 10)},
        ),
    )
    yield (
        "q08_implication",
        SolverQuery(
            And(
                (
                    Implies(Cmp(CmpOp.GT, x, Const(F(0))), Cmp(CmpOp.GE, x, Const(F(1)))),
                    Not(Cmp(CmpOp.EQ, x, Const(F(7, 10)))),
                )
            ),
            {"x": VarDomain.real(-1, 1)},
        ),
    )
    yield (
        "q09_grid_domain",
        SolverQuery(
            Cmp(CmpOp.GT, x, Const(F(5))),
            {"x": VarDomain.grid(Sort.REAL, [2, 4, 7])},
        ),
    )
    yield (
        "q10_polynomial_band",
        SolverQuery(
            And(
                (
                    Cmp(
                        CmpOp.LE,
                        Add(Mul(Pow(Add(x, Const(F(-1))), 2), Pow(Add(x, Const(F(1))), 2)),
                            Mul(Const(F(1, 7)), y)),
                        Const(F(1, 2)),
                    ),
                    Cmp(CmpOp.NE, y, Const(F(0))),
                )
            ),
            {"x": VarDomain.real(-2, 2), "y": VarDomain.real(-1, 1)},
        ),
    )


CASES = list(_cases())


def write_goldens() -> None:
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name, query in CASES:
        (GOLDEN_DIR / f"{name}.smt2").write_text(emit_smtlib(query), encoding="utf-8")


if __name__ == "__main__":
    write_goldens()
    print(f"wrote {len(CASES)} golden files to {GOLDEN_DIR}")
