import random
from fractions import Fraction

import pytest

from koszulkit.fields import (
    DivisionByZero,
    FieldMismatch,
    QQ,
    Scalar,
    prime_field,
    scalar_arith,
)
from koszulkit.sparse import SparseMatrix

from oracles import dense_rank

F5 = prime_field(5)
FP = prime_field(32003)


def test_scalar_examples():
    assert str(scalar_arith(Scalar(QQ, "1/2"), Scalar(QQ, "1/3"), "add")) == "5/6"
    assert str(scalar_arith(Scalar(F5, 3), Scalar(F5, 4), "mul")) == "2"
    with pytest.raises(DivisionByZero):
        scalar_arith(Scalar(QQ, 1), Scalar(QQ, 0), "div")


def test_scalar_field_mismatch():
    with pytest.raises(FieldMismatch):
        scalar_arith(Scalar(QQ, 1), Scalar(F5, 1), "add")


def test_scalar_canonical_form():
    s = Scalar(QQ, Fraction(2, -4))
    assert s.value == Fraction(-1, 2)
    assert Scalar(F5, -3).value == 2


def test_invalid_fields():
    with pytest.raises(ValueError):
        prime_field(4)
    with pytest.raises(ValueError):
        prime_field(2)


def test_rref_identity_and_zero():
    ident = SparseMatrix.identity(3, QQ)
    red, piv, rank = ident.rref()
    assert rank == 3 and piv == [0, 1, 2] and red == ident
    zero = SparseMatrix.zero(2, 4, QQ)
    red, piv, rank = zero.rref()
    assert rank == 0 and piv == []


def test_rref_rank_one():
    m = SparseMatrix.from_rows([[1, 2], [2, 4]], QQ)
    red, piv, rank = m.rref()
    assert rank == 1
    k = m.kernel_basis()
    assert k.cols == 1
    assert m.mul(k).is_zero()
    # kernel spans (-2, 1)
    col = k.column(0)
    assert col[0] / col[1] == Fraction(-2)


def test_rref_idempotent():
    rng = random.Random(7)
    for _ in range(25):
        rows = [[rng.randint(-3, 3) for _ in range(4)] for _ in range(3)]
        m = SparseMatrix.from_rows(rows, QQ)
        red, piv, rank = m.rref()
        red2, piv2, rank2 = red.rref()
        assert red2 == red and piv2 == piv and rank2 == rank


def test_solve_examples():
    ident = SparseMatrix.identity(2, QQ)
    part, ker, cert = ident.solve([5, 7])
    assert part == {0: Fraction(5), 1: Fraction(7)} and ker.cols == 0
    zero = SparseMatrix.zero(2, 2, QQ)
    part, ker, cert = zero.solve([1, 0])
    assert part is None and cert is not None
    row = SparseMatrix.from_rows([[1, 1]], QQ)
    part, ker, cert = row.solve([3])
    assert part == {0: Fraction(3)}
    assert ker.cols == 1
    kc = ker.column(0)
    assert kc[0] + kc[1] == 0


def test_rank_nullity_random():
    rng = random.Random(11)
    for _ in range(60):
        r = rng.randint(1, 5)
        c = rng.randint(1, 5)
        m = SparseMatrix.from_rows(
            [[rng.randint(-4, 4) for _ in range(c)] for _ in range(r)], QQ
        )
        red, piv, rank = m.rref()
        k = m.kernel_basis()
        assert rank + k.cols == c
        assert m.mul(k).is_zero()
        assert k.rank() == k.cols
        # against the dense oracle
        assert rank == dense_rank([[m.get(i, j) for j in range(c)] for i in range(r)])


def test_q_vs_fp_agreement():
    rng = random.Random(13)
    agree = 0
    for _ in range(60):
        r = rng.randint(1, 4)
        c = rng.randint(1, 4)
        rows = [[rng.randint(-6, 6) for _ in range(c)] for _ in range(r)]
        mq = SparseMatrix.from_rows(rows, QQ)
        mp = SparseMatrix.from_rows(rows, FP)
        redq, pivq, rankq = mq.rref()
        denominator_clash = any(
            Fraction(v).denominator % FP.characteristic == 0
            for v in redq.entries.values()
        )
        if denominator_clash:
            continue
        redp, pivp, rankp = mp.rref()
        assert rankp == rankq and pivp == pivq
        for (i, j), v in redq.entries.items():
            f = Fraction(v)
            assert redp.get(i, j) == (
                f.numerator * pow(f.denominator, -1, FP.characteristic)
            ) % FP.characteristic
        agree += 1
    assert agree >= 50
