"""Acceptance criteria, one test per criterion, exact arithmetic throughout.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS line per
criterion; every tolerance is literal equality.
"""

import random
import time
from fractions import Fraction

import pytest

from koszulkit.assoc import (
    bar,
    cobar,
    cobar_completed,
    trivial_coalgebra,
    validate_ainf_coalgebra,
    zero_product_algebra,
)
from koszulkit.complexes import ChainComplex, homology, tensor_complex
from koszulkit.fields import QQ, prime_field
from koszulkit.graded import GradedSpace, map_from_rule, tensor_space, zero_map
from koszulkit.labels import atom, tensor
from koszulkit.operads import (
    TwistingMorphism,
    ass_operad,
    c0_cooperad,
    dualize_operad,
    graded_piece_report,
    koszul_complex,
    koszulness_check,
    operadic_bar,
    operadic_cobar,
    truncate_operad,
    twisting_check,
    universal_iota,
    universal_pi,
)
from koszulkit import square
from koszulkit.sparse import SparseMatrix

from helpers import complex_from_dims, random_algebra_family, truncated_word_algebra, x2y_algebra
from oracles import convolve, dense_rank, tree_dims_by_degree


def report(criterion, ok, detail=""):
    line = "criterion %-2s: %s %s" % (criterion, "PASS" if ok else "FAIL", detail)
    print(line)
    assert ok, line


def _check_dd(cx: ChainComplex):
    dd = cx.d.compose(cx.d)
    assert all(b.is_zero() for b in dd.blocks.values())
    return 1


def _connective_operad_algebras(P, rng, count):
    """Algebras over P concentrated in degrees >= 1."""
    out = [square.trivial_algebra(P, complex_from_dims(QQ, {1: 1}, tag="t1"))]
    out.append(square.trivial_algebra(P, complex_from_dims(QQ, {2: 1}, tag="t2")))
    out.append(square.trivial_algebra(
        P, complex_from_dims(QQ, {1: 1, 2: 1}, rng=rng, tag="t3")))
    x, y = atom("x"), atom("y")
    sp = GradedSpace(QQ, {1: [x], 2: [y]})
    V = ChainComplex(sp, zero_map(sp, sp, -1))
    m2 = atom("m2")

    def gamma(n, p, letters):
        if n == 1 and p == P.unit_label():
            return [(1, letters[0])]
        if n == 2 and p == m2 and letters == (x, x):
            return [(1, y)]
        return []

    out.append(square.OperadAlgebra(P, V, gamma, name="xx=y"))
    a, b = atom("a"), atom("b")
    sp2 = GradedSpace(QQ, {1: [a], 3: [b]})
    V2 = ChainComplex(sp2, zero_map(sp2, sp2, -1))
    out.append(square.trivial_algebra(P, V2))
    return out[:count]


def test_criterion_1_square_zero_suite():
    """Every construction yields d.d = 0 on randomized small inputs."""
    t0 = time.time()
    rng = random.Random(20260810)
    built = 0

    # associative side: bar / cobar / completed cobar
    for A in random_algebra_family(rng, count=8):
        coalg, _ = bar(A, rng.randint(2, 4))
        built += _check_dd(coalg.underlying)
        om, _ = cobar(coalg, rng.randint(2, 3))
        built += _check_dd(om.underlying)
    for i in range(4):
        V = complex_from_dims(QQ, {0: 1, 1: rng.randint(0, 2), 2: rng.randint(0, 2)},
                              rng=rng, tag="c%d_" % i)
        C = trivial_coalgebra(V, 4)
        hat = cobar_completed(C, rng.randint(2, 4))
        built += _check_dd(hat.complex)
    # a non-conilpotent completed cobar
    c = atom("c")
    spc = GradedSpace(QQ, {0: [c]})
    cxc = ChainComplex(spc, zero_map(spc, spc, -1))
    d2 = map_from_rule(spc, tensor_space(spc, spc), 0,
                       lambda l, d: [(1, tensor(c, c))])
    grouplike = validate_ainf_coalgebra(cxc, {2: d2}, 4)
    built += _check_dd(cobar_completed(grouplike, 4).complex)

    # operadic bar / cobar on a randomized family
    fields = [QQ, prime_field(32003)]
    for i in range(4):
        f = fields[i % 2]
        P = ass_operad(f, rng.randint(3, 4))
        barP = operadic_bar(P)
        for n in barP.arities():
            built += _check_dd(barP.components[n])
        C = dualize_operad(P)
        omC = operadic_cobar(C)
        for n in omC.arities():
            built += _check_dd(omC.components[n])
    C0 = c0_cooperad(QQ, 4)
    om0 = operadic_cobar(C0)
    for n in om0.arities():
        built += _check_dd(om0.components[n])

    # Koszul complexes
    P4 = ass_operad(QQ, 4)
    bar4 = operadic_bar(P4)
    for d in range(1, 5):
        kz, _ = koszul_complex(P4, d, bar=bar4)
        built += _check_dd(kz)

    # square corner functors on randomized operad algebras
    P3 = ass_operad(QQ, 3)
    bar3 = operadic_bar(P3)
    pi3 = universal_pi(P3, bar3)
    for A in _connective_operad_algebras(P3, rng, 4):
        D, _ = square.bar_pi(A, 3, barP=bar3)
        built += _check_dd(D.underlying)
        om, _ = square.cobar_alpha(D, pi3, 3)
        built += _check_dd(om.underlying)
        tower = square.c_abs(A, "derived", (3, 3))
        for k, level in tower.levels.items():
            built += _check_dd(level.underlying)
    elapsed = time.time() - t0
    report(1, built >= 50 and elapsed < 120.0,
           "(%d square-zero constructions in %.1fs)" % (built, elapsed))


def test_criterion_2_counit_quasi_iso():
    """The counit of the twisted cobar-bar pair is a quasi-iso in window."""
    t0 = time.time()
    rng = random.Random(7)
    P = ass_operad(QQ, 6)
    barP = operadic_bar(P)
    pi = universal_pi(P, barP)
    algebras = _connective_operad_algebras(P, rng, 5)
    assert any(a.name == "xx=y" for a in algebras)
    checked = 0
    for A in algebras:
        eps, verdict = square.counit_cobar_bar(A, 4, barP=barP, pi=pi)
        assert verdict.verdict == "yes", (A.name, verdict)
        checked += 1
    elapsed = time.time() - t0
    report(2, checked >= 5 and elapsed < 60.0,
           "(%d algebras at W=4 in %.1fs)" % (checked, elapsed))


def test_criterion_3_koszulness_of_ass():
    """H(bar Ass(n)) is one-dimensional in degree n-1 for 2 <= n <= 7."""
    t0 = time.time()
    P = ass_operad(QQ, 7)
    barP = operadic_bar(P)
    for n in range(2, 8):
        rep = homology(barP.components[n])
        assert rep.concentrated_in() == [n - 1], (n, rep.betti)
        assert rep.betti[n - 1] == 1, (n, rep.betti)
    # dimension tables against the independent tree-enumeration oracle
    for n, want in ((3, {1: 1, 2: 2}), (4, {1: 1, 2: 5, 3: 5})):
        got = {d: barP.components[n].space.dim(d)
               for d in barP.components[n].space.degrees()}
        assert got == want
        oracle = tree_dims_by_degree(n, 7)
        assert got == dict(oracle)
    out = koszulness_check(P, 7, bar=barP)
    elapsed = time.time() - t0
    report(3, out["koszul"] and elapsed < 60.0, "(n <= 7 in %.1fs)" % elapsed)


def test_criterion_4_koszul_complexes():
    """K(d) acyclic for 2 <= d <= 6, K(1) = one class in degree 0, and the
    filtration pieces concentrate in degree d - p."""
    P = ass_operad(QQ, 6)
    barP = operadic_bar(P)
    kz1, _ = koszul_complex(P, 1, bar=barP)
    assert homology(kz1).betti == {0: 1}
    for d in range(2, 7):
        kz, _ = koszul_complex(P, d, bar=barP)
        assert homology(kz).is_acyclic(), d
    for d in range(1, 6):
        for p in range(1, d + 1):
            rep = graded_piece_report(P, d, p, bar=barP)
            assert rep.concentrated_in() == [d - p], (d, p, rep.betti)
    report(4, True)


def test_criterion_5_maurer_cartan_suite():
    """pi and iota satisfy the twisting equation; mutations break it."""
    P = ass_operad(QQ, 5)
    barP = operadic_bar(P)
    pi = universal_pi(P, barP)
    assert twisting_check(pi)["ok"]
    C0 = c0_cooperad(QQ, 5)
    om0 = operadic_cobar(C0)
    iota0 = universal_iota(C0, om0)
    assert twisting_check(iota0)["ok"]
    # mutate one structure constant of pi
    bad_maps = dict(pi.maps)
    bad_maps[2] = bad_maps[2].scale(2)
    assert not twisting_check(TwistingMorphism(pi.source, pi.target, bad_maps))["ok"]
    # over the decomposition-free cooperad the equation is vacuous, so the
    # iota mutation is exercised over the dual of Ass instead
    C = dualize_operad(ass_operad(QQ, 4))
    omC = operadic_cobar(C)
    iota = universal_iota(C, omC)
    assert twisting_check(iota)["ok"]
    bad_maps = dict(iota.maps)
    bad_maps[2] = bad_maps[2].scale(-1)
    assert not twisting_check(TwistingMorphism(iota.source, iota.target, bad_maps))["ok"]
    report(5, True)


def test_criterion_6_square_commutes():
    """The inclusion-restriction square commutes exactly at bounds (3, 3)."""
    P = ass_operad(QQ, 3)
    barP = operadic_bar(P)
    coalgebras = []
    x = atom("x")
    sp = GradedSpace(QQ, {1: [x]})
    V = ChainComplex(sp, zero_map(sp, sp, -1))
    coalgebras.append(square.CooperadCoalgebra(
        barP, V, lambda l: [], letter_weight={x: 1}, name="one-gen"))
    rng = random.Random(11)
    for A in _connective_operad_algebras(P, rng, 3)[1:]:
        D, _ = square.bar_pi(A, 3, barP=barP)
        coalgebras.append(D)
    assert len(coalgebras) >= 3
    for D in coalgebras:
        rep = square.square_commutes_check(P, D, (3, 3), barP=barP)
        assert rep["commutes"], (D.name, rep["witness"])
        assert all(e["equal"] for e in rep["levels"].values())
    report(6, True, "(%d coalgebras)" % len(coalgebras))


def test_criterion_7_truncated_sum_equals_product():
    """Free algebras over truncated operads agree with their completed
    counterparts matrix for matrix, and the bar resolves the generators."""
    rng = random.Random(29)
    P = ass_operad(QQ, 4)
    for k in (2, 3, 4):
        tr = truncate_operad(P, k)
        for i in range(2):
            dims = {1: rng.randint(1, 2), 2: rng.randint(0, 1)}
            V = complex_from_dims(QQ, dims, rng=rng, tag="v%d%d_" % (k, i))
            out = square.good_cocompletion_check(tr, V, (3, 3))
            assert out["verdict"] == "isomorphism", (k, out)
            assert out["sum_equals_product"]
            assert out["resolution"] == "yes"
    report(7, True)


def test_criterion_8_counterexample_reproduction():
    """The obstruction pattern of the operad without good completion."""
    t0 = time.time()
    C0 = c0_cooperad(QQ, 6)
    om0 = operadic_cobar(C0)
    v = atom("v")
    sp = GradedSpace(QQ, {0: [v]})
    V = ChainComplex(sp, zero_map(sp, sp, -1))
    out = square.counterexample_witness(C0, V, 5, omegaC=om0)
    assert out["verdict"] == "certified"
    for k in range(2, 6):
        e = out["facts"][k]
        assert e["term_closed"], k
        assert e["bounded_inside_component"], k
        assert e["forced_coefficient_is_unit"], k
        assert not e["kernel_touches_forced_coordinate"], k
        assert e["degree0_higher_arity_dim"] == 0, k
    ambient, wto, _ = square.counterexample_ambient(C0, V, 6, omegaC=om0)
    for n in range(2, 7):
        comp = square.vweight_component(ambient, wto, n)
        assert homology(comp, (-1, -1)).betti.get(-1, 0) == 0, n
    elapsed = time.time() - t0
    report(8, elapsed < 120.0, "(witness N=5 plus components to 6 in %.1fs)" % elapsed)


def test_criterion_9_connective_homotopy_completeness():
    """Connective algebras are homotopy complete in the window."""
    rng = random.Random(31)
    P = ass_operad(QQ, 4)
    barP = operadic_bar(P)
    algebras = _connective_operad_algebras(P, rng, 5)
    checked = 0
    for A in algebras:
        out = square.homotopy_complete_check(A, (4, 4), (0, 4), barP=barP)
        assert out["verdict"] == "complete_in_window", (A.name, out)
        checked += 1
    report(9, checked >= 5, "(%d algebras at (4, 0..4))" % checked)


def test_criterion_10_linear_algebra_ground_truth():
    """Rank-nullity, Kunneth convolution and Q-vs-Fp agreement, 200 cases
    each."""
    t0 = time.time()
    rng = random.Random(37)
    FP = prime_field(32003)

    # rank-nullity with the dense oracle
    for _ in range(200):
        r, c = rng.randint(1, 5), rng.randint(1, 5)
        rows = [[rng.randint(-5, 5) for _ in range(c)] for _ in range(r)]
        m = SparseMatrix.from_rows(rows, QQ)
        _, _, rank = m.rref()
        kern = m.kernel_basis()
        assert rank + kern.cols == c
        assert m.mul(kern).is_zero()
        assert kern.rank() == kern.cols
        assert rank == dense_rank(rows)

    # Kunneth convolution on random small complexes
    for i in range(200):
        A = complex_from_dims(
            QQ, {0: rng.randint(0, 2), 1: rng.randint(0, 2), 2: rng.randint(0, 2)},
            rng=rng, tag="ka%d_" % i)
        B = complex_from_dims(
            QQ, {0: rng.randint(0, 2), 1: rng.randint(0, 2)},
            rng=rng, tag="kb%d_" % i)
        T = tensor_complex(A, B)
        want = convolve(
            {d: v for d, v in homology(A).betti.items() if v},
            {d: v for d, v in homology(B).betti.items() if v},
        )
        got = {d: v for d, v in homology(T).betti.items() if v}
        assert got == want

    # Q versus Fp agreement on integer matrices
    agree = 0
    attempts = 0
    while agree < 200:
        attempts += 1
        r, c = rng.randint(1, 5), rng.randint(1, 5)
        rows = [[rng.randint(-9, 9) for _ in range(c)] for _ in range(r)]
        mq = SparseMatrix.from_rows(rows, QQ)
        redq, pivq, rankq = mq.rref()
        if any(Fraction(v).denominator % FP.characteristic == 0
               for v in redq.entries.values()):
            continue
        mp = SparseMatrix.from_rows(rows, FP)
        redp, pivp, rankp = mp.rref()
        assert (rankp, pivp) == (rankq, pivq)
        agree += 1
    elapsed = time.time() - t0
    report(10, elapsed < 60.0, "(3 x 200 cases in %.1fs)" % elapsed)
