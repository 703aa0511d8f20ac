"""Shared builders for the assoc/operad/square test modules."""

import random

from koszulkit.complexes import ChainComplex
from koszulkit.fields import QQ
from koszulkit.graded import GradedSpace, GradedMap, map_from_rule, tensor_space, zero_map
from koszulkit.labels import atom, tagged, tensor
from koszulkit.assoc import DgAssocAlgebra, validate_algebra, zero_product_algebra
from koszulkit.sparse import SparseMatrix


def complex_from_dims(field, dims, rng=None, tag="e"):
    """A complex with the given {degree: dim}; random square-zero d on odd
    degrees only (so the square vanishes identically)."""
    comps = {
        d: [atom("%s%d_%d" % (tag, d, i)) for i in range(n)] for d, n in dims.items()
    }
    space = GradedSpace(field, comps)
    blocks = {}
    if rng is not None:
        for d in space.degrees():
            if d % 2 == 0 or space.dim(d - 1) == 0:
                continue
            entries = {}
            for i in range(space.dim(d - 1)):
                for j in range(space.dim(d)):
                    if rng.random() < 0.5:
                        v = field.from_int(rng.randint(-2, 2))
                        if v:
                            entries[(i, j)] = v
            if entries:
                blocks[d] = SparseMatrix(space.dim(d - 1), space.dim(d), field, entries)
    return ChainComplex(space, GradedMap(space, space, -1, blocks))


def x2y_algebra(field=QQ) -> DgAssocAlgebra:
    """Two generators x (degree 1) and y (degree 2) with x*x = y."""
    x, y = atom("x"), atom("y")
    sp = GradedSpace(field, {1: [x], 2: [y]})
    cx = ChainComplex(sp, zero_map(sp, sp, -1))
    AA = tensor_space(sp, sp)
    mu = map_from_rule(AA, sp, 0, lambda l, d: [(1, y)] if l == tensor(x, x) else [])
    return validate_algebra(cx, mu)


def truncated_word_algebra(V: ChainComplex, top_weight=2) -> DgAssocAlgebra:
    """Tensor algebra on a complex with words above the top weight killed.

    Associativity and the Leibniz rule hold by construction; the product of
    basis words is concatenation or zero.
    """
    field = V.field
    base = [(V.space.degree_of(l), l) for l in V.space.all_labels()]
    comps = {}

    def word_label(word):
        return tagged("w", tensor(*word) if len(word) > 1 else word[0])

    words = []

    def grow(word, deg):
        if word:
            comps.setdefault(deg, []).append(word_label(tuple(word)))
            words.append(tuple(word))
        if len(word) == top_weight:
            return
        for ldeg, l in base:
            word.append(l)
            grow(word, deg + ldeg)
            word.pop()

    grow([], 0)
    space = GradedSpace(field, comps, sort=True)

    def letters(label):
        inner = label[2]
        return inner[1] if inner[0] == "tensor" else (inner,)

    def drule(label, degree):
        ls = letters(label)
        degs = [V.space.degree_of(x) for x in ls]
        for i, x in enumerate(ls):
            sign = -1 if sum(degs[:i]) % 2 else 1
            for tl, v in V.d.apply_to_label(x).items():
                coeff = v if sign > 0 else field.neg(v)
                yield coeff, word_label(ls[:i] + (tl,) + ls[i + 1 :])

    cx = ChainComplex(space, map_from_rule(space, space, -1, drule))
    AA = tensor_space(space, space)

    def mul_rule(label, degree):
        parts = label[1]
        a, b = parts[0], parts[1]
        word = letters(a) + letters(b)
        if len(word) <= top_weight:
            yield 1, word_label(word)

    mu = map_from_rule(AA, space, 0, mul_rule)
    return validate_algebra(cx, mu)


def random_algebra_family(rng, field=QQ, count=6):
    """A mix of zero-product complexes and truncated word algebras."""
    out = []
    for i in range(count):
        dims = {}
        for d in (1, 2, 3):
            dims[d] = rng.randint(0, 2)
        if sum(dims.values()) == 0:
            dims[1] = 1
        V = complex_from_dims(field, dims, rng=rng, tag="g%d_" % i)
        if rng.random() < 0.5:
            out.append(zero_product_algebra(V))
        else:
            small = complex_from_dims(
                field, {1: max(1, dims.get(1, 1))}, rng=None, tag="h%d_" % i
            )
            out.append(truncated_word_algebra(small, top_weight=2))
    return out
