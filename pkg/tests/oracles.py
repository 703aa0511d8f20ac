"""Independent oracles for derived expected values.

Everything here is deliberately dumb and self-contained: dense Fraction
row reduction, direct tree enumeration, convolution counting.  The point is
that none of it shares code with the package being tested.
"""

from fractions import Fraction
from itertools import product


def dense_rank(rows):
    """Row reduce a dense list-of-lists of Fractions; return the rank."""
    mat = [[Fraction(x) for x in row] for row in rows]
    rank = 0
    cols = len(mat[0]) if mat else 0
    for col in range(cols):
        pivot = None
        for r in range(rank, len(mat)):
            if mat[r][col]:
                pivot = r
                break
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        pv = mat[rank][col]
        mat[rank] = [x / pv for x in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][col]:
                c = mat[r][col]
                mat[r] = [a - c * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
    return rank


def dense_betti(blocks, dims):
    """Betti numbers of a complex given as {degree: matrix d_deg} acting
    from degree to degree-1, plus {degree: dimension}."""
    betti = {}
    for d, n in dims.items():
        out_rank = dense_rank(blocks[d]) if n and blocks.get(d) else 0
        in_rank = dense_rank(blocks[d + 1]) if blocks.get(d + 1) else 0
        betti[d] = n - out_rank - in_rank
    return betti


def planar_trees(n_leaves, max_arity):
    """All planar rooted trees with vertex arities in 2..max_arity, encoded
    as nested tuples of child subtrees ("L" for a leaf)."""
    if n_leaves == 1:
        return ["L"]
    out = []
    for arity in range(2, min(max_arity, n_leaves) + 1):
        for split in compositions(n_leaves, arity):
            for kids in product(*(planar_trees(k, max_arity) for k in split)):
                out.append(tuple(kids))
    return out


def compositions(total, parts):
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def tree_vertex_count(tree):
    if tree == "L":
        return 0
    return 1 + sum(tree_vertex_count(c) for c in tree)


def tree_dims_by_degree(n_leaves, max_arity):
    """Dimension of the span of trees with n leaves, graded by vertex count."""
    dims = {}
    for t in planar_trees(n_leaves, max_arity):
        v = tree_vertex_count(t)
        dims[v] = dims.get(v, 0) + 1
    return dims


def convolve(a, b):
    """Convolution of two degree->count dicts."""
    out = {}
    for da, ca in a.items():
        for db, cb in b.items():
            out[da + db] = out.get(da + db, 0) + ca * cb
    return {k: v for k, v in out.items() if v}


def koszul_complex_dims(d, bar_dims_total):
    """Total dimension of the two-layer complex at generator count d, from
    the per-arity bar dimensions (1/(1-C) coefficient extraction)."""
    total = 0
    for k in range(1, d + 1):
        for split in compositions(d, k):
            prod = 1
            for i in split:
                prod *= bar_dims_total.get(i, 0)
            total += prod
    return total
