"""The inclusion-restriction square at truncation.

Corners: algebras over an operad P, conilpotent coalgebras over its bar
construction, coalgebras over the cobar of the dual, and towers of algebras
over duals of truncated cooperads (the completed side, represented only
through its arity-truncation tower).  Functors: bar_pi, cobar_alpha (the
twisted cobar relative to any twisting morphism; pi and iota are the two in
use), inc, sub, res, c_abs, plus the checks built on them.

Elements of the free-style constructions are two-layer words
(root operation; letters); all signs follow from the Koszul rule on the
depth-first factor word (root, tree vertices, then letters), with the
global minus of the derivation convention on every twist term.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .complexes import (
    ChainComplex,
    ChainMap,
    homology,
    is_quasi_iso,
    QuasiIsoVerdict,
)
from .graded import (
    GradedSpace,
    dual_space,
    dual_map,
    evaluation_map,
    map_from_rule,
)
from .labels import (
    LEAF,
    sort_key,
    dual as dual_label,
    tagged,
    tensor as tensor_label,
    tree as tree_label,
    tree_node,
)
from .operads import (
    NsCooperad,
    NsOperad,
    TwistingMorphism,
    dualize_cooperad,
    dualize_operad,
    operadic_bar,
    operadic_cobar,
    truncate_cooperad,
    universal_iota,
    universal_pi,
)
from .sparse import SparseMatrix
from .truncation import SUBOBJECT, QUOTIENT_TOWER, WeightTruncatedObject
from . import trees


class NotFreePresentation(Exception):
    pass


class BoundTooSmall(Exception):
    pass


# ---------------------------------------------------------------------------
# algebras over an operad


@dataclass
class OperadAlgebra:
    """gamma_eval(n, p_label, letters) yields (coeff, label) pairs; kept as
    a rule because free algebras are too large to materialize as matrices."""

    operad: NsOperad
    underlying: ChainComplex
    gamma_eval: object
    free_on: object = None  # CooperadCoalgebra of generators, when free
    free_twist: object = None  # the TwistingMorphism used on the generators
    letter_weight: dict = dc_field(default_factory=dict)
    name: str = ""

    @property
    def field(self):
        return self.underlying.field

    def min_degree(self):
        degs = self.underlying.space.degrees()
        return min(degs) if degs else None

    def gamma_vec(self, n, p_vec, letter_vecs):
        """Multilinear extension of gamma_eval."""
        f = self.field
        out = {}

        def rec(idx, letters, coeff):
            if idx == len(letter_vecs):
                for pl, pv in p_vec.items():
                    for tv, tl in self.gamma_eval(n, pl, tuple(letters)):
                        c = f.mul(f.mul(coeff, pv), tv)
                        s = f.add(out.get(tl, f.zero()), c)
                        if s:
                            out[tl] = s
                        else:
                            out.pop(tl, None)
                return
            for ll, lv in letter_vecs[idx].items():
                rec(idx + 1, letters + [ll], f.mul(coeff, lv))

        rec(0, [], f.one())
        return out


def trivial_algebra(P: NsOperad, V: ChainComplex) -> OperadAlgebra:
    def gamma(n, p_label, letters):
        if n == 1 and p_label == P.unit_label():
            return [(P.field.one(), letters[0])]
        return []

    return OperadAlgebra(P, V, gamma, name="trivial")


def validate_operad_algebra(A: OperadAlgebra, max_arity=None):
    """Exact associativity / unit / Leibniz on basis tuples (small inputs)."""
    P = A.operad
    f = A.field
    V = A.underlying.space
    labels = list(V.all_labels())
    unit = P.unit_label()
    for l in labels:
        got = {lab: c for c, lab in A.gamma_eval(1, unit, (l,))}
        if got != {l: f.one()}:
            raise AssertionError("unit fails on %r" % (l,))
    top = max_arity or P.arity_bound
    # Leibniz: gamma_n is a chain map (checked on basis tuples)
    for n in P.reduced_arities():
        if n > top:
            continue
        Pn = P.components[n]
        for pl in Pn.space.all_labels():
            for letters in _tuples(labels, n):
                lhs = {}
                for tl, v in _apply_d(A, P, n, pl, letters).items():
                    lhs[tl] = v
                rhs = {}
                vec = {lab: c for c, lab in A.gamma_eval(n, pl, letters)}
                for tl, v in A.underlying.d.apply(vec).items():
                    rhs[tl] = v
                if lhs != rhs:
                    raise AssertionError("leibniz fails at %r" % ((pl, letters),))
    # associativity against partial compositions
    for (m, i, n), gmap in P.partial.items():
        if m + n - 1 > top or m > top or n > top:
            continue
        for pl in P.components[m].space.all_labels():
            for ql in P.components[n].space.all_labels():
                comp = P.compose(m, i, n, pl, ql)
                for letters in _tuples(labels, m + n - 1):
                    lhs = {}
                    for cl, cv in comp.items():
                        for tv, tl in A.gamma_eval(m + n - 1, cl, letters):
                            s = f.add(lhs.get(tl, f.zero()), f.mul(cv, tv))
                            if s:
                                lhs[tl] = s
                            else:
                                lhs.pop(tl, None)
                    inner = {lab: c for c, lab in A.gamma_eval(n, ql, letters[i - 1 : i - 1 + n])}
                    # sign: q moves past the first i-1 letters
                    qdeg = P.components[n].space.degree_of(ql)
                    passed = sum(V.degree_of(x) for x in letters[: i - 1])
                    sign = -1 if (qdeg % 2 and passed % 2) else 1
                    rhs = {}
                    for il, iv in inner.items():
                        outer = letters[: i - 1] + (il,) + letters[i - 1 + n :]
                        for tv, tl in A.gamma_eval(m, pl, outer):
                            c = f.mul(iv, tv)
                            if sign < 0:
                                c = f.neg(c)
                            s = f.add(rhs.get(tl, f.zero()), c)
                            if s:
                                rhs[tl] = s
                            else:
                                rhs.pop(tl, None)
                    if lhs != rhs:
                        raise AssertionError(
                            "associativity fails at %r" % ((m, i, n, pl, ql, letters),)
                        )
    return True


def _tuples(labels, n):
    if n == 0:
        yield ()
        return
    for head in labels:
        for tail in _tuples(labels, n - 1):
            yield (head,) + tail


def _apply_d(A: OperadAlgebra, P: NsOperad, n, pl, letters):
    """d(gamma(p; letters)) expanded by the Leibniz rule."""
    f = A.field
    V = A.underlying.space
    out = {}

    def add(vec, sign):
        for k, v in vec.items():
            c = f.neg(v) if sign < 0 else v
            s = f.add(out.get(k, f.zero()), c)
            if s:
                out[k] = s
            else:
                out.pop(k, None)

    pdeg = P.components[n].space.degree_of(pl)
    for tl, v in P.components[n].d.apply_to_label(pl).items():
        add({k: f.mul(v, w) for w, k in A.gamma_eval(n, tl, letters)}, 1)
    for idx in range(n):
        prefix = pdeg + sum(V.degree_of(x) for x in letters[:idx])
        sign = -1 if prefix % 2 else 1
        for tl, v in A.underlying.d.apply_to_label(letters[idx]).items():
            new = letters[:idx] + (tl,) + letters[idx + 1 :]
            add({k: f.mul(v, w) for w, k in A.gamma_eval(n, pl, new)}, sign)
    return out


# ---------------------------------------------------------------------------
# coalgebras over a cooperad / over an operad


@dataclass
class CooperadCoalgebra:
    """delta_terms(label) yields (m, coeff, c_label, letter_tuple) over the
    stored reduced decompositions (m >= 2, finitely many nonzero)."""

    cooperad: NsCooperad
    underlying: ChainComplex
    delta_terms: object
    letter_weight: dict = dc_field(default_factory=dict)
    conilpotent: bool = True
    name: str = ""

    @property
    def field(self):
        return self.underlying.field


@dataclass
class OperadCoalgebra:
    """Coalgebra over an operad Q: decompositions valued in dual(Q(m)).

    delta_terms(label) yields (m, coeff, dual_q_label, letter_tuple); no
    conilpotency is required or implied.
    """

    operad: NsOperad
    underlying: ChainComplex
    delta_terms: object
    arity_support: int = 0
    name: str = ""

    @property
    def field(self):
        return self.underlying.field


def coalgebra_letter_weights(underlying: ChainComplex, delta_terms):
    """Additive conilpotency weights from the decomposition terms, or None
    when the decomposition graph has a cycle."""
    labels = list(underlying.space.all_labels())
    graph = {l: set() for l in labels}
    terms = {l: [] for l in labels}
    for l in labels:
        for (m, coeff, c_label, letters) in delta_terms(l):
            graph[l].update(letters)
            terms[l].append(letters)
    state = {}
    order = []

    def visit(node):
        st = state.get(node)
        if st == 1:
            return False
        if st == 2:
            return True
        state[node] = 1
        for nxt in graph[node]:
            if not visit(nxt):
                return False
        state[node] = 2
        order.append(node)
        return True

    for l in labels:
        if not visit(l):
            return None
    weights = {}
    for l in order:
        w = 1
        for letters in terms[l]:
            w = max(w, sum(weights[x] for x in letters))
        weights[l] = w
    return weights


# ---------------------------------------------------------------------------
# the twisted bar construction on algebras


def _bp_label(tree_lab, letters):
    return tagged("bp", tensor_label(tree_lab, *letters))


def _bp_unpack(label):
    parts = label[2][1]
    return parts[0], parts[1:]


def bar_pi(A: OperadAlgebra, weight_bound: int, barP: NsCooperad | None = None):
    """Cofree coalgebra over bar(P) on A with the twisted differential; the
    weight of (tree; letters) is the letter count and truncation keeps a
    subcomplex.  Returns (CooperadCoalgebra, WeightTruncatedObject)."""
    P = A.operad
    field = A.field
    barP = barP if barP is not None else operadic_bar(P)
    V = A.underlying.space
    vlabels = sorted(
        ((V.degree_of(l), l) for l in V.all_labels()),
        key=lambda p: (p[0], sort_key(p[1])),
    )

    tree_deg = {}
    for n in barP.arities():
        sp = barP.components[n].space
        for t in sp.all_labels():
            tree_deg[t] = sp.degree_of(t)

    comps = {}
    weight = {}
    top = min(weight_bound, barP.arity_bound)
    for n in range(1, top + 1):
        if n not in barP.components:
            continue
        for t in barP.components[n].space.all_labels():
            base = tree_deg[t]
            for letters in _letter_words(vlabels, n):
                deg = base + sum(V.degree_of(a) for a in letters)
                lab = _bp_label(t, letters)
                comps.setdefault(deg, []).append(lab)
                weight[lab] = n
    space = GradedSpace(field, comps, sort=True)

    def diff_rule(label, degree):
        t, letters = _bp_unpack(label)
        n = len(letters)
        tdeg = tree_deg[t]
        ldegs = [V.degree_of(a) for a in letters]
        # bar-internal part: the tree word is the prefix of the whole word
        for tl, v in barP.components[n].d.apply_to_label(t).items():
            yield v, _bp_label(tl, letters)
        # differential of each letter
        for i, a in enumerate(letters):
            prefix = tdeg + sum(ldegs[:i])
            psign = -1 if prefix % 2 else 1
            for al, v in A.underlying.d.apply_to_label(a).items():
                coeff = v if psign > 0 else field.neg(v)
                yield coeff, _bp_label(t, letters[:i] + (al,) + letters[i + 1 :])
        # absorption: a top vertex acts on its letters through gamma
        code = t[1]
        if code == LEAF:
            return
        degs_word = _tree_degs(code, tree_deg_vertex(P))
        addrs = trees.vertex_addresses(code)
        pos_of = {a_: i for i, a_ in enumerate(addrs)}
        for addr in addrs:
            node = trees.subtree_at(code, addr)
            if any(c != LEAF for c in node[1]):
                continue
            m = len(node[1])
            q = node[0]
            sq_deg = 1 + P.components[m].space.degree_of(q)
            pos = pos_of[addr]
            o = trees.leaf_offset(code, addr)
            # derivation minus times the arity parity of the merged letters
            sign = -1 if (m + 1) % 2 else 1
            suff = sum(degs_word[pos + 1 :])
            if sq_deg % 2 and suff % 2:
                sign = -sign  # the cut moves the vertex past the tree suffix
            if (tdeg - sq_deg) % 2:
                sign = -sign  # desuspension lands after the remaining tree word
            qdeg = P.components[m].space.degree_of(q)
            if qdeg % 2 and sum(ldegs[:o]) % 2:
                sign = -sign  # q travels right to its letters
            new_code = trees.replace_at(code, addr, LEAF)
            for v, out_l in A.gamma_eval(m, q, letters[o : o + m]):
                coeff = field.mul(field.from_int(sign), v)
                yield coeff, _bp_label(
                    tree_label(new_code),
                    letters[:o] + (out_l,) + letters[o + m :],
                )

    d = map_from_rule(space, space, -1, diff_rule)
    complex_ = ChainComplex(space, d)

    def delta_terms(label):
        t, letters = _bp_unpack(label)
        code = t[1]
        degs_word = _tree_degs(code, tree_deg_vertex(P))
        ldegs = [V.degree_of(a) for a in letters]
        out = []
        for bottom, tops in trees.cuts(code):
            if bottom == LEAF:
                continue  # not reduced
            m = trees.leaf_count(bottom)
            if m < 2:
                continue
            sign = _cut_sign(code, bottom, tops, degs_word, ldegs)
            pieces = []
            off = 0
            for topc in tops:
                ln = trees.leaf_count(topc)
                pieces.append(_bp_label(tree_label(topc), letters[off : off + ln]))
                off += ln
            out.append((m, field.from_int(sign), tree_label(bottom), tuple(pieces)))
        return out

    degs = V.degrees()
    mindeg = min(degs) if degs else 0
    pmin = P.min_reduced_degree()
    rate = Fraction(mindeg) + min(0, 1 + (pmin if pmin is not None else 0))
    wto = WeightTruncatedObject(complex_, weight, weight_bound, SUBOBJECT, rate=rate)
    lw = {l: weight[l] for l in weight}
    coalg = CooperadCoalgebra(barP, complex_, delta_terms, letter_weight=lw, name="bar_pi")
    return coalg, wto


def tree_deg_vertex(P: NsOperad):
    deg = {}
    for n in P.reduced_arities():
        sp = P.components[n].space
        for l in sp.all_labels():
            deg[l] = 1 + sp.degree_of(l)
    return deg


def _tree_degs(code, vdeg):
    return [vdeg[l] for l in trees.vertex_labels(code)]


def _letter_words(vlabels, n):
    if n == 0:
        yield ()
        return
    for _, l in vlabels:
        for rest in _letter_words(vlabels, n - 1):
            yield (l,) + rest


def _cut_sign(code, bottom, tops, degs_word, letter_degs):
    """Koszul sign of reordering (tree word, letters) into
    (bottom word, top_1 word, letters_1, top_2 word, letters_2, ...)."""
    v = len(degs_word)
    cut_positions = _cut_blocks(code, bottom, tops)
    bottom_positions = [i for i in range(v) if all(
        not (s <= i < e) for (s, e) in cut_positions
    )]
    perm = list(bottom_positions)
    ridx = 0
    off = 0
    for topc in tops:
        ln = trees.leaf_count(topc)
        if topc != LEAF:
            s, e = cut_positions[ridx]
            ridx += 1
            perm.extend(range(s, e))
        perm.extend(range(v + off, v + off + ln))
        off += ln
    return trees.permutation_koszul_sign(degs_word + letter_degs, perm)


def _cut_blocks(code, bottom, tops):
    """Depth-first position ranges of the nontrivial top subtrees."""
    ranges = []
    pos = [0]

    def walk(node, bnode):
        # bnode mirrors node within the bottom; when bnode is LEAF but node
        # is not, the whole node is a top subtree
        if node == LEAF:
            return
        if bnode == LEAF:
            start = pos[0]
            pos[0] += trees.vertex_count(node)
            ranges.append((start, pos[0]))
            return
        pos[0] += 1
        for c, bc in zip(node[1], bnode[1]):
            walk(c, bc)

    walk(code, bottom)
    return ranges


# ---------------------------------------------------------------------------
# the twisted cobar relative to a twisting morphism


def _fa_label(p_label, letters):
    return tagged("fa", tensor_label(p_label, *letters))


def _fa_unpack(label):
    parts = label[2][1]
    return parts[0], parts[1:]


def cobar_alpha(
    D: CooperadCoalgebra,
    alpha: TwistingMorphism,
    weight_bound: int,
    degree_max=None,
    P: NsOperad | None = None,
):
    """Free P-algebra on D with the alpha-twisted differential.

    Elements are (root operation of arity k; k letters from D); truncation
    is by total additive letter weight (a subcomplex).  Returns
    (OperadAlgebra, WeightTruncatedObject)."""
    P = P if P is not None else alpha.target
    field = D.field
    W = D.underlying.space
    lw = dict(D.letter_weight) if D.letter_weight else coalgebra_letter_weights(
        D.underlying, D.delta_terms
    )
    if lw is None:
        raise ValueError("cobar_alpha needs additive letter weights (conilpotent input)")
    letters = sorted(
        ((W.degree_of(l), l) for l in W.all_labels()),
        key=lambda p: (p[0], sort_key(p[1])),
    )
    p_deg = {}
    p_arity = {}
    for n in P.arities():
        sp = P.components[n].space
        for l in sp.all_labels():
            p_deg[l] = sp.degree_of(l)
            p_arity[l] = n

    comps = {}
    weight = {}

    def emit(root, word, deg, wt):
        lab = _fa_label(root, tuple(word))
        comps.setdefault(deg, []).append(lab)
        weight[lab] = wt

    for k in range(1, min(P.arity_bound, weight_bound) + 1):
        if k not in P.components:
            continue
        roots = [
            (l, p_deg[l]) for l in P.components[k].space.all_labels()
        ] if k > 1 else [(P.unit_label(), 0)]

        def words(idx, word, deg, wt):
            if idx == k:
                for root, rdeg in roots:
                    total = rdeg + deg
                    if degree_max is None or total <= degree_max:
                        emit(root, word, total, wt)
                return
            for ldeg, l in letters:
                w2 = wt + lw[l]
                if w2 + (k - idx - 1) > weight_bound:
                    continue
                word.append(l)
                words(idx + 1, word, deg + ldeg, w2)
                word.pop()

        words(0, [], 0, 0)
    space = GradedSpace(field, comps, sort=True)

    def diff_rule(label, degree):
        root, ls = _fa_unpack(label)
        k = p_arity[root]
        rdeg = p_deg[root]
        ldegs = [W.degree_of(x) for x in ls]
        # internal differential of the root
        for tl, v in P.components[k].d.apply_to_label(root).items():
            yield v, _fa_label(tl, ls)
        for i, x in enumerate(ls):
            prefix = rdeg + sum(ldegs[:i])
            psign = -1 if prefix % 2 else 1
            # differential of the letter
            for tl, v in D.underlying.d.apply_to_label(x).items():
                coeff = v if psign > 0 else field.neg(v)
                yield coeff, _fa_label(root, ls[:i] + (tl,) + ls[i + 1 :])
            # twist: decompose the letter, push the bottom through alpha
            for (m, v, c_label, ys) in D.delta_terms(x):
                for ql, av in alpha.apply(m, c_label).items():
                    sign = -1  # derivation convention
                    if psign < 0:
                        sign = -sign  # alpha lands at the letter's position
                    qdeg = p_deg[ql]
                    if qdeg % 2 and sum(ldegs[:i]) % 2:
                        sign = -sign  # q travels left to the root
                    comp = P.compose(k, i + 1, m, root, ql)
                    coeff0 = field.mul(v, av)
                    if sign < 0:
                        coeff0 = field.neg(coeff0)
                    new_ls = ls[:i] + tuple(ys) + ls[i + 1 :]
                    for rl, rv in comp.items():
                        lab2 = _fa_label(rl, new_ls)
                        if lab2 in space:
                            yield field.mul(coeff0, rv), lab2

    d = map_from_rule(space, space, -1, diff_rule)
    complex_ = ChainComplex(space, d)

    def gamma_eval(n, q_label, elements):
        if n == 1:
            if q_label == P.unit_label():
                return [(field.one(), elements[0])]
            return []
        parts = [_fa_unpack(e) for e in elements]
        word_degs = [p_deg[q_label]]
        for root, ls in parts:
            word_degs.append(p_deg[root])
            word_degs.extend(W.degree_of(x) for x in ls)
        # reorder (q, p1, w1, p2, w2, ...) -> (q, p1, ..., pn, w1, ..., wn)
        perm = [0]
        pos = 1
        root_positions = []
        letter_positions = []
        for root, ls in parts:
            root_positions.append(pos)
            letter_positions.extend(range(pos + 1, pos + 1 + len(ls)))
            pos += 1 + len(ls)
        perm.extend(root_positions)
        perm.extend(letter_positions)
        sign = trees.permutation_koszul_sign(word_degs, perm)
        # compose the roots right to left so slot indices stay valid
        out_root = {q_label: field.one()}
        arities = [p_arity[r] for r, _ in parts]
        for idx in range(n - 1, -1, -1):
            rl = parts[idx][0]
            acc = {}
            for cur, cv in out_root.items():
                for tl, tv in P.compose(
                    p_arity[cur], idx + 1, arities[idx], cur, rl
                ).items():
                    s = field.add(acc.get(tl, field.zero()), field.mul(cv, tv))
                    if s:
                        acc[tl] = s
                    else:
                        acc.pop(tl, None)
            out_root = acc
            if not out_root:
                return []
        all_letters = tuple(x for _, ls in parts for x in ls)
        out = []
        for rl, rv in out_root.items():
            lab = _fa_label(rl, all_letters)
            if lab in space:
                coeff = rv if sign > 0 else field.neg(rv)
                out.append((coeff, lab))
        return out

    lrates = [Fraction(d_, lw[l]) for d_, l in letters]
    pmin = P.min_reduced_degree()
    rate = (min(lrates) if lrates else None)
    if rate is not None:
        rate = rate + min(0, 1 + (pmin if pmin is not None else 0))
    wto = WeightTruncatedObject(complex_, weight, weight_bound, SUBOBJECT, rate=rate)
    alg = OperadAlgebra(
        P, complex_, gamma_eval, free_on=D, free_twist=alpha,
        letter_weight=weight, name="cobar_%s" % alpha.name,
    )
    return alg, wto


def cobar_pi(D: CooperadCoalgebra, weight_bound: int, P: NsOperad | None = None,
             pi: TwistingMorphism | None = None, degree_max=None):
    """The classical twisted cobar over P for a coalgebra over bar(P)."""
    if pi is None:
        if P is None:
            raise ValueError("cobar_pi needs the operad or the twisting morphism")
        pi = universal_pi(P, D.cooperad)
    return cobar_alpha(D, pi, weight_bound, degree_max=degree_max)


# ---------------------------------------------------------------------------
# free algebras, the counit, and the four square functors


def free_algebra(P: NsOperad, V: ChainComplex, weight_bound: int):
    """Free P-algebra on a complex, truncated by letter count."""
    lw = {l: 1 for l in V.space.all_labels()}
    D = CooperadCoalgebra(None, V, lambda label: [], letter_weight=lw, name="generators")
    alpha = TwistingMorphism(None, P, {}, name="zero")
    return cobar_alpha(D, alpha, weight_bound, P=P)


def counit_cobar_bar(A: OperadAlgebra, weight_bound: int, barP=None, pi=None):
    """The counit cobar_pi(bar_pi(A)) -> A with its quasi-iso verdict."""
    P = A.operad
    barP = barP if barP is not None else operadic_bar(P)
    pi = pi if pi is not None else universal_pi(P, barP)
    D, bar_wto = bar_pi(A, weight_bound, barP=barP)
    om, om_wto = cobar_alpha(D, pi, weight_bound)
    V = A.underlying.space
    field = A.field

    def counit_rule(label, degree):
        root, ls = _fa_unpack(label)
        # only words of trivial-tree letters survive the projection
        plain = []
        for l in ls:
            t, letters = _bp_unpack(l)
            if t[1] != LEAF:
                return
            plain.append(letters[0])
        k = len(plain)
        # collapsing k suspension pairs carries the parity of k - 1
        sign = -1 if (k - 1) % 2 else 1
        if k == 1 and root == P.unit_label():
            yield field.one(), plain[0]
            return
        for v, out in A.gamma_eval(k, root, tuple(plain)):
            yield (v if sign > 0 else field.neg(v)), out

    eps_map = map_from_rule(om.underlying.space, V, 0, counit_rule)
    eps = ChainMap(om.underlying, A.underlying, eps_map)
    w = om_wto.window()
    if w is None:
        return eps, QuasiIsoVerdict("window_insufficient", None, None, None)
    degs = V.degrees()
    lo = min(degs) - 1 if degs else 0
    hi = w[1]
    if hi < lo:
        return eps, QuasiIsoVerdict("window_insufficient", None, None, w)
    verdict = is_quasi_iso(eps, (lo, hi), window=(lo, hi))
    return eps, verdict


def _bar_pairing(barP: NsCooperad, Q: NsOperad, P: NsOperad):
    """phi_m: bar(P)(m) -> dual(Omega(P*)(m)) through the vertexwise pairing
    of suspended operations against desuspended dual operations."""
    p_deg = {}
    for n in P.reduced_arities():
        sp = P.components[n].space
        for l in sp.all_labels():
            p_deg[l] = sp.degree_of(l)
    phis = {}
    for m in barP.reduced_arities():
        src = barP.components[m].space
        tgt = dual_space(Q.components[m].space)

        def rule(label, degree, _m=m):
            code = label[1]
            word = trees.vertex_labels(code)
            degs = [1 + p_deg[l] for l in word]
            # the matching cobar tree carries dual labels on the same shape
            dual_code = _dualize_tree(code)
            # (f_1 (x) ... (x) f_v)(x_1 (x) ... (x) x_v) Koszul sign with
            # |f_j| = -|x_j|; each atomic pairing <u psi, s x> = -psi(x), the
            # orientation that makes the pairing intertwine the universal
            # twisting morphisms (iota* agrees with pi through it)
            exp = len(degs)
            for i in range(len(degs)):
                for j in range(i + 1, len(degs)):
                    exp += degs[j] * degs[i]
            sign = -1 if exp % 2 else 1
            yield sign, dual_label(tree_label(dual_code))

        phis[m] = map_from_rule(src, tgt, 0, rule)
    return phis


def _dualize_tree(code):
    if code == LEAF:
        return LEAF
    return tree_node(dual_label(code[0]), tuple(_dualize_tree(c) for c in code[1]))


def inc(D: CooperadCoalgebra, Q: NsOperad, P: NsOperad, barP=None) -> OperadCoalgebra:
    """View a coalgebra over bar(P) as a coalgebra over Omega(P*): push the
    decompositions through the canonical pairing bar(P) = Omega(P*)*."""
    barP = barP if barP is not None else D.cooperad
    phis = _bar_pairing(barP, Q, P)
    f = D.field

    def delta_terms(label):
        out = []
        for (m, v, c_label, letters) in D.delta_terms(label):
            for dq, w in phis[m].apply_to_label(c_label).items():
                out.append((m, f.mul(v, w), dq, letters))
        return out

    return OperadCoalgebra(
        Q, D.underlying, delta_terms,
        arity_support=barP.arity_bound, name="inc(%s)" % D.name,
    )


@dataclass
class CompletionTower:
    """Arity-truncation tower standing in for the completed object."""

    cooperad: NsCooperad
    levels: dict  # k -> OperadAlgebra over dualize(truncate(cooperad, k))
    level_wtos: dict
    projections: dict  # k -> ChainMap from level k to level k-1
    weight_bound: int
    name: str = ""

    def top_level(self) -> OperadAlgebra:
        return self.levels[max(self.levels)]

    def top_wto(self):
        return self.level_wtos[max(self.levels)]


def cobar_hat_iota(
    X: OperadCoalgebra,
    C: NsCooperad,
    k_max: int,
    weight_bound: int,
    iota: TwistingMorphism | None = None,
    letter_weight=None,
) -> CompletionTower:
    """Levels of the completed twisted cobar: the free algebra over the dual
    of the truncated cooperad, with the differential twisted through the
    dual of the generator inclusion iota: C -> Omega C."""
    Q = X.operad
    iota = iota if iota is not None else universal_iota(C, Q)
    lw = letter_weight or getattr(X, "letter_weight", None)
    if lw is None:
        lw = {l: 1 for l in X.underlying.space.all_labels()}
    levels = {}
    wtos = {}
    for k in range(1, k_max + 1):
        Ck = truncate_cooperad(C, k)
        Pk = dualize_cooperad(Ck)
        maps = {m: dual_map(iota.maps[m]) for m in iota.maps if m <= k}
        alpha_k = TwistingMorphism(Ck, Pk, maps, name="iota_dual")
        Dk = CooperadCoalgebra(
            Ck, X.underlying, X.delta_terms, letter_weight=dict(lw), name=X.name
        )
        levels[k], wtos[k] = cobar_alpha(Dk, alpha_k, weight_bound, P=Pk)
        wtos[k].truncation_kind = QUOTIENT_TOWER
    projections = {}
    for k in range(2, k_max + 1):
        src = levels[k].underlying
        tgt = levels[k - 1].underlying

        def proj_rule(label, degree, _t=tgt):
            if label in _t.space:
                yield 1, label

        projections[k] = ChainMap(src, tgt, map_from_rule(src.space, tgt.space, 0, proj_rule))
    return CompletionTower(C, levels, wtos, projections, weight_bound, name="cobar_hat")


def res(T: CompletionTower) -> OperadAlgebra:
    """Restrict the completed structure to finite sums: at truncation this
    is the top level read as an algebra over the dual of the cooperad."""
    return T.top_level()


def c_abs(A: OperadAlgebra, mode: str, bounds) -> CompletionTower:
    """Tower of the completed absolution of an algebra.

    free_input: A must be a free algebra (with twisted differential); the
    tower is the arity quotient of the same free construction over the
    double dual.  derived: the formula through the square's other path.
    """
    W, k_max = bounds
    P = A.operad
    if mode == "free_input":
        if A.free_on is None or A.free_twist is None:
            raise NotFreePresentation("input carries no free presentation")
        D = A.free_on
        alpha = A.free_twist
        C = dualize_operad(P)
        levels = {}
        wtos = {}
        for k in range(1, k_max + 1):
            Ck = truncate_cooperad(C, k)
            Pk = dualize_cooperad(Ck)
            evs = {
                m: evaluation_map(P.components[m].space)
                for m in P.reduced_arities()
                if m <= k
            }
            maps = {}
            for m, amap in alpha.maps.items():
                if m <= k and m in evs:
                    maps[m] = evs[m].compose(amap)
            alpha_k = TwistingMorphism(
                getattr(alpha, "source", None), Pk, maps, name="ev_%s" % alpha.name
            )
            levels[k], wtos[k] = cobar_alpha(D, alpha_k, W, P=Pk)
            wtos[k].truncation_kind = QUOTIENT_TOWER
        projections = {}
        for k in range(2, k_max + 1):
            src = levels[k].underlying
            tgt = levels[k - 1].underlying

            def proj_rule(label, degree, _t=tgt):
                if label in _t.space:
                    yield 1, label

            projections[k] = ChainMap(
                src, tgt, map_from_rule(src.space, tgt.space, 0, proj_rule)
            )
        return CompletionTower(C, levels, wtos, projections, W, name="cAbs_free")
    if mode == "derived":
        barP = operadic_bar(P)
        D, _ = bar_pi(A, W, barP=barP)
        C = dualize_operad(P)
        Q = operadic_cobar(C, P.arity_bound)
        X = inc(D, Q, P, barP=barP)
        return cobar_hat_iota(X, C, k_max, W, letter_weight=D.letter_weight)
    raise ValueError("unknown mode %r" % mode)


def square_commutes_check(P: NsOperad, D: CooperadCoalgebra, bounds, barP=None):
    """Compare c_abs(cobar_pi(D)) with cobar_hat_iota(inc(D)) levelwise.

    The two towers are built through independent routes (operadic
    composition then double-dual transport, versus pairing identification
    then dual-of-inclusion twisting); the verdict demands exact equality of
    spaces, differentials and sampled structure maps after the canonical
    relabeling, and reports the first mismatch otherwise.
    """
    W, k_max = bounds
    barP = barP if barP is not None else operadic_bar(P)
    pi = universal_pi(P, barP)
    om, _ = cobar_alpha(D, pi, W)
    t1 = c_abs(om, "free_input", (W, k_max))
    C = dualize_operad(P)
    Q = operadic_cobar(C, P.arity_bound)
    X = inc(D, Q, P, barP=barP)
    t2 = cobar_hat_iota(X, C, k_max, W, letter_weight=D.letter_weight)
    report = {"commutes": True, "bounds": [W, k_max], "levels": {}, "witness": None}
    for k in sorted(t1.levels):
        a = t1.levels[k]
        b = t2.levels.get(k)
        entry = {"dims": a.underlying.dims()}
        if b is None:
            entry["equal"] = False
            report["witness"] = {"level": k, "reason": "missing level"}
            report["commutes"] = False
            report["levels"][k] = entry
            continue
        same_space = a.underlying.space == b.underlying.space
        same_diff = same_space and a.underlying.d == b.underlying.d
        entry["equal_space"] = same_space
        entry["equal_differential"] = same_diff
        gamma_ok = True
        if same_space:
            gamma_ok = _compare_gammas(a, b, max_arity=min(k, 2))
        entry["equal_structure"] = gamma_ok
        ok = same_space and same_diff and gamma_ok
        entry["equal"] = ok
        if not ok and report["witness"] is None:
            witness = {"level": k}
            if not same_space:
                witness["reason"] = "basis mismatch"
            elif not same_diff:
                diff = a.underlying.d.add(b.underlying.d.neg())
                deg = sorted(diff.blocks.keys())[0]
                witness["reason"] = "differential differs at degree %d" % deg
            else:
                witness["reason"] = "structure maps differ"
            report["witness"] = witness
            report["commutes"] = False
        report["levels"][k] = entry
    report["isomorphism"] = (
        "identity on matched basis words; roots carried through the "
        "canonical double-dual evaluation"
    )
    return report


def _compare_gammas(a: OperadAlgebra, b: OperadAlgebra, max_arity=2):
    """Exact equality of gamma on all basis tuples up to max_arity."""
    Pa, Pb = a.operad, b.operad
    labels = list(a.underlying.space.all_labels())
    for n in range(2, max_arity + 1):
        if n not in Pa.components or n not in Pb.components:
            continue
        for pl in Pa.components[n].space.all_labels():
            if pl not in Pb.components[n].space:
                return False
            for letters in _tuples(labels, n):
                va = {l: c for c, l in a.gamma_eval(n, pl, letters)}
                vb = {l: c for c, l in b.gamma_eval(n, pl, letters)}
                if va != vb:
                    return False
    return True


# ---------------------------------------------------------------------------
# the maximal conilpotent subcoalgebra


def sub(X: OperadCoalgebra, arity_support=None):
    """Greatest subspace whose decompositions stay inside it with a nilpotent
    decomposition graph, grown coradical-style: S_1 collects the primitives,
    S_p the vectors decomposing into S_{p-1}, until stable.  Exact within the
    stored representation.  Returns (report, CooperadCoalgebra | None); the
    structured result is produced when the subspace is spanned by basis
    labels (which covers every coalgebra this artifact constructs).
    """
    space = X.underlying.space
    f = X.field
    labels = list(space.all_labels())
    terms = {l: list(X.delta_terms(l)) for l in labels}

    def in_span(vec, basis):
        """Reduce vec (dict) against a list of dicts; True if it vanishes."""
        rows = [dict(b) for b in basis]
        v = dict(vec)
        for row in rows:
            if not row:
                continue
            lead = sorted(row, key=sort_key)[0]
            if lead in v:
                c = f.div(v[lead], row[lead])
                for k, w in row.items():
                    s = f.sub(v.get(k, f.zero()), f.mul(c, w))
                    if s:
                        v[k] = s
                    else:
                        v.pop(k, None)
        return not v

    # iterate on coefficient spaces per degree
    current = []  # list of vectors (dicts)
    while True:
        # membership test set for the previous stage
        prev = current
        new = []
        for deg in space.degrees():
            degree_labels = list(space.labels(deg))
            # unknowns: coefficients over this degree's labels; conditions:
            # every slot of every decomposition lands in span(prev)
            conditions = {}
            ncols = len(degree_labels)
            rows = []
            for ci, l in enumerate(degree_labels):
                for (m, v, dq, letters) in terms[l]:
                    for slot in range(m):
                        # residual of the slot letter mod span(prev)
                        resid = _reduce_mod(f, {letters[slot]: v}, prev)
                        for rl, rv in resid.items():
                            key = (m, dq, letters[:slot], rl, letters[slot + 1 :], slot)
                            conditions.setdefault(key, {})[ci] = f.add(
                                conditions.get(key, {}).get(ci, f.zero()), rv
                            )
            mat = SparseMatrix(
                len(conditions), ncols, f,
                {
                    (ri, ci): val
                    for ri, row in enumerate(conditions.values())
                    for ci, val in row.items()
                },
            )
            kern = mat.kernel_basis()
            for j in range(kern.cols):
                col = kern.column(j)
                new.append({degree_labels[r]: v for r, v in col.items()})
        if _same_span(f, new, current):
            current = new
            break
        current = new
    report = {
        "dims": {},
        "basis": [
            {str(sort_key(k)): f.format(v) for k, v in vec.items()} for vec in current
        ],
    }
    by_degree = {}
    for vec in current:
        deg = space.degree_of(next(iter(vec)))
        by_degree.setdefault(deg, []).append(vec)
    report["dims"] = {d: len(v) for d, v in sorted(by_degree.items())}

    # monomial fast path: the span is a set of basis labels
    chosen = set()
    monomial = True
    for vec in current:
        if len(vec) == 1:
            chosen.add(next(iter(vec)))
        else:
            monomial = False
    if not monomial:
        span_labels = set()
        for vec in current:
            span_labels.update(vec)
        if len(span_labels) == len(current):
            chosen = span_labels
        else:
            return report, None
    sub_space = GradedSpace(
        f, {d: [l for l in space.labels(d) if l in chosen] for d in space.degrees()}
    )

    def drule(label, degree):
        for tl, v in X.underlying.d.apply_to_label(label).items():
            yield v, tl

    sub_cx = ChainComplex(sub_space, map_from_rule(sub_space, sub_space, -1, drule))

    def sub_delta(label):
        return [t for t in terms[label]]

    lw = coalgebra_letter_weights(sub_cx, sub_delta)
    coalg = CooperadCoalgebra(
        None, sub_cx, sub_delta, letter_weight=lw or {}, name="sub(%s)" % X.name
    )
    report["conilpotent"] = lw is not None
    return report, coalg


def _eliminate(f, v, row, lead):
    c = f.div(v[lead], row[lead])
    for k, w in row.items():
        s = f.sub(v.get(k, f.zero()), f.mul(c, w))
        if s:
            v[k] = s
        else:
            v.pop(k, None)


def _echelonize(f, vectors):
    """Fully reduced row set: every lead occurs in exactly one row."""
    rows = []  # (vector, lead)
    for vec in vectors:
        v = dict(vec)
        for row, lead in rows:
            if lead in v:
                _eliminate(f, v, row, lead)
        if not v:
            continue
        lead = sorted(v, key=sort_key)[0]
        for row, _ in rows:
            if lead in row:
                _eliminate(f, row, v, lead)
        rows.append((v, lead))
    return rows


def _reduce_mod(f, vec, basis):
    rows = _echelonize(f, basis)
    v = dict(vec)
    for row, lead in rows:
        if lead in v:
            _eliminate(f, v, row, lead)
    return v


def _same_span(f, a, b):
    return all(in_span_of(f, v, b) for v in a) and all(in_span_of(f, v, a) for v in b)


def in_span_of(f, vec, basis):
    return not _reduce_mod(f, vec, basis)


# ---------------------------------------------------------------------------
# canonical filtration on a tower level


def canonical_filtration(level: OperadAlgebra, C: NsCooperad, p_max: int):
    """W^p B = image of the structure maps along operations outside R_p C.

    Returns a FiltrationReport-style dict: per p the dims of W^p per degree
    and the quotient dims; W^0 is everything and the chain is decreasing.
    """
    from .operads import coradical_filtration

    f = level.field
    B = level.underlying.space
    cor = C.coradical or coradical_filtration(C)
    top = max(cor)
    steps = {0: {d: B.dim(d) for d in B.degrees()}}
    quotients = {}
    labels = list(B.all_labels())
    for p in range(1, p_max + 1):
        rp = cor[min(p, top)]
        vectors = []
        for n in C.reduced_arities():
            if n not in level.operad.components:
                continue
            inside = set(rp.get(n, []))
            outside = [
                l for l in C.components[n].space.all_labels() if l not in inside
            ]
            # annihilator of R_p in the dual is spanned by duals of the
            # complementary labels (label-level coradical)
            for c in outside:
                phi = dual_label(c)
                if phi not in level.operad.components[n].space:
                    continue
                for letters in _tuples(labels, n):
                    vec = {l: v for v, l in level.gamma_eval(n, phi, letters)}
                    if vec:
                        vectors.append(vec)
        dims = _span_dims(f, B, vectors)
        steps[p] = dims
        quotients[p] = {
            d: B.dim(d) - dims.get(d, 0) for d in B.degrees()
        }
    report = {
        "kind": "canonical",
        "steps": steps,
        "quotient_dims": quotients,
        "decreasing": all(
            all(steps[p].get(d, 0) >= steps[p + 1].get(d, 0) for d in B.degrees())
            for p in range(0, p_max)
        ),
    }
    return report


def _span_dims(f, space, vectors):
    by_degree = {}
    for vec in vectors:
        if not vec:
            continue
        deg = space.degree_of(next(iter(vec)))
        by_degree.setdefault(deg, []).append(vec)
    dims = {}
    for deg, vecs in by_degree.items():
        labels = list(space.labels(deg))
        index = {l: i for i, l in enumerate(labels)}
        entries = {}
        for r, vec in enumerate(vecs):
            for l, v in vec.items():
                entries[(r, index[l])] = v
        mat = SparseMatrix(len(vecs), len(labels), f, entries)
        dims[deg] = mat.rank()
    return dims


# ---------------------------------------------------------------------------
# homotopy completeness and good (co)completion checks


def homotopy_complete_check(A: OperadAlgebra, bounds, degree_range, barP=None):
    """Compare the sum-shaped resolution with the completed tower.

    With a positive degree-per-weight rate every fixed degree meets finitely
    many weights and arities, so the sum and the product agree degreewise on
    the nose; the exhibits are the unit map into the tower top level (cone
    checked over the shared window) and levelwise stabilization.  Without a
    positive rate no finite bound is degreewise exhaustive and the honest
    verdict is window_insufficient.
    """
    W, k_max = bounds
    P = A.operad
    if A.underlying.space.is_zero():
        return {"verdict": "complete_in_window", "detail": "zero algebra"}
    barP = barP if barP is not None else operadic_bar(P)
    D, bar_wto = bar_pi(A, W, barP=barP)
    pi = universal_pi(P, barP)
    om, om_wto = cobar_alpha(D, pi, W)
    rate = om_wto.rate
    if rate is None or rate <= 0:
        return {
            "verdict": "window_insufficient",
            "rate": str(rate) if rate is not None else None,
            "detail": "nonpositive degree rate: weights pile into a single degree",
        }
    C = dualize_operad(P)
    Q = operadic_cobar(C, P.arity_bound)
    X = inc(D, Q, P, barP=barP)
    tower = cobar_hat_iota(X, C, k_max, W, letter_weight=D.letter_weight)
    top = tower.top_level()
    # unit of the adjunction: a |-> (unit root; the one-letter bar word)
    V = A.underlying
    unit_root = top.operad.unit_label()

    def unit_rule(label, degree):
        yield A.field.one(), _fa_label(unit_root, (_bp_label(tree_label(LEAF), (label,)),))

    eta = ChainMap(V, top.underlying, map_from_rule(V.space, top.underlying.space, 0, unit_rule))
    w1 = om_wto.window()
    w2 = tower.top_wto().window()
    lo, hi = degree_range
    if w1 is None or w2 is None:
        return {"verdict": "window_insufficient", "rate": str(rate), "detail": "empty window"}
    ex_lo, ex_hi = lo, min(hi, w1[1], w2[1])
    stab = True
    if len(tower.levels) >= 2:
        ks = sorted(tower.levels)
        h_top = homology(tower.levels[ks[-1]].underlying, (ex_lo, ex_hi)).betti
        h_prev = homology(tower.levels[ks[-2]].underlying, (ex_lo, ex_hi)).betti
        stab = h_top == h_prev
    verdict = is_quasi_iso(eta, (ex_lo, ex_hi), window=(ex_lo, ex_hi)) if ex_lo <= ex_hi else None
    out = {
        "rate": str(rate),
        "bounds": [W, k_max],
        "degree_range": [lo, hi],
        "exhibit_range": [ex_lo, ex_hi],
        "tower_stabilized": stab,
        "detail": (
            "positive rate %s: degreewise the sum and the completed tower "
            "agree; unit cone checked on the exhibit range" % rate
        ),
    }
    if verdict is None or ex_hi < ex_lo:
        out["verdict"] = "window_insufficient"
    elif verdict.verdict == "yes" and stab:
        out["verdict"] = "complete_in_window"
    elif verdict.verdict == "no":
        out["verdict"] = "incomplete"
        out["witness"] = {"degree": verdict.witness_degree}
    else:
        out["verdict"] = "window_insufficient"
    return out


def _relabel_double_dual(cx: ChainComplex, root_degree_of):
    """Transport a free-algebra complex along the double-dual relabeling of
    its roots, with the evaluation sign (-1)^{|p|} per root."""
    space = cx.space
    f = cx.field

    def relabel(label):
        root, ls = _fa_unpack(label)
        inner = root[1][1] if False else root
        # root is dual(dual(p)): unwrap twice
        p = root[1][1] if root[0] == "dual" and root[1][0] == "dual" else None
        if p is None:
            raise ValueError("root %r is not a double dual" % (root,))
        sign = -1 if root_degree_of(p) % 2 else 1
        return _fa_label(p, ls), sign

    comps = {}
    signs = {}
    for d in space.degrees():
        comps[d] = []
        for l in space.labels(d):
            nl, s = relabel(l)
            comps[d].append(nl)
            signs[nl] = s
    new_space = GradedSpace(f, comps, sort=True)
    back = {}
    for d in space.degrees():
        for l in space.labels(d):
            nl, _ = relabel(l)
            back[nl] = l

    def rule(label, degree):
        old = back[label]
        s1 = signs[label]
        for tl, v in cx.d.apply_to_label(old).items():
            nl, s2 = relabel(tl)
            coeff = v if s1 * s2 > 0 else f.neg(v)
            yield coeff, nl

    return ChainComplex(new_space, map_from_rule(new_space, new_space, -1, rule))


def good_cocompletion_check(P: NsOperad, V: ChainComplex, bounds, barP=None):
    """Sum-against-product free algebras and the resolution onto V.

    The product-shaped free algebra is built over the double dual of the
    operad and transported back along evaluation; for an honestly truncated
    operad the two are required to agree matrix for matrix.  The bar of the
    free algebra is then checked to resolve V inside the model window.
    """
    W, _k = bounds if isinstance(bounds, tuple) else (bounds, None)
    if V.space.total_dim() == 0:
        return {
            "verdict": "isomorphism" if P.exact else "yes_in_window",
            "operad_exact": P.exact,
            "free_dims": {},
            "sum_equals_product": True,
            "detail": "no generators: both sides vanish",
        }
    barP = barP if barP is not None else operadic_bar(P)
    A_sum, sum_wto = free_algebra(P, V, W)
    P_dd = dualize_cooperad(dualize_operad(P))
    A_prod, _ = free_algebra(P_dd, V, W)
    transported = _relabel_double_dual(
        A_prod.underlying,
        lambda p: _operad_label_degree(P, p),
    )
    iso = transported.space == A_sum.underlying.space and transported.d == A_sum.underlying.d
    out = {
        "operad_exact": P.exact,
        "free_dims": A_sum.underlying.dims(),
        "sum_equals_product": iso,
    }
    if not iso:
        out["verdict"] = "no"
        out["witness"] = "sum and product free algebras differ at the bound"
        return out
    # resolution check: bar of the free algebra is quasi-isomorphic to V
    D, wto = bar_pi(A_sum, W, barP=barP)
    proj = _bar_counit_to_generators(D, A_sum, V)
    w = wto.window()
    degs = V.space.degrees()
    lo = (min(degs) - 1) if degs else 0
    if w is None or w[1] < lo:
        out["verdict"] = "isomorphism" if P.exact else "window_insufficient"
        out["window"] = None
        return out
    verdict = is_quasi_iso(proj, (lo, w[1]), window=(lo, w[1]))
    out["window"] = [lo, w[1]]
    out["resolution"] = verdict.verdict
    if P.exact:
        out["verdict"] = "isomorphism" if verdict.verdict == "yes" else "no"
    else:
        out["verdict"] = "yes_in_window" if verdict.verdict == "yes" else "no"
    if verdict.verdict == "no":
        out["witness"] = {"degree": verdict.witness_degree}
    return out


def _operad_label_degree(P: NsOperad, label):
    for n in P.arities():
        if label in P.components[n].space:
            return P.components[n].space.degree_of(label)
    raise KeyError(label)


def _bar_counit_to_generators(D: CooperadCoalgebra, A: OperadAlgebra, V: ChainComplex):
    """bar_pi(free algebra on V) -> V: the trivial-tree single-generator part."""
    field = V.field
    unit = A.operad.unit_label()

    def rule(label, degree):
        t, letters = _bp_unpack(label)
        if t[1] != LEAF or len(letters) != 1:
            return
        root, ls = _fa_unpack(letters[0])
        if root == unit and len(ls) == 1:
            yield field.one(), ls[0]

    return ChainMap(D.underlying, V, map_from_rule(D.underlying.space, V.space, 0, rule))


# ---------------------------------------------------------------------------
# the good-completion counterexample apparatus


def cofree_coalgebra(C: NsCooperad, V: ChainComplex, vweight_bound: int):
    """Cofree C-coalgebra on V for a cooperad with zero reduced
    decompositions: pieces (c; v_1 ... v_j) for c of arity j, decomposing by
    the tautological component (c; single-generator pieces).

    That is all the counterexample needs; cooperads with nonzero reduced
    decompositions are rejected rather than half-supported.
    """
    for key, dmap in C.decomp.items():
        if not dmap.is_zero():
            raise NotImplementedError(
                "cofree coalgebra implemented for decomposition-free cooperads"
            )
    f = C.field
    Vsp = V.space
    vletters = sorted(Vsp.all_labels(), key=sort_key)
    comps = {}
    weight = {}
    counit = C.components[1].space.labels(0)[0]
    for j in C.arities():
        if j > vweight_bound:
            continue
        csp = C.components[j].space
        for c in csp.all_labels():
            cdeg = csp.degree_of(c)
            for word in _letter_words([(0, v) for v in vletters], j):
                deg = cdeg + sum(Vsp.degree_of(v) for v in word)
                lab = tagged("cf", tensor_label(c, *word))
                comps.setdefault(deg, []).append(lab)
                weight[lab] = j
    space = GradedSpace(f, comps, sort=True)

    def drule(label, degree):
        parts = label[2][1]
        c, word = parts[0], parts[1:]
        cdeg = _cooperad_label_degree(C, c)
        for tl, v in _cooperad_d(C, c).items():
            yield v, tagged("cf", tensor_label(tl, *word))
        for i, x in enumerate(word):
            prefix = cdeg + sum(Vsp.degree_of(y) for y in word[:i])
            sign = -1 if prefix % 2 else 1
            for tl, v in V.d.apply_to_label(x).items():
                coeff = v if sign > 0 else f.neg(v)
                yield coeff, tagged("cf", tensor_label(c, *word[:i], tl, *word[i + 1 :]))

    cx = ChainComplex(space, map_from_rule(space, space, -1, drule))

    def delta_terms(label):
        parts = label[2][1]
        c, word = parts[0], parts[1:]
        j = len(word)
        if j < 2:
            return []
        pieces = tuple(tagged("cf", tensor_label(counit, v)) for v in word)
        return [(j, f.one(), c, pieces)]

    lw = dict(weight)
    return CooperadCoalgebra(C, cx, delta_terms, letter_weight=lw, name="cofree"), weight


def _cooperad_label_degree(C: NsCooperad, label):
    for n in C.arities():
        if label in C.components[n].space:
            return C.components[n].space.degree_of(label)
    raise KeyError(label)


def _cooperad_d(C: NsCooperad, label):
    for n in C.arities():
        if label in C.components[n].space:
            return C.components[n].d.apply_to_label(label)
    raise KeyError(label)


def counterexample_ambient(C: NsCooperad, V: ChainComplex, vweight_bound: int,
                           omegaC: NsOperad | None = None):
    """The twisted cobar of the cofree coalgebra relative to iota, graded by
    the total generator count; the differential preserves that grading."""
    omegaC = omegaC if omegaC is not None else operadic_cobar(C)
    iota = universal_iota(C, omegaC)
    D, _ = cofree_coalgebra(C, V, vweight_bound)
    alg, wto = cobar_alpha(D, iota, vweight_bound)
    return alg, wto, D


def vweight_component(ambient: OperadAlgebra, wto, n: int) -> ChainComplex:
    """The subcomplex of total generator count n."""
    space = ambient.underlying.space
    weight = wto.weight
    comps = {}
    for d in space.degrees():
        keep = [l for l in space.labels(d) if weight[l] == n]
        if keep:
            comps[d] = keep
    sub_space = GradedSpace(space.field, comps)

    def rule(label, degree):
        for tl, v in ambient.underlying.d.apply_to_label(label).items():
            if weight[tl] != n:
                raise AssertionError("differential does not preserve the grading")
            yield v, tl

    return ChainComplex(sub_space, map_from_rule(sub_space, sub_space, -1, rule))


def counterexample_witness(C: NsCooperad, V: ChainComplex, N: int,
                           omegaC: NsOperad | None = None):
    """Certify the obstruction pattern behind the failure of completion.

    For each 2 <= k <= N, inside the generator-count-k component: (a) the
    candidate obstruction term (the desuspended arity-k cogenerator applied
    to k generators) is closed; (b) the equation d x = term forces, in
    degree 0, exactly the coefficient 1 on the single-piece element, with no
    degree-0 cycles able to cancel it; (c) the degree-0 part of every slot
    of root arity >= 2 vanishes.  The finite facts are machine-checked; the
    conclusion that any global bounding element needs unbounded support is
    reported as a labeled inference, never as a computed fact.
    """
    if N < 2:
        raise BoundTooSmall("witness bound must be at least 2")
    if V.space.total_dim() == 0:
        return {"facts": {}, "inference": "empty generator space: nothing to certify",
                "verdict": "degenerate"}
    omegaC = omegaC if omegaC is not None else operadic_cobar(C)
    ambient, wto, D = counterexample_ambient(C, V, N, omegaC=omegaC)
    space = ambient.underlying.space
    f = ambient.field
    counit = C.components[1].space.labels(0)[0]
    vlabel = sorted(V.space.all_labels(), key=sort_key)[0]
    facts = {}
    all_ok = True
    for k in range(2, N + 1):
        comp = vweight_component(ambient, wto, k)
        ck = C.components[k].space.labels(0)[0] if k in C.components else None
        if ck is None:
            continue
        gen_piece = tagged("cf", tensor_label(counit, vlabel))
        term = _fa_label(
            tree_label(tree_node(ck, (LEAF,) * k)), (gen_piece,) * k
        )
        single = _fa_label(
            omegaC.unit_label(), (tagged("cf", tensor_label(ck, *((vlabel,) * k))),)
        )
        entry = {"component_dims": comp.dims()}
        # (a) the term is closed
        closed = not comp.d.apply_to_label(term)
        entry["term_closed"] = closed
        # (b) solve d x = term on the degree-0 block
        deg0 = list(comp.space.labels(0))
        degm1 = list(comp.space.labels(-1))
        idx0 = {l: i for i, l in enumerate(deg0)}
        idxm1 = {l: i for i, l in enumerate(degm1)}
        block = comp.d.block(0)
        rhs = {idxm1[term]: f.one()}
        particular, kernel, cert = block.solve(rhs)
        solvable = particular is not None
        entry["bounded_inside_component"] = solvable
        if solvable:
            coeff = particular.get(idx0.get(single, -1))
            # the forced unit is -1 under this package's derivation-sign
            # orientation; what matters is that it is forced and nonzero
            entry["forced_coefficient"] = f.format(coeff) if coeff is not None else None
            entry["forced_coefficient_is_unit"] = coeff is not None and bool(coeff)
            cancels = []
            for j in range(kernel.cols):
                col = kernel.column(j)
                if idx0.get(single, -1) in col:
                    cancels.append(j)
            entry["kernel_dim"] = kernel.cols
            entry["kernel_touches_forced_coordinate"] = bool(cancels)
        # (c) no degree-0 elements with root arity >= 2
        bad = []
        for l in deg0:
            root, _ls = _fa_unpack(l)
            code = root[1]
            arity = trees.leaf_count(code) if code != LEAF else 1
            if arity >= 2:
                bad.append(l)
        entry["degree0_higher_arity_dim"] = len(bad)
        # colimit-side health: acyclic in degree -1
        betti = homology(comp, (-1, -1)).betti
        entry["betti_minus_one"] = betti.get(-1, 0)
        ok = (
            closed
            and solvable
            and entry.get("forced_coefficient_is_unit", False)
            and not entry.get("kernel_touches_forced_coordinate", True)
            and len(bad) == 0
        )
        entry["ok"] = ok
        all_ok = all_ok and ok
        facts[k] = entry
    return {
        "facts": facts,
        "verdict": "certified" if all_ok else "failed",
        "inference": (
            "labeled inference: every bounding element of the total degree -1 "
            "series must place the forced coefficient in the arity-1 slot at "
            "every generator count simultaneously, hence needs unbounded "
            "support there; no element of the completed object has such "
            "support, so the series is a nontrivial class on the completed "
            "side while each finite component is exact"
        ),
    }
