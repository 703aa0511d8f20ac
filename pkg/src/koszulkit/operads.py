"""Reduced non-symmetric dg (co)operads at arity truncation.

Operads store one chain complex per arity (arity 1 is the span of the unit)
and partial compositions for pairs of non-unit arities; cooperads mirror
this with partial decompositions and carry their coradical filtration.
The bar and cobar functors produce tree complexes; every differential is
square-zero checked at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .complexes import ChainComplex, ChainMap, HomologyReport, homology, tensor_complex
from .graded import (
    GradedMap,
    GradedSpace,
    dual_map,
    dual_space,
    identity_map,
    koszul_sign,
    map_from_rule,
    tensor_map,
    tensor_space,
    zero_map,
)
from .labels import (
    LEAF,
    atom,
    dual as dual_label,
    tagged,
    tensor as tensor_label,
    tree as tree_label,
    tree_node,
)
from . import trees


class AxiomFailure(Exception):
    def __init__(self, axiom, arities, witness):
        self.axiom = axiom
        self.arities = arities
        self.witness = witness
        super().__init__("%s fails at %r on %r" % (axiom, arities, witness))


class NotReduced(Exception):
    pass


class NotConilpotentOperad(Exception):
    pass


UNIT = atom("u1")


def _unit_complex(field):
    space = GradedSpace(field, {0: [UNIT]})
    return ChainComplex(space, zero_map(space, space, -1))


def _counit_tree_complex(field):
    space = GradedSpace(field, {0: [tree_label(LEAF)]})
    return ChainComplex(space, zero_map(space, space, -1))


@dataclass
class NsOperad:
    """components[n] for 1 <= n <= arity_bound; partial[(m, i, n)] is the
    composition P(m) (x) P(n) -> P(m+n-1) at slot i (1-based), m, n >= 2.
    ``exact`` records whether components above the bound are genuinely zero
    (an honest finite operad) or merely not represented (a truncation
    window onto an infinite object)."""

    field: object
    arity_bound: int
    components: dict
    partial: dict
    exact: bool = False
    name: str = ""

    def component(self, n) -> ChainComplex:
        return self.components[n]

    def arities(self):
        return sorted(self.components.keys())

    def reduced_arities(self):
        return [n for n in self.arities() if n >= 2 and not self.components[n].space.is_zero()]

    def unit_label(self):
        return self.components[1].space.labels(0)[0]

    def compose(self, m, i, n, p_label, q_label):
        """p o_i q as a vector over P(m+n-1); units handled implicitly."""
        if m == 1:
            return {q_label: self.field.one()} if p_label == self.unit_label() else {}
        if n == 1:
            return {p_label: self.field.one()} if q_label == self.unit_label() else {}
        gamma = self.partial.get((m, i, n))
        if gamma is None:
            return {}
        return gamma.apply_to_label(tensor_label(p_label, q_label))

    def min_reduced_degree(self):
        degs = []
        for n in self.reduced_arities():
            degs.extend(self.components[n].space.degrees())
        return min(degs) if degs else None


@dataclass
class NsCooperad:
    """Mirror of NsOperad: decomp[(m, i, n)]: C(m+n-1) -> C(m) (x) C(n)."""

    field: object
    arity_bound: int
    components: dict
    decomp: dict
    exact: bool = False
    name: str = ""
    coradical: dict = dc_field(default_factory=dict)  # p -> {n: label list or basis}

    def component(self, n) -> ChainComplex:
        return self.components[n]

    def arities(self):
        return sorted(self.components.keys())

    def reduced_arities(self):
        return [n for n in self.arities() if n >= 2 and not self.components[n].space.is_zero()]

    def decompose(self, m, i, n, label):
        dmap = self.decomp.get((m, i, n))
        if dmap is None:
            return {}
        return dmap.apply_to_label(label)

    def reduced_decompositions(self, arity, label):
        """All (m, i, n, coeff, c_bottom, c_top) with both parts reduced."""
        out = []
        for (m, i, n), dmap in self.decomp.items():
            if m + n - 1 != arity:
                continue
            left = self.components[m].space
            for tl, v in dmap.apply_to_label(label).items():
                parts = tl[1] if tl[0] == "tensor" else (tl,)
                if len(parts) != 2:
                    from .graded import split_tensor_label

                    parts = split_tensor_label(tl, left, self.components[n].space)
                out.append((m, i, n, v, parts[0], parts[1]))
        return out


# ---------------------------------------------------------------------------
# validation


def _check_chain_maps(components, maps, kindname):
    for key, gmap in maps.items():
        m, i, n = key
        src = tensor_complex(components[m], components[n]) if kindname == "operad" else components[m + n - 1]
        tgt = components[m + n - 1] if kindname == "operad" else tensor_complex(components[m], components[n])
        try:
            if kindname == "operad":
                ChainMap(src, tgt, gmap)
            else:
                ChainMap(src, tgt, gmap)
        except Exception as exc:
            raise AxiomFailure("leibniz", key, str(exc))


def validate_operad(
    field, arity_bound, components, partial, exact=False, name="", check=True
) -> NsOperad:
    """Exact verification of the reduced-operad axioms within the bound."""
    comps = dict(components)
    if 1 not in comps:
        comps[1] = _unit_complex(field)
    unit_cx = comps[1]
    if unit_cx.space.total_dim() != 1 or unit_cx.space.degrees() != [0]:
        raise NotReduced("arity 1 must be the span of the unit in degree 0")
    P = NsOperad(field, arity_bound, comps, dict(partial), exact=exact, name=name)
    if not check:
        return P
    _check_chain_maps(comps, P.partial, "operad")
    # sequential and parallel associativity on basis triples
    for m in P.reduced_arities():
        for n in P.reduced_arities():
            for l in P.reduced_arities():
                if m + n + l - 2 > arity_bound:
                    continue
                _assoc_check(P, m, n, l)
    return P


def _vec_compose(P: NsOperad, m, i, n, vec_p, vec_q, sign=1):
    f = P.field
    out = {}
    for pl, pv in vec_p.items():
        for ql, qv in vec_q.items():
            for tl, tv in P.compose(m, i, n, pl, ql).items():
                c = f.mul(f.mul(pv, qv), tv)
                if sign < 0:
                    c = f.neg(c)
                s = f.add(out.get(tl, f.zero()), c)
                if s:
                    out[tl] = s
                else:
                    out.pop(tl, None)
    return out


def _assoc_check(P: NsOperad, m, n, l):
    f = P.field
    Pm, Pn, Pl = (P.components[a].space for a in (m, n, l))
    for pl in Pm.all_labels():
        for ql in Pn.all_labels():
            for rl in Pl.all_labels():
                one = f.one()
                dq = Pn.degree_of(ql)
                dr = Pl.degree_of(rl)
                # sequential: (p o_i q) o_{i-1+j} r == p o_i (q o_j r)
                for i in range(1, m + 1):
                    for j in range(1, n + 1):
                        lhs = _vec_compose(
                            P, m + n - 1, i - 1 + j, l, P.compose(m, i, n, pl, ql), {rl: one}
                        )
                        rhs = _vec_compose(
                            P, m, i, n + l - 1, {pl: one}, P.compose(n, j, l, ql, rl)
                        )
                        if lhs != rhs:
                            raise AxiomFailure("sequential", (m, i, n, j, l), (pl, ql, rl))
                # parallel: (p o_i q) o_{j+n-1} r == +- (p o_j r) o_i q, i < j
                for i in range(1, m + 1):
                    for j in range(i + 1, m + 1):
                        lhs = _vec_compose(
                            P, m + n - 1, j + n - 1, l, P.compose(m, i, n, pl, ql), {rl: one}
                        )
                        sign = koszul_sign(dq, dr)
                        rhs = _vec_compose(
                            P, m + l - 1, i, n, P.compose(m, j, l, pl, rl), {ql: one}, sign
                        )
                        if lhs != rhs:
                            raise AxiomFailure("parallel", (m, i, n, j, l), (pl, ql, rl))


def validate_cooperad(
    field, arity_bound, components, decomp, exact=False, name="", check=True
) -> NsCooperad:
    comps = dict(components)
    if 1 not in comps:
        comps[1] = _unit_complex(field)
    if comps[1].space.total_dim() != 1 or comps[1].space.degrees() != [0]:
        raise NotReduced("arity 1 must be the span of the counit in degree 0")
    C = NsCooperad(field, arity_bound, comps, dict(decomp), exact=exact, name=name)
    if check:
        _check_chain_maps(comps, C.decomp, "cooperad")
        _coassoc_check(C)
    C.coradical = coradical_filtration(C)
    top = max(C.coradical)
    for n in C.reduced_arities():
        if len(C.coradical[top].get(n, [])) != C.components[n].space.total_dim():
            raise NotConilpotentOperad("coradical filtration does not exhaust arity %d" % n)
    return C


def _swap_map(A: GradedSpace, B: GradedSpace) -> GradedMap:
    src = tensor_space(A, B)
    tgt = tensor_space(B, A)

    def rule(label, degree):
        from .graded import split_tensor_label

        a, b = split_tensor_label(label, A, B)
        yield koszul_sign(A.degree_of(a), B.degree_of(b)), tensor_label(b, a)

    return map_from_rule(src, tgt, 0, rule)


def _coassoc_check(C: NsCooperad):
    """Coassociativity as exact equations of composed decomposition maps."""
    bound = C.arity_bound

    def dmap(m, i, n):
        key = (m, i, n)
        if key in C.decomp:
            return C.decomp[key]
        src = C.components.get(m + n - 1)
        if src is None:
            return None
        return zero_map(
            src.space, tensor_space(C.components[m].space, C.components[n].space), 0
        )

    ar = C.reduced_arities()
    for m in ar:
        for n in ar:
            for l in ar:
                if m + n + l - 2 > bound:
                    continue
                idm = identity_map(C.components[m].space)
                idn = identity_map(C.components[n].space)
                idl = identity_map(C.components[l].space)
                for i in range(1, m + 1):
                    for j in range(1, n + 1):
                        # sequential: cut off the top of the bottom piece
                        first = dmap(m + n - 1, i - 1 + j, l)
                        lhs = tensor_map(dmap(m, i, n), idl).compose(first)
                        rhs = tensor_map(idm, dmap(n, j, l)).compose(dmap(m, i, n + l - 1))
                        if lhs != rhs:
                            raise AxiomFailure("co-sequential", (m, i, n, j, l), None)
                for i in range(1, m + 1):
                    for j in range(i + 1, m + 1):
                        lhs = tensor_map(dmap(m, i, n), idl).compose(dmap(m + n - 1, j + n - 1, l))
                        swap = _swap_map(C.components[l].space, C.components[n].space)
                        idm2 = identity_map(C.components[m].space)
                        rhs = tensor_map(idm2, swap).compose(
                            tensor_map(dmap(m, j, l), idn).compose(dmap(m + l - 1, i, n))
                        )
                        if lhs != rhs:
                            raise AxiomFailure("co-parallel", (m, i, n, j, l), None)


def coradical_filtration(C: NsCooperad, max_steps=None):
    """R_p per arity as label-index subspaces (grown until stable)."""
    out = {}
    total = sum(C.components[n].space.total_dim() for n in C.reduced_arities())
    max_steps = max_steps or max(1, total)
    # R_p computed on basis labels: a label is in R_p when every reduced
    # decomposition lands in R_{p-1} (x) R_{p-1}.  Structure constants over a
    # basis keep this a label-level computation (all our cooperads are
    # monomial-decomposed); general subspace filtrations are not needed at
    # the bounds this artifact runs at.
    current = {n: set() for n in C.reduced_arities()}
    filtration = {}
    for p in range(1, max_steps + 1):
        new = {}
        for n in C.reduced_arities():
            keep = set()
            for lbl in C.components[n].space.all_labels():
                ok = True
                for (m, i, nn, v, cb, ct) in C.reduced_decompositions(n, lbl):
                    bot_ok = (m == 1) or (cb in current.get(m, set()))
                    top_ok = (nn == 1) or (ct in current.get(nn, set()))
                    if not (bot_ok and top_ok):
                        ok = False
                        break
                if ok:
                    keep.add(lbl)
            new[n] = keep
        filtration[p] = {n: sorted(v, key=lambda l: str(l)) for n, v in new.items()}
        if new == current:
            break
        current = new
    return filtration


# ---------------------------------------------------------------------------
# bar and cobar


def _vertex_labels_by_arity(P: NsOperad, suspend_by: int):
    out = {}
    for n in P.reduced_arities():
        space = P.components[n].space
        out[n] = [(l, space.degree_of(l) + suspend_by) for l in space.all_labels()]
    return out


def _tree_space(field, labels_by_arity, n_leaves, max_vertices=None):
    """GradedSpace of labeled trees with n leaves (trivial tree when n = 1)."""
    if n_leaves == 1:
        return GradedSpace(field, {0: [tree_label(LEAF)]})
    arities = tuple(sorted(labels_by_arity.keys()))
    comps = {}
    for shape in trees.shapes(n_leaves, arities):
        for code, deg in trees.label_shapes(shape, labels_by_arity):
            if max_vertices is not None and trees.vertex_count(code) > max_vertices:
                continue
            comps.setdefault(deg, []).append(tree_label(code))
    return GradedSpace(field, comps, sort=True)


def _tree_word_degrees(code, degree_of):
    return [degree_of(l) for l in trees.vertex_labels(code)]


def operadic_bar(P: NsOperad, K=None) -> NsCooperad:
    """Cooperad of planar trees on suspended operations, differential from
    the internal one plus single-edge contractions, decompositions by cuts."""
    K = K or P.arity_bound
    field = P.field
    lba = _vertex_labels_by_arity(P, 1)
    deg_of = {}
    for n, pairs in lba.items():
        for l, d in pairs:
            deg_of[l] = d
    arity_of = {}
    for n, pairs in lba.items():
        for l, _ in pairs:
            arity_of[l] = n

    components = {1: _counit_tree_complex(field)}
    for n in range(2, K + 1):
        space = _tree_space(field, lba, n)

        def diff_rule(label, degree, _n=n, _space=space):
            code = label[1]
            word = trees.vertex_labels(code)
            degs = [deg_of[l] for l in word]
            addrs = trees.vertex_addresses(code)
            pos_of = {a: i for i, a in enumerate(addrs)}
            # internal differential on each vertex label
            for a in addrs:
                t = pos_of[a]
                prefix = sum(degs[:t])
                psign = -1 if prefix % 2 else 1
                vlab = trees.subtree_at(code, a)[0]
                m = arity_of[vlab]
                dmap = P.components[m].d
                for tl, v in dmap.apply_to_label(vlab).items():
                    coeff = field.neg(v) if psign > 0 else v  # b1 = -s d s^{-1}
                    yield coeff, tree_label(trees.replace_at(
                        code, a, tree_node(tl, trees.subtree_at(code, a)[1])
                    ))
            # contraction of each internal edge
            for paddr, cidx in trees.internal_edges(code):
                u = pos_of[paddr]
                w = pos_of[paddr + (cidx,)]
                plab = trees.subtree_at(code, paddr)[0]
                clab = trees.subtree_at(code, paddr + (cidx,))[0]
                m = arity_of[plab]
                nn = arity_of[clab]
                move = sum(degs[u + 1 : w]) * degs[w]
                prefix = sum(degs[:u])
                sign = 1
                if move % 2:
                    sign = -sign
                if prefix % 2:
                    sign = -sign
                if P.components[m].space.degree_of(plab) % 2:
                    sign = -sign  # local (-1)^{|p|} of s(p o q)
                for tl, v in P.compose(m, cidx + 1, nn, plab, clab).items():
                    coeff = field.mul(field.from_int(sign), v)
                    yield coeff, tree_label(trees.contract_edge(code, paddr, cidx, tl))

        d = map_from_rule(space, space, -1, diff_rule)
        components[n] = ChainComplex(space, d)

    # decompositions: single-edge cuts
    decomp = {}
    for total in range(2, K + 1):
        src = components[total]
        buckets = {}
        for label in src.space.all_labels():
            code = label[1]
            degs = _tree_word_degrees(code, lambda l: deg_of[l])
            addrs = trees.vertex_addresses(code)
            pos_of = {a: i for i, a in enumerate(addrs)}
            for paddr, cidx in trees.internal_edges(code):
                caddr = paddr + (cidx,)
                sub = trees.subtree_at(code, caddr)
                nn = trees.leaf_count(sub)
                bottom = trees.replace_at(code, caddr, LEAF)
                m = trees.leaf_count(bottom)
                slot = trees.leaf_offset(code, caddr) + 1
                w = pos_of[caddr]
                blocklen = trees.vertex_count(sub)
                blockdeg = sum(degs[w : w + blocklen])
                suffdeg = sum(degs[w + blocklen :])
                sign = -1 if (blockdeg % 2 and suffdeg % 2) else 1
                buckets.setdefault((m, slot, nn), []).append(
                    (label, sign, tree_label(bottom), tree_label(sub))
                )
        for (m, slot, nn), rows in buckets.items():
            tgt = tensor_space(components[m].space, components[nn].space)
            by_label = {}
            for label, sign, bl, tl in rows:
                by_label.setdefault(label, []).append((sign, tensor_label(bl, tl)))

            def cut_rule(label, degree, _by=by_label):
                for sign, out in _by.get(label, ()):
                    yield sign, out

            decomp[(m, slot, nn)] = map_from_rule(src.space, tgt, 0, cut_rule)
    return validate_cooperad(
        field, K, components, decomp, exact=P.exact, name=("B(%s)" % P.name) if P.name else "", check=False
    )


def operadic_cobar(C: NsCooperad, K=None) -> NsOperad:
    """Free operad on the desuspended reduced part, differential from the
    internal one plus single-vertex expansions along the decompositions."""
    K = K or C.arity_bound
    field = C.field
    lba = {}
    deg_of = {}
    arity_of = {}
    for n in C.reduced_arities():
        space = C.components[n].space
        lba[n] = [(l, space.degree_of(l) - 1) for l in space.all_labels()]
        for l, d in lba[n]:
            deg_of[l] = d
            arity_of[l] = n

    components = {1: _counit_tree_complex(field)}
    for n in range(2, K + 1):
        space = _tree_space(field, lba, n)

        def diff_rule(label, degree, _n=n):
            code = label[1]
            word = trees.vertex_labels(code)
            degs = [deg_of[l] for l in word]
            addrs = trees.vertex_addresses(code)
            pos_of = {a: i for i, a in enumerate(addrs)}
            for a in addrs:
                t = pos_of[a]
                prefix = sum(degs[:t])
                psign = -1 if prefix % 2 else 1
                node = trees.subtree_at(code, a)
                vlab = node[0]
                arity = arity_of[vlab]
                # internal: Dgen_1(u c) = -u(d c)
                dmap = C.components[arity].d
                for tl, v in dmap.apply_to_label(vlab).items():
                    coeff = field.neg(v) if psign > 0 else v
                    yield coeff, tree_label(
                        trees.replace_at(code, a, tree_node(tl, node[1]))
                    )
                # expansion: split the vertex along each reduced decomposition;
                # the orientation beta(u c) = (-1)^{|cb|} (u cb) (x) (u ct) is
                # pinned by the Maurer-Cartan equation for the generator
                # inclusion into this cobar
                for (m, slot, nn, v, cb, ct) in C.reduced_decompositions(arity, vlab):
                    sign = 1
                    if C.components[m].space.degree_of(cb) % 2:
                        sign = -sign
                    if psign < 0:
                        sign = -sign
                    # the new top factor passes the subtrees left of its slot
                    predeg = sum(
                        sum(_tree_word_degrees(ch, lambda l: deg_of[l]))
                        for ch in node[1][: slot - 1]
                    )
                    ctdeg = C.components[nn].space.degree_of(ct) - 1
                    if ctdeg % 2 and predeg % 2:
                        sign = -sign
                    coeff = field.mul(field.from_int(sign), v)
                    yield coeff, tree_label(
                        trees.expand_vertex(code, a, cb, slot, ct, nn)
                    )

        d = map_from_rule(space, space, -1, diff_rule)
        components[n] = ChainComplex(space, d)

    partial = {}
    for m in range(2, K + 1):
        for nn in range(2, K + 1):
            if m + nn - 1 > K:
                continue
            A = components[m].space
            B = components[nn].space
            if A.is_zero() or B.is_zero():
                continue
            src = tensor_space(A, B)
            tgt = components[m + nn - 1].space
            for i in range(1, m + 1):

                def graft_rule(label, degree, _i=i, _A=A, _B=B):
                    from .graded import split_tensor_label

                    la, lb = split_tensor_label(label, _A, _B)
                    t1, t2 = la[1], lb[1]
                    if t2 == LEAF:
                        yield 1, la
                        return
                    q = _vertices_before_leaf(t1, _i - 1)
                    word1 = _tree_word_degrees(t1, lambda l: deg_of[l])
                    word2 = _tree_word_degrees(t2, lambda l: deg_of[l])
                    tail = sum(word1[q:])
                    block = sum(word2)
                    sign = -1 if (tail % 2 and block % 2) else 1
                    yield sign, tree_label(trees.graft(t1, _i - 1, t2))

                partial[(m, i, nn)] = map_from_rule(src, tgt, 0, graft_rule)
    return validate_operad(
        field,
        K,
        components,
        partial,
        exact=C.exact,
        name=("Omega(%s)" % C.name) if C.name else "",
        check=False,
    )


def _vertices_before_leaf(code, leaf_index):
    """Vertices strictly before the given leaf in depth-first order."""
    count = 0
    target = leaf_index

    def walk(node):
        nonlocal count, target
        if node == LEAF:
            if target == 0:
                return True
            target -= 1
            return False
        count += 1
        for c in node[1]:
            if walk(c):
                return True
        return False

    if not walk(code):
        raise IndexError("leaf index out of range")
    return count


# ---------------------------------------------------------------------------
# linear duality


def _untangle(A: GradedSpace, B: GradedSpace) -> GradedMap:
    """dual(A (x) B) -> dual(A) (x) dual(B); (a (x) b)* = (-1)^{|a||b|} a* (x) b*."""
    src = dual_space(tensor_space(A, B))
    tgt = tensor_space(dual_space(A), dual_space(B))

    def rule(label, degree):
        from .graded import split_tensor_label

        a, b = split_tensor_label(label[1], A, B)
        sign = koszul_sign(A.degree_of(a), B.degree_of(b))
        yield sign, tensor_label(dual_label(a), dual_label(b))

    return map_from_rule(src, tgt, 0, rule)


def _tangle(A: GradedSpace, B: GradedSpace) -> GradedMap:
    """dual(A) (x) dual(B) -> dual(A (x) B), inverse of _untangle."""
    src = tensor_space(dual_space(A), dual_space(B))
    tgt = dual_space(tensor_space(A, B))

    def rule(label, degree):
        from .graded import split_tensor_label

        da, db = split_tensor_label(label, dual_space(A), dual_space(B))
        a, b = da[1], db[1]
        sign = koszul_sign(A.degree_of(a), B.degree_of(b))
        yield sign, dual_label(tensor_label(a, b))

    return map_from_rule(src, tgt, 0, rule)


def dualize_operad(P: NsOperad) -> NsCooperad:
    """Componentwise linear dual; decompositions are dual compositions."""
    from .complexes import dual_complex

    components = {n: dual_complex(P.components[n]) for n in P.arities()}
    decomp = {}
    for (m, i, n), gamma in P.partial.items():
        dual_gamma = dual_map(gamma)  # dual(P(m+n-1)) -> dual(P(m) (x) P(n))
        unt = _untangle(P.components[m].space, P.components[n].space)
        decomp[(m, i, n)] = unt.compose(dual_gamma)
    return validate_cooperad(
        P.field,
        P.arity_bound,
        components,
        decomp,
        exact=P.exact,
        name=("%s*" % P.name) if P.name else "",
        check=False,
    )


def dualize_cooperad(C: NsCooperad) -> NsOperad:
    from .complexes import dual_complex

    components = {n: dual_complex(C.components[n]) for n in C.arities()}
    partial = {}
    for (m, i, n), delta in C.decomp.items():
        dual_delta = dual_map(delta)  # dual(C(m) (x) C(n)) -> dual(C(m+n-1))
        tng = _tangle(C.components[m].space, C.components[n].space)
        partial[(m, i, n)] = dual_delta.compose(tng)
    return validate_operad(
        C.field,
        C.arity_bound,
        components,
        partial,
        exact=C.exact,
        name=("%s*" % C.name) if C.name else "",
        check=False,
    )


# ---------------------------------------------------------------------------
# twisting morphisms


@dataclass
class TwistingMorphism:
    source: NsCooperad
    target: NsOperad
    maps: dict  # arity -> GradedMap C(n) -> P(n), shift -1
    name: str = ""

    def apply(self, arity, label):
        amap = self.maps.get(arity)
        if amap is None:
            return {}
        return amap.apply_to_label(label)


def twisting_check(alpha: TwistingMorphism):
    """Check alpha . d_C - d_P . alpha + alpha * alpha = 0 arity by arity.

    Returns {"ok": bool, "witness": ...}; the star product runs through the
    reduced decompositions of the source and the partial compositions of the
    target.
    """
    C, P = alpha.source, alpha.target
    f = C.field
    bound = min(C.arity_bound, P.arity_bound)
    for arity in range(2, bound + 1):
        if arity not in C.components:
            continue
        space = C.components[arity].space
        for lbl in space.all_labels():
            acc = {}

            def add(vec, sign=1):
                for k, v in vec.items():
                    c = f.neg(v) if sign < 0 else v
                    s = f.add(acc.get(k, f.zero()), c)
                    if s:
                        acc[k] = s
                    else:
                        acc.pop(k, None)

            # alpha(d_C x)
            for tl, v in C.components[arity].d.apply_to_label(lbl).items():
                for ol, w in alpha.apply(arity, tl).items():
                    add({ol: f.mul(v, w)})
            # - d_P(alpha x)
            for tl, v in alpha.apply(arity, lbl).items():
                for ol, w in P.components[arity].d.apply_to_label(tl).items():
                    add({ol: f.mul(v, w)}, -1)
            # + (alpha * alpha)(x) = sum (-1)^{|cb|} alpha(cb) o_i alpha(ct)
            for (m, i, n, v, cb, ct) in C.reduced_decompositions(arity, lbl):
                sign = -1 if C.components[m].space.degree_of(cb) % 2 else 1
                for pb, w1 in alpha.apply(m, cb).items():
                    for pt, w2 in alpha.apply(n, ct).items():
                        coeff = f.mul(f.mul(v, w1), w2)
                        for ol, w3 in P.compose(m, i, n, pb, pt).items():
                            add({ol: f.mul(coeff, w3)}, sign)
            if acc:
                return {"ok": False, "witness": {"arity": arity, "label": lbl,
                                                 "residual": sorted(str(k) for k in acc)}}
    return {"ok": True, "witness": None}


def universal_pi(P: NsOperad, bar: NsCooperad | None = None) -> TwistingMorphism:
    """Project the bar construction to its single-vertex trees, desuspended."""
    barP = bar if bar is not None else operadic_bar(P)
    maps = {}
    for n in P.reduced_arities():
        src = barP.components[n].space
        tgt = P.components[n].space

        def rule(label, degree, _n=n):
            code = label[1]
            if code != LEAF and trees.vertex_count(code) == 1:
                yield 1, code[0]

        maps[n] = map_from_rule(src, tgt, -1, rule)
    return TwistingMorphism(barP, P, maps, name="pi")


def universal_iota(C: NsCooperad, cobar: NsOperad | None = None) -> TwistingMorphism:
    """Include the cooperad as single-vertex trees of its cobar construction."""
    omegaC = cobar if cobar is not None else operadic_cobar(C)
    maps = {}
    for n in C.reduced_arities():
        src = C.components[n].space
        tgt = omegaC.components[n].space

        def rule(label, degree, _n=n):
            yield 1, tree_label(tree_node(label, (LEAF,) * _n))

        maps[n] = map_from_rule(src, tgt, -1, rule)
    return TwistingMorphism(C, omegaC, maps, name="iota")


# ---------------------------------------------------------------------------
# Koszul complexes and the Koszulness test


def _kz_label(p_label, tree_labels):
    return tagged("kz", tensor_label(p_label, *tree_labels))


def koszul_complex(P: NsOperad, d: int, bar: NsCooperad | None = None):
    """Two-layer complex: operations of arity k at the root, k bar trees on
    top with leaf counts summing to d; twisted differential moves single
    bottom vertices of the trees into the root.  Returns (complex, weight)
    where weight[label] is the root arity (the filtration degree)."""
    barP = bar if bar is not None else operadic_bar(P)
    field = P.field
    bar_deg = {}
    for n in barP.arities():
        sp = barP.components[n].space
        for l in sp.all_labels():
            bar_deg[l] = sp.degree_of(l)
    p_deg = {}
    p_arity = {}
    for n in P.arities():
        sp = P.components[n].space
        for l in sp.all_labels():
            p_deg[l] = sp.degree_of(l)
            p_arity[l] = n

    comps = {}
    weight = {}

    def tuples(total, k):
        if k == 1:
            yield (total,)
            return
        for first in range(1, total - k + 2):
            for rest in tuples(total - first, k - 1):
                yield (first,) + rest

    for k in range(1, d + 1):
        if k not in P.components:
            continue
        for plabel in P.components[k].space.all_labels():
            for parts in tuples(d, k):
                if any(i not in barP.components for i in parts):
                    continue
                choices = [list(barP.components[i].space.all_labels()) for i in parts]

                def emit(idx, chosen, deg):
                    if idx == len(choices):
                        lab = _kz_label(plabel, tuple(chosen))
                        comps.setdefault(deg, []).append(lab)
                        weight[lab] = k
                        return
                    for t in choices[idx]:
                        emit(idx + 1, chosen + [t], deg + bar_deg[t])

                emit(0, [], p_deg[plabel])

    space = GradedSpace(field, comps, sort=True)

    def unpack(label):
        inner = label[2]
        parts = inner[1] if inner[0] == "tensor" else (inner,)
        return parts[0], parts[1:]

    def diff_rule(label, degree):
        plabel, tlabels = unpack(label)
        k = p_arity[plabel]
        tdegs = [bar_deg[t] for t in tlabels]
        # internal differential of the root operation
        for tl, v in P.components[k].d.apply_to_label(plabel).items():
            yield v, _kz_label(tl, tlabels)
        proot = p_deg[plabel]
        for j, t in enumerate(tlabels):
            prefix = proot + sum(tdegs[:j])
            psign = -1 if prefix % 2 else 1
            arity_j = trees.leaf_count(t[1])
            # bar-internal differential of the j-th tree
            for tl, v in barP.components[arity_j].d.apply_to_label(t).items():
                coeff = v if psign > 0 else field.neg(v)
                yield coeff, _kz_label(plabel, tlabels[:j] + (tl,) + tlabels[j + 1 :])
            # twist: absorb the root vertex of the j-th tree into the root;
            # carries the same global -1 as the derivation convention
            code = t[1]
            if code == LEAF:
                continue
            qlabel = code[0]
            m = len(code[1])
            qdeg = p_deg[qlabel]
            sign = -1
            if psign < 0:
                sign = -sign  # desuspension applied at the tree's first factor
            if qdeg % 2 and sum(tdegs[:j]) % 2:
                sign = -sign  # q travels left to the root operation
            for tl, v in P.compose(k, j + 1, m, plabel, qlabel).items():
                coeff = field.mul(field.from_int(sign), v)
                subtrees = tuple(
                    tree_label(ch) for ch in code[1]
                )
                yield coeff, _kz_label(tl, tlabels[:j] + subtrees + tlabels[j + 1 :])

    dmap = map_from_rule(space, space, -1, diff_rule)
    return ChainComplex(space, dmap), weight


def koszul_filtration_subcomplex(P: NsOperad, d: int, p: int, bar=None):
    """F^p K(d): the part of root arity >= p.  The twisted differential only
    raises the root arity, so this is a subcomplex and the filtration is
    descending."""
    cx, weight = koszul_complex(P, d, bar=bar)
    labels = {
        deg: [l for l in cx.space.labels(deg) if weight[l] >= p]
        for deg in cx.space.degrees()
    }
    space = GradedSpace(cx.field, labels)

    def rule(label, degree):
        for tl, v in cx.d.apply_to_label(label).items():
            if weight[tl] < p:
                raise AssertionError("twisted differential lowered the root arity")
            yield v, tl

    return ChainComplex(space, map_from_rule(space, space, -1, rule))


def koszul_filtration_piece(P: NsOperad, d: int, p: int, bar=None):
    """Gr_F^p K(d): the root-arity-p part with the arity-preserving part of
    the differential."""
    cx, weight = koszul_complex(P, d, bar=bar)
    labels = {deg: [l for l in cx.space.labels(deg) if weight[l] == p] for deg in cx.space.degrees()}
    space = GradedSpace(cx.field, labels)

    def rule(label, degree):
        for tl, v in cx.d.apply_to_label(label).items():
            if weight[tl] == p:
                yield v, tl

    return ChainComplex(space, map_from_rule(space, space, -1, rule))


def graded_piece_report(P: NsOperad, d: int, p: int, bar=None) -> HomologyReport:
    return homology(koszul_filtration_piece(P, d, p, bar=bar))


def koszulness_check(P: NsOperad, d_max: int, bar=None):
    """H(P(n)) concentrated in degree 0 and H(B P(n)) in degree n - 1."""
    barP = bar if bar is not None else operadic_bar(P, min(d_max, P.arity_bound))
    per_arity = {}
    verdict = True
    for n in range(2, min(d_max, P.arity_bound) + 1):
        hp = homology(P.components[n])
        hb = homology(barP.components[n])
        conc_p = hp.concentrated_in()
        conc_b = hb.concentrated_in()
        ok_p = conc_p in ([], [0])
        ok_b = conc_b in ([], [n - 1])
        per_arity[n] = {
            "operad_homology": hp.betti,
            "bar_homology": hb.betti,
            "bar_dims": barP.components[n].dims(),
            "operad_concentrated_deg0": ok_p,
            "operad_empty": conc_p == [],
            "bar_concentrated": ok_b,
            "bar_empty": conc_b == [],
        }
        verdict = verdict and ok_p and ok_b
    return {"koszul": verdict, "per_arity": per_arity}


# ---------------------------------------------------------------------------
# truncation and built-in examples


def truncate_operad(P: NsOperad, k: int) -> NsOperad:
    if k < 1:
        raise ValueError("truncation arity must be >= 1")
    comps = {n: cx for n, cx in P.components.items() if n <= k}
    partial = {key: g for key, g in P.partial.items() if key[0] + key[2] - 1 <= k}
    return validate_operad(
        P.field, min(k, P.arity_bound), comps, partial, exact=True,
        name=("t%d(%s)" % (k, P.name)) if P.name else "", check=False,
    )


def truncate_cooperad(C: NsCooperad, k: int) -> NsCooperad:
    if k < 1:
        raise ValueError("truncation arity must be >= 1")
    comps = {n: cx for n, cx in C.components.items() if n <= k}
    decomp = {key: g for key, g in C.decomp.items() if key[0] + key[2] - 1 <= k}
    return validate_cooperad(
        C.field, min(k, C.arity_bound), comps, decomp, exact=True,
        name=("t%d(%s)" % (k, C.name)) if C.name else "", check=False,
    )


def ass_operad(field, arity_bound=6) -> NsOperad:
    """One operation per arity in degree 0; compositions merge arities."""
    components = {1: _unit_complex(field)}
    labels = {n: atom("m%d" % n) for n in range(2, arity_bound + 1)}
    for n in range(2, arity_bound + 1):
        sp = GradedSpace(field, {0: [labels[n]]})
        components[n] = ChainComplex(sp, zero_map(sp, sp, -1))
    partial = {}
    for m in range(2, arity_bound + 1):
        for n in range(2, arity_bound + 1):
            if m + n - 1 > arity_bound:
                continue
            src = tensor_space(components[m].space, components[n].space)
            tgt = components[m + n - 1].space
            for i in range(1, m + 1):
                partial[(m, i, n)] = map_from_rule(
                    src, tgt, 0, lambda l, deg, _o=labels[m + n - 1]: [(1, _o)]
                )
    return validate_operad(field, arity_bound, components, partial, exact=False, name="ass")


def c0_cooperad(field, arity_bound=6) -> NsCooperad:
    """One cogenerator per arity in degree 0, all reduced decompositions zero."""
    components = {1: _unit_complex(field)}
    for n in range(2, arity_bound + 1):
        sp = GradedSpace(field, {0: [atom("c%d" % n)]})
        components[n] = ChainComplex(sp, zero_map(sp, sp, -1))
    return validate_cooperad(field, arity_bound, components, {}, exact=False, name="c0")
