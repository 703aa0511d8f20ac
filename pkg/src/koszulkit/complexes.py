"""Chain complexes with degree -1 differentials, homology and cones.

Everything is validated at construction time: d.d = 0 holds exactly or the
constructor raises with the offending degree and matrix entry.  Homology
representatives are deterministic (pivot structure of the rref, lexicographic
tie-breaks on the basis order).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .graded import (
    GradedMap,
    GradedSpace,
    dual_map,
    identity_map,
    koszul_sign,
    map_from_rule,
    split_tensor_label,
    tensor_space,
    zero_map,
)
from .labels import tagged, tensor as tensor_label


class NotSquareZero(Exception):
    def __init__(self, degree, entry):
        self.degree = degree
        self.entry = entry
        super().__init__("d.d != 0 at degree %d, entry %r" % (degree, entry))


class NotChainMap(Exception):
    pass


class ChainComplex:
    """A graded space with a validated square-zero degree -1 differential."""

    __slots__ = ("space", "d")

    def __init__(self, space: GradedSpace, d: GradedMap):
        if d.shift != -1:
            raise ValueError("differential must have shift -1, got %d" % d.shift)
        if d.source != space or d.target != space:
            raise ValueError("differential endpoints differ from the space")
        self.space = space
        self.d = d
        dd = d.compose(d)
        for deg, block in dd.blocks.items():
            if not block.is_zero():
                (r, c), v = next(iter(block.entries.items()))
                raise NotSquareZero(deg, (r, c, space.field.format(v)))

    @property
    def field(self):
        return self.space.field

    def dims(self):
        return {deg: self.space.dim(deg) for deg in self.space.degrees()}

    def restrict_degrees(self, lo, hi):
        """Brutal truncation to degrees [lo, hi] (a subquotient complex)."""
        sub = self.space.restrict_degrees(lo, hi)
        blocks = {
            d: b for d, b in self.d.blocks.items() if lo <= d <= hi and lo <= d - 1 <= hi
        }
        return ChainComplex(sub, GradedMap(sub, sub, -1, blocks))

    def __eq__(self, other):
        return (
            isinstance(other, ChainComplex)
            and self.space == other.space
            and self.d == other.d
        )

    def __repr__(self):
        return "ChainComplex(%r)" % (self.dims(),)


def validate_complex(space: GradedSpace, d: GradedMap) -> ChainComplex:
    return ChainComplex(space, d)


def zero_complex(field) -> ChainComplex:
    space = GradedSpace(field, {})
    return ChainComplex(space, zero_map(space, space, -1))


class ChainMap:
    """Shift-0 map between complexes commuting with the differentials."""

    __slots__ = ("source", "target", "f")

    def __init__(self, source: ChainComplex, target: ChainComplex, f: GradedMap):
        if f.shift != 0:
            raise ValueError("chain maps have shift 0")
        if f.source != source.space or f.target != target.space:
            raise ValueError("map endpoints differ from the complexes")
        lhs = target.d.compose(f)
        rhs = f.compose(source.d)
        if lhs != rhs:
            diff = lhs.add(rhs.neg())
            deg = sorted(diff.blocks.keys())[0]
            raise NotChainMap("fails to commute with d at degree %d" % deg)
        self.source = source
        self.target = target
        self.f = f


@dataclass
class HomologyReport:
    """Betti numbers, chosen cycle representatives and boundary ranks."""

    degree_range: tuple
    betti: dict
    boundary_rank: dict
    cycle_reps: dict = dc_field(default_factory=dict)

    def betti_vector(self):
        lo, hi = self.degree_range
        return [self.betti.get(d, 0) for d in range(lo, hi + 1)]

    def concentrated_in(self):
        """The degrees carrying nonzero homology within the range."""
        return sorted(d for d, b in self.betti.items() if b)

    def is_acyclic(self):
        return all(b == 0 for b in self.betti.values())


def homology(C: ChainComplex, degree_range=None) -> HomologyReport:
    space = C.space
    degs = space.degrees()
    if degree_range is None:
        if not degs:
            return HomologyReport((0, -1), {}, {})
        lo, hi = min(degs), max(degs)
    else:
        lo, hi = degree_range
        if degs:
            lo = max(lo, min(degs))
            hi = min(hi, max(degs))
        else:
            return HomologyReport((lo, hi), {d: 0 for d in range(lo, hi + 1)}, {})
    betti = {}
    boundary_rank = {}
    reps = {}
    f = space.field
    for d in range(lo, hi + 1):
        n = space.dim(d)
        if n == 0:
            betti[d] = 0
            boundary_rank[d] = 0
            continue
        block_out = C.d.block(d)
        block_in = C.d.block(d + 1)
        kernel = block_out.kernel_basis()  # n x z
        brank = block_in.rank()
        boundary_rank[d] = brank
        betti[d] = kernel.cols - brank
        if betti[d]:
            # representatives: kernel columns adding new pivots over the boundaries
            stacked = block_in.hstack(kernel)
            _, pivots, _ = stacked.rref()
            labels = space.labels(d)
            chosen = []
            for p in pivots:
                if p >= block_in.cols:
                    col = kernel.column(p - block_in.cols)
                    chosen.append({labels[r]: v for r, v in sorted(col.items())})
            reps[d] = chosen
    return HomologyReport((lo, hi), betti, boundary_rank, reps)


def mapping_cone(fmap: ChainMap) -> ChainComplex:
    """cone(f)_n = target_n + source_{n-1}, d = [[d_B, f], [0, -d_A]]."""
    A = fmap.source
    B = fmap.target
    fld = B.field
    comps = {}
    for d in B.space.degrees():
        comps.setdefault(d, []).extend(tagged("cb", l) for l in B.space.labels(d))
    for d in A.space.degrees():
        comps.setdefault(d + 1, []).extend(tagged("ca", l) for l in A.space.labels(d))
    space = GradedSpace(fld, comps)

    def rule(label, degree):
        part, inner = label[1], label[2]
        if part == "cb":
            for tl, v in B.d.apply_to_label(inner).items():
                yield v, tagged("cb", tl)
        else:
            for tl, v in A.d.apply_to_label(inner).items():
                yield fld.neg(v), tagged("ca", tl)
            for tl, v in fmap.f.apply_to_label(inner).items():
                yield v, tagged("cb", tl)

    d = map_from_rule(space, space, -1, rule)
    return ChainComplex(space, d)


@dataclass
class QuasiIsoVerdict:
    verdict: str  # "yes" | "no" | "window_insufficient"
    witness_degree: int | None = None
    checked_range: tuple | None = None
    window: tuple | None = None

    def __bool__(self):
        return self.verdict == "yes"


def is_quasi_iso(fmap: ChainMap, degree_range, window=None) -> QuasiIsoVerdict:
    """Cone-acyclicity check over degree_range, clipped to a validity window.

    ``window`` is an optional (lo, hi) of degrees where truncated models are
    known exact; ranges poking outside come back window_insufficient.
    """
    lo, hi = degree_range
    if window is not None:
        wlo, whi = window
        if lo < wlo or hi > whi:
            return QuasiIsoVerdict("window_insufficient", None, (lo, hi), window)
    cone = mapping_cone(fmap)
    rep = homology(cone, (lo, hi))
    for d in sorted(rep.betti):
        if rep.betti[d]:
            return QuasiIsoVerdict("no", d, (lo, hi), window)
    return QuasiIsoVerdict("yes", None, (lo, hi), window)


def dual_complex(C: ChainComplex) -> ChainComplex:
    """Degrees negated; d* carries the module sign convention, so d*.d* = 0."""
    dspace = None
    dm = dual_map(C.d)
    dspace = dm.source
    return ChainComplex(dspace, dm)


def tensor_complex(A: ChainComplex, B: ChainComplex) -> ChainComplex:
    """d = d_A (x) id + id (x) d_B with Koszul signs."""
    space = tensor_space(A.space, B.space)
    fld = space.field

    def rule(label, degree):
        a, b = split_tensor_label(label, A.space, B.space)
        da = A.space.degree_of(a)
        for tl, v in A.d.apply_to_label(a).items():
            yield v, tensor_label(tl, b)
        sign = koszul_sign(1, da)  # move d past a
        for tl, v in B.d.apply_to_label(b).items():
            yield (fld.neg(v) if sign < 0 else v), tensor_label(a, tl)

    return ChainComplex(space, map_from_rule(space, space, -1, rule))


def identity_chain_map(C: ChainComplex) -> ChainMap:
    return ChainMap(C, C, identity_map(C.space))
