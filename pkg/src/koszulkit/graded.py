"""Graded vector spaces and degree-shifting maps with the Koszul sign rule.

Sign conventions, fixed once and cited by every construction downstream:

  * Koszul rule: (f (x) g)(x (x) y) = (-1)^{|g||x|} f(x) (x) g(y).
  * Dual maps: f*(phi) = (-1)^{|f||phi|} phi . f.
  * Evaluation into the double dual: ev(v)(phi) = (-1)^{|v||phi|} phi(v).
  * Suspension factors are ordinary tensor factors; signs for moving a
    (de)suspension past other factors follow from the Koszul rule applied
    to the depth-first word of factors.

Vectors are plain dicts {label: raw field value}.
"""

from __future__ import annotations

from .fields import FieldMismatch, FieldSpec
from .labels import dual as dual_label
from .labels import sort_key, susp as susp_label, tensor as tensor_label
from .sparse import DimensionMismatch, SparseMatrix


def koszul_sign(left_degree: int, right_degree: int) -> int:
    """(-1)^{left * right}, the sign for moving odd things past each other."""
    return -1 if (left_degree % 2) and (right_degree % 2) else 1


class GradedSpace:
    """Finitely supported collection of based components, one per degree."""

    __slots__ = ("field", "components", "_index", "_degree")

    def __init__(self, field: FieldSpec, components, sort=False):
        self.field = field
        comps = {}
        for deg, labels in components.items():
            labels = list(labels)
            if sort:
                labels.sort(key=sort_key)
            if labels:
                comps[int(deg)] = tuple(labels)
        self.components = dict(sorted(comps.items()))
        self._index = {}
        self._degree = {}
        for deg, labels in self.components.items():
            for i, l in enumerate(labels):
                if l in self._degree:
                    raise ValueError("duplicate basis label %r" % (l,))
                self._degree[l] = deg
                self._index[l] = i

    def degrees(self):
        return list(self.components.keys())

    def dim(self, degree: int) -> int:
        return len(self.components.get(degree, ()))

    def total_dim(self) -> int:
        return sum(len(v) for v in self.components.values())

    def labels(self, degree: int):
        return self.components.get(degree, ())

    def all_labels(self):
        for labels in self.components.values():
            yield from labels

    def degree_of(self, label) -> int:
        return self._degree[label]

    def index_of(self, label) -> int:
        return self._index[label]

    def __contains__(self, label):
        return label in self._degree

    def __eq__(self, other):
        return (
            isinstance(other, GradedSpace)
            and self.field == other.field
            and self.components == other.components
        )

    def __hash__(self):
        return hash((self.field, tuple(self.components.items())))

    def __repr__(self):
        dims = {d: len(v) for d, v in self.components.items()}
        return "GradedSpace(%r)" % (dims,)

    def is_zero(self):
        return not self.components

    def restrict_degrees(self, lo, hi):
        return GradedSpace(
            self.field, {d: v for d, v in self.components.items() if lo <= d <= hi}
        )


def zero_space(field):
    return GradedSpace(field, {})


def tensor_space(a: GradedSpace, b: GradedSpace) -> GradedSpace:
    if a.field != b.field:
        raise FieldMismatch("tensor of spaces over different fields")
    comps = {}
    for da in a.degrees():
        for db in b.degrees():
            bucket = comps.setdefault(da + db, [])
            for la in a.labels(da):
                for lb in b.labels(db):
                    bucket.append(tensor_label(la, lb))
    # canonical sort: (A (x) B) (x) C and A (x) (B (x) C) get identical bases
    return GradedSpace(a.field, comps, sort=True)


def suspend(a: GradedSpace, n: int) -> GradedSpace:
    return GradedSpace(
        a.field,
        {d + n: [susp_label(n, l) for l in labels] for d, labels in a.components.items()},
    )


def dual_space(a: GradedSpace) -> GradedSpace:
    return GradedSpace(
        a.field,
        {-d: [dual_label(l) for l in labels] for d, labels in a.components.items()},
    )


class GradedMap:
    """Degree-homogeneous linear map; blocks[d] maps source deg d to d+shift."""

    __slots__ = ("source", "target", "shift", "blocks", "_columns")

    def __init__(self, source: GradedSpace, target: GradedSpace, shift: int, blocks=None):
        if source.field != target.field:
            raise FieldMismatch("map between different fields")
        self.source = source
        self.target = target
        self.shift = int(shift)
        clean = {}
        for d, block in (blocks or {}).items():
            d = int(d)
            if block.rows != target.dim(d + self.shift) or block.cols != source.dim(d):
                raise DimensionMismatch(
                    "block at degree %d is %dx%d, expected %dx%d"
                    % (d, block.rows, block.cols, target.dim(d + self.shift), source.dim(d))
                )
            if not block.is_zero():
                clean[d] = block
        self.blocks = clean
        self._columns = None

    @property
    def field(self):
        return self.source.field

    def block(self, degree: int) -> SparseMatrix:
        b = self.blocks.get(degree)
        if b is None:
            b = SparseMatrix.zero(
                self.target.dim(degree + self.shift), self.source.dim(degree), self.field
            )
        return b

    def is_zero(self):
        return not self.blocks

    def __eq__(self, other):
        return (
            isinstance(other, GradedMap)
            and self.source == other.source
            and self.target == other.target
            and self.shift == other.shift
            and self.blocks == other.blocks
        )

    def __hash__(self):
        return hash((self.shift, tuple(sorted(self.blocks.items(), key=lambda kv: kv[0]))))

    def __repr__(self):
        return "GradedMap(shift=%d, blocks=%d)" % (self.shift, len(self.blocks))

    # -- algebra -----------------------------------------------------------

    def add(self, other: "GradedMap") -> "GradedMap":
        assert self.source == other.source and self.target == other.target
        assert self.shift == other.shift
        blocks = dict(self.blocks)
        for d, b in other.blocks.items():
            blocks[d] = blocks[d].add(b) if d in blocks else b
        return GradedMap(self.source, self.target, self.shift, blocks)

    def scale(self, scalar) -> "GradedMap":
        return GradedMap(
            self.source, self.target, self.shift, {d: b.scale(scalar) for d, b in self.blocks.items()}
        )

    def neg(self):
        return self.scale(-1)

    def compose(self, other: "GradedMap") -> "GradedMap":
        """self after other."""
        if other.target != self.source:
            raise DimensionMismatch("compose: middle spaces differ")
        blocks = {}
        for d in other.blocks:
            left = self.blocks.get(d + other.shift)
            if left is not None:
                blocks[d] = left.mul(other.blocks[d])
        return GradedMap(other.source, self.target, self.shift + other.shift, blocks)

    def _column_index(self):
        """Lazy label-to-entries view: {source label: [(target label, value)]}."""
        if self._columns is None:
            cols = {}
            for d, block in self.blocks.items():
                slabels = self.source.labels(d)
                tlabels = self.target.labels(d + self.shift)
                for (r, c), entry in block.entries.items():
                    cols.setdefault(slabels[c], []).append((tlabels[r], entry))
            self._columns = cols
        return self._columns

    def apply(self, vec: dict) -> dict:
        """Apply to {label: value}; labels must lie in the source."""
        f = self.field
        out = {}
        cols = self._column_index()
        for label, value in vec.items():
            for tl, entry in cols.get(label, ()):
                s = f.add(out.get(tl, f.zero()), f.mul(entry, value))
                if s:
                    out[tl] = s
                else:
                    out.pop(tl, None)
        return out

    def apply_to_label(self, label) -> dict:
        return self.apply({label: self.field.one()})

    def entries_with_labels(self):
        """Yield (source_label, target_label, value) over all blocks."""
        for d, block in self.blocks.items():
            slabels = self.source.labels(d)
            tlabels = self.target.labels(d + self.shift)
            for (r, c), v in block.entries.items():
                yield slabels[c], tlabels[r], v

    def transpose_entries(self):
        by_col = {}
        for d, block in self.blocks.items():
            cols = {}
            for (r, c), v in block.entries.items():
                cols.setdefault(c, {})[r] = v
            by_col[d] = cols
        return by_col


def zero_map(source, target, shift):
    return GradedMap(source, target, shift, {})


def identity_map(space):
    blocks = {
        d: SparseMatrix.identity(space.dim(d), space.field) for d in space.degrees()
    }
    return GradedMap(space, space, 0, blocks)


def map_from_rule(source, target, shift, rule):
    """Build a map from rule(label, degree) -> iterable of (coeff, target label)."""
    f = source.field
    blocks = {}
    for d in source.degrees():
        td = d + shift
        entries = {}
        for c, label in enumerate(source.labels(d)):
            for coeff, tlabel in rule(label, d):
                coeff = f.coerce(coeff)
                if not coeff:
                    continue
                r = target.index_of(tlabel)
                if target.degree_of(tlabel) != td:
                    raise ValueError(
                        "rule sent degree %d label to degree %d (shift %d)"
                        % (d, target.degree_of(tlabel), shift)
                    )
                key = (r, c)
                s = f.add(entries.get(key, f.zero()), coeff)
                if s:
                    entries[key] = s
                else:
                    entries.pop(key, None)
        if entries:
            blocks[d] = SparseMatrix(target.dim(td), source.dim(d), f, entries)
    return GradedMap(source, target, shift, blocks)


def split_tensor_label(label, left_space: GradedSpace, right_space: GradedSpace):
    """Undo the flattening of tensor(a, b) for a in left, b in right.

    Raises if the split is not unique; keep factor labelings disjoint.
    """
    parts = label[1] if label[0] == "tensor" else (label,)
    found = None
    for k in range(1, len(parts)):
        la = parts[0] if k == 1 else ("tensor", tuple(parts[:k]))
        lb = parts[k] if k == len(parts) - 1 else ("tensor", tuple(parts[k:]))
        if la in left_space and lb in right_space:
            if found is not None:
                raise ValueError("ambiguous tensor split for %r" % (label,))
            found = (la, lb)
    if found is None:
        raise ValueError("label %r does not split over the factor spaces" % (label,))
    return found


def tensor_map(f: GradedMap, g: GradedMap) -> GradedMap:
    """(f (x) g) with the Koszul sign (-1)^{|g| |x|} on x (x) y."""
    src = tensor_space(f.source, g.source)
    tgt = tensor_space(f.target, g.target)
    fld = f.field
    gshift = g.shift

    def rule(label, degree):
        a, b = split_tensor_label(label, f.source, g.source)
        da = f.source.degree_of(a)
        sign = koszul_sign(gshift, da)
        fa = f.apply_to_label(a)
        gb = g.apply_to_label(b)
        for la, va in fa.items():
            for lb, vb in gb.items():
                coeff = fld.mul(va, vb)
                if sign < 0:
                    coeff = fld.neg(coeff)
                yield coeff, tensor_label(la, lb)

    return map_from_rule(src, tgt, f.shift + g.shift, rule)


def dual_map(f: GradedMap) -> GradedMap:
    """f*: target* -> source*, f*(phi) = (-1)^{|f||phi|} phi . f."""
    dsrc = dual_space(f.target)
    dtgt = dual_space(f.source)
    fld = f.field
    shift = f.shift
    blocks = {}
    for d, block in f.blocks.items():
        # phi in (target_{d+shift})*, degree -(d+shift); lands in (source_d)*.
        phi_deg = -(d + shift)
        sign = koszul_sign(shift, phi_deg)
        t = block.transpose()
        if sign < 0:
            t = t.neg()
        if not t.is_zero():
            blocks[phi_deg] = t
    return GradedMap(dsrc, dtgt, shift, blocks)


def evaluation_map(space: GradedSpace) -> GradedMap:
    """Canonical iso onto the double dual: ev(v)(phi) = (-1)^{|v||phi|} phi(v)."""
    ddual = dual_space(dual_space(space))

    def rule(label, degree):
        sign = koszul_sign(degree, -degree)
        yield (sign, dual_label(dual_label(label)))

    return map_from_rule(space, ddual, 0, rule)


def word_sign_prefix(degrees, position) -> int:
    """Sign for moving a degree -1 operator past the first ``position`` factors."""
    s = sum(degrees[:position])
    return -1 if s % 2 else 1


def swap_sign(degrees, i, j) -> int:
    """Sign for transposing factor j leftward to sit right after position i.

    Moves factor j past factors i+1 .. j-1 (Koszul rule, one at a time).
    """
    dj = degrees[j]
    s = sum(degrees[i + 1 : j])
    return -1 if (dj % 2) and (s % 2) else 1
