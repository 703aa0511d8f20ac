"""Weight truncation bookkeeping: bounds, kinds and validity windows.

Truncated models of genuinely infinite objects carry, besides the complex,
the weight of every basis label, the bound, and the window of degrees where
the truncation provably computes the untruncated homology.  Windows come
from a per-unit-weight degree rate mu: every weight-w basis element of the
full object has degree >= mu * w, so all excluded elements (weight > W)
live in degrees >= mu * (W + 1).  For a subobject truncation T of F the
long exact sequence of T -> F -> F/T then pins homology in degrees n with
n + 1 < mu (W + 1); for a quotient truncation the excluded part is the
subcomplex and the bound is n < mu (W + 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .complexes import ChainComplex

SUBOBJECT = "subobject"
QUOTIENT_TOWER = "quotient_tower"


def window_max_degree(rate, weight_bound: int, kind: str):
    """Largest degree where truncation at the bound is exact, or None."""
    if rate is None or rate <= 0:
        return None
    cut = Fraction(rate) * (weight_bound + 1)
    if kind == SUBOBJECT:
        # need n + 1 < cut
        limit = cut - 1
    else:
        # need n < cut
        limit = cut
    n = int(limit) if limit != int(limit) else int(limit) - 1
    return n


@dataclass
class WeightTruncatedObject:
    """A complex plus the truncation data that makes it an honest model."""

    complex: ChainComplex
    weight: dict  # basis label -> positive integer
    weight_bound: int
    truncation_kind: str
    rate: object = None  # Fraction lower bound on degree/weight, or None
    window_max: int | None = None
    tower_levels: dict = dc_field(default_factory=dict)  # bound -> ChainComplex
    tower_projections: dict = dc_field(default_factory=dict)  # bound -> ChainMap

    def __post_init__(self):
        if self.window_max is None:
            self.window_max = window_max_degree(self.rate, self.weight_bound, self.truncation_kind)

    def window(self):
        """(lo, hi) degrees where the model is exact, or None for no window."""
        if self.window_max is None:
            return None
        degs = self.complex.space.degrees()
        lo = min(degs) - 1 if degs else 0
        return (min(lo, self.window_max), self.window_max)

    def window_contains(self, degree_range) -> bool:
        w = self.window()
        if w is None:
            return False
        lo, hi = degree_range
        return w[0] <= lo and hi <= w[1]

    def weight_never_increased_by(self, differential) -> bool:
        """Matrix-structural check that d respects the weight grading."""
        for slabel, tlabel, _ in differential.entries_with_labels():
            if self.weight.get(tlabel, 0) > self.weight.get(slabel, 0):
                return False
        return True
