"""Exact field scalars: arbitrary-precision rationals and odd prime fields.

Every computation in the package happens over a single FieldSpec.  Rationals
are stored as ``fractions.Fraction`` (always in lowest terms with positive
denominator), prime-field elements as canonical residues in ``[0, p)``.
No floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

DEFAULT_PRIME = 32003


class FieldMismatch(Exception):
    """Two scalars from different fields met in one operation."""


class DivisionByZero(Exception):
    pass


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    """Either the rationals (characteristic 0) or F_p for an odd prime p."""

    kind: str  # "Q" or "Fp"
    characteristic: int = 0

    def __post_init__(self):
        if self.kind == "Q":
            if self.characteristic != 0:
                raise ValueError("rational field has characteristic 0")
        elif self.kind == "Fp":
            p = self.characteristic
            if p == 2 or p >= 2**31 or not _is_prime(p):
                raise ValueError("prime field needs an odd prime p < 2^31, got %r" % p)
        else:
            raise ValueError("unknown field kind %r" % (self.kind,))

    # -- raw value helpers ------------------------------------------------
    # Internally matrices and structure constants store raw values
    # (Fraction for Q, int residue for Fp); FieldSpec provides the ops.

    def zero(self):
        return Fraction(0) if self.kind == "Q" else 0

    def one(self):
        return Fraction(1) if self.kind == "Q" else 1

    def from_int(self, n: int):
        return Fraction(n) if self.kind == "Q" else n % self.characteristic

    def coerce(self, value):
        """Normalize an int/Fraction/str into a raw field value."""
        if isinstance(value, str):
            if "/" in value:
                num, den = value.split("/", 1)
                value = Fraction(int(num), int(den))
            else:
                value = int(value)
        if self.kind == "Q":
            return Fraction(value)
        if isinstance(value, Fraction):
            if value.denominator % self.characteristic == 0:
                raise DivisionByZero("denominator divisible by p")
            return (value.numerator * pow(value.denominator, -1, self.characteristic)) % self.characteristic
        return int(value) % self.characteristic

    def add(self, a, b):
        return a + b if self.kind == "Q" else (a + b) % self.characteristic

    def sub(self, a, b):
        return a - b if self.kind == "Q" else (a - b) % self.characteristic

    def neg(self, a):
        return -a if self.kind == "Q" else (-a) % self.characteristic

    def mul(self, a, b):
        return a * b if self.kind == "Q" else (a * b) % self.characteristic

    def inv(self, a):
        if not a:
            raise DivisionByZero("division by zero")
        if self.kind == "Q":
            return 1 / Fraction(a)
        return pow(a, -1, self.characteristic)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def format(self, a) -> str:
        """Canonical string: "num/den" over Q, residue integer over Fp."""
        if self.kind == "Q":
            f = Fraction(a)
            return "%d/%d" % (f.numerator, f.denominator)
        return str(int(a))


QQ = FieldSpec("Q", 0)


def prime_field(p: int = DEFAULT_PRIME) -> FieldSpec:
    return FieldSpec("Fp", p)


@dataclass(frozen=True)
class Scalar:
    """A field element tagged with its field; canonical form enforced."""

    field: FieldSpec
    value: object

    def __post_init__(self):
        object.__setattr__(self, "value", self.field.coerce(self.value))

    def _check(self, other: "Scalar"):
        if self.field != other.field:
            raise FieldMismatch("%r vs %r" % (self.field, other.field))

    def __add__(self, other):
        self._check(other)
        return Scalar(self.field, self.field.add(self.value, other.value))

    def __sub__(self, other):
        self._check(other)
        return Scalar(self.field, self.field.sub(self.value, other.value))

    def __mul__(self, other):
        self._check(other)
        return Scalar(self.field, self.field.mul(self.value, other.value))

    def __truediv__(self, other):
        self._check(other)
        return Scalar(self.field, self.field.div(self.value, other.value))

    def __neg__(self):
        return Scalar(self.field, self.field.neg(self.value))

    def __bool__(self):
        return bool(self.value)

    def __str__(self):
        return self.field.format(self.value)


def scalar_arith(a: Scalar, b: Scalar, op: str) -> Scalar:
    """add | sub | mul | div on two scalars of the same field."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("unknown op %r" % op)
