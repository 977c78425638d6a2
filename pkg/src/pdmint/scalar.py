"""Exact Gaussian-rational scalars."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"cannot make an exact rational from {v!r}")


class Scalar:
    """A number ``re + i*im`` with both parts exact rationals.

    Instances are immutable.  Arithmetic never rounds.
    """

    __slots__ = ("re", "im", "_hash")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)
        self._hash = None

    @classmethod
    def coerce(cls, v) -> "Scalar":
        if isinstance(v, Scalar):
            return v
        if isinstance(v, complex):
            raise TypeError("floating complex values are not exact")
        return cls(v)

    # predicates
    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_one(self) -> bool:
        return self.re == 1 and not self.im

    def is_real(self) -> bool:
        return not self.im

    def is_integer(self) -> bool:
        return not self.im and self.re.denominator == 1

    # arithmetic
    def __add__(self, other):
        other = Scalar.coerce(other)
        return Scalar(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = Scalar.coerce(other)
        return Scalar(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __neg__(self):
        return Scalar(-self.re, -self.im)

    def __mul__(self, other):
        other = Scalar.coerce(other)
        if not self.im and not other.im:
            return Scalar(self.re * other.re)
        return Scalar(self.re * other.re - self.im * other.im,
                      self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conjugate(self) -> "Scalar":
        return Scalar(self.re, -self.im)

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("Scalar division by zero")
        if not self.im:
            return Scalar(1 / self.re)
        n = self.norm2()
        return Scalar(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * Scalar.coerce(other).inverse()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers of a Scalar are exact")
        if n < 0:
            return self.inverse() ** (-n)
        result = Scalar(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # comparisons / hashing
    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.re, self.im))
        return self._hash

    def sort_key(self):
        return (self.re, self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"Scalar({self})"

    def __str__(self):
        def q(f: Fraction) -> str:
            return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
        if not self.im:
            return q(self.re)
        if not self.re:
            return "i" if self.im == 1 else ("-i" if self.im == -1 else f"{q(self.im)}*i")
        sign = "+" if self.im > 0 else "-"
        mag = abs(self.im)
        tail = "i" if mag == 1 else f"{q(mag)}*i"
        return f"{q(self.re)} {sign} {tail}"

    def __reduce__(self):
        return (Scalar, (self.re, self.im))


ZERO = Scalar(0)
ONE = Scalar(1)
I = Scalar(0, 1)
