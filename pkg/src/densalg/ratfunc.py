"""Reduced rational functions over QQ in the even coordinates of a chart.

Numerators and denominators are sparse polynomials from ``sympy.polys.rings``.
The canonical form has ``gcd(num, den) == 1`` and a denominator with leading
coefficient 1, so equality is structural.  Polynomials (denominator 1) skip
the gcd entirely, which is the common case.
"""

from __future__ import annotations

from fractions import Fraction

from sympy import QQ
from sympy.polys.rings import PolyRing

_RINGS: dict[tuple[str, ...], PolyRing] = {}


def poly_ring(names):
    """Shared polynomial ring over QQ on the given generator names."""
    key = tuple(names)
    if key not in _RINGS:
        _RINGS[key] = PolyRing(list(key), QQ) if key else PolyRing([], QQ)
    return _RINGS[key]


def to_qq(value):
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    return QQ.convert(value)


class RationalFunction:
    __slots__ = ("ring", "num", "den")

    def __init__(self, ring, num, den=None, _reduced=False):
        self.ring = ring
        if den is None or den == ring.one:
            self.num = num
            self.den = ring.one
            return
        if not den:
            raise ZeroDivisionError("rational function with zero denominator")
        if not _reduced:
            if den.is_ground:
                num = num.quo_ground(den.LC)
                den = ring.one
            else:
                num, den = num.cancel(den)
                lc = den.LC
                if lc != 1:
                    num = num.quo_ground(lc)
                    den = den.quo_ground(lc)
        self.num = num
        self.den = den

    @classmethod
    def constant(cls, ring, value):
        return cls(ring, ring(to_qq(value)))

    @classmethod
    def generator(cls, ring, index):
        return cls(ring, ring.gens[index])

    @property
    def is_polynomial(self):
        return self.den == self.ring.one

    @property
    def is_constant(self):
        return self.is_polynomial and self.num.is_ground

    def constant_value(self):
        """The rational value of a constant function as a Fraction."""
        if not self.is_constant:
            raise ValueError("not a constant")
        c = self.num.LC if self.num else QQ(0)
        return Fraction(int(c.numerator), int(c.denominator))

    def _lift(self, other):
        if isinstance(other, RationalFunction):
            return other
        return RationalFunction.constant(self.ring, other)

    def __bool__(self):
        return bool(self.num)

    def __eq__(self, other):
        if isinstance(other, RationalFunction):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)):
            return self == self._lift(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.den))

    def __neg__(self):
        return RationalFunction(self.ring, -self.num, self.den, _reduced=True)

    def __add__(self, other):
        other = self._lift(other)
        if self.is_polynomial and other.is_polynomial:
            return RationalFunction(self.ring, self.num + other.num)
        if self.den == other.den:
            return RationalFunction(self.ring, self.num + other.num, self.den)
        return RationalFunction(
            self.ring, self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        if self.is_polynomial and other.is_polynomial:
            return RationalFunction(self.ring, self.num * other.num)
        return RationalFunction(self.ring, self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self):
        if not self.num:
            raise ZeroDivisionError("inverse of zero rational function")
        return RationalFunction(self.ring, self.den, self.num)

    def __truediv__(self, other):
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other):
        return self._lift(other) * self.inverse()

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        return RationalFunction(self.ring, self.num**n, self.den**n, _reduced=True)

    def diff(self, index):
        gen = self.ring.gens[index]
        dn = self.num.diff(gen)
        if self.is_polynomial:
            return RationalFunction(self.ring, dn)
        dd = self.den.diff(gen)
        return RationalFunction(self.ring, dn * self.den - self.num * dd, self.den**2)

    def __repr__(self):
        if self.is_polynomial:
            return f"RationalFunction({self.num})"
        return f"RationalFunction(({self.num})/({self.den}))"
