"""Functions on a (super)chart: QQ(x_even) tensored with a Grassmann algebra.

Odd monomials are bitmasks in chart order; coefficients are reduced
:class:`~densalg.ratfunc.RationalFunction` values in the even coordinates.
All derivatives are left derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from functools import cached_property

from densalg import kernels
from densalg.errors import (
    ChartMismatch,
    DensalgError,
    NotInvertible,
    ParityError,
    UnknownCoordinate,
)
from densalg.ratfunc import RationalFunction, poly_ring

MAX_ODD = 8


class Parity(IntEnum):
    EVEN = 0
    ODD = 1

    def __add__(self, other):
        return Parity((int(self) + int(other)) % 2)

    __radd__ = __add__

    @classmethod
    def parse(cls, text):
        key = str(text).strip().lower()
        if key in ("even", "0"):
            return cls.EVEN
        if key in ("odd", "1"):
            return cls.ODD
        raise ValueError(f"not a parity: {text!r}")


def sign(exponent):
    """(-1)**exponent for an integer exponent."""
    return -1 if exponent % 2 else 1


@dataclass(frozen=True, eq=False)
class Chart:
    """Ordered coordinates with parities.  Order fixes every normal form."""

    coords: tuple[tuple[str, Parity], ...]
    _index: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        coords = tuple((str(n), Parity(p)) for n, p in self.coords)
        object.__setattr__(self, "coords", coords)
        names = [n for n, _ in coords]
        if len(set(names)) != len(names):
            raise DensalgError(f"duplicate coordinate names in {names}")
        if sum(1 for _, p in coords if p) > MAX_ODD:
            raise DensalgError(f"odd dimension capped at {MAX_ODD}")
        if "t" in names:
            raise DensalgError("'t' is reserved for the density weight variable")
        index = {}
        ne = no = 0
        for n, p in coords:
            if p:
                index[n] = (p, no)
                no += 1
            else:
                index[n] = (p, ne)
                ne += 1
        object.__setattr__(self, "_index", index)

    @classmethod
    def of(cls, *specs):
        """``Chart.of("x", "xi:odd")``; a bare name is even."""
        coords = []
        for spec in specs:
            if isinstance(spec, tuple):
                coords.append(spec)
            elif ":" in spec:
                n, p = spec.split(":")
                coords.append((n.strip(), Parity.parse(p)))
            else:
                coords.append((spec.strip(), Parity.EVEN))
        return cls(tuple(coords))

    @property
    def names(self):
        return [n for n, _ in self.coords]

    @cached_property
    def even_names(self):
        return [n for n, p in self.coords if not p]

    @cached_property
    def odd_names(self):
        return [n for n, p in self.coords if p]

    @property
    def n_even(self):
        return len(self.even_names)

    @property
    def n_odd(self):
        return len(self.odd_names)

    @property
    def dim(self):
        return len(self.coords)

    @cached_property
    def ring(self):
        return poly_ring(self.even_names)

    def parity(self, name):
        return self.locate(name)[0]

    def locate(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise UnknownCoordinate(f"unknown coordinate {name!r}") from None

    def position(self, name):
        """Index of ``name`` in the full chart order."""
        self.locate(name)
        return self.names.index(name)

    def __str__(self):
        return f"R^{{{self.n_even}|{self.n_odd}}}({', '.join(self.names)})"

    def __eq__(self, other):
        return self is other or (isinstance(other, Chart) and self.coords == other.coords)

    def __hash__(self):
        return hash(self.coords)


def _mask_parity(mask):
    return Parity(kernels.popcount(mask) & 1)


class GradedScalar:
    """Immutable element of QQ(x) ⊗ Λ(ξ) on a fixed chart."""

    __slots__ = ("chart", "terms", "_hash")

    def __init__(self, chart, terms=None):
        self.chart = chart
        self.terms = {m: c for m, c in (terms or {}).items() if c}
        self._hash = None

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, chart):
        return cls(chart)

    @classmethod
    def const(cls, chart, value):
        if isinstance(value, RationalFunction):
            return cls(chart, {0: value})
        return cls(chart, {0: RationalFunction.constant(chart.ring, value)})

    @classmethod
    def one(cls, chart):
        return cls.const(chart, 1)

    @classmethod
    def coord(cls, chart, name):
        par, i = chart.locate(name)
        if par:
            return cls(chart, {1 << i: RationalFunction.constant(chart.ring, 1)})
        return cls(chart, {0: RationalFunction.generator(chart.ring, i)})

    def _lift(self, other):
        if isinstance(other, GradedScalar):
            if other.chart != self.chart:
                raise ChartMismatch(f"{self.chart} vs {other.chart}")
            return other
        if isinstance(other, (int, Fraction, RationalFunction)):
            return GradedScalar.const(self.chart, other)
        return NotImplemented

    # structure ----------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    @property
    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = GradedScalar.const(self.chart, other)
        if not isinstance(other, GradedScalar):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def parity(self):
        """Parity of a homogeneous element; zero counts as even."""
        parities = {_mask_parity(m) for m in self.terms}
        if len(parities) > 1:
            raise ParityError("inhomogeneous element has no parity")
        return parities.pop() if parities else Parity.EVEN

    @property
    def is_homogeneous(self):
        return len({_mask_parity(m) for m in self.terms}) <= 1

    def parity_parts(self):
        """Split into homogeneous components ``{Parity: GradedScalar}``."""
        parts = {}
        for m, c in self.terms.items():
            parts.setdefault(_mask_parity(m), {})[m] = c
        return {p: GradedScalar(self.chart, t) for p, t in parts.items()}

    def body(self):
        ring = self.chart.ring
        return self.terms.get(0, RationalFunction(ring, ring.zero))

    @property
    def is_polynomial(self):
        return all(c.is_polynomial for c in self.terms.values())

    def constant_value(self):
        """Rational value if this is a constant, else ``None``."""
        if not self.terms:
            return Fraction(0)
        if set(self.terms) == {0} and self.terms[0].is_constant:
            return self.terms[0].constant_value()
        return None

    # arithmetic ---------------------------------------------------------

    def __neg__(self):
        return GradedScalar(self.chart, {m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return GradedScalar(self.chart, out)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return GradedScalar(self.chart, kernels.grassmann_product(self.terms, other.terms))

    def __rmul__(self, other):
        return self._lift(other) * self

    def scale(self, c):
        """Multiply by a rational number or rational function (central)."""
        if not isinstance(c, RationalFunction):
            c = RationalFunction.constant(self.chart.ring, c)
        return GradedScalar(self.chart, {m: v * c for m, v in self.terms.items()})

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        result = GradedScalar.one(self.chart)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def inverse(self):
        """Inverse via body inversion plus the finite nilpotent series."""
        b = self.body()
        if not b:
            raise NotInvertible("element with zero body is not invertible")
        binv = b.inverse()
        nil = GradedScalar(self.chart, {m: c * binv for m, c in self.terms.items() if m})
        result = GradedScalar.const(self.chart, 1)
        power = result
        for _ in range(self.chart.n_odd):
            power = power * (-nil)
            if not power:
                break
            result = result + power
        return result.scale(binv)

    def __truediv__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._lift(other) / self

    # calculus -----------------------------------------------------------

    def partial(self, name):
        """Left partial derivative with respect to coordinate ``name``."""
        par, i = self.chart.locate(name)
        if par:
            return GradedScalar(self.chart, kernels.odd_derivative(self.terms, i))
        return GradedScalar(self.chart, {m: c.diff(i) for m, c in self.terms.items()})

    def substitute(self, change):
        """Pull back along ``change``: self lives on ``change.target``."""
        if self.chart != change.target:
            raise ChartMismatch("substitute expects a scalar on the target chart")
        return change.pull(self)

    def evaluate_at(self, images, target):
        """Replace every coordinate by the matching element of ``images``.

        ``images`` maps each coordinate name of this chart to a
        GradedScalar on ``target`` of the same parity.
        """
        chart = self.chart
        even_imgs = [images[n] for n in chart.even_names]
        odd_imgs = [images[n] for n in chart.odd_names]
        cache = {}

        def eval_poly(poly):
            total = GradedScalar.zero(target)
            for expv, coeff in poly.terms():
                term = GradedScalar.const(target, Fraction(int(coeff.numerator), int(coeff.denominator)))
                for i, e in enumerate(expv):
                    if e:
                        key = (i, e)
                        if key not in cache:
                            cache[key] = even_imgs[i] ** e
                        term = term * cache[key]
                total = total + term
            return total

        result = GradedScalar.zero(target)
        for m, c in self.terms.items():
            value = eval_poly(c.num)
            if not c.is_polynomial:
                den = eval_poly(c.den)
                if not den.body():
                    raise NotInvertible("denominator body vanishes after substitution")
                value = value * den.inverse()
            mono = GradedScalar.one(target)
            for j in range(chart.n_odd):
                if m >> j & 1:
                    mono = mono * odd_imgs[j]
            result = result + mono * value
        return result

    # misc ---------------------------------------------------------------

    def degree(self):
        """Total polynomial degree counting odd generators; None if rational."""
        if not self.is_polynomial:
            return None
        best = -1
        for m, c in self.terms.items():
            for expv, _ in c.num.terms():
                best = max(best, sum(expv) + kernels.popcount(m))
        return best

    def homogeneous_part(self, k):
        """Component of total degree ``k`` (polynomial elements only)."""
        ring = self.chart.ring
        out = {}
        for m, c in self.terms.items():
            need = k - kernels.popcount(m)
            kept = ring.from_dict({e: v for e, v in c.num.terms() if sum(e) == need})
            if kept:
                out[m] = RationalFunction(ring, kept)
        return GradedScalar(self.chart, out)

    def __repr__(self):
        from densalg.expr import format_scalar

        return f"GradedScalar({format_scalar(self)})"

    def __str__(self):
        from densalg.expr import format_scalar

        return format_scalar(self)


def scalar(chart, value):
    """Coerce ints, Fractions, coordinate names or GradedScalars."""
    if isinstance(value, GradedScalar):
        return value
    if isinstance(value, str):
        from densalg.expr import parse_scalar

        return parse_scalar(value, chart)
    return GradedScalar.const(chart, value)


# super matrices -------------------------------------------------------------


def identity_matrix(chart, n):
    one = GradedScalar.one(chart)
    zero = GradedScalar.zero(chart)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def matmul(a, b):
    if not a:
        return []
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    chart = a[0][0].chart
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = GradedScalar.zero(chart)
            for t in range(k):
                if a[i][t] and b[t][j]:
                    acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def _body_inverse(rows, chart):
    """Inverse of a square matrix over the rational-function field."""
    ring = chart.ring
    n = len(rows)
    one = RationalFunction.constant(ring, 1)
    zero = RationalFunction(ring, ring.zero)
    aug = [list(r) + [one if i == j else zero for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise NotInvertible("matrix body is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def matrix_inverse(m):
    """Two-sided inverse of a square matrix of GradedScalars.

    Splits ``m = B + N`` into body and nilpotent parts and sums the finite
    series ``sum_k (-B^-1 N)^k B^-1``.
    """
    n = len(m)
    if n == 0:
        return []
    chart = m[0][0].chart
    body = [[e.body() for e in row] for row in m]
    binv_rf = _body_inverse(body, chart)
    binv = [[GradedScalar.const(chart, e) for e in row] for row in binv_rf]
    nil = [[m[i][j] - GradedScalar.const(chart, body[i][j]) for j in range(n)] for i in range(n)]
    step = [[-e for e in row] for row in matmul(binv, nil)]
    result = binv
    power = binv
    for _ in range(chart.n_odd):
        power = matmul(step, power)
        if not any(e for row in power for e in row):
            break
        result = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(result, power)]
    return result


def determinant(m):
    """Determinant of a square matrix of mutually commuting (even) entries."""
    n = len(m)
    if n == 0:
        return None
    chart = m[0][0].chart
    if n == 1:
        return m[0][0]
    total = GradedScalar.zero(chart)
    for j in range(n):
        if not m[0][j]:
            continue
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = m[0][j] * determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def berezinian(m, row_parities, col_parities=None):
    """Ber = det(A - B D^-1 C) / det(D) for an even super matrix.

    ``row_parities``/``col_parities`` give the parity of each row/column
    index; blocks are gathered even-first.
    """
    col_parities = row_parities if col_parities is None else col_parities
    re = [i for i, p in enumerate(row_parities) if not p]
    ro = [i for i, p in enumerate(row_parities) if p]
    ce = [j for j, p in enumerate(col_parities) if not p]
    co = [j for j, p in enumerate(col_parities) if p]
    if len(re) != len(ce) or len(ro) != len(co):
        raise DensalgError("berezinian needs a square super matrix")
    chart = m[0][0].chart
    a = [[m[i][j] for j in ce] for i in re]
    b = [[m[i][j] for j in co] for i in re]
    c = [[m[i][j] for j in ce] for i in ro]
    d = [[m[i][j] for j in co] for i in ro]
    for block in (a, d):
        for row in block:
            for e in row:
                if e and e.parity():
                    raise ParityError("diagonal blocks of an even super matrix must be even")
    for block in (b, c):
        for row in block:
            for e in row:
                if e and not e.parity():
                    raise ParityError("off-diagonal blocks of an even super matrix must be odd")
    if not d:
        det_a = determinant(a)
        return det_a if det_a is not None else GradedScalar.one(chart)
    dinv = matrix_inverse(d)
    det_d = determinant(d)
    if not a:
        return det_d.inverse()
    bdc = matmul(matmul(b, dinv), c)
    schur = [[a[i][j] - bdc[i][j] for j in range(len(a))] for i in range(len(a))]
    return determinant(schur) * det_d.inverse()


# coordinate changes -----------------------------------------------------------


class CoordinateChange:
    """Invertible change of coordinates between two charts.

    ``forward[target_name]`` expresses a target coordinate over ``source``;
    ``inverse[source_name]`` expresses a source coordinate over ``target``.
    The round trip is verified at construction.  ``inverse=None`` describes a
    local change (e.g. ``x' = x³`` on ``x > 0``) whose inverse is not
    rational: pulling back and the Jacobian still work, pushing forward does
    not.
    """

    def __init__(self, source, target, forward, inverse=None, check=True):
        self.source = source
        self.target = target
        self.forward = {n: scalar(source, forward[n]) for n in target.names}
        self.inverse = (
            None if inverse is None else {n: scalar(target, inverse[n]) for n in source.names}
        )
        if [p for _, p in source.coords] != [p for _, p in target.coords]:
            raise ParityError("source and target charts must have matching parities")
        for n in target.names:
            self._check_parity(self.forward[n], target.parity(n), n)
        if self.inverse is not None:
            for n in source.names:
                self._check_parity(self.inverse[n], source.parity(n), n)
        if check:
            if self.inverse is not None:
                self._check_round_trip()
            body = [[e.body() for e in row] for row in self.jacobian]
            _body_inverse(body, source)

    @staticmethod
    def _check_parity(value, parity, name):
        if value and (not value.is_homogeneous or value.parity() != parity):
            raise ParityError(f"image of {name} has the wrong parity")

    def _check_round_trip(self):
        for n in self.source.names:
            back = self.pull(self.inverse[n])
            if back != GradedScalar.coord(self.source, n):
                raise DensalgError(f"inverse does not undo forward on {n}")
        for n in self.target.names:
            there = self.push(self.forward[n])
            if there != GradedScalar.coord(self.target, n):
                raise DensalgError(f"forward does not undo inverse on {n}")

    @classmethod
    def identity(cls, chart):
        return cls(chart, chart, {n: n for n in chart.names}, {n: n for n in chart.names})

    def pull(self, f):
        """Scalar on target -> scalar on source."""
        return f.evaluate_at(self.forward, self.source)

    def push(self, f):
        """Scalar on source -> scalar on target (needs the inverse map)."""
        if self.inverse is None:
            raise NotInvertible("local change has no rational inverse to push forward with")
        return f.evaluate_at(self.inverse, self.target)

    @cached_property
    def jacobian(self):
        """Rows: source coords a; columns: target coords a'; entry ∂_a x^{a'}."""
        return [[self.forward[t].partial(s) for t in self.target.names] for s in self.source.names]

    @cached_property
    def inverse_jacobian_pulled(self):
        """Entry [a'][a] = subst(∂_{a'} x^a), over source.

        By the left chain rule ``∂_a = Σ_{a'} (∂_a x^{a'}) ∂_{a'}`` this is the
        inverse of :attr:`jacobian`, so no inverse map is needed.
        """
        return matrix_inverse(self.jacobian)

    @cached_property
    def berezinian(self):
        """J = Dx'/Dx over the source chart."""
        if self.source.dim == 0:
            return GradedScalar.one(self.source)
        parities = [p for _, p in self.source.coords]
        return berezinian(self.jacobian, parities, parities)

    def log_derivative(self, name):
        """∂_name ln J computed as (∂J) J^{-1}."""
        j = self.berezinian
        return j.partial(name) * j.inverse()

    def compose(self, other):
        """``self`` then ``other``: source(self) -> target(other)."""
        if other.source != self.target:
            raise ChartMismatch("composition needs matching charts")
        fwd = {n: self.pull(other.forward[n]) for n in other.target.names}
        inv = None
        if self.inverse is not None and other.inverse is not None:
            inv = {n: other.push(self.inverse[n]) for n in self.source.names}
        return CoordinateChange(self.source, other.target, fwd, inv, check=False)
