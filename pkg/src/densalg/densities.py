"""The algebra of densities: formal sums ``Σ_w t^w ψ_w`` of rational weights.

The variable ``t`` tracks weight and is the extra even coordinate of the
extended manifold.  A weight-0 bracket on densities is fixed by the block
matrix ``[[S^{ab}, t γ^a], [t γ^a, t² θ]]``; evaluating it on generating
functions gives, for ``ψ = t^u f`` and ``χ = t^v g``::

    {ψ, χ} = t^{u+v} ( {f,g}_S + u γ^a f ∂_a g (-1)^{ã f̃}
                       + v γ^b ∂_b f g + u v θ f g )

which is the bi-derivation ``Ŝ^{âb̂} ∂_b̂ψ ∂_âχ (-1)^{â ψ̃}`` with
``∂_t t^u = u t^{u-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from densalg.errors import ChartMismatch, ParityError
from densalg.graded import GradedScalar, Parity, sign
from densalg.symbols import Bracket, MomentumPolynomial, divergence_term, vector_field_symbol


class DensityElement:
    __slots__ = ("chart", "terms")

    def __init__(self, chart, terms=None):
        self.chart = chart
        self.terms = {Fraction(w): c for w, c in (terms or {}).items() if c}

    @classmethod
    def from_scalar(cls, f, weight=0):
        return cls(f.chart, {Fraction(weight): f})

    @classmethod
    def one(cls, chart):
        return cls.from_scalar(GradedScalar.one(chart))

    def weight_decompose(self):
        return sorted(self.terms.items())

    def component(self, weight):
        return self.terms.get(Fraction(weight), GradedScalar.zero(self.chart))

    def weights(self):
        return sorted(self.terms)

    def pure_weight(self):
        ws = self.weights()
        return ws[0] if len(ws) == 1 else None

    def parity_parts(self):
        parts = {}
        for w, c in self.terms.items():
            for p, piece in c.parity_parts().items():
                parts.setdefault(p, {})[w] = piece
        return {p: DensityElement(self.chart, t) for p, t in parts.items()}

    def parity(self):
        parts = self.parity_parts()
        if len(parts) > 1:
            raise ParityError("inhomogeneous density has no parity")
        return next(iter(parts), Parity.EVEN)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, DensityElement):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def _lift(self, other):
        if isinstance(other, DensityElement):
            if other.chart != self.chart:
                raise ChartMismatch(f"{self.chart} vs {other.chart}")
            return other
        if isinstance(other, GradedScalar):
            return DensityElement.from_scalar(other)
        return DensityElement.from_scalar(GradedScalar.const(self.chart, other))

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out[w] + c if w in out else c
        return DensityElement(self.chart, out)

    __radd__ = __add__

    def __neg__(self):
        return DensityElement(self.chart, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out = {}
        for u, f in self.terms.items():
            for v, g in other.terms.items():
                prod = f * g
                out[u + v] = out[u + v] + prod if u + v in out else prod
        return DensityElement(self.chart, out)

    def __rmul__(self, other):
        return self._lift(other) * self

    def scale(self, c):
        return DensityElement(self.chart, {w: v.scale(c) for w, v in self.terms.items()})

    def __pow__(self, n):
        result = DensityElement.one(self.chart)
        for _ in range(n):
            result = result * self
        return result

    def partial(self, name):
        return DensityElement(self.chart, {w: c.partial(name) for w, c in self.terms.items()})

    def dt(self):
        """``∂_t``; lands in weight ``w - 1``."""
        return DensityElement(
            self.chart, {w - 1: c.scale(w) for w, c in self.terms.items() if w}
        )

    def euler(self):
        """``t ∂_t``: multiplies each weight component by its weight."""
        return DensityElement(self.chart, {w: c.scale(w) for w, c in self.terms.items()})

    def __repr__(self):
        from densalg.expr import format_density

        return f"DensityElement({format_density(self)})"

    def __str__(self):
        from densalg.expr import format_density

        return format_density(self)


def dens_mul(a, b):
    return a * b


def weight_decompose(a):
    return a.weight_decompose()


def berezin_integral(f):
    """Top coefficient of a scalar on a purely odd chart.

    The normalization is ``∫ ξ_1 ... ξ_n Dξ = 1`` in chart order.
    """
    chart = f.chart
    if chart.n_even:
        raise ValueError("Berezin integral is only algebraic on purely odd charts")
    top = (1 << chart.n_odd) - 1
    c = f.terms.get(top)
    return Fraction(0) if c is None else c.constant_value()


@dataclass
class ScalarProduct:
    """Residue pairing: the weight-1 integrand and its per-weight table."""

    integrand: GradedScalar
    table: list
    berezin: Fraction | None = None


def dens_scalar_product(a, b):
    """``Res(t^{-2} ψ χ)``: pairs weight ``w`` of ``a`` with ``1 - w`` of ``b``."""
    if a.chart != b.chart:
        raise ChartMismatch(f"{a.chart} vs {b.chart}")
    chart = a.chart
    integrand = GradedScalar.zero(chart)
    table = []
    for w, f in a.weight_decompose():
        g = b.terms.get(1 - w)
        if g:
            prod = f * g
            integrand = integrand + prod
            table.append((w, 1 - w, prod))
    berezin = berezin_integral(integrand) if not chart.n_even else None
    return ScalarProduct(integrand, table, berezin)


@dataclass(eq=False)
class ExtendedBracketData:
    """The triple (S^{ab}, γ^a, θ) defining a weight-0 bracket on densities."""

    chart: object
    parity: Parity
    S: Bracket
    gamma: dict = field(default_factory=dict)
    theta: GradedScalar | None = None

    def __post_init__(self):
        chart = self.chart
        self.parity = Parity(self.parity)
        zero = GradedScalar.zero(chart)
        self.gamma = {n: self.gamma.get(n, zero) for n in chart.names}
        if self.theta is None:
            self.theta = zero
        self.validate()

    def validate(self):
        chart, eps = self.chart, self.parity
        for (a, b), s in self.S.components.items():
            want = eps + chart.parity(a) + chart.parity(b)
            if s and (not s.is_homogeneous or s.parity() != want):
                raise ParityError(f"S[{a},{b}] must be {want.name.lower()}")
            mirror = self.S.component(b, a)
            expected = s if sign(chart.parity(a) * chart.parity(b)) > 0 else -s
            if mirror != expected:
                raise ParityError(f"S[{a},{b}] and S[{b},{a}] violate graded symmetry")
        for a, g in self.gamma.items():
            want = eps + chart.parity(a)
            if g and (not g.is_homogeneous or g.parity() != want):
                raise ParityError(f"gamma[{a}] must be {want.name.lower()}")
        if self.theta and (not self.theta.is_homogeneous or self.theta.parity() != eps):
            raise ParityError(f"theta must be {eps.name.lower()}")

    def gamma_hamiltonian(self):
        """Symbol of the vector field ``γ^a ∂_a``."""
        return vector_field_symbol(self.chart, self.gamma)

    def theta_hamiltonian(self):
        return MomentumPolynomial.scalar(self.theta)

    def divergence_S(self):
        return divergence_term(self.S.components, self.chart, self.parity)

    def divergence_gamma(self):
        """``Σ_a ∂_a γ^a (-1)^{ã(ε+1)}``."""
        chart = self.chart
        total = GradedScalar.zero(chart)
        for a in chart.names:
            term = self.gamma[a].partial(a)
            total = total + (term if sign(chart.parity(a) * (self.parity + 1)) > 0 else -term)
        return total

    def hat_matrix(self):
        """Components of Ŝ on the extended chart, as densities (``t`` last)."""
        chart = self.chart
        out = {}
        for a in chart.names:
            for b in chart.names:
                s = self.S.component(a, b)
                if s:
                    out[(a, b)] = DensityElement.from_scalar(s)
            if self.gamma[a]:
                out[(a, "t")] = DensityElement.from_scalar(self.gamma[a], 1)
                out[("t", a)] = DensityElement.from_scalar(self.gamma[a], 1)
        if self.theta:
            out[("t", "t")] = DensityElement.from_scalar(self.theta, 2)
        return out

    def __eq__(self, other):
        if not isinstance(other, ExtendedBracketData):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.parity == other.parity
            and self.S == other.S
            and self.gamma == other.gamma
            and self.theta == other.theta
        )


def densities_bracket(data, a, b):
    """The weight-0 bracket on densities fixed by ``data``."""
    if a.chart != data.chart or b.chart != data.chart:
        raise ChartMismatch("densities_bracket needs matching charts")
    chart = data.chart
    out = DensityElement(chart)
    for u, f in a.terms.items():
        for v, g in b.terms.items():
            total = data.S(f, g)
            if u:
                for fp, fpart in f.parity_parts().items():
                    for name in chart.names:
                        ga = data.gamma[name]
                        if ga:
                            term = (ga * fpart * g.partial(name)).scale(u)
                            total = total + (term if sign(chart.parity(name) * fp) > 0 else -term)
            if v:
                for name in chart.names:
                    ga = data.gamma[name]
                    if ga:
                        total = total + (ga * f.partial(name) * g).scale(v)
            if u and v and data.theta:
                total = total + (data.theta * f * g).scale(u * v)
            if total:
                out = out + DensityElement.from_scalar(total, u + v)
    return out
