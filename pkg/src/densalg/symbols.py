"""Hamiltonians on T*M, principal/subprincipal symbols and brackets.

Momenta ``p[a]`` carry the parity of ``x^a``.  A MomentumPolynomial uses the
same normal form as a DiffOperator: coefficient on the left, even momenta
first, odd momenta in increasing chart order.

Symbol map.  A normal-ordered term ``f ∂^α`` has symbol ``(-1)^{|α_odd|} f p^α``:
``∂_a -> p_a`` on even coordinates and ``∂_a -> -p_a`` on odd ones.  With the
canonical bracket normalized by ``(x^a, p_b) = δ^a_b`` this turns
supercommutators into brackets of leading symbols with a sign::

    σ_{k+l-1}([A, B]) = -(σ_k A, σ_l B)

(on purely even charts this is the familiar ``[∂, x] = 1`` versus
``(p, x) = -1``).  No sign-twisted map can be literal on odd momenta too.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from densalg import kernels
from densalg.diffop import (
    DiffOperator,
    _single_key,
    _zero_expv,
    key_degree,
    key_parity,
)
from densalg.errors import ChartMismatch, OrderError, ParityError
from densalg.graded import GradedScalar, Parity, sign


def _twist(key, coeff):
    return -coeff if kernels.popcount(key[1]) % 2 else coeff


class MomentumPolynomial:
    __slots__ = ("chart", "terms")

    def __init__(self, chart, terms=None):
        self.chart = chart
        self.terms = {k: c for k, c in (terms or {}).items() if c}

    @classmethod
    def zero(cls, chart):
        return cls(chart)

    @classmethod
    def scalar(cls, f):
        return cls(f.chart, {(_zero_expv(f.chart), 0): f})

    @classmethod
    def momentum(cls, chart, name):
        return cls(chart, {_single_key(chart, name): GradedScalar.one(chart)})

    @classmethod
    def linear(cls, chart, components):
        """``Σ_a v^a p_a`` from a mapping name -> coefficient."""
        out = {}
        for name, v in components.items():
            if v:
                out[_single_key(chart, name)] = v
        return cls(chart, out)

    @classmethod
    def from_operator(cls, d):
        """Full symbol of an operator under the symbol map."""
        return cls(d.chart, {k: _twist(k, c) for k, c in d.terms.items()})

    def to_operator(self, parity=None):
        """Inverse of :meth:`from_operator`."""
        return DiffOperator(
            self.chart, {k: _twist(k, c) for k, c in self.terms.items()}, parity=parity
        )

    # structure ----------------------------------------------------------------

    def degree(self):
        return max((key_degree(k) for k in self.terms), default=0)

    def part(self, degree):
        return MomentumPolynomial(
            self.chart, {k: c for k, c in self.terms.items() if key_degree(k) == degree}
        )

    def parity_parts(self):
        parts = {}
        for k, c in self.terms.items():
            for p, piece in c.parity_parts().items():
                parts.setdefault(p + key_parity(k), {})[k] = piece
        return {p: MomentumPolynomial(self.chart, t) for p, t in parts.items()}

    def parity(self):
        parts = self.parity_parts()
        if len(parts) > 1:
            raise ParityError("inhomogeneous Hamiltonian has no parity")
        return next(iter(parts), Parity.EVEN)

    def linear_components(self):
        """Coefficients ``v^a`` of the degree-1 part, keyed by coordinate."""
        out = {}
        for name in self.chart.names:
            out[name] = self.terms.get(_single_key(self.chart, name), GradedScalar.zero(self.chart))
        return out

    def scalar_part(self):
        return self.terms.get((_zero_expv(self.chart), 0), GradedScalar.zero(self.chart))

    def __bool__(self):
        return bool(self.terms)

    @property
    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, MomentumPolynomial):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # algebra --------------------------------------------------------------------

    def _lift(self, other):
        if isinstance(other, MomentumPolynomial):
            if other.chart != self.chart:
                raise ChartMismatch(f"{self.chart} vs {other.chart}")
            return other
        if isinstance(other, GradedScalar):
            return MomentumPolynomial.scalar(other)
        return MomentumPolynomial.scalar(GradedScalar.const(self.chart, other))

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return MomentumPolynomial(self.chart, out)

    __radd__ = __add__

    def __neg__(self):
        return MomentumPolynomial(self.chart, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c):
        return MomentumPolynomial(self.chart, {k: v.scale(c) for k, v in self.terms.items()})

    def __mul__(self, other):
        other = self._lift(other)
        out = {}
        for (ea, ma), f in self.terms.items():
            odd_moms = kernels.popcount(ma) & 1
            for (eb, mb), g in other.terms.items():
                if ma & mb:
                    continue
                s = kernels.koszul_sign(ma, mb)
                for gp, gpart in g.parity_parts().items():
                    v = f * gpart
                    if s * sign(odd_moms * gp) < 0:
                        v = -v
                    k = (tuple(x + y for x, y in zip(ea, eb)), ma | mb)
                    if k in out:
                        out[k] = out[k] + v
                    else:
                        out[k] = v
        return MomentumPolynomial(self.chart, out)

    def __rmul__(self, other):
        return self._lift(other) * self

    def __pow__(self, n):
        result = MomentumPolynomial.scalar(GradedScalar.one(self.chart))
        for _ in range(n):
            result = result * self
        return result

    def dx(self, name):
        """Left derivative along the base coordinate ``name``."""
        return MomentumPolynomial(self.chart, {k: c.partial(name) for k, c in self.terms.items()})

    def dp(self, name):
        """Left derivative along the momentum ``p[name]``."""
        par, i = self.chart.locate(name)
        out = {}
        for (expv, mask), c in self.terms.items():
            if par:
                bit = 1 << i
                if not mask & bit:
                    continue
                s = sign(kernels.popcount(mask & (bit - 1)))
                for cp, part in c.parity_parts().items():
                    v = part if s * sign(cp) > 0 else -part
                    k = (expv, mask ^ bit)
                    out[k] = out[k] + v if k in out else v
            else:
                e = expv[i]
                if not e:
                    continue
                ne = list(expv)
                ne[i] -= 1
                k = (tuple(ne), mask)
                v = c.scale(e)
                out[k] = out[k] + v if k in out else v
        return MomentumPolynomial(self.chart, out)

    def __repr__(self):
        from densalg.expr import format_momentum

        return f"MomentumPolynomial({format_momentum(self)})"

    def __str__(self):
        from densalg.expr import format_momentum

        return format_momentum(self)


def canonical_bracket(h, k):
    """Even canonical Poisson bracket on T*M with ``(x^a, p_b) = δ^a_b``.

    ``(F,G) = Σ_a (-1)^{ã(F̃+1)} (∂_{x^a}F ∂_{p_a}G - (-1)^ã ∂_{p_a}F ∂_{x^a}G)``
    Functions on M may be passed as GradedScalars.
    """
    h = h if isinstance(h, MomentumPolynomial) else MomentumPolynomial.scalar(h)
    k = k if isinstance(k, MomentumPolynomial) else MomentumPolynomial.scalar(k)
    if h.chart != k.chart:
        raise ChartMismatch(f"{h.chart} vs {k.chart}")
    chart = h.chart
    total = MomentumPolynomial.zero(chart)
    for fp, f in h.parity_parts().items():
        for name, pa in chart.coords:
            a = f.dx(name) * k.dp(name)
            b = f.dp(name) * k.dx(name)
            term = a - b if not pa else a + b
            total = total + (term if sign(pa * (fp + 1)) > 0 else -term)
    return total


# brackets ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bracket:
    """Components ``S^{ab}`` of a graded-symmetric bi-derivation of parity ε.

    ``{f, g} = Σ S^{ab} ∂_b f ∂_a g (-1)^{ã f̃}``.
    """

    chart: object
    parity: Parity
    components: dict = field(hash=False)

    def component(self, a, b):
        return self.components.get((a, b), GradedScalar.zero(self.chart))

    def __call__(self, f, g):
        chart = self.chart
        total = GradedScalar.zero(chart)
        for fp, fpart in f.parity_parts().items():
            for (a, b), s in self.components.items():
                if not s:
                    continue
                db = fpart.partial(b)
                if not db:
                    continue
                term = s * db * g.partial(a)
                total = total + (term if sign(chart.parity(a) * fp) > 0 else -term)
        return total

    def matrix(self):
        names = self.chart.names
        return [[self.component(a, b) for b in names] for a in names]

    def operator(self):
        """``½ S^{ab} ∂_b ∂_a`` in normal form."""
        chart = self.chart
        total = DiffOperator.zero(chart)
        half = Fraction(1, 2)
        for (a, b), s in self.components.items():
            db = DiffOperator.partial(chart, b)
            da = DiffOperator.partial(chart, a)
            total = total + (db * da).left_multiply(s).scale(half)
        return DiffOperator(chart, total.terms, parity=self.parity)

    def symbol(self):
        """The Hamiltonian of the bracket: the symbol of ``½ S^{ab} ∂_b ∂_a``."""
        return MomentumPolynomial.from_operator(self.operator())

    def __eq__(self, other):
        if not isinstance(other, Bracket):
            return NotImplemented
        names = self.chart.names
        return self.chart == other.chart and all(
            self.component(a, b) == other.component(a, b) for a in names for b in names
        )

    def __hash__(self):
        return hash(self.chart)


def _normal_pairs(chart):
    """Coordinate pairs in derivative normal order (evens, then odds)."""
    order = chart.even_names + chart.odd_names
    return order


def bracket_components_from_symbol(d_or_symbol, parity=None):
    """Read ``S^{ab}`` from the order-2 part of an operator or Hamiltonian."""
    chart = d_or_symbol.chart
    if parity is None:
        parity = d_or_symbol.parity if isinstance(d_or_symbol, DiffOperator) else d_or_symbol.parity()
    if isinstance(d_or_symbol, MomentumPolynomial):
        d_or_symbol = d_or_symbol.to_operator()
    order = _normal_pairs(chart)
    comps = {}
    for i, a in enumerate(order):
        for b in order[i:]:
            ka = _single_key(chart, a)
            kb = _single_key(chart, b)
            key = (tuple(x + y for x, y in zip(ka[0], kb[0])), ka[1] | kb[1])
            if a == b and chart.parity(a):
                continue
            c = d_or_symbol.terms.get(key)
            if not c:
                continue
            if a == b:
                comps[(a, a)] = c.scale(2)
            else:
                comps[(b, a)] = c
                s = sign(chart.parity(a) * chart.parity(b))
                comps[(a, b)] = c if s > 0 else -c
    return Bracket(chart, Parity(parity or 0), comps)


def defining_bracket(d, f, g):
    """``Δ(fg) - (Δf)g - (-1)^{ε f̃} f(Δg) + Δ(1) fg`` for homogeneous ``f``."""
    eps = d.parity or Parity.EVEN
    fg = f * g
    r = d.apply(GradedScalar.one(d.chart))
    out = d.apply(fg) - d.apply(f) * g + r * fg
    total = out
    for fp, fpart in f.parity_parts().items():
        term = fpart * d.apply(g)
        total = total - term if sign(eps * fp) > 0 else total + term
    return total


def _derivation_defect(d, f, g, h):
    """{f, gh} - {f,g}h - (-1)^{(f̃+ε)g̃} g{f,h} for homogeneous f, g."""
    eps = d.parity or Parity.EVEN
    lhs = defining_bracket(d, f, g * h)
    rhs = defining_bracket(d, f, g) * h
    s = sign((f.parity() + eps) * g.parity())
    rhs2 = g * defining_bracket(d, f, h)
    return lhs - rhs - rhs2 if s > 0 else lhs - rhs + rhs2


def bracket_from_operator(d):
    """The bracket generated by an operator of order at most 2.

    Components come from the defining combination evaluated on coordinate
    pairs: ``S^{ab} = (-1)^{ãb̃} {x^b, x^a}``.
    """
    chart = d.chart
    if d.order() > 2:
        witness = None
        coords = [GradedScalar.coord(chart, n) for n in chart.names]
        for f, g, h in itertools.product(coords, repeat=3):
            defect = _derivation_defect(d, f, g, h)
            if defect:
                witness = (str(f), str(g), str(h))
                break
        raise OrderError(f"operator of order {d.order()} does not generate a bracket", witness)
    comps = {}
    for a in chart.names:
        for b in chart.names:
            xb = GradedScalar.coord(chart, b)
            xa = GradedScalar.coord(chart, a)
            v = defining_bracket(d, xb, xa)
            if v:
                s = sign(chart.parity(a) * chart.parity(b))
                comps[(a, b)] = v if s > 0 else -v
    return Bracket(chart, d.parity or Parity.EVEN, comps)


def principal_symbol(d):
    if d.order() > 2:
        raise OrderError(f"principal symbol needs order <= 2, got {d.order()}")
    return MomentumPolynomial.from_operator(d.part(2))


def first_order_coefficients(d):
    """``T^a``: coefficients of the single derivatives."""
    chart = d.chart
    return {n: d.coefficient(_single_key(chart, n)) for n in chart.names}


def divergence_term(components, chart, eps):
    """``Σ_b ∂_b S^{ba} (-1)^{b̃(ε+1)}`` per index ``a``."""
    out = {}
    for a in chart.names:
        total = GradedScalar.zero(chart)
        for b in chart.names:
            s = components.get((b, a))
            if s:
                term = s.partial(b)
                total = total + (term if sign(chart.parity(b) * (eps + 1)) > 0 else -term)
        out[a] = total
    return out


def subprincipal_components(d):
    """``γ^a = ∂_b S^{ba} (-1)^{b̃(ε+1)} - 2 T^a``."""
    if d.order() > 2:
        raise OrderError(f"subprincipal symbol needs order <= 2, got {d.order()}")
    chart = d.chart
    eps = d.parity or Parity.EVEN
    br = bracket_components_from_symbol(d, eps)
    div = divergence_term(br.components, chart, eps)
    t = first_order_coefficients(d)
    return {a: div[a] - t[a].scale(2) for a in chart.names}


def vector_field_symbol(chart, components):
    """Symbol of the vector field ``v^a ∂_a``: ``Σ (-1)^ã v^a p_a``."""
    return MomentumPolynomial.linear(
        chart, {a: (-v if chart.parity(a) else v) for a, v in components.items()}
    )


def vector_field_components(h):
    """Inverse of :func:`vector_field_symbol` on the degree-1 part of ``h``."""
    return {a: (-v if h.chart.parity(a) else v) for a, v in h.linear_components().items()}


def subprincipal_symbol(d):
    return vector_field_symbol(d.chart, subprincipal_components(d))


@dataclass
class Certificate:
    """Outcome of a check: verdict plus named residuals and witnesses."""

    name: str
    passed: bool
    residuals: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def verify_connection_law(d, change):
    """Compare γ in source coordinates computed two ways.

    Route 1: pull the operator back, then take its subprincipal symbol.
    Route 2: transport γ' with ``γ^{a'} = (γ^a + S^{ab} ∂_b ln J) ∂_a x^{a'}``.
    Equality of route-1 γ inserted into the law with the substituted γ' is
    the certificate.
    """
    from densalg.diffop import pullback

    if d.order() > 2:
        raise OrderError("connection law needs order <= 2")
    src = change.source
    pulled = pullback(d, change)
    gamma_src = subprincipal_components(pulled)
    s_src = bracket_components_from_symbol(pulled, d.parity or Parity.EVEN)
    gamma_tgt = subprincipal_components(d)
    dlnj = {b: change.log_derivative(b) for b in src.names}
    jac = change.jacobian
    residuals = {}
    for ti, t in enumerate(change.target.names):
        lhs = change.pull(gamma_tgt[t])
        rhs = GradedScalar.zero(src)
        for si, a in enumerate(src.names):
            inner = gamma_src[a]
            for b in src.names:
                s_ab = s_src.component(a, b)
                if s_ab:
                    inner = inner + s_ab * dlnj[b]
            rhs = rhs + inner * jac[si][ti]
        diff = lhs - rhs
        if diff:
            residuals[t] = diff
    return Certificate("connection_law", not residuals, residuals)


def curvature(s, gamma):
    """``F = (S, γ)``; flags a Jacobi violation of ``S`` without failing."""
    ss = canonical_bracket(s, s)
    f = canonical_bracket(s, gamma)
    return f, {"jacobi_violation": bool(ss)}


def upper_connection_derivative(bracket, gamma, rho):
    """``∇^a ρ = S^{ab} ∂_b ρ + γ^a ρ`` on a pure weight-1 density."""
    from densalg.densities import DensityElement
    from densalg.errors import WeightError

    if isinstance(rho, DensityElement):
        weights = [w for w, _ in rho.weight_decompose()]
        if weights and weights != [Fraction(1)]:
            raise WeightError("upper connection acts on volume forms (pure weight 1)")
        coeff = rho.component(Fraction(1))
    else:
        coeff = rho
    chart = bracket.chart
    comps = vector_field_components(gamma) if isinstance(gamma, MomentumPolynomial) else gamma
    out = {}
    for a in chart.names:
        total = comps.get(a, GradedScalar.zero(chart)) * coeff
        for b in chart.names:
            s = bracket.component(a, b)
            if s:
                total = total + s * coeff.partial(b)
        out[a] = total
    return out
