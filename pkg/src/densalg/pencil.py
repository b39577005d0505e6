"""Quadratic operator pencils Δ_w = Δ_0 + w A + w² B on w-densities.

The canonical pencil of a triple (S, γ, θ) is::

    Δ_w = ½ ( S^{ab} ∂_b ∂_a + (∂_b S^{ba} (-1)^{b̃(ε+1)} + (2w-1) γ^a) ∂_a
              + w ∂_a γ^a (-1)^{ã(ε+1)} + w(w-1) θ )
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from densalg.densities import ExtendedBracketData
from densalg.diffop import DiffOperator, formal_adjoint, pullback
from densalg.errors import OrderError, SingularWeight
from densalg.graded import GradedScalar, Parity
from densalg.symbols import (
    Certificate,
    bracket_components_from_symbol,
    divergence_term,
    first_order_coefficients,
)

PROBE_WEIGHTS = (Fraction(0), Fraction(1, 2), Fraction(2))
SINGULAR_WEIGHTS = (Fraction(0), Fraction(1, 2), Fraction(1))


@dataclass(frozen=True, eq=False)
class OperatorPencil:
    chart: object
    parity: Parity
    delta0: DiffOperator
    A: DiffOperator
    B: DiffOperator

    def __post_init__(self):
        if self.delta0.order() > 2 or self.A.order() > 1 or self.B.order() > 0:
            raise OrderError("pencil order bounds are (2, 1, 0)")

    def at(self, w):
        w = Fraction(w)
        op = self.delta0 + self.A.scale(w) + self.B.scale(w * w)
        return DiffOperator(self.chart, op.terms, parity=self.parity)

    @classmethod
    def interpolate(cls, chart, parity, samples):
        """Pencil through three ``(weight, operator)`` samples."""
        (w0, d0), (w1, d1), (w2, d2) = samples
        w0, w1, w2 = Fraction(w0), Fraction(w1), Fraction(w2)

        def basis(wa, wb, wc):
            # coefficients (c0, c1, c2) of (w - wb)(w - wc) / ((wa - wb)(wa - wc))
            den = (wa - wb) * (wa - wc)
            return (wb * wc / den, -(wb + wc) / den, 1 / den)

        coeffs = [basis(w0, w1, w2), basis(w1, w0, w2), basis(w2, w0, w1)]
        ops = [d0, d1, d2]
        parts = []
        for power in range(3):
            total = DiffOperator.zero(chart)
            for c, op in zip(coeffs, ops):
                if c[power]:
                    total = total + op.scale(c[power])
            parts.append(total)
        return cls(chart, parity, *parts)

    def __eq__(self, other):
        if not isinstance(other, OperatorPencil):
            return NotImplemented
        return (self.delta0, self.A, self.B) == (other.delta0, other.A, other.B)

    def __hash__(self):
        return hash((self.delta0, self.A, self.B))


def second_order_operator(S):
    """``½ S^{ab} ∂_b ∂_a`` in normal form."""
    return S.operator()


def canonical_pencil(data):
    chart, eps = data.chart, data.parity
    half = Fraction(1, 2)
    div_s = data.divergence_S()
    div_g = data.divergence_gamma()
    first0 = DiffOperator.zero(chart)
    first1 = DiffOperator.zero(chart)
    for a in chart.names:
        da = DiffOperator.partial(chart, a)
        coeff0 = (div_s[a] - data.gamma[a]).scale(half)
        if coeff0:
            first0 = first0 + da.left_multiply(coeff0)
        if data.gamma[a]:
            first1 = first1 + da.left_multiply(data.gamma[a])
    delta0 = second_order_operator(data.S) + first0
    a_op = first1 + DiffOperator.scalar((div_g - data.theta).scale(half))
    b_op = DiffOperator.scalar(data.theta.scale(half))
    return OperatorPencil(chart, eps, delta0, a_op, b_op)


def check_selfadjoint(pencil, weights=PROBE_WEIGHTS):
    """``(Δ_w)* == Δ_{1-w}`` at each probe weight; residuals are the defects."""
    residuals = {}
    for w in weights:
        adj = formal_adjoint(_weighted(pencil.at(w), w)).op
        defect = adj - pencil.at(1 - w)
        if defect:
            residuals[str(w)] = defect
    return Certificate("selfadjoint", not residuals, residuals)


def _weighted(op, w):
    from densalg.diffop import WeightedOperator

    return WeightedOperator(op, w)


def pencil_from_operator(d, w0):
    """Recover (S, γ, θ) of the canonical pencil passing through ``d`` at ``w0``."""
    w0 = Fraction(w0)
    if w0 in SINGULAR_WEIGHTS:
        raise SingularWeight(f"weight {w0} is singular (0, 1/2 and 1 are excluded)")
    if d.order() > 2:
        raise OrderError(f"pencil recovery needs order <= 2, got {d.order()}")
    chart = d.chart
    eps = d.parity or Parity.EVEN
    S = bracket_components_from_symbol(d, eps)
    div_s = divergence_term(S.components, chart, eps)
    t = first_order_coefficients(d)
    gamma = {a: (t[a].scale(2) - div_s[a]).scale(1 / (2 * w0 - 1)) for a in chart.names}
    partial = ExtendedBracketData(chart, eps, S, gamma, GradedScalar.zero(chart))
    r = d.apply(GradedScalar.one(chart))
    theta = (r.scale(2) - partial.divergence_gamma().scale(w0)).scale(1 / (w0 * (w0 - 1)))
    return ExtendedBracketData(chart, eps, S, gamma, theta)


def ambiguity_witness(data, f):
    """Two triples differing by ``θ -> θ + f`` with identical Δ_0."""
    shifted = ExtendedBracketData(data.chart, data.parity, data.S, dict(data.gamma), data.theta + f)
    d0 = canonical_pencil(data).at(0)
    d1 = canonical_pencil(shifted).at(0)
    return shifted, d0 == d1


def conjugate_by_log_derivative(op, log_derivative, c):
    """``g^{-c} ∘ op ∘ g^{c}`` for an even invertible ``g`` given by ``∂_a ln g``.

    Realized by the substitution ``∂_a -> ∂_a + c ∂_a ln g``, so ``g`` itself
    never has to be materialized.
    """
    from densalg.diffop import key_word

    chart = op.chart
    c = Fraction(c)
    if not c:
        return op
    shifted = {
        a: DiffOperator.partial(chart, a) + DiffOperator.scalar(log_derivative[a].scale(c))
        for a in chart.names
    }
    total = DiffOperator.zero(chart)
    for key, coeff in op.terms.items():
        term = DiffOperator.scalar(coeff)
        for name in key_word(chart, key):
            term = term.compose(shifted[name])
        total = total + term
    return DiffOperator(chart, total.terms, parity=op.parity)


def conjugate_by_jacobian_power(op, change, w):
    """``J^w ∘ op ∘ J^{-w}`` via ``∂_a -> ∂_a - w (∂_a J) J^{-1}``."""
    logd = {a: change.log_derivative(a) for a in op.chart.names}
    return conjugate_by_log_derivative(op, logd, -Fraction(w))


def specialize_pullback(pencil, change, w):
    """The weight-``w`` operator of the pencil expressed in source coordinates."""
    return conjugate_by_jacobian_power(pullback(pencil.at(w), change), change, w)


def pencil_pullback(pencil, change, weights=(0, 1, -1)):
    samples = [(w, specialize_pullback(pencil, change, w)) for w in weights]
    return OperatorPencil.interpolate(change.source, pencil.parity, samples)
