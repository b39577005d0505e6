"""Generators of odd brackets, Jacobi operators, data sets and actions for the
BV suites.  Every generated object carries the verdict it was built to have,
so the checks are compared against construction rather than against themselves.
"""


from densalg.bv import EffectiveAction, OddPoissonStructure, data_from_action
from densalg.densities import ExtendedBracketData
from densalg.diffop import DiffOperator, pullback
from densalg.expr import parse_value
from densalg.graded import Chart, GradedScalar, Parity, scalar
from densalg.randgen import random_data, random_scalar
from densalg.symbols import Bracket, canonical_bracket, principal_symbol, vector_field_symbol

from changes import catalogue

R11 = Chart.of("x", "xi:odd")
R22 = Chart.of("x", "y", "xi:odd", "eta:odd")
DARBOUX = {R11: "d[x]*d[xi]", R22: "d[x]*d[xi] + d[y]*d[eta]"}


def darboux_operator(chart):
    return parse_value(DARBOUX[chart], chart)


def odd(op):
    return DiffOperator(op.chart, op.terms, parity=Parity.ODD)


def changes_on(chart):
    return [c for _, c in catalogue() if c.target == chart]


def _even_unit(chart, rng):
    """An even invertible function ``c + f`` with polynomial ``f``."""
    f = random_scalar(chart, rng, 2, Parity.EVEN)
    return f + rng.choice([1, 2, 3])


def flat_operator(chart, rng):
    """Darboux Laplacian pulled back, conjugated by a unit, shifted by an odd
    scalar: ``Δ² `` stays of order <= 1 at every step."""
    d = pullback(darboux_operator(chart), rng.choice(changes_on(chart)))
    g = _even_unit(chart, rng)
    d = DiffOperator.scalar(g.inverse()).compose(d).compose(DiffOperator.scalar(g))
    return odd(d + DiffOperator.scalar(random_scalar(chart, rng, 2, Parity.ODD)))


def curved_operator(chart, rng):
    """A flat operator plus a first-order term that is not a Poisson vector field."""
    base = flat_operator(chart, rng)
    s = principal_symbol(base)
    while True:
        v = {a: random_scalar(chart, rng, 2, Parity(1 + chart.parity(a))) for a in chart.names}
        if canonical_bracket(s, vector_field_symbol(chart, v)):
            break
    extra = DiffOperator.zero(chart)
    for a, c in v.items():
        if c:
            extra = extra + DiffOperator.partial(chart, a).left_multiply(c)
    return odd(base + extra)


def jacobi_operators(rng, count, curved_every=3):
    """``count`` Jacobi operators on R11 and R22 with known flatness."""
    out = []
    for i in range(count):
        chart = (R11, R22)[i % 2]
        curved = i % curved_every == 0
        out.append((curved, (curved_operator if curved else flat_operator)(chart, rng)))
    return out


# data sets for the four equations ----------------------------------------------------


def structure(chart, rng=None):
    """Darboux structure, optionally pulled back through a catalogue change."""
    d = darboux_operator(chart)
    if rng is not None:
        d = pullback(d, rng.choice(changes_on(chart)))
    return OddPoissonStructure.from_operator(d)


def polynomial_action(chart, rng):
    while True:
        a = random_scalar(chart, rng, 3, Parity.EVEN, density=0.8)
        if a:
            return EffectiveAction(chart, a)


def corollary_data(chart, rng):
    return data_from_action(structure(chart, rng), polynomial_action(chart, rng))


def broken_data(chart, rng):
    """Jacobi S with arbitrary (γ, θ); fails unless the draw is accidentally good."""
    s = structure(chart, rng).bracket
    junk = random_data(chart, rng, Parity.ODD)
    return ExtendedBracketData(chart, Parity.ODD, s, junk.gamma, junk.theta)


def compensated_fixture():
    """(γ,γ) != 0 cancelled by (S,θ) on R22, from the action x*y + ξη."""
    return data_from_action(structure(R22), EffectiveAction(R22, scalar(R22, "x*y + xi*eta")))


def third_equation_counterexample():
    """S = Darboux on R11, γ = 0, θ = ξ: only the third equation fails."""
    s = Bracket(R11, Parity.ODD, {("x", "xi"): GradedScalar.one(R11), ("xi", "x"): GradedScalar.one(R11)})
    return ExtendedBracketData(R11, Parity.ODD, s, {}, scalar(R11, "xi"))


def four_equation_sets(rng, count):
    out = [compensated_fixture(), third_equation_counterexample()]
    makers = (corollary_data, broken_data, lambda c, r: random_data(c, r, Parity.ODD))
    i = 0
    while len(out) < count:
        out.append(makers[i % 3]((R11, R22)[(i // 3) % 2], rng))
        i += 1
    return out


