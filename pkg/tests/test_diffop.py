import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from densalg.densities import berezin_integral
from densalg.diffop import (
    DiffOperator,
    WeightedOperator,
    adjoint_certificate,
    divergence,
    formal_adjoint,
    pullback,
)
from densalg.errors import ChartMismatch
from densalg.expr import parse_value
from densalg.graded import Chart, CoordinateChange, GradedScalar, Parity, scalar
from densalg.randgen import random_operator, random_scalar

from changes import catalogue

R1 = Chart.of("x")
R11 = Chart.of("x", "xi:odd")
R22 = Chart.of("x", "y", "xi:odd", "eta:odd")
seeds = st.integers(min_value=0, max_value=2**32 - 1)
charts = st.sampled_from([R11, R22, Chart.of("x", "y"), Chart.of("xi:odd", "eta:odd")])
parities = st.sampled_from([Parity.EVEN, Parity.ODD])


def op(chart, text):
    return parse_value(text, chart)


def f(chart, text):
    return scalar(chart, text)


# application ---------------------------------------------------------------------------


def test_apply_examples():
    assert op(R1, "1/2*d[x]^2").apply(f(R1, "x^2")) == f(R1, "1")
    assert op(R11, "d[x]*d[xi]").apply(f(R11, "x*xi")) == f(R11, "1")
    d = op(R11, "x*d[x]*d[xi] + xi*d[x] + (x^2 + 3)")
    assert d.apply(GradedScalar.one(R11)) == f(R11, "x^2 + 3")


def test_apply_chart_mismatch():
    with pytest.raises(ChartMismatch):
        op(R11, "d[x]").apply(f(R1, "x"))


# composition -------------------------------------------------------------------------


def test_compose_examples():
    lap = op(R11, "d[x]*d[xi]")
    assert lap.compose(lap).is_zero
    assert op(R1, "d[x]").compose(op(R1, "x")) == op(R1, "x*d[x] + 1")
    assert op(R11, "d[xi]").compose(op(R11, "xi")) == op(R11, "-xi*d[xi] + 1")


def test_order_and_parity():
    d = op(R1, "1/2*d[x]^2 + x*d[x]")
    assert d.order() == 2
    zero = DiffOperator.zero(R1)
    assert zero.order() == 0 and zero.is_zero
    assert op(R11, "d[x]*d[xi]").parity == Parity.ODD


def test_odd_jacobi_operator_square_has_order_at_most_two():
    d = op(R11, "d[x]*d[xi] + xi*d[x] + x*d[xi]")
    assert d.compose(d).order() <= 2


@given(seeds, charts, parities, parities)
def test_composition_acts_as_composite(seed, chart, pa, pb):
    rng = random.Random(seed)
    a = random_operator(chart, rng, 2, pa)
    b = random_operator(chart, rng, 2, pb)
    g = random_scalar(chart, rng, 3)
    ab = a.compose(b)
    assert ab.apply(g) == a.apply(b.apply(g))
    assert ab.parity == Parity(pa + pb)


@given(seeds, charts)
def test_composition_associative(seed, chart):
    rng = random.Random(seed)
    a, b, c = (random_operator(chart, rng, 1, rng.choice([0, 1])) for _ in range(3))
    assert a.compose(b).compose(c) == a.compose(b.compose(c))


# formal adjoint ------------------------------------------------------------------------


def test_adjoint_of_derivative():
    adj = formal_adjoint(WeightedOperator(op(R1, "d[x]"), Fraction(0)))
    assert adj.op == op(R1, "-d[x]") and adj.weight == 1


@given(seeds, charts, parities)
def test_adjoint_is_involution(seed, chart, parity):
    d = random_operator(chart, random.Random(seed), 2, parity)
    w = Fraction(seed % 7, 3)
    twice = formal_adjoint(formal_adjoint(WeightedOperator(d, w)))
    assert twice.op == d and twice.weight == w


def test_adjoint_of_half_laplacian_is_itself():
    d = op(R1, "1/2*d[x]^2")
    assert formal_adjoint(d).op == d
    assert formal_adjoint(formal_adjoint(d)).op == d


@given(seeds, charts, parities, parities)
def test_adjoint_reverses_composition(seed, chart, pa, pb):
    """(AB)* = (-1)^{ab} B* A*."""
    rng = random.Random(seed)
    a, b = random_operator(chart, rng, 1, pa), random_operator(chart, rng, 1, pb)
    lhs = formal_adjoint(a.compose(b)).op
    rhs = formal_adjoint(b).op.compose(formal_adjoint(a).op)
    assert lhs == (rhs.scale(-1) if pa and pb else rhs)


def adjoint_certificate_instance(rng, chart):
    """Total-divergence witness re-verified by differentiating the flux."""
    parity = Parity(rng.randrange(2))
    d = WeightedOperator(random_operator(chart, rng, 2, parity), Fraction(rng.randint(-3, 3), 2))
    psi = random_scalar(chart, rng, 2, Parity(rng.randrange(2)))
    chi = random_scalar(chart, rng, 2)
    if not psi:
        psi = GradedScalar.one(chart)
    lhs, flux = adjoint_certificate(d, psi, chi)
    adj = formal_adjoint(d).op
    sgn = -1 if parity and psi.parity() else 1
    direct = d.op.apply(psi) * chi - (psi * adj.apply(chi)).scale(sgn)
    return lhs == direct and divergence(flux) == lhs


@given(seeds, charts)
def test_adjoint_certificate(seed, chart):
    assert adjoint_certificate_instance(random.Random(seed), chart)


def odd_basis(chart):
    names = chart.odd_names
    for r in range(len(names) + 1):
        for combo in itertools.combinations(names, r):
            m = GradedScalar.one(chart)
            for n in combo:
                m = m * GradedScalar.coord(chart, n)
            yield m


def berezin_adjoint_agreement(chart, rng, operators=4):
    """∫(dψ)χ = (-1)^{ε ψ̃} ∫ψ(d*χ) on the full monomial basis."""
    checked = 0
    for _ in range(operators):
        parity = Parity(rng.randrange(2))
        d = random_operator(chart, rng, 2, parity, density=0.6)
        adj = formal_adjoint(d).op
        for psi in odd_basis(chart):
            for chi in odd_basis(chart):
                sgn = -1 if parity and psi.parity() else 1
                lhs = berezin_integral(d.apply(psi) * chi)
                rhs = berezin_integral(psi * adj.apply(chi))
                if lhs != sgn * rhs:
                    return False, checked
                checked += 1
    return True, checked


@pytest.mark.parametrize("chart", [Chart.of("xi:odd", "eta:odd"), Chart.of("xi:odd", "eta:odd", "zeta:odd")])
def test_berezin_adjoint_agreement(chart):
    ok, checked = berezin_adjoint_agreement(chart, random.Random(7))
    assert ok and checked == 4 * 4**chart.n_odd


# pullback ------------------------------------------------------------------------------


def test_pullback_linear():
    lin = CoordinateChange(R1, R1, {"x": "2*x"}, {"x": "x/2"})
    assert pullback(op(R1, "d[x]"), lin) == op(R1, "1/2*d[x]")


def test_pullback_cube_by_hand():
    cube = CoordinateChange(R1, R1, {"x": "x^3"})
    want = op(R1, "1/(18*x^4)*d[x]^2 - 1/(9*x^5)*d[x]")
    assert pullback(op(R1, "1/2*d[x]^2"), cube) == want


def test_pullback_identity():
    d = op(R22, "x*d[x]*d[xi] + eta*d[y] + y")
    assert pullback(d, CoordinateChange.identity(R22)) == d


def test_local_change_cannot_push():
    cube = CoordinateChange(R1, R1, {"x": "x^3"})
    with pytest.raises(Exception):
        cube.push(f(R1, "x"))


@pytest.mark.parametrize("label,change", catalogue(), ids=[label for label, _ in catalogue()])
def test_pullback_intertwines_substitution(label, change):
    rng = random.Random(label)
    for _ in range(4):
        d = random_operator(change.target, rng, 2, Parity(rng.randrange(2)))
        g = random_scalar(change.target, rng, 2)
        assert change.pull(d.apply(g)) == pullback(d, change).apply(change.pull(g))


def test_pullback_composes():
    items = dict(catalogue())
    a, b = items["triangular"], items["darboux mix"]
    d = op(R22, "x*d[x]*d[eta] + d[y]*d[xi] + xi*d[x]")
    assert pullback(pullback(d, b), a) == pullback(d, a.compose(b))
