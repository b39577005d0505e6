import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from densalg.densities import ExtendedBracketData
from densalg.diffop import DiffOperator, pullback
from densalg.errors import OrderError, SingularWeight
from densalg.expr import parse_value
from densalg.graded import Chart, CoordinateChange, GradedScalar, Parity, scalar
from densalg.pencil import (
    PROBE_WEIGHTS,
    OperatorPencil,
    ambiguity_witness,
    canonical_pencil,
    check_selfadjoint,
    pencil_from_operator,
    pencil_pullback,
    specialize_pullback,
)
from densalg.randgen import random_data, random_scalar
from densalg.symbols import Bracket, bracket_from_operator

from changes import catalogue

R1 = Chart.of("x")
R11 = Chart.of("x", "xi:odd")
R22 = Chart.of("x", "y", "xi:odd", "eta:odd")
seeds = st.integers(min_value=0, max_value=2**32 - 1)
charts = st.sampled_from([R1, R11, R22, Chart.of("x", "y")])
parities = st.sampled_from([Parity.EVEN, Parity.ODD])


def op(chart, text):
    return parse_value(text, chart)


def data_1d(g, h):
    s = Bracket(R1, Parity.EVEN, {("x", "x"): GradedScalar.one(R1)})
    return ExtendedBracketData(R1, Parity.EVEN, s, {"x": scalar(R1, g)}, scalar(R1, h))


# canonical pencil --------------------------------------------------------------------------


def test_constant_bracket_has_constant_pencil():
    s = Bracket(R22, Parity.ODD, {
        ("x", "xi"): GradedScalar.one(R22), ("xi", "x"): GradedScalar.one(R22),
        ("y", "eta"): scalar(R22, "2"), ("eta", "y"): scalar(R22, "2"),
    })
    p = canonical_pencil(ExtendedBracketData(R22, Parity.ODD, s))
    for w in (0, Fraction(1, 2), 3, Fraction(-7, 5)):
        assert p.at(w) == op(R22, "d[x]*d[xi] + 2*d[y]*d[eta]")


def test_gamma_first_order_term_vanishes_at_half():
    p = canonical_pencil(data_1d("x^2", "0"))
    assert p.at(Fraction(1, 2)).coefficient(((1,), 0)) == GradedScalar.zero(R1)


@pytest.mark.parametrize("w", [Fraction(0), Fraction(1, 2), Fraction(2), Fraction(-3, 4)])
def test_one_dimensional_formula_by_hand(w):
    g, gp, h = "x^2 + 1", "2*x", "x^3"
    want = op(R1, f"1/2*(d[x]^2 + ({2 * w - 1})*({g})*d[x] + ({w})*({gp}) + ({w * (w - 1)})*({h}))")
    assert canonical_pencil(data_1d(g, h)).at(w) == want


def test_order_bounds_enforced():
    z = DiffOperator.zero(R1)
    with pytest.raises(OrderError):
        OperatorPencil(R1, Parity.EVEN, z, op(R1, "d[x]^2"), z)


@given(seeds, charts, parities)
def test_generated_bracket_is_S_at_every_weight(seed, chart, eps):
    data = random_data(chart, random.Random(seed), eps)
    p = canonical_pencil(data)
    for w in PROBE_WEIGHTS + (Fraction(3),):
        assert bracket_from_operator(p.at(w)) == data.S


# self-adjointness ----------------------------------------------------------------------------


def selfadjoint_instance(rng, chart, eps):
    return check_selfadjoint(canonical_pencil(random_data(chart, rng, eps, degree=3))).passed


@given(seeds, charts, parities)
def test_canonical_pencil_is_selfadjoint(seed, chart, eps):
    assert selfadjoint_instance(random.Random(seed), chart, eps)


def test_perturbed_B_fails_with_quadratic_defect():
    data = random_data(R11, random.Random(1), Parity.EVEN)
    p = canonical_pencil(data)
    c = Fraction(5, 3)
    bumped = OperatorPencil(R11, p.parity, p.delta0, p.A, p.B + DiffOperator.scalar(scalar(R11, c)))
    cert = check_selfadjoint(bumped)
    assert not cert.passed
    for w in PROBE_WEIGHTS:
        expected = c * (w * w - (1 - w) * (1 - w))
        got = cert.residuals.get(str(w), DiffOperator.zero(R11))
        assert got == DiffOperator.scalar(scalar(R11, expected))


def test_zero_pencil_is_selfadjoint():
    z = DiffOperator.zero(R22)
    assert check_selfadjoint(OperatorPencil(R22, Parity.EVEN, z, z, z)).passed


# recovery ----------------------------------------------------------------------------------------


def roundtrip_instance(rng, chart, eps, w0):
    data = random_data(chart, rng, eps, degree=3)
    recovered = pencil_from_operator(canonical_pencil(data).at(w0), w0)
    return recovered == data


@given(seeds, charts, parities, st.sampled_from([Fraction(2), Fraction(-1), Fraction(3, 2)]))
def test_recovery_round_trip(seed, chart, eps, w0):
    assert roundtrip_instance(random.Random(seed), chart, eps, w0)


@given(seeds, charts, parities)
def test_pencil_through_operator_passes_through_it(seed, chart, eps):
    rng = random.Random(seed)
    d = canonical_pencil(random_data(chart, rng, eps)).at(0) + DiffOperator.scalar(
        random_scalar(chart, rng, 2, eps)
    )
    d = DiffOperator(chart, d.terms, parity=eps)
    w0 = rng.choice([Fraction(-2), Fraction(3), Fraction(5, 3), Fraction(-2, 3), Fraction(5)])
    assert canonical_pencil(pencil_from_operator(d, w0)).at(w0) == d


@pytest.mark.parametrize("w0", [Fraction(0), Fraction(1, 2), Fraction(1)])
def test_singular_weights_rejected(w0):
    with pytest.raises(SingularWeight):
        pencil_from_operator(op(R1, "1/2*d[x]^2"), w0)


def test_recovery_rejects_order_three():
    with pytest.raises(OrderError):
        pencil_from_operator(op(R1, "d[x]^3"), 2)


def test_weight_zero_ambiguity_pair():
    data = data_1d("x", "x^2")
    shifted, same = ambiguity_witness(data, scalar(R1, "x^5 + 1"))
    assert same and shifted.theta != data.theta
    assert canonical_pencil(shifted).at(2) != canonical_pencil(data).at(2)


# pullback -------------------------------------------------------------------------------------


def test_identity_pullback():
    p = canonical_pencil(random_data(R22, random.Random(2), Parity.ODD))
    assert pencil_pullback(p, CoordinateChange.identity(R22)) == p


def test_weight_zero_slice_is_plain_pullback():
    change = dict(catalogue())["darboux mix"]
    p = canonical_pencil(random_data(R22, random.Random(4), Parity.ODD))
    assert pencil_pullback(p, change).at(0) == pullback(p.at(0), change)


def test_linear_change_weight_one_by_hand():
    """x' = 2x: J = 2, weight-1 operators see only the derivative rescaling."""
    lin = CoordinateChange(R1, R1, {"x": "2*x"}, {"x": "x/2"})
    p = canonical_pencil(data_1d("x", "1"))
    got = specialize_pullback(p, lin, 1)
    direct = p.at(1)
    # substitute x' = 2x and ∂_{x'} = ½∂_x by hand
    want = op(R1, "1/2*(1/4*d[x]^2 + 2*x*1/2*d[x] + 1)")
    assert direct == op(R1, "1/2*(d[x]^2 + x*d[x] + 1)")
    assert got == want == pencil_pullback(p, lin).at(1)


def twisted_intertwining(change, pencil, w, f):
    """For integer w: D_src(J^w · f∘φ) == J^w · (Δ_w f)∘φ."""
    jw = change.berezinian ** int(w)
    lhs = specialize_pullback(pencil, change, w).apply(jw * change.pull(f))
    rhs = jw * change.pull(pencil.at(w).apply(f))
    return lhs == rhs


@pytest.mark.parametrize("label,change", catalogue(), ids=[label for label, _ in catalogue()])
def test_pullback_commutes_with_specialization(label, change):
    rng = random.Random(label)
    for eps in (Parity.EVEN, Parity.ODD):
        pencil = canonical_pencil(random_data(change.target, rng, eps))
        pulled = pencil_pullback(pencil, change)
        for w in PROBE_WEIGHTS + (Fraction(3),):
            assert pulled.at(w) == specialize_pullback(pencil, change, w)
        for w in (-1, 0, 1, 2):
            assert twisted_intertwining(change, pencil, w, random_scalar(change.target, rng, 2))
        assert check_selfadjoint(pulled).passed


@pytest.mark.parametrize("label,change", catalogue()[5:], ids=[label for label, _ in catalogue()[5:]])
def test_recovered_bracket_transforms_as_tensor(label, change):
    """The recovered S in new coordinates is the pulled-back bi-derivation."""
    rng = random.Random(label)
    data = random_data(change.target, rng, Parity.ODD)
    pulled = pencil_pullback(canonical_pencil(data), change)
    new = pencil_from_operator(pulled.at(2), 2)
    for _ in range(3):
        f = random_scalar(change.target, rng, 2, Parity(rng.randrange(2)))
        g = random_scalar(change.target, rng, 2)
        if f:
            assert change.pull(data.S(f, g)) == new.S(change.pull(f), change.pull(g))
