"""Odd brackets: Jacobi, flatness, the four equations on densities, the
modular vector field, non-degenerate reduction and the master equation.

Conventions fixed by the test suite:

* Hamiltonians come from the symbol map of :mod:`densalg.symbols`; the
  Hamiltonian of ``S`` is the principal symbol of ``½ S^{ab} ∂_b ∂_a`` and a
  vector field ``v^a ∂_a`` has Hamiltonian ``Σ (-1)^ã v^a p_a``.  With these,
  the order-3 symbol of ``Δ²`` equals ``-½(S,S)``.
* The Jacobi identity of an odd bracket is the ordinary one for the shifted
  bracket ``(f, g) = (-1)^{f̃} {f, g}``::

      (f,(g,h)) = ((f,g),h) + (-1)^{(f̃+1)(g̃+1)} (g,(f,h))

* "Δ is a derivation of its bracket" is checked for ``Δ̃ = Δ - Δ(1)``::

      Δ̃(f,g) = (Δ̃f, g) - (-1)^{f̃} (f, Δ̃g)

* The Lie derivative on ``w``-densities is ``L_X(t^w f) = t^w (X f + w div X f)``
  with ``div X = Σ_a (-1)^{ã(X̃+1)} ∂_a X^a``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from densalg.densities import DensityElement, ExtendedBracketData, densities_bracket
from densalg.diffop import DiffOperator
from densalg.errors import (
    DegenerateStructure,
    InternalInconsistency,
    NotInvertible,
    ParityError,
    PreconditionFailed,
)
from densalg.graded import GradedScalar, Parity, matmul, matrix_inverse, sign
from densalg.pencil import (
    PROBE_WEIGHTS,
    canonical_pencil,
    conjugate_by_log_derivative,
)
from densalg.symbols import (
    Bracket,
    Certificate,
    MomentumPolynomial,
    bracket_components_from_symbol,
    canonical_bracket,
    defining_bracket,
    first_order_coefficients,
    principal_symbol,
    subprincipal_symbol,
    vector_field_symbol,
)

DERIVATION_DEGREE_BOUND = 2
RANDOM_PAIRS = 6
RANDOM_TRIPLES = 4


# domain types -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OddPoissonStructure:
    """An odd bracket whose Hamiltonian ``S`` satisfies ``(S, S) = 0``."""

    chart: object
    bracket: Bracket

    def __post_init__(self):
        if self.bracket.parity != Parity.ODD:
            raise ParityError("an odd Poisson structure needs an odd bracket")
        if canonical_bracket(self.S, self.S):
            raise PreconditionFailed("(S, S) != 0: the bracket violates the Jacobi identity")

    @classmethod
    def from_operator(cls, d):
        return cls(d.chart, bracket_components_from_symbol(d, Parity.ODD))

    @property
    def S(self):
        return self.bracket.symbol()

    def is_nondegenerate(self):
        try:
            matrix_inverse(self.bracket.matrix())
        except NotInvertible:
            return False
        return True


@dataclass(frozen=True, eq=False)
class EffectiveAction:
    """An even function ``𝒜``; only its derivatives ``γ_a = -∂_a 𝒜`` are used."""

    chart: object
    A: GradedScalar

    def __post_init__(self):
        if self.A and (not self.A.is_homogeneous or self.A.parity() != Parity.EVEN):
            raise ParityError("the effective action must be even")

    @property
    def gamma_lower(self):
        return {a: -self.A.partial(a) for a in self.chart.names}


@dataclass(frozen=True, eq=False)
class ModularField:
    """The vector field ``X`` with ``Δ_w² = L_X``."""

    chart: object
    components: dict

    @property
    def X(self):
        return vector_field_symbol(self.chart, self.components)

    def is_zero(self):
        return not any(self.components.values())


# helpers ---------------------------------------------------------------------------


def _require_odd(d):
    if d.parity != Parity.ODD:
        raise ParityError("odd operator expected")
    if d.order() > 2:
        raise PreconditionFailed(f"order <= 2 expected, got {d.order()}")


def antibracket(bracket_fn):
    """``(f, g) = (-1)^{f̃} {f, g}`` for homogeneous ``f``."""

    def shifted(f, g):
        value = bracket_fn(f, g)
        return -value if f.parity() else value

    return shifted


def jacobiator(br, f, g, h):
    """``(f,(g,h)) - ((f,g),h) - (-1)^{(f̃+1)(g̃+1)} (g,(f,h))``."""
    s = sign((f.parity() + 1) * (g.parity() + 1))
    return br(f, br(g, h)) - br(br(f, g), h) - br(g, br(f, h)).scale(s)


def _coordinates(chart):
    return [GradedScalar.coord(chart, n) for n in chart.names]


def _monomials(chart, bound):
    """Non-zero monomials of total degree 1..bound (odd generators count)."""
    coords = _coordinates(chart)
    out = []
    for k in range(1, bound + 1):
        for combo in itertools.combinations_with_replacement(coords, k):
            m = GradedScalar.one(chart)
            for c in combo:
                m = m * c
            if m:
                out.append(m)
    return out


def _random_homogeneous(chart, rng):
    from densalg.randgen import random_scalar

    while True:
        f = random_scalar(chart, rng, degree=2, parity=rng.randrange(2), density=1.0)
        if f:
            return f


def _fmt(value):
    from densalg.expr import format_value

    return format_value(value)


# base Jacobi -----------------------------------------------------------------------


def schouten_defect(d):
    """``(-½(S,S), σ_3(Δ²))`` for an odd operator of order at most 2; equal."""
    s = principal_symbol(d)
    return canonical_bracket(s, s).scale(Fraction(-1, 2)), MomentumPolynomial.from_operator(
        (d * d).part(3)
    )


def jacobi_witness(bracket_fn, chart):
    """First coordinate triple violating the odd Jacobi identity, if any."""
    br = antibracket(bracket_fn)
    coords = _coordinates(chart)
    for f, g, h in itertools.product(coords, repeat=3):
        value = jacobiator(br, f, g, h)
        if value:
            return (str(f), str(g), str(h)), value
    return None


def jacobi_check_base(d):
    """``ord Δ² <= 2`` and ``(S, S) = 0`` computed independently; they must agree."""
    _require_odd(d)
    square = d * d
    order_ok = square.order() <= 2
    half_ss, sym3 = schouten_defect(d)
    schouten_ok = not half_ss
    if half_ss != sym3:
        raise InternalInconsistency("order-3 symbol of d² differs from -½(S,S)")
    if order_ok != schouten_ok:
        raise InternalInconsistency("ord d² <= 2 and (S,S) = 0 disagree")
    cert = Certificate("jacobi_base", order_ok)
    cert.flags = {"order_d2": square.order(), "order_le_2": order_ok, "schouten_zero": schouten_ok}
    if not order_ok:
        cert.residuals["minus_half_SS"] = half_ss
        cert.residuals["d2_order3_symbol"] = sym3
        found = jacobi_witness(lambda f, g: defining_bracket(d, f, g), d.chart)
        if found is not None:
            cert.witnesses["triple"] = list(found[0])
            cert.witnesses["jacobiator"] = found[1]
    return cert


# flatness ------------------------------------------------------------------------------


def _derivation_defect(dt, f, g):
    br = antibracket(lambda u, v: defining_bracket(dt, u, v))
    lhs = dt.apply(br(f, g))
    rhs = br(dt.apply(f), g) - br(f, dt.apply(g)).scale(sign(f.parity()))
    return lhs - rhs


def flatness_check(d, seed=0):
    """Three independent predicates that must agree for a Jacobi operator:
    the derivation property, ``ord Δ² <= 1`` and ``(S, γ) = 0``."""
    _require_odd(d)
    if not jacobi_check_base(d).passed:
        raise PreconditionFailed("flatness needs a Jacobi-satisfying operator")
    chart = d.chart
    dt = d - DiffOperator.scalar(d.apply(GradedScalar.one(chart)))
    dt = DiffOperator(chart, dt.terms, parity=Parity.ODD)
    pairs = [
        (f, g)
        for f in _monomials(chart, DERIVATION_DEGREE_BOUND)
        for g in _monomials(chart, DERIVATION_DEGREE_BOUND)
    ]
    rng = random.Random(seed)
    pairs += [(_random_homogeneous(chart, rng), _random_homogeneous(chart, rng)) for _ in range(RANDOM_PAIRS)]
    derivation_ok = True
    witness = None
    for f, g in pairs:
        for fp in f.parity_parts().values():
            defect = _derivation_defect(dt, fp, g)
            if defect:
                derivation_ok = False
                witness = (str(fp), str(g), defect)
                break
        if not derivation_ok:
            break
    square = d * d
    order_ok = square.order() <= 1
    s = principal_symbol(d)
    gamma = subprincipal_symbol(d)
    curv = canonical_bracket(s, gamma)
    flat_ok = not curv
    verdicts = {"derivation": derivation_ok, "order_le_1": order_ok, "curvature_zero": flat_ok}
    if len(set(verdicts.values())) != 1:
        raise InternalInconsistency(f"flatness predicates disagree: {verdicts}")
    cert = Certificate("flatness", flat_ok, flags=dict(verdicts, order_d2=square.order(), pairs=len(pairs)))
    if not flat_ok:
        cert.residuals["curvature"] = curv
        cert.witnesses["pair"] = [witness[0], witness[1]]
        cert.witnesses["derivation_defect"] = witness[2]
    return cert


# the four equations ---------------------------------------------------------------------


def four_equations(data):
    """Residuals of ``(S,S)``, ``(S,γ)``, ``(S,θ)+(γ,γ)`` and ``(γ,θ)``."""
    s = data.S.symbol()
    g = data.gamma_hamiltonian()
    th = data.theta_hamiltonian()
    return {
        "(S,S)": canonical_bracket(s, s),
        "(S,gamma)": canonical_bracket(s, g),
        "(S,theta)+(gamma,gamma)": canonical_bracket(s, th) + canonical_bracket(g, g),
        "(gamma,theta)": canonical_bracket(g, th),
    }


def _density_generators(chart):
    gens = [DensityElement.from_scalar(GradedScalar.coord(chart, n)) for n in chart.names]
    gens.append(DensityElement.from_scalar(GradedScalar.one(chart), 1))
    return gens


def density_jacobiator(data, f, g, h):
    br = antibracket(lambda u, v: densities_bracket(data, u, v))
    return jacobiator(br, f, g, h)


def jacobi_check_densities(data, seed=0):
    """Four-equation verdict versus direct Jacobi on densities; they must agree.

    The Jacobiator of a bi-derivation is a tri-derivation, so the generators
    ``x^a`` and ``t`` already decide it; random triples add redundancy.
    """
    if data.parity != Parity.ODD:
        raise ParityError("the four equations concern odd brackets")
    chart = data.chart
    residuals = {k: v for k, v in four_equations(data).items() if v}
    eq_ok = not residuals
    rng = random.Random(seed)
    gens = _density_generators(chart)
    triples = list(itertools.product(gens, repeat=3))
    weights = (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2))
    for _ in range(RANDOM_TRIPLES):
        triples.append(
            tuple(
                DensityElement.from_scalar(_random_homogeneous(chart, rng), rng.choice(weights))
                for _ in range(3)
            )
        )
    witness = None
    for f, g, h in triples:
        value = density_jacobiator(data, f, g, h)
        if value:
            witness = ((str(f), str(g), str(h)), value)
            break
    jac_ok = witness is None
    if eq_ok != jac_ok:
        raise InternalInconsistency("four equations and densities Jacobi disagree")
    cert = Certificate("theorem3", eq_ok, residuals, flags={"triples": len(triples)})
    cert.flags["equations"] = {k: k not in residuals for k in four_equations_names()}
    if witness is not None:
        cert.witnesses["triple"] = list(witness[0])
        cert.witnesses["jacobiator"] = witness[1]
    return cert


def four_equations_names():
    return ("(S,S)", "(S,gamma)", "(S,theta)+(gamma,gamma)", "(gamma,theta)")


# modular vector field --------------------------------------------------------------------


def vector_field_divergence(chart, components, parity=Parity.EVEN):
    total = GradedScalar.zero(chart)
    for a in chart.names:
        v = components.get(a)
        if v:
            term = v.partial(a)
            total = total + (term if sign(chart.parity(a) * (parity + 1)) > 0 else -term)
    return total


def lie_derivative(chart, components, w, parity=Parity.EVEN):
    """``L_X`` on ``w``-densities as an operator on coefficients."""
    op = DiffOperator.scalar(vector_field_divergence(chart, components, parity).scale(Fraction(w)))
    for a in chart.names:
        v = components.get(a)
        if v:
            op = op + DiffOperator.partial(chart, a).left_multiply(v)
    return DiffOperator(chart, op.terms, parity=parity)


def extract_modular_field(data, weights=PROBE_WEIGHTS):
    if not jacobi_check_densities(data).passed:
        raise PreconditionFailed("modular field needs data satisfying the four equations")
    chart = data.chart
    pencil = canonical_pencil(data)
    squares = {}
    for w in (Fraction(0),) + tuple(Fraction(x) for x in weights):
        sq = pencil.at(w) * pencil.at(w)
        if sq.order() > 1:
            raise InternalInconsistency(f"Δ_{w}² has order {sq.order()}, not a Lie derivative")
        squares[w] = sq
    base = squares[Fraction(0)]
    comps = first_order_coefficients(base)
    field = ModularField(chart, comps)
    residuals = {}
    for w, sq in squares.items():
        defect = sq - lie_derivative(chart, comps, w)
        if defect:
            residuals[str(w)] = defect
    if residuals:
        raise InternalInconsistency(f"Δ_w² is not L_X at weights {sorted(residuals)}")
    poisson = canonical_bracket(data.S.symbol(), field.X)
    if poisson:
        raise InternalInconsistency("modular field does not preserve the bracket")
    return field


# non-degenerate reduction -----------------------------------------------------------------


def _invert_bracket(bracket):
    try:
        return matrix_inverse(bracket.matrix())
    except NotInvertible as exc:
        raise DegenerateStructure("S^{ab} has a singular body") from exc


def lower_gamma(data):
    """Solve ``γ^a = S^{ab} γ_b`` for ``γ_b``."""
    names = data.chart.names
    inv = _invert_bracket(data.S)
    column = [[data.gamma[a]] for a in names]
    lowered = matmul(inv, column)
    return {b: lowered[i][0] for i, b in enumerate(names)}


def raise_gamma(bracket, gamma_lower):
    names = bracket.chart.names
    column = [[gamma_lower[b]] for b in names]
    raised = matmul(bracket.matrix(), column)
    return {a: raised[i][0] for i, a in enumerate(names)}


def contract(upper, lower, chart):
    """``γ^a γ_a``."""
    total = GradedScalar.zero(chart)
    for a in chart.names:
        total = total + upper[a] * lower[a]
    return total


def euler_potential(chart, gamma_lower):
    """A polynomial ``𝒜`` with ``-∂_a 𝒜 = γ_a``, or None outside the polynomial class.

    With ``E = x^a ∂_a`` one has ``E𝒜 = -x^a γ_a``, so the degree-``k`` part is
    ``-(1/k) (x^a γ_a)_k``; the constant is fixed to zero.
    """
    contraction = GradedScalar.zero(chart)
    for a in chart.names:
        contraction = contraction + GradedScalar.coord(chart, a) * gamma_lower[a]
    if not contraction.is_polynomial or any(not g.is_polynomial for g in gamma_lower.values()):
        return None
    top = contraction.degree()
    potential = GradedScalar.zero(chart)
    for k in range(1, (top or 0) + 1):
        part = contraction.homogeneous_part(k)
        if part:
            potential = potential - part.scale(Fraction(1, k))
    if any(-potential.partial(a) != gamma_lower[a] for a in chart.names):
        return None
    return potential


def closedness_defects(chart, gamma_lower):
    """``∂_a γ_b - (-1)^{ãb̃} ∂_b γ_a`` for each pair."""
    out = {}
    names = chart.names
    for i, a in enumerate(names):
        for b in names[i:]:
            s = sign(chart.parity(a) * chart.parity(b))
            defect = gamma_lower[b].partial(a) - gamma_lower[a].partial(b).scale(s)
            if defect:
                out[f"{a},{b}"] = defect
    return out


def nondegenerate_reduction(data):
    """Recover ``γ_a`` and, when it exists, a polynomial effective action."""
    if data.parity != Parity.ODD:
        raise ParityError("reduction concerns odd brackets")
    chart = data.chart
    _invert_bracket(data.S)
    if not jacobi_check_densities(data).passed:
        raise PreconditionFailed("reduction needs data satisfying the four equations")
    lower = lower_gamma(data)
    theta_expected = contract(data.gamma, lower, chart)
    theta_defect = data.theta - theta_expected
    if theta_defect:
        raise InternalInconsistency(f"θ != γ^a γ_a; defect {_fmt(theta_defect)}")
    closed = closedness_defects(chart, lower)
    potential = euler_potential(chart, lower) if not closed else None
    cert = Certificate("reduce", not closed, dict(closed))
    cert.witnesses["gamma_lower"] = lower
    if potential is not None:
        cert.witnesses["action"] = potential
    cert.flags["closed"] = not closed
    cert.flags["potential_found"] = potential is not None
    return cert


def data_from_action(structure, action):
    """Corollary data: ``γ_a = -∂_a 𝒜``, ``γ^a = S^{ab} γ_b``, ``θ = γ^a γ_a``."""
    lower = action.gamma_lower
    upper = raise_gamma(structure.bracket, lower)
    theta = contract(upper, lower, structure.chart)
    return ExtendedBracketData(structure.chart, Parity.ODD, structure.bracket, upper, theta)


# master equation ------------------------------------------------------------------------


def flat_operator(structure):
    """``Δ[0]``: the canonical pencil of ``(S, 0, 0)``, independent of ``w``."""
    data = ExtendedBracketData(structure.chart, Parity.ODD, structure.bracket)
    return canonical_pencil(data).at(0)


def master_scalar(structure, action):
    """``h = e^{-𝒜/2} Δ[0] e^{𝒜/2}``, evaluated on 1, plus its two pieces.

    ``h = ½ Δ[0]𝒜 + ⅛ Σ S^{ab} (-1)^{ãb̃} ∂_a𝒜 ∂_b𝒜``.
    """
    chart = structure.chart
    d0 = flat_operator(structure)
    logd = {a: action.A.partial(a) for a in chart.names}
    h = conjugate_by_log_derivative(d0, logd, Fraction(1, 2)).apply(GradedScalar.one(chart))
    linear = d0.apply(action.A).scale(Fraction(1, 2))
    quadratic = GradedScalar.zero(chart)
    for (a, b), s in structure.bracket.components.items():
        term = s * logd[a] * logd[b]
        quadratic = quadratic + (term if sign(chart.parity(a) * chart.parity(b)) > 0 else -term)
    quadratic = quadratic.scale(Fraction(1, 8))
    if h != linear + quadratic:
        raise InternalInconsistency("conjugation identity and expanded scalar disagree")
    return h, linear, quadratic


def master_equation_check(structure, action, w=Fraction(1, 2)):
    """``Δ_w² = 0`` for the Corollary pencil, versus the scalar ``h = 0``.

    Since ``Δ_w = e^{(w-½)𝒜} (Δ[0] - h) e^{(½-w)𝒜}`` with ``h`` odd and
    ``Δ[0]² = 0``, ``Δ_w² = 0`` exactly when ``[Δ[0], h] = 0``, i.e. when
    ``h`` is a Casimir; on a non-degenerate structure odd Casimirs vanish.
    """
    if not structure.is_nondegenerate():
        raise DegenerateStructure("master equation needs a non-degenerate structure")
    d0 = flat_operator(structure)
    if d0 * d0:
        raise PreconditionFailed("Δ[0]² != 0 on this chart; the scalar route does not apply")
    data = data_from_action(structure, action)
    delta = canonical_pencil(data).at(w)
    square = delta * delta
    operator_ok = not square
    h, linear, quadratic = master_scalar(structure, action)
    scalar_ok = not h
    if operator_ok != scalar_ok:
        raise InternalInconsistency("operator and scalar master-equation verdicts disagree")
    cert = Certificate("master", operator_ok, flags={"weight": str(Fraction(w))})
    if not operator_ok:
        cert.residuals["delta_w_squared"] = square
        cert.residuals["h"] = h
    cert.witnesses["half_laplacian"] = linear
    cert.witnesses["quadratic"] = quadratic
    return cert


__all__ = [
    "EffectiveAction",
    "ModularField",
    "OddPoissonStructure",
    "antibracket",
    "data_from_action",
    "extract_modular_field",
    "flatness_check",
    "four_equations",
    "jacobi_check_base",
    "jacobi_check_densities",
    "jacobiator",
    "lie_derivative",
    "master_equation_check",
    "master_scalar",
    "nondegenerate_reduction",
    "schouten_defect",
]
