"""Exact symbolic checks for second-order operators, brackets and densities."""

from densalg.graded import Chart, CoordinateChange, GradedScalar, Parity, berezinian
from densalg.diffop import DiffOperator, WeightedOperator, formal_adjoint, pullback
from densalg.symbols import (
    Bracket,
    MomentumPolynomial,
    bracket_from_operator,
    canonical_bracket,
    curvature,
    principal_symbol,
    subprincipal_symbol,
    verify_connection_law,
)
from densalg.densities import (
    DensityElement,
    ExtendedBracketData,
    dens_scalar_product,
    densities_bracket,
)
from densalg.pencil import (
    OperatorPencil,
    canonical_pencil,
    check_selfadjoint,
    pencil_from_operator,
    pencil_pullback,
)
from densalg.bv import (
    EffectiveAction,
    ModularField,
    OddPoissonStructure,
    extract_modular_field,
    flatness_check,
    jacobi_check_base,
    jacobi_check_densities,
    master_equation_check,
    nondegenerate_reduction,
)

__all__ = [
    "Bracket",
    "Chart",
    "CoordinateChange",
    "DensityElement",
    "DiffOperator",
    "EffectiveAction",
    "ExtendedBracketData",
    "GradedScalar",
    "ModularField",
    "MomentumPolynomial",
    "OddPoissonStructure",
    "OperatorPencil",
    "Parity",
    "WeightedOperator",
    "berezinian",
    "bracket_from_operator",
    "canonical_bracket",
    "canonical_pencil",
    "check_selfadjoint",
    "curvature",
    "dens_scalar_product",
    "densities_bracket",
    "extract_modular_field",
    "flatness_check",
    "formal_adjoint",
    "jacobi_check_base",
    "jacobi_check_densities",
    "master_equation_check",
    "nondegenerate_reduction",
    "pencil_from_operator",
    "pencil_pullback",
    "principal_symbol",
    "pullback",
    "subprincipal_symbol",
    "verify_connection_law",
]
