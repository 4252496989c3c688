"""Computable Wick star products on convergent Taylor jets."""

from .fock import (
    FockOperator,
    FockVector,
    bf_inner,
    coherent_vector,
    covariance_check,
    expectation,
    ladder_ops,
    pi_matrix,
    psi_projection,
    unitary_U_matrix,
)
from .jet import (
    Jet,
    TruncationError,
    badguy,
    constant,
    coordinate,
    decoy,
    exponential,
    jet_conjugate,
    jet_derivative,
    jet_evaluate,
    jet_from_json,
    jet_from_polynomial,
    jet_linear,
    jet_pointwise_mul,
    jet_poisson,
    jet_to_json,
    jet_translate,
    taylor_remainder,
    taylor_truncation,
)
from .multiindex import (
    DimensionError,
    MultiIndex,
    mi_enumerate,
    multi_binomial,
    multi_factorial,
)
from .seminorm import (
    SeminormParams,
    SeriesEvaluation,
    continuity_constant,
    divergence_probe,
    h_base,
    h_recursive,
    inequality_suite,
    norm_m,
    norm_ml,
    seminorm,
)
from .wick import (
    HeisenbergElement,
    adjoint_translation,
    generator_J,
    rescale,
    star_exp_partial,
    star_power,
    unitary_u,
    wick_star,
    wick_star_graded,
)

__version__ = "0.1.0"

__all__ = [
    "adjoint_translation",
    "badguy",
    "bf_inner",
    "coherent_vector",
    "constant",
    "continuity_constant",
    "coordinate",
    "covariance_check",
    "decoy",
    "DimensionError",
    "divergence_probe",
    "expectation",
    "exponential",
    "FockOperator",
    "FockVector",
    "generator_J",
    "h_base",
    "h_recursive",
    "HeisenbergElement",
    "inequality_suite",
    "Jet",
    "jet_conjugate",
    "jet_derivative",
    "jet_evaluate",
    "jet_from_json",
    "jet_from_polynomial",
    "jet_linear",
    "jet_pointwise_mul",
    "jet_poisson",
    "jet_to_json",
    "jet_translate",
    "ladder_ops",
    "mi_enumerate",
    "multi_binomial",
    "multi_factorial",
    "MultiIndex",
    "norm_m",
    "norm_ml",
    "pi_matrix",
    "psi_projection",
    "rescale",
    "seminorm",
    "SeminormParams",
    "SeriesEvaluation",
    "star_exp_partial",
    "star_power",
    "taylor_remainder",
    "taylor_truncation",
    "TruncationError",
    "unitary_u",
    "unitary_U_matrix",
    "wick_star",
    "wick_star_graded",
]
