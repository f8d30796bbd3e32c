"""Spectral convergence bounds for classical and quantum Markov semigroups."""

from .analysis import MapAnalysis, analyze_map
from .bounds import DetailedBalanceCert, bound_records, sigma_balance_map
from .core import (
    MapKind,
    MapMatrix,
    NormKind,
    TransitionMap,
    asymptotic_part,
    distance_curve,
    norm_convert,
    op_norm,
    power,
)
from .errors import (
    BoundNotApplicable,
    ConvergenceError,
    DimensionError,
    InvariantError,
    SpecmixError,
    ToleranceError,
    UnboundedSemigroupError,
)
from .spectral import blaschke_inv_sup, minimal_polynomial, spectral_data

__version__ = "0.1.0"

__all__ = [
    "BoundNotApplicable",
    "ConvergenceError",
    "DetailedBalanceCert",
    "DimensionError",
    "InvariantError",
    "MapAnalysis",
    "MapKind",
    "MapMatrix",
    "NormKind",
    "SpecmixError",
    "ToleranceError",
    "TransitionMap",
    "UnboundedSemigroupError",
    "analyze_map",
    "asymptotic_part",
    "blaschke_inv_sup",
    "bound_records",
    "distance_curve",
    "minimal_polynomial",
    "norm_convert",
    "op_norm",
    "power",
    "sigma_balance_map",
    "spectral_data",
]
