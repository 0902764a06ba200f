"""Discrete mean-risk minimization by binary search on a perspective upper bound."""

from meanrisk.core import (
    Calibration,
    ConfidenceSpec,
    DenseCovariance,
    DiagonalCovariance,
    ExplicitSet,
    FactorCovariance,
    InterdictionSet,
    MeanRiskInstance,
    Solution,
    mean_risk_value,
    omega_from_confidence,
)
from meanrisk.errors import CapacityError, ModelError, ParseError
from meanrisk.search import SearchConfig, binary_local_search, global_scan, parametric_exact, solve

__version__ = "0.1.0"

__all__ = [
    "Calibration",
    "CapacityError",
    "ConfidenceSpec",
    "DenseCovariance",
    "DiagonalCovariance",
    "ExplicitSet",
    "FactorCovariance",
    "InterdictionSet",
    "MeanRiskInstance",
    "ModelError",
    "ParseError",
    "SearchConfig",
    "Solution",
    "binary_local_search",
    "global_scan",
    "mean_risk_value",
    "omega_from_confidence",
    "parametric_exact",
    "solve",
]
