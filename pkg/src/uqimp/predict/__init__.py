from .base import (
    CallablePredictor,
    CounterfactualUnsupportedError,
    ExternalPredictions,
    ExternalPredictor,
    LinearPredictor,
    Predictor,
    RankDeficientError,
    finite_difference_gradient,
    fit_ols,
    wrap_external,
)
from .basis import AdditivePolyPredictor, BasisConfig, PolyBasis, fit_additive_poly
from .mcp import (
    McpConfig,
    McpConvergenceError,
    fit_mcp_additive,
    mcp_coordinate_descent,
    mcp_objective,
    mcp_penalty,
    mcp_threshold,
)

__all__ = [
    "AdditivePolyPredictor",
    "BasisConfig",
    "CallablePredictor",
    "CounterfactualUnsupportedError",
    "ExternalPredictions",
    "ExternalPredictor",
    "LinearPredictor",
    "McpConfig",
    "McpConvergenceError",
    "PolyBasis",
    "Predictor",
    "RankDeficientError",
    "finite_difference_gradient",
    "fit_additive_poly",
    "fit_mcp_additive",
    "fit_ols",
    "mcp_coordinate_descent",
    "mcp_objective",
    "mcp_penalty",
    "mcp_threshold",
    "wrap_external",
]
