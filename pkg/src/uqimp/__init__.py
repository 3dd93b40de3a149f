"""Feature-importance curves over unconditional quantiles for pre-trained predictors."""

from .datagen import (
    Dataset,
    ErrorKind,
    ErrorLaw,
    FeatureSpec,
    ModelSpec,
    generate,
    generate_linear_benchmark,
    sample_errors,
    sample_features,
)
from .density import (
    KdeConfig,
    QuantileGrid,
    ResidualTailModel,
    TailConfig,
    empirical_quantile,
    fit_residual_density,
    hill_estimator,
    kde_at,
    out_of_range_fraction,
)
from .importance import ImportanceCurve, estimate_importance, influence_function, shift_oracle
from .predict import (
    BasisConfig,
    ExternalPredictions,
    McpConfig,
    Predictor,
    fit_additive_poly,
    fit_mcp_additive,
    fit_ols,
    wrap_external,
)
from .pruning import PruneConfig, PruningReport, gof_test, prun_metric, prune_at_tau, prune_multi

__version__ = "0.1.0"
