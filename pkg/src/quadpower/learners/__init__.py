from .base import (
    GbrtParams,
    RegressorConfig,
    Standardization,
    TrainedRegressor,
    fit_gbrt,
    fit_random_forest,
    fit_regressor,
)
from .elastic_net import LinearModel, NumericError, fit_elastic_net, ols_fit
from .mlp import MlpParams, fit_mlp_core, gradient_check
from .tree import RegressionTree, fit_tree

__all__ = [
    "GbrtParams", "RegressorConfig", "Standardization", "TrainedRegressor",
    "fit_gbrt", "fit_random_forest", "fit_regressor",
    "LinearModel", "NumericError", "fit_elastic_net", "ols_fit",
    "MlpParams", "fit_mlp_core", "gradient_check",
    "RegressionTree", "fit_tree",
]
