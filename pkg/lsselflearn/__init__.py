"""lsselflearn - least-squares self-learning with soft and hard pseudo-labels."""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, NumericalError, SelfLearnError
from .model import LabelEncoding, RidgeConfig, fit_ridge, predict
from .selflearning import BcdConfig, FitResult, Variant, enumerate_local_minima, run_bcd

__all__ = [
    "SelfLearnError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "LabelEncoding",
    "RidgeConfig",
    "fit_ridge",
    "predict",
    "BcdConfig",
    "FitResult",
    "Variant",
    "run_bcd",
    "enumerate_local_minima",
]
