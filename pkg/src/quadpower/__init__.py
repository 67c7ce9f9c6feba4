"""Data-efficient quadrotor power consumption modeling toolkit."""

__version__ = "0.1.0"

from .core import (
    FEATURE_COLUMNS,
    ContractError,
    Dataset,
    FlightSample,
    LossConfig,
    SplitSpec,
    split,
    split_indices,
    total_loss,
)

__all__ = [
    "FEATURE_COLUMNS", "ContractError", "Dataset", "FlightSample",
    "LossConfig", "SplitSpec", "split", "split_indices", "total_loss",
    "__version__",
]
