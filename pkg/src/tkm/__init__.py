"""Tensor kernel machines with CPD weights and source-regularized adaptation."""

from .cpd import CpdTensor, DenseTensor
from .featmap import FeatureMapConfig
from .solver import TkmModel, TrainConfig, fit_adapt_tkrr, fit_tkrr, predict

__all__ = [
    "CpdTensor",
    "DenseTensor",
    "FeatureMapConfig",
    "TkmModel",
    "TrainConfig",
    "fit_adapt_tkrr",
    "fit_tkrr",
    "predict",
]
__version__ = "0.1.0"
