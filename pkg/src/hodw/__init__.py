"""Compressive sensing of color images with nonlocal higher-order
dictionaries and weighted shrinkage."""

__version__ = "0.1.0"

from .backend import BACKEND_NAME, COMPILED  # noqa: F401
from .hodict import HigherOrderDictionary, analyze, learn_dictionary, synthesize  # noqa: F401
from .metrics import cross_channel_correlation, psnr  # noqa: F401
from .regularizer import WeightDesign, sigma_star_default  # noqa: F401
from .sensing import (MeasurementSet, SensingOperator, adjoint,  # noqa: F401
                      build_operator, read_measurements, sense,
                      write_measurements)
from .solver import RecoveryConfig, recover, recover_oracle  # noqa: F401
