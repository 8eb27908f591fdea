"""Inexact Picard coupling of one-group slab S_N neutronics with a pin heat model."""
from .model import (
    ConfigError,
    CouplingSettings,
    CrossSectionSet,
    PinParameters,
    Problem,
    SlabModel,
    UnphysicalStateError,
    gauss_legendre,
    validate,
    xs_at_temperature,
)
from .coupling import picard_solve, measure_inner_rate
from .fourier import FaInput, predict_rho

__all__ = [
    "ConfigError",
    "CouplingSettings",
    "CrossSectionSet",
    "FaInput",
    "PinParameters",
    "Problem",
    "SlabModel",
    "UnphysicalStateError",
    "gauss_legendre",
    "measure_inner_rate",
    "picard_solve",
    "predict_rho",
    "validate",
    "xs_at_temperature",
]
