"""Battery state-of-health prediction with a spline-augmented LSTM."""

from ._core import (
    Activation,
    ConfigError,
    CycleRecord,
    DivergenceError,
    DomainError,
    Model,
    ParseError,
    ShapeError,
    SplineBasis,
    activation_apply,
    activation_derivative,
    error_reduction,
    generate,
    load,
    load_records,
    mape,
    rmse,
    sigmoid,
    silu,
    soh_from_capacity,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "ConfigError",
    "CycleRecord",
    "DivergenceError",
    "DomainError",
    "Model",
    "ParseError",
    "ShapeError",
    "SplineBasis",
    "activation_apply",
    "activation_derivative",
    "error_reduction",
    "generate",
    "load",
    "load_records",
    "mape",
    "rmse",
    "sigmoid",
    "silu",
    "soh_from_capacity",
    "train",
]
