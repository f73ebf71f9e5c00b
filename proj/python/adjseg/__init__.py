"""Residual segmentation networks trained by an adjoint sweep, with an output smoothness penalty."""

from ._core import (
    Activation,
    ConfigError,
    NetworkParams,
    NumericalError,
    StateError,
    forward,
    gen_scene,
    gradcheck,
    gradcheck_problem,
    gradient,
    init_params,
    iou,
    objective,
    predict,
    sample_labels,
    smoother_grad,
    smoother_value,
    sweep,
    train,
)

__all__ = [
    "Activation",
    "ConfigError",
    "NetworkParams",
    "NumericalError",
    "StateError",
    "forward",
    "gen_scene",
    "gradcheck",
    "gradcheck_problem",
    "gradient",
    "init_params",
    "iou",
    "objective",
    "predict",
    "sample_labels",
    "smoother_grad",
    "smoother_value",
    "sweep",
    "train",
]
