"""Sparse gradient learning: variable selection and dimension reduction from
group-sparse estimates of the gradient of a regression or classification
function."""

from ._core import (
    DegenerateData,
    InvalidInput,
    NumericalError,
    decision,
    edr_directions,
    fit_classification,
    fit_regression,
    lasso,
    regression_lambda_max,
    segcm,
    select,
    turlach,
    turlach_gradient,
    two_spheres,
)

__all__ = [
    "DegenerateData",
    "InvalidInput",
    "NumericalError",
    "decision",
    "edr_directions",
    "fit_classification",
    "fit_regression",
    "lasso",
    "regression_lambda_max",
    "segcm",
    "select",
    "turlach",
    "turlach_gradient",
    "two_spheres",
]
