"""Python bindings for the amp library."""

from ._core import (
    AmpError,
    bayes_map,
    default_config,
    experiment_names,
    lambda_hat_from_eigenvalue,
    lasso_calibration,
    leading_eigenpair,
    logistic_fixed_point,
    mest_fixed_point,
    mmse,
    rho_star,
    run_experiment,
    sample_goe,
)

__all__ = [
    "AmpError",
    "bayes_map",
    "default_config",
    "experiment_names",
    "lambda_hat_from_eigenvalue",
    "lasso_calibration",
    "leading_eigenpair",
    "logistic_fixed_point",
    "mest_fixed_point",
    "mmse",
    "rho_star",
    "run_experiment",
    "sample_goe",
]
