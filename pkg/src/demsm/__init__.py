"""Sharp partial-identification bounds for causal means and average treatment
effects under the distributionally enhanced marginal sensitivity model."""

from .bounds import (
    BoundsReport,
    Model,
    ObservedLaw,
    SensitivitySpec,
    Stratum,
    aggregate_bounds,
    demsm_nu0_bounds,
    demsm_nu1_bounds,
    demsm_nu1_upper_minform,
    emsm_nu0_bounds_recommended,
    emsm_nu1_bounds_recommended,
    msm_nu0_bounds,
    msm_nu1_bounds,
    sensitivity_curve,
)
from .dist import (
    WeightedDistribution,
    check_loss_expectation,
    make_weighted_dist,
    mean,
    quantile,
)
from .kernels import BACKEND
from .params import (
    EmsmDeltaSpec,
    GammaPair,
    ImpliedLambda,
    LambdaPair,
    emsm_implied_lambdas,
    emsm_recommended_deltas,
    implied_emsm_deltas,
    implied_lambda,
    implied_lambda_control,
    matching_gammas,
    tau_level,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundsReport",
    "EmsmDeltaSpec",
    "GammaPair",
    "ImpliedLambda",
    "LambdaPair",
    "Model",
    "ObservedLaw",
    "SensitivitySpec",
    "Stratum",
    "WeightedDistribution",
    "aggregate_bounds",
    "check_loss_expectation",
    "demsm_nu0_bounds",
    "demsm_nu1_bounds",
    "demsm_nu1_upper_minform",
    "emsm_implied_lambdas",
    "emsm_nu0_bounds_recommended",
    "emsm_nu1_bounds_recommended",
    "emsm_recommended_deltas",
    "implied_emsm_deltas",
    "implied_lambda",
    "implied_lambda_control",
    "make_weighted_dist",
    "matching_gammas",
    "mean",
    "msm_nu0_bounds",
    "msm_nu1_bounds",
    "quantile",
    "sensitivity_curve",
    "tau_level",
]
