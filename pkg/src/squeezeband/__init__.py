"""Steady states, stochastic simulation and optimal filtering of a parametrically
driven, continuously measured mechanical oscillator in the quadrature frame."""

from .covariance import (
    CovarianceTriple,
    SqueezingSolution,
    covariance_from_axes,
    principal_axes,
    rotate,
)
from .dynamics import (
    ConditionalTrajectory,
    MeasurementRecord,
    MomentState,
    RsbParams,
    TruePath,
    VarianceFlow,
    integrate_variances,
    rsb_deterministic_mean_rhs,
    rsb_variance_rhs,
    simulate_conditional,
    simulate_truth_and_record,
    unconditional_covariance,
    variance_rhs,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    ParameterError,
    SqueezebandError,
    StepSizeError,
    ThresholdError,
    ValidityWarning,
)
from .filtering import (
    EstimatePath,
    FilterParams,
    filter_mse_ensemble,
    filter_params,
    filter_state_space,
    frequency_response,
    kernel_form,
)
from .params import (
    V_GROUND,
    CavityParams,
    DerivedQuantities,
    MeasurementParams,
    OscillatorParams,
    PumpParams,
    derived_quantities,
    mu_for_snr,
    signal_to_noise,
    threshold,
)
from .steady_state import (
    ConditionalSolution,
    appendix_residual,
    bare_conditional_variance,
    conditional_angle,
    conditional_covariance,
    conditional_variances,
    rsb_squeezing,
    rsb_steady_state,
    unconditional_squeezing,
    unconditional_steady_state,
)

__version__ = "0.1.0"

__all__ = [
    "appendix_residual",
    "bare_conditional_variance",
    "CavityParams",
    "conditional_angle",
    "conditional_covariance",
    "conditional_variances",
    "ConditionalSolution",
    "ConditionalTrajectory",
    "ConfigError",
    "ConvergenceError",
    "covariance_from_axes",
    "CovarianceTriple",
    "derived_quantities",
    "DerivedQuantities",
    "DivergenceError",
    "EstimatePath",
    "filter_mse_ensemble",
    "filter_params",
    "filter_state_space",
    "FilterParams",
    "frequency_response",
    "integrate_variances",
    "kernel_form",
    "MeasurementParams",
    "MeasurementRecord",
    "MomentState",
    "mu_for_snr",
    "OscillatorParams",
    "ParameterError",
    "principal_axes",
    "PumpParams",
    "rotate",
    "rsb_deterministic_mean_rhs",
    "rsb_squeezing",
    "rsb_steady_state",
    "rsb_variance_rhs",
    "RsbParams",
    "signal_to_noise",
    "simulate_conditional",
    "simulate_truth_and_record",
    "SqueezebandError",
    "SqueezingSolution",
    "StepSizeError",
    "threshold",
    "ThresholdError",
    "TruePath",
    "unconditional_covariance",
    "unconditional_squeezing",
    "unconditional_steady_state",
    "V_GROUND",
    "ValidityWarning",
    "variance_rhs",
    "VarianceFlow",
]
