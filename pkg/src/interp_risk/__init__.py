"""Pooled min-norm and ridge interpolation under transfer learning.

Estimators for pooled interpolation across a source and a target dataset,
deterministic generalization-error formulas under signal shift and covariate
shift, SNR/SSR estimation from raw data, and a reproducible simulation
harness with a CLI.
"""

from .covariate_shift import (
    CovariateSolution,
    HeterogeneityProfile,
    JointSpectrum,
    MarginalSpectrum,
    SignalSpectrum,
    SolverSettings,
    heterogeneity_profile,
    risk_covariate_shift,
    solve_bias_system,
    solve_interpolator_system,
    solve_ridge_covariate,
    theory_target_only_anisotropic,
)
from .errors import (
    ConvergenceWarning,
    DegreesOfFreedomError,
    DomainError,
    EstimateUndefinedError,
    EstimationError,
    InputError,
    SolverError,
)
from .estimators import (
    DatasetPair,
    PopulationSpec,
    RiskBreakdown,
    RiskEstimate,
    empirical_risk_conditional,
    empirical_risk_monte_carlo,
    fit_gradient_descent,
    fit_pooled_min_norm,
    fit_pooled_ridge,
    fit_weighted_pooled,
    gd_step_bound,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    generate_instance,
    run_sweep,
)
from .model_shift import (
    OptimalTargetSize,
    RidgeLimitQuantities,
    ShiftSummary,
    TransferDecision,
    decide_transfer,
    mp_resolvent,
    optimal_target_size,
    theory_min_norm_model_shift,
    theory_multi_source,
    theory_ridge_model_shift,
    theory_target_only_isotropic,
)
from .snr import (
    DebiasedFit,
    LassoConfig,
    SnrReport,
    debias,
    decide_from_data,
    estimate_snr_ssr,
    lasso_fit,
    lasso_kkt_violation,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceWarning",
    "CovariateSolution",
    "DatasetPair",
    "DebiasedFit",
    "DegreesOfFreedomError",
    "DomainError",
    "EstimateUndefinedError",
    "EstimationError",
    "ExperimentConfig",
    "HeterogeneityProfile",
    "InputError",
    "JointSpectrum",
    "LassoConfig",
    "MarginalSpectrum",
    "OptimalTargetSize",
    "PopulationSpec",
    "ResultRow",
    "RidgeLimitQuantities",
    "RiskBreakdown",
    "RiskEstimate",
    "ShiftSummary",
    "SignalSpectrum",
    "SnrReport",
    "SolverError",
    "SolverSettings",
    "TransferDecision",
    "debias",
    "decide_from_data",
    "decide_transfer",
    "empirical_risk_conditional",
    "empirical_risk_monte_carlo",
    "estimate_snr_ssr",
    "fit_gradient_descent",
    "fit_pooled_min_norm",
    "fit_pooled_ridge",
    "fit_weighted_pooled",
    "gd_step_bound",
    "generate_instance",
    "heterogeneity_profile",
    "lasso_fit",
    "lasso_kkt_violation",
    "mp_resolvent",
    "optimal_target_size",
    "risk_covariate_shift",
    "run_sweep",
    "solve_bias_system",
    "solve_interpolator_system",
    "solve_ridge_covariate",
    "theory_min_norm_model_shift",
    "theory_multi_source",
    "theory_ridge_model_shift",
    "theory_target_only_anisotropic",
    "theory_target_only_isotropic",
]
