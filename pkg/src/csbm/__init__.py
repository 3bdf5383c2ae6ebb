"""Simulation and inference toolkit for the contextual stochastic block model.

Submodules:
    model        parameters, instance sampling, persistence
    cycles       factor-graph cycle statistics, limiting moments, detection
    saw          self-avoiding-walk pair estimators
    recovery     correlation-matrix fit, sign rounding, overlap
    oracle       brute-force references (naive cycles, exact likelihood)
    lr_expansion limiting log-likelihood-ratio series and second-moment bound
    harness      seeded Monte Carlo experiments, sweeps, summaries
    cli          command-line entry point
"""

from .model import Instance, ModelParams, load_instance, sample_instance, save_instance
from .cycles import (
    CycleIndex,
    CycleMoments,
    CycleStatReport,
    count_cycles,
    cycle_statistic,
    detection_test,
    theoretical_moments,
)
from .saw import PairEstimateMatrix, WalkConfig, pair_estimator
from .recovery import (
    RecoveryReport,
    fit_correlation_matrix,
    gaussian_sign_rounding,
    overlap,
    weak_recovery_pipeline,
)
from .oracle import (
    bayes_pairwise_posterior,
    exact_likelihood_ratio,
    naive_cycle_statistic,
)
from .lr_expansion import (
    TruncationConfig,
    empirical_logLR_from_instance,
    limiting_logLR_sample_H0,
    second_moment_bound,
)

__all__ = [
    "Instance",
    "ModelParams",
    "load_instance",
    "sample_instance",
    "save_instance",
    "CycleIndex",
    "CycleMoments",
    "CycleStatReport",
    "count_cycles",
    "cycle_statistic",
    "detection_test",
    "theoretical_moments",
    "PairEstimateMatrix",
    "WalkConfig",
    "pair_estimator",
    "RecoveryReport",
    "fit_correlation_matrix",
    "gaussian_sign_rounding",
    "overlap",
    "weak_recovery_pipeline",
    "bayes_pairwise_posterior",
    "exact_likelihood_ratio",
    "naive_cycle_statistic",
    "TruncationConfig",
    "empirical_logLR_from_instance",
    "limiting_logLR_sample_H0",
    "second_moment_bound",
]

__version__ = "0.1.0"
