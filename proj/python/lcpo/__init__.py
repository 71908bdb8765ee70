"""Pairwise preference optimization with EM-denoised annotator labels.

The heavy lifting lives in the compiled extension; this package re-exports
the public surface.
"""

from ._core import (
    AnnotatorTable,
    CalibratedBatch,
    EmConfig,
    EtaUpdateMode,
    Features,
    FixedPointResult,
    GeneratorSpec,
    GridMleResult,
    GridSpec,
    LossKind,
    LossSpec,
    MetricsRow,
    OptimizerConfig,
    PolicyParams,
    PreferencePair,
    PStarLaw,
    ScorePair,
    TrainResult,
    bt_consistency,
    derivative_identity_residual,
    e_step_weight,
    effective_reliability,
    generate,
    grid_mle_eta,
    inject_noise,
    iterate_to_fixed_point,
    loglik_deriv,
    loglik_eta,
    loglik_increment,
    loss_forward,
    loss_reverse,
    marginal_loglik,
    operator_T,
    pref_logit,
    pref_probability,
    preference_accuracy,
    run_lcpo,
    run_plain,
    true_p_star,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatorTable",
    "CalibratedBatch",
    "EmConfig",
    "EtaUpdateMode",
    "Features",
    "FixedPointResult",
    "GeneratorSpec",
    "GridMleResult",
    "GridSpec",
    "LossKind",
    "LossSpec",
    "MetricsRow",
    "OptimizerConfig",
    "PolicyParams",
    "PreferencePair",
    "PStarLaw",
    "ScorePair",
    "TrainResult",
    "bt_consistency",
    "derivative_identity_residual",
    "e_step_weight",
    "effective_reliability",
    "generate",
    "grid_mle_eta",
    "inject_noise",
    "iterate_to_fixed_point",
    "loglik_deriv",
    "loglik_eta",
    "loglik_increment",
    "loss_forward",
    "loss_reverse",
    "marginal_loglik",
    "operator_T",
    "pref_logit",
    "pref_probability",
    "preference_accuracy",
    "run_lcpo",
    "run_plain",
    "true_p_star",
]
