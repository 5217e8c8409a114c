from .channel import (
    BlockLabel,
    BlockState,
    Marginals,
    apply_noisy_processing,
    build_key_state,
    effective_bit_error,
    estimate_rates,
    expand_with_eve,
    marginals,
    model_to_distribution,
    sample_error_patterns,
)
from .codes import CodeError, LinearCode
from .pgm import (
    CompletenessError,
    Ensemble,
    IsometricExtension,
    RankOnePOVM,
    average_error,
    neumark_extend,
    pgm_construct,
    phi_v,
    random_coset_error,
    sigma_state,
)
from .pstate import (
    PrivateState,
    TwistingOperator,
    key_security_distance,
    key_security_distance_blocks,
    twist,
    verify_private_state,
)
from .distill import (
    DistillationError,
    DistillationOutcome,
    EndToEndResult,
    UntwistingOperator,
    apply_untwisting,
    bit_error_correct,
    build_rho,
    construct_untwisting,
    end_to_end,
    phase_correct,
    phase_twist_factorizations,
    untwist_fidelity,
)
from .rates import (
    RateError,
    key_rate,
    lambda_plus,
    limit_curvature,
    optimize_q,
    rate_curve,
    threshold,
)

__all__ = [
    "BlockLabel",
    "BlockState",
    "Marginals",
    "apply_noisy_processing",
    "build_key_state",
    "effective_bit_error",
    "estimate_rates",
    "expand_with_eve",
    "marginals",
    "model_to_distribution",
    "sample_error_patterns",
    "CodeError",
    "LinearCode",
    "CompletenessError",
    "Ensemble",
    "IsometricExtension",
    "RankOnePOVM",
    "average_error",
    "neumark_extend",
    "pgm_construct",
    "phi_v",
    "random_coset_error",
    "sigma_state",
    "PrivateState",
    "TwistingOperator",
    "key_security_distance",
    "key_security_distance_blocks",
    "twist",
    "verify_private_state",
    "DistillationError",
    "DistillationOutcome",
    "EndToEndResult",
    "UntwistingOperator",
    "apply_untwisting",
    "bit_error_correct",
    "build_rho",
    "construct_untwisting",
    "end_to_end",
    "phase_correct",
    "phase_twist_factorizations",
    "untwist_fidelity",
    "RateError",
    "key_rate",
    "lambda_plus",
    "limit_curvature",
    "optimize_q",
    "rate_curve",
    "threshold",
]
