from .channel import (
    ErrorPattern,
    PauliDistribution,
    ProtocolKind,
    ProtocolModel,
    RateEstimate,
)
from .rates import OptimizedRate, RateCurveRow, RateInput, RateResult, ThresholdResult
from .experiment import (
    CodeSpec,
    CosetErrorStatistics,
    CurveSpec,
    DistillationReport,
    ExperimentSpec,
    PditTrial,
    PditVerification,
    PgmSpec,
    RateSpec,
    SimulateSpec,
    ThresholdSpec,
    VerifyPditSpec,
)

__all__ = [
    "ErrorPattern",
    "PauliDistribution",
    "ProtocolKind",
    "ProtocolModel",
    "RateEstimate",
    "OptimizedRate",
    "RateCurveRow",
    "RateInput",
    "RateResult",
    "ThresholdResult",
    "CodeSpec",
    "CosetErrorStatistics",
    "CurveSpec",
    "DistillationReport",
    "ExperimentSpec",
    "PditTrial",
    "PditVerification",
    "PgmSpec",
    "RateSpec",
    "SimulateSpec",
    "ThresholdSpec",
    "VerifyPditSpec",
]
