"""Per-command experiment specs and the JSON records the commands emit."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from pdit_qkd.models.channel import PauliDistribution, ProtocolKind, ProtocolModel

QPolicy = Literal["optimized", "fixed"]
CodeKind = Literal["full", "empty", "random"]
SubsetMethod = Literal["code", "subset"]


class ExperimentSpec(BaseModel):
    """Common base: unknown keys are schema errors."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: str


class ChannelSpecMixin(BaseModel):
    protocol: ProtocolKind = "bb84"
    Q: float = Field(default=0.0, ge=0.0, lt=0.5)
    distribution: PauliDistribution | None = None

    def model(self) -> ProtocolModel:
        return ProtocolModel(kind=self.protocol, Q=self.Q, distribution=self.distribution)


class RateSpec(ExperimentSpec, ChannelSpecMixin):
    command: Literal["rate"] = "rate"
    q: float = Field(default=0.0, ge=0.0, le=0.5)
    optimize_q: bool = False


class ThresholdSpec(ExperimentSpec):
    command: Literal["threshold"] = "threshold"
    protocol: Literal["bb84", "six-state"] = "bb84"
    q_policy: QPolicy = "optimized"
    q: float = Field(default=0.0, ge=0.0, le=0.5)


class CurveSpec(ExperimentSpec):
    command: Literal["curve"] = "curve"
    protocol: Literal["bb84", "six-state"] = "bb84"
    Q_start: float = Field(default=0.0, ge=0.0, lt=0.5)
    Q_stop: float = Field(default=0.15, ge=0.0, lt=0.5)
    points: int = Field(default=31, ge=2, le=10_000)
    q_policy: QPolicy = "optimized"
    q: float = Field(default=0.0, ge=0.0, le=0.5)

    @model_validator(mode="after")
    def check_range(self) -> "CurveSpec":
        if self.Q_stop < self.Q_start:
            raise ValueError(f"Q_stop {self.Q_stop} is below Q_start {self.Q_start}")
        return self

    def grid(self) -> list[float]:
        step = (self.Q_stop - self.Q_start) / (self.points - 1)
        return [round(self.Q_start + i * step, 12) for i in range(self.points)]


class CodeSpec(BaseModel):
    """A binary linear code: full (n checks), empty, explicit rows or random."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: CodeKind = "full"
    checks: int | None = Field(default=None, ge=0)
    rows: list[str] | None = None

    @model_validator(mode="after")
    def check_kind(self) -> "CodeSpec":
        if self.kind == "random" and self.checks is None and self.rows is None:
            raise ValueError("A random code needs a number of checks")
        return self


class SimulateSpec(ExperimentSpec, ChannelSpecMixin):
    command: Literal["simulate"] = "simulate"
    n: int = Field(default=2, ge=1)
    q: float = Field(default=0.0, ge=0.0, le=0.5)
    bit_code: CodeSpec = CodeSpec(kind="full")
    phase_code: CodeSpec = CodeSpec(kind="empty")
    seed: int | None = None

    @model_validator(mode="after")
    def check_seed(self) -> "SimulateSpec":
        stochastic = "random" in (self.bit_code.kind, self.phase_code.kind)
        if stochastic and self.seed is None:
            raise ValueError("A seed is required when a code is drawn at random")
        return self


class PgmSpec(ExperimentSpec, ChannelSpecMixin):
    command: Literal["pgm"] = "pgm"
    Q: float = Field(default=0.1, ge=0.0, lt=0.5)
    n: int = Field(default=4, ge=1)
    q: float = Field(default=0.1, ge=0.0, le=0.5)
    set_exponent: float = Field(default=0.3, ge=0.0, le=1.0)
    trials: int = Field(default=50, ge=1)
    seed: int
    method: SubsetMethod = "code"
    conditional: bool = False


class VerifyPditSpec(ExperimentSpec):
    command: Literal["verify-pdit"] = "verify-pdit"
    key_qubits: int = Field(default=1, ge=1, le=2)
    shield_qubits: int = Field(default=1, ge=1, le=2)
    trials: int = Field(default=20, ge=1)
    perturbation: float = Field(default=0.0, ge=0.0, le=1.0)
    seed: int


class CosetErrorStatistics(BaseModel):
    """Decoding-error statistics of the PGM over random phase cosets."""

    n: int
    q: float
    exponent: float
    set_size: int
    method: SubsetMethod
    conditional: bool
    trials: int
    seed: int
    mean: float
    std: float
    min: float
    max: float
    quantiles: dict[str, float]


class DistillationReport(BaseModel):
    """Result of one end-to-end pipeline run."""

    n: int
    q: float
    distribution: PauliDistribution
    bit_checks: int
    phase_checks: int
    cosets: int
    fidelity: float
    epsilon: float
    average_error: float
    explicit: bool
    fidelity_explicit: float | None = None
    untwisted_distance: float | None = None
    key_security_distance: float | None = None

    @model_validator(mode="after")
    def check_epsilon(self) -> "DistillationReport":
        expected = max(0.0, 1.0 - self.fidelity**2) ** 0.5
        if abs(self.epsilon - expected) > 1e-12:
            raise ValueError(f"epsilon {self.epsilon} does not match sqrt(1 - F^2) = {expected}")
        return self


class PditTrial(BaseModel):
    trial: int
    key_security_distance: float
    fidelity: float
    epsilon: float


class PditVerification(BaseModel):
    key_qubits: int
    shield_qubits: int
    perturbation: float
    seed: int
    max_key_security_distance: float
    min_fidelity: float
    trials: list[PditTrial]
