from pydantic import BaseModel, Field, model_validator

from pdit_qkd.models.channel import PauliDistribution


class RateInput(BaseModel):
    """A Pauli channel together with Alice's added bit-flip noise q."""

    distribution: PauliDistribution
    q: float = Field(ge=0.0, le=0.5)


class RateResult(BaseModel):
    """Asymptotic key rate and its three entropy terms (bits per sifted bit).

    R = 1 - bit_term - phase_term + shield_term, where bit_term = H2(p~),
    phase_term = sum_u p_u H2(p_{1|u}) and shield_term = sum_u p_u H2(lambda+_u).
    """

    R: float
    q: float
    p_tilde: float
    bit_term: float
    phase_term: float
    shield_term: float
    lambda_plus: tuple[float, float]

    @model_validator(mode="after")
    def check_identity(self) -> "RateResult":
        expected = 1.0 - self.bit_term - self.phase_term + self.shield_term
        if abs(self.R - expected) > 1e-12:
            raise ValueError(f"R = {self.R} but the terms give {expected}")
        if self.R > 1.0 + 1e-12:
            raise ValueError(f"R = {self.R} exceeds 1")
        return self


class OptimizedRate(BaseModel):
    q_star: float
    R_star: float
    result: RateResult


class RateCurveRow(BaseModel):
    Q: float
    q: float
    R: float
    bit_term: float
    phase_term: float
    shield_term: float


class ThresholdResult(BaseModel):
    protocol: str
    threshold: float
    q_policy: str
    bracket: tuple[float, float]
    iterations: int
