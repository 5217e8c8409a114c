from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pdit_qkd.quantum.bits import Bits, parse_bits
from pdit_qkd.quantum.tolerances import DISTRIBUTION_TOL


class PauliDistribution(BaseModel):
    """Single-qubit Pauli error rates p_{uv}.

    u is the bit-flip bit and v the phase-flip bit, so the fields are the
    rates of I (p00), Z (p01), X (p10) and XZ (p11).
    """

    model_config = ConfigDict(frozen=True)

    p00: float = Field(ge=0.0, le=1.0)
    p01: float = Field(ge=0.0, le=1.0)
    p10: float = Field(ge=0.0, le=1.0)
    p11: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_normalized(self) -> "PauliDistribution":
        total = self.p00 + self.p01 + self.p10 + self.p11
        if abs(total - 1.0) > DISTRIBUTION_TOL:
            raise ValueError(f"Pauli rates sum to {total}, expected 1")
        return self

    @classmethod
    def noiseless(cls) -> "PauliDistribution":
        return cls(p00=1.0, p01=0.0, p10=0.0, p11=0.0)

    @classmethod
    def from_array(cls, table) -> "PauliDistribution":
        """Build from a 2x2 table indexed [u][v]."""
        t = np.asarray(table, dtype=float)
        return cls(p00=t[0, 0], p01=t[0, 1], p10=t[1, 0], p11=t[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])

    def rate(self, u: int, v: int) -> float:
        return float(self.as_array()[u, v])

    def pattern_probability(self, u, v) -> float:
        """Probability of the i.i.d. error pattern X^u Z^v on len(u) qubits."""
        u, v = parse_bits(u), parse_bits(v)
        if len(u) != len(v):
            raise ValueError(f"Pattern lengths differ: {len(u)} vs {len(v)}")
        table = self.as_array()
        return float(np.prod([table[a, b] for a, b in zip(u, v)]))

    @property
    def is_independent(self) -> bool:
        """True when bit and phase flips are independent (p_{1|u} equal for both u)."""
        table = self.as_array()
        return bool(np.allclose(table, np.outer(table.sum(axis=1), table.sum(axis=0)), atol=1e-12))


class ErrorPattern(BaseModel):
    """A Pauli error pattern X^u Z^v on n qubits."""

    model_config = ConfigDict(frozen=True)

    u: Bits
    v: Bits

    @model_validator(mode="before")
    @classmethod
    def parse_strings(cls, data):
        if isinstance(data, dict):
            data = {k: parse_bits(val) if k in ("u", "v") else val for k, val in data.items()}
        return data

    @model_validator(mode="after")
    def check_lengths(self) -> "ErrorPattern":
        if len(self.u) != len(self.v):
            raise ValueError(f"u has length {len(self.u)} but v has length {len(self.v)}")
        return self

    @property
    def n(self) -> int:
        return len(self.u)


ProtocolKind = Literal["bb84", "six-state", "custom"]


class ProtocolModel(BaseModel):
    """A protocol family at observed bit-error rate Q, or a custom Pauli channel."""

    model_config = ConfigDict(frozen=True)

    kind: ProtocolKind = "bb84"
    Q: float = Field(default=0.0, ge=0.0, lt=0.5)
    distribution: PauliDistribution | None = None

    @model_validator(mode="after")
    def check_custom(self) -> "ProtocolModel":
        if self.kind == "custom" and self.distribution is None:
            raise ValueError("A custom protocol model needs an explicit distribution")
        return self


class RateEstimate(BaseModel):
    """Empirical Pauli rates with a Hoeffding deviation bound."""

    distribution: PauliDistribution
    epsilon: float = Field(ge=0.0)
    sample_size: int = Field(gt=0)
    confidence: float = Field(gt=0.0, lt=1.0)
