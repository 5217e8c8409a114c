"""Pauli error model and the coherent protocol states before error correction.

Eve's registers E1, E2 hold orthogonal labels |u>|v>, so the joint state is
kept as a ``BlockState``: one Alice-Bob state per Eve label, with its weight.
``expand_with_eve`` rebuilds the explicit state for small n.
"""

import logging
import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple

import numpy as np

from pdit_qkd.config import get_settings
from pdit_qkd.errors import check_budget
from pdit_qkd.models.channel import (
    ErrorPattern,
    PauliDistribution,
    ProtocolModel,
    RateEstimate,
)
from pdit_qkd.protocols import ProtocolRegistry
from pdit_qkd.quantum.bits import Bits, all_bitstrings, bits_to_int, weight
from pdit_qkd.quantum.states import (
    DimensionError,
    RegisterError,
    StateValidationError,
    StateVector,
    apply_pauli,
    total_qubits,
)
from pdit_qkd.quantum.tolerances import STRUCTURAL_TOL

logger = logging.getLogger(__name__)

KEY_A = "A"
KEY_B = "B"
NOISE_A = "A'"
RECORD_B = "B'"
PHASE_SYNDROME = "S"
EVE_BIT = "E1"
EVE_PHASE = "E2"


def model_to_distribution(model: ProtocolModel) -> PauliDistribution:
    """Pauli rates implied by a protocol model."""
    if model.kind == "custom":
        return model.distribution
    protocol = ProtocolRegistry.create(model.kind)
    return protocol.distribution(model.Q)


@dataclass(frozen=True)
class Marginals:
    """Bit/phase marginals of a Pauli distribution.

    ``p_phase_given_bit[u]`` is p_{1|u}; ``degenerate[u]`` flags p_u = 0, where
    the conditional is set to 0 by convention.
    """

    p_x: float
    p_z: float
    p_phase_given_bit: tuple[float, float]
    p_bit: tuple[float, float]
    degenerate: tuple[bool, bool]


def marginals(d: PauliDistribution) -> Marginals:
    table = d.as_array()
    p_bit = (float(table[0].sum()), float(table[1].sum()))
    conditionals = []
    degenerate = []
    for u in (0, 1):
        if p_bit[u] <= 0.0:
            conditionals.append(0.0)
            degenerate.append(True)
        else:
            conditionals.append(float(table[u, 1] / p_bit[u]))
            degenerate.append(False)
    if any(degenerate) and p_bit != (1.0, 0.0):
        logger.debug(f"Conditional phase rate undefined for u with p_u = 0: {degenerate}")
    return Marginals(
        p_x=float(table[1, 0] + table[1, 1]),
        p_z=float(table[0, 1] + table[1, 1]),
        p_phase_given_bit=(conditionals[0], conditionals[1]),
        p_bit=p_bit,
        degenerate=(degenerate[0], degenerate[1]),
    )


def effective_bit_error(p_x: float, q: float) -> float:
    """p~ = p_x (1 - q) + q (1 - p_x): channel bit errors convolved with added noise."""
    return p_x * (1.0 - q) + q * (1.0 - p_x)


class BlockLabel(NamedTuple):
    """Eve's label (u, v), plus the phase syndrome s once it has been extracted."""

    u: Bits
    v: Bits
    s: Bits | None = None


@dataclass(frozen=True)
class Block:
    weight: float
    state: StateVector


@dataclass(frozen=True, eq=False)
class BlockState:
    """Eve-label-indexed family of weighted Alice-Bob pure states."""

    n: int
    blocks: Mapping[BlockLabel, Block]

    def __post_init__(self):
        if not self.blocks:
            raise StateValidationError("A BlockState needs at least one block")
        total = sum(b.weight for b in self.blocks.values())
        if abs(total - 1.0) > STRUCTURAL_TOL:
            raise StateValidationError(f"Block weights sum to {total}")
        layouts = {b.state.registers for b in self.blocks.values()}
        if len(layouts) != 1:
            raise RegisterError(f"Blocks disagree on registers: {layouts}")

    @property
    def registers(self):
        return next(iter(self.blocks.values())).state.registers

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.registers]

    @property
    def labels(self) -> list[BlockLabel]:
        return list(self.blocks.keys())

    @property
    def total_amplitudes(self) -> int:
        return len(self.blocks) * 2 ** total_qubits(self.registers)

    def has_register(self, name: str) -> bool:
        return name in self.names

    def map_states(self, fn: Callable[[BlockLabel, StateVector], StateVector]) -> "BlockState":
        return BlockState(
            self.n,
            {label: Block(b.weight, fn(label, b.state)) for label, b in self.blocks.items()},
        )

    def relabel(self, fn: Callable[[BlockLabel], BlockLabel]) -> "BlockState":
        return BlockState(self.n, {fn(label): b for label, b in self.blocks.items()})

    def weighted_columns(self) -> np.ndarray:
        """Columns sqrt(w) |psi_label>: a purification with Eve holding the labels."""
        return np.stack(
            [math.sqrt(b.weight) * b.state.amplitudes for b in self.blocks.values()], axis=1
        )


def _check_block_budget(blocks: int, qubits: int, what: str) -> None:
    settings = get_settings()
    check_budget(f"{what} amplitudes (blocks x 2^{qubits})", blocks * 2**qubits, settings.max_block_amplitudes)


def bell_pairs(n: int) -> StateVector:
    """|Phi>^{(x) n} with all A halves in register A and all B halves in B."""
    dim = 2**n
    amps = np.zeros(dim * dim, dtype=complex)
    amps[np.arange(dim) * dim + np.arange(dim)] = 1.0 / math.sqrt(dim)
    return StateVector(amps, ((KEY_A, n), (KEY_B, n)))


def iter_patterns(n: int, d: PauliDistribution) -> Iterable[tuple[Bits, Bits, float]]:
    """All (u, v) patterns of length n with nonzero i.i.d. probability."""
    strings = all_bitstrings(n)
    table = d.as_array()
    for u, v in product(strings, strings):
        p = float(np.prod([table[a, b] for a, b in zip(u, v)])) if n else 1.0
        if p > 0.0:
            yield u, v, p


def build_key_state(n: int, d: PauliDistribution) -> BlockState:
    """Key state: block (u, v) holds (1 (x) X^u Z^v)|Phi>^{(x) n} with weight p_{uv}."""
    settings = get_settings()
    check_budget("block length n", n, settings.max_block_length)
    if n < 1:
        raise DimensionError(f"Block length must be positive, got {n}")
    patterns = list(iter_patterns(n, d))
    _check_block_budget(len(patterns), 2 * n, "key state")
    base = bell_pairs(n)
    blocks = {
        BlockLabel(u, v): Block(p, apply_pauli(base, KEY_B, u, v)) for u, v, p in patterns
    }
    logger.debug(f"Built key state n={n} with {len(blocks)} blocks")
    return BlockState(n, blocks)


def noise_amplitudes(n: int, q: float) -> np.ndarray:
    """sqrt(q_f) for every f, q_f = q^{|f|} (1-q)^{n-|f|}, indexed by int(f)."""
    weights = np.array([weight(f) for f in all_bitstrings(n)])
    return np.sqrt(q**weights * (1.0 - q) ** (n - weights))


def apply_noisy_processing(s: BlockState, q: float) -> BlockState:
    """Alice flips each key bit with probability q, purified into register A'.

    Each block becomes sum_f sqrt(q_f) X^f_A |psi> (x) |f>_{A'}; the blocks stay
    indexed by Eve's label only.
    """
    if q < 0.0 or q > 1.0:
        raise ValueError(f"Added-noise rate q = {q} outside [0, 1]")
    if s.has_register(NOISE_A):
        raise RegisterError(f"Register {NOISE_A!r} is already present")
    n = s.n
    _check_block_budget(len(s.blocks), total_qubits(s.registers) + n, "noisy-processing")
    amplitudes = noise_amplitudes(n, q)
    strings = all_bitstrings(n)
    zeros = (0,) * n

    def process(_label: BlockLabel, state: StateVector) -> StateVector:
        columns = np.zeros((state.dimension, 2**n), dtype=complex)
        for f, amp in zip(strings, amplitudes):
            if amp == 0.0:
                continue
            columns[:, bits_to_int(f)] = amp * apply_pauli(state, KEY_A, f, zeros).amplitudes
        return StateVector(columns.reshape(-1), state.registers + ((NOISE_A, n),))

    return s.map_states(process)


def expand_with_eve(s: BlockState) -> StateVector:
    """Explicit state sum sqrt(w) |psi_uv> |u>_{E1} |v>_{E2} (small n only)."""
    settings = get_settings()
    check_budget("explicit block length n", s.n, settings.max_explicit_block_length)
    n = s.n
    dim = 2 ** total_qubits(s.registers)
    columns = np.zeros((dim, 4**n), dtype=complex)
    for label, block in s.blocks.items():
        index = bits_to_int(label.u) * 2**n + bits_to_int(label.v)
        columns[:, index] += math.sqrt(block.weight) * block.state.amplitudes
    return StateVector(columns.reshape(-1), s.registers + ((EVE_BIT, n), (EVE_PHASE, n)))


def sample_error_patterns(d: PauliDistribution, size: int, seed: int) -> ErrorPattern:
    """Draw a pattern X^u Z^v on ``size`` qubits, each qubit i.i.d. from d."""
    rng = np.random.default_rng(seed)
    probs = d.as_array().reshape(-1)
    draws = rng.choice(4, size=size, p=probs / probs.sum())
    return ErrorPattern(u=tuple(int(x) >> 1 for x in draws), v=tuple(int(x) & 1 for x in draws))


def hoeffding_epsilon(sample_size: int, confidence: float, outcomes: int = 4) -> float:
    """Deviation bound holding for all outcome frequencies simultaneously.

    Union of two-sided Hoeffding bounds: outcomes * 2 exp(-2 N eps^2) = 1 - confidence.
    """
    return math.sqrt(math.log(2 * outcomes / (1.0 - confidence)) / (2 * sample_size))


def estimate_rates(
    samples: ErrorPattern | Iterable[tuple[int, int]], confidence: float | None = None
) -> RateEstimate:
    """Empirical Pauli rates f^est with a Hoeffding deviation bound.

    ``samples`` is a sampled ErrorPattern or any sequence of per-qubit (u, v).
    """
    if isinstance(samples, ErrorPattern):
        samples = zip(samples.u, samples.v)
    samples = list(samples)
    if not samples:
        raise ValueError("Cannot estimate rates from an empty sample")
    if confidence is None:
        confidence = get_settings().default_confidence
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"Confidence {confidence} outside (0, 1)")
    counts = np.zeros((2, 2))
    for u, v in samples:
        counts[int(u), int(v)] += 1
    freqs = counts / len(samples)
    freqs[0, 0] = 1.0 - freqs[0, 1] - freqs[1, 0] - freqs[1, 1]
    return RateEstimate(
        distribution=PauliDistribution.from_array(np.clip(freqs, 0.0, 1.0)),
        epsilon=hoeffding_epsilon(len(samples), confidence),
        sample_size=len(samples),
        confidence=confidence,
    )
