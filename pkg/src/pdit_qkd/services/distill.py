"""Distillation pipeline at small n.

Bob corrects bit errors coherently and records the correction in B'. The
phase syndrome, written to register S, narrows each phase pattern v to a
coset V_s; the remaining phase Z^v on B is undone by a reflection on
A' (x) A'' controlled by B and S, built from the Neumark vectors of the PGM
for that coset.
"""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from pdit_qkd.config import get_settings
from pdit_qkd.errors import BudgetExceededError, PditError, check_budget
from pdit_qkd.models.channel import PauliDistribution, ProtocolModel
from pdit_qkd.models.experiment import CodeSpec
from pdit_qkd.quantum.bits import Bits, all_bitstrings, bit_table, bits_to_int, int_to_bits
from pdit_qkd.quantum.measures import trace_distance_from_vectors
from pdit_qkd.quantum.states import (
    DensityOperator,
    DimensionError,
    Operator,
    RegisterError,
    StateVector,
    apply_operator,
    reorder,
    tensor,
    total_qubits,
)
from pdit_qkd.services.channel import (
    KEY_A,
    KEY_B,
    NOISE_A,
    PHASE_SYNDROME,
    RECORD_B,
    BlockLabel,
    BlockState,
    apply_noisy_processing,
    bell_pairs,
    build_key_state,
    iter_patterns,
    model_to_distribution,
)
from pdit_qkd.services.codes import LinearCode
from pdit_qkd.services.pgm import (
    EXTENSION_REGISTER,
    Ensemble,
    IsometricExtension,
    RankOnePOVM,
    average_error,
    neumark_extend,
    pgm_construct,
    phase_priors,
    success_amplitudes,
)
from pdit_qkd.services.pstate import TwistingOperator, key_security_distance_blocks

logger = logging.getLogger(__name__)


class DistillationError(PditError):
    """Raised when a pipeline result violates a bound it must satisfy."""

    pass


def bit_error_correct(s: BlockState, code: LinearCode) -> BlockState:
    """Coherent syndrome decoding of Bob's bit errors, recorded in B'.

    For each basis component |a>_A |b>_B the correction e is the coset leader
    of H(a + b); Bob applies X^e and writes e into B'.
    """
    n = s.n
    if code.n != n:
        raise DimensionError(f"Bit code has length {code.n}, blocks have n = {n}")
    if not s.has_register(NOISE_A):
        raise RegisterError(f"Noisy processing must come first: register {NOISE_A!r} missing")
    if s.has_register(RECORD_B):
        raise RegisterError(f"Register {RECORD_B!r} is already present")
    settings = get_settings()
    check_budget("bit-corrected amplitudes", s.total_amplitudes * 2**n, settings.max_block_amplitudes)

    dim = 2**n
    corrections = code.correction_table()
    a_idx, b_idx = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    e_idx = corrections[a_idx ^ b_idx]
    new_b = b_idx ^ e_idx
    logger.debug(f"Bit correction with {code.k} checks on {len(s.blocks)} blocks")

    def correct(_label: BlockLabel, state: StateVector) -> StateVector:
        ordered = reorder(state, [KEY_A, KEY_B, NOISE_A])
        arr = ordered.amplitudes.reshape(dim, dim, dim)
        out = np.zeros((dim, dim, dim, dim), dtype=complex)
        out[a_idx, new_b, :, e_idx] = arr
        return StateVector(out.reshape(-1), ordered.registers + ((RECORD_B, n),))

    return s.map_states(correct)


def build_rho(s: BlockState) -> DensityOperator:
    """Alice-Bob state with Eve's labels traced out."""
    settings = get_settings()
    dim = 2 ** total_qubits(s.registers)
    check_budget("density entries", dim * dim, settings.max_density_entries)
    x = s.weighted_columns()
    return DensityOperator(x @ x.conj().T, s.registers)


def phase_correct(
    s: BlockState, phase_code: LinearCode
) -> tuple[BlockState, dict[Bits, list[Bits]]]:
    """Extract the phase syndrome s(v) into register S held by Alice and Bob.

    Block (u, v) gains |s(v)>_S and the label (u, v, s). The remaining
    ambiguity is the coset V_s of each syndrome. An empty code adds no
    register.
    """
    if phase_code.n != s.n:
        raise DimensionError(f"Phase code has length {phase_code.n}, blocks have n = {s.n}")
    if s.has_register(PHASE_SYNDROME):
        raise RegisterError(f"Register {PHASE_SYNDROME!r} is already present")
    k = phase_code.k
    relabelled = s.relabel(lambda label: BlockLabel(label.u, label.v, phase_code.syndrome(label.v)))
    if k:
        settings = get_settings()
        check_budget("syndrome amplitudes", s.total_amplitudes * 2**k, settings.max_block_amplitudes)

        def record(label: BlockLabel, state: StateVector) -> StateVector:
            return tensor(state, StateVector.basis(((PHASE_SYNDROME, k),), bits_to_int(label.s)))

        relabelled = relabelled.map_states(record)
    logger.debug(f"Phase syndrome with {k} checks: {2**k} cosets")
    return relabelled, phase_code.cosets()


@dataclass(frozen=True, eq=False)
class SectorMeasurement:
    """PGM and its extension for one (syndrome, bit-record) sector."""

    ensemble: Ensemble
    povm: RankOnePOVM
    extension: IsometricExtension
    amplitudes: Mapping[Bits, complex]
    error: float


@dataclass(frozen=True, eq=False)
class UntwistingOperator:
    """Per-syndrome isometries from (B, A', B') to (B, A', A'', B').

    ``operators`` is empty unless the untwisting was materialised.
    """

    n: int
    q: float
    ancilla_qubits: int
    sectors: Mapping[tuple[Bits, Bits], SectorMeasurement]
    operators: Mapping[Bits, Operator] = field(default_factory=dict)

    def sector(self, s: Bits, u: Bits) -> SectorMeasurement:
        return self.sectors[(s, u)]

    def success_amplitude(self, s: Bits, u: Bits, v: Bits) -> complex:
        return self.sectors[(s, u)].amplitudes[v]

    def target_vector(self, s: Bits, u: Bits, v: Bits) -> np.ndarray:
        """|theta^v> on A' (x) A'' with A'' padded to the common width."""
        return self.sectors[(s, u)].extension.vector(v)

    def reflection(self, s: Bits, u: Bits, b: int) -> np.ndarray:
        """W = I - 2 sum_{v in V_s, v.b odd} |theta^v><theta^v|."""
        sector = self.sectors[(s, u)]
        b_bits = np.array(int_to_bits(b, self.n), dtype=int)
        odd = [i for i, v in enumerate(sector.extension.labels) if int(np.dot(v, b_bits)) % 2]
        theta = sector.extension.vectors[:, odd]
        dim = sector.extension.vectors.shape[0]
        return np.eye(dim, dtype=complex) - 2 * theta @ theta.conj().T


def _sector(n: int, q: float, labels: list[Bits], priors: np.ndarray) -> SectorMeasurement:
    ensemble = Ensemble.phase_flipped(n, q, labels, priors)
    povm = pgm_construct(ensemble)
    extension = neumark_extend(povm)
    amps = success_amplitudes(ensemble, povm)
    return SectorMeasurement(
        ensemble=ensemble,
        povm=povm,
        extension=extension,
        amplitudes={v: complex(a) for v, a in zip(ensemble.labels, amps)},
        error=average_error(ensemble, povm),
    )


def construct_untwisting(
    cosets: Mapping[Bits, list[Bits]],
    n: int,
    q: float,
    distribution: PauliDistribution,
    materialize: bool = True,
) -> UntwistingOperator:
    """Untwisting isometry U = (sum_v [theta^v]_{A'A''} (x) Z^v_B) C_{A'B'}^dag, per coset.

    After C^dag, B' holds the bit-error pattern u, so each (s, u) sector uses
    the PGM for V_s with priors proportional to p(u, v).
    """
    settings = get_settings()
    check_budget("block length n", n, settings.max_block_length)
    cache: dict[tuple, SectorMeasurement] = {}
    sectors: dict[tuple[Bits, Bits], SectorMeasurement] = {}
    for s, labels in cosets.items():
        for u in all_bitstrings(n):
            weights = phase_priors(labels, distribution, u)
            total = weights.sum()
            if total <= 0.0:
                continue
            priors = weights / total
            key = (tuple(labels), tuple(np.round(priors, 15)))
            if key not in cache:
                cache[key] = _sector(n, q, labels, priors)
            sectors[(s, u)] = cache[key]

    ancilla = max((m.extension.ancilla_qubits for m in sectors.values()), default=0)
    padded = {
        key: SectorMeasurement(
            m.ensemble, m.povm, m.extension.padded(ancilla), m.amplitudes, m.error
        )
        for key, m in sectors.items()
    }
    logger.debug(
        f"Untwisting: {len(cosets)} cosets, {len(cache)} distinct PGMs, A'' width {ancilla}"
    )
    untwist = UntwistingOperator(n, q, ancilla, padded)
    if not materialize:
        return untwist

    if n > settings.max_explicit_block_length:
        raise BudgetExceededError("explicit block length n", n, settings.max_explicit_block_length)
    operators = {s: _sector_isometry(untwist, s) for s in cosets}
    return UntwistingOperator(n, q, ancilla, padded, operators)


def _sector_isometry(untwist: UntwistingOperator, s: Bits) -> Operator:
    """Matrix of the untwisting for syndrome s, columns indexed (b, f, y)."""
    n = untwist.n
    dim = 2**n
    ext = 2**untwist.ancilla_qubits
    out = np.zeros((dim, dim * ext, dim, dim, dim, dim), dtype=complex)
    identity = np.eye(dim * ext, dtype=complex)
    for u_int in range(dim):
        u = int_to_bits(u_int, n)
        present = (s, u) in untwist.sectors
        for b in range(dim):
            w = untwist.reflection(s, u, b) if present else identity
            for f in range(dim):
                y = u_int ^ f
                out[b, :, u_int, b, f, y] = w[:, f * ext]
    matrix = out.reshape(dim * dim * ext * dim, dim**3)
    inputs = ((KEY_B, n), (NOISE_A, n), (RECORD_B, n))
    outputs = ((KEY_B, n), (NOISE_A, n), (EXTENSION_REGISTER, untwist.ancilla_qubits), (RECORD_B, n))
    return Operator(matrix, outputs, inputs, kind="isometry")


@dataclass(frozen=True)
class DistillationOutcome:
    """Fidelity of the untwisted state with the ideal |Phi>^n (x) shield."""

    fidelity: float
    epsilon: float
    fidelity_formula: float
    average_error: float
    syndromes: Mapping[Bits, int]
    fidelity_explicit: float | None = None
    untwisted_distance: float | None = None

    def __post_init__(self):
        if abs(self.epsilon - math.sqrt(max(0.0, 1.0 - self.fidelity**2))) > 1e-12:
            raise DistillationError("epsilon is not sqrt(1 - F^2)")


def _target_state(untwist: UntwistingOperator, label: BlockLabel, names: list[str]) -> StateVector:
    n = untwist.n
    theta = StateVector(
        untwist.target_vector(label.s, label.u, label.v),
        ((NOISE_A, n), (EXTENSION_REGISTER, untwist.ancilla_qubits)),
    )
    state = tensor(tensor(bell_pairs(n), theta), StateVector.basis(((RECORD_B, n),), bits_to_int(label.u)))
    if label.s:
        state = tensor(state, StateVector.basis(((PHASE_SYNDROME, len(label.s)),), bits_to_int(label.s)))
    return reorder(state, names)


def apply_untwisting(s: BlockState, untwist: UntwistingOperator) -> BlockState:
    """Run the S-controlled untwisting on every block.

    A block with syndrome s holds |s>_S, so the controlled isometry acts on it
    as ``untwist.operators[s]``; S itself passes through unchanged.
    """
    if any(label.s is None for label in s.labels):
        raise DistillationError("Blocks carry no phase syndrome; run phase_correct first")
    if not untwist.operators:
        raise DistillationError("Applying the untwisting needs a materialised operator")
    if any(label.s for label in s.labels) and not s.has_register(PHASE_SYNDROME):
        raise RegisterError(f"Phase syndromes are not held in register {PHASE_SYNDROME!r}")
    settings = get_settings()
    check_budget(
        "untwisted amplitudes",
        s.total_amplitudes * 2 ** untwist.ancilla_qubits,
        settings.max_block_amplitudes,
    )
    return s.map_states(lambda label, state: apply_operator(state, untwist.operators[label.s]))


def untwist_fidelity(
    s: BlockState, untwist: UntwistingOperator, explicit: bool | None = None
) -> DistillationOutcome:
    """F = sum_blocks w |<target|U psi>|, with eps = sqrt(1 - F^2).

    The formula value sum_{u,v} p_{uv} <t_v|phi^v> assumes every bit pattern
    was corrected; the explicit value applies the isometry block by block.
    """
    if any(label.s is None for label in s.labels):
        raise DistillationError("Blocks carry no phase syndrome; run phase_correct first")
    if explicit is None:
        explicit = bool(untwist.operators)

    formula = 0.0
    p_error = 0.0
    syndromes: dict[Bits, int] = {}
    for label, block in s.blocks.items():
        amp = untwist.success_amplitude(label.s, label.u, label.v)
        formula += block.weight * abs(amp)
        p_error += block.weight * (1.0 - abs(amp) ** 2)
        syndromes[label.s] = syndromes.get(label.s, 0) + 1
    formula = min(1.0, formula)

    fidelity_explicit = None
    distance = None
    if explicit:
        untwisted = apply_untwisting(s, untwist)
        overlaps = 0.0
        actual, ideal = [], []
        for label, block in untwisted.blocks.items():
            target = _target_state(untwist, label, untwisted.names)
            overlaps += block.weight * abs(target.inner(block.state))
            actual.append(math.sqrt(block.weight) * block.state.amplitudes)
            ideal.append(math.sqrt(block.weight) * target.amplitudes)
        fidelity_explicit = min(1.0, overlaps)
        distance = trace_distance_from_vectors(np.stack(actual, axis=1), np.stack(ideal, axis=1))

    if formula < 1.0 - p_error - 1e-9:
        raise DistillationError(f"F = {formula} is below 1 - P_e = {1.0 - p_error}")
    fidelity = fidelity_explicit if fidelity_explicit is not None else formula
    epsilon = math.sqrt(max(0.0, 1.0 - fidelity**2))
    if distance is not None and distance > 2 * epsilon + 1e-9:
        raise DistillationError(f"Untwisted distance {distance} exceeds 2 eps = {2 * epsilon}")
    return DistillationOutcome(
        fidelity=fidelity,
        epsilon=epsilon,
        fidelity_formula=formula,
        average_error=p_error,
        syndromes=syndromes,
        fidelity_explicit=fidelity_explicit,
        untwisted_distance=distance,
    )


@dataclass(frozen=True, eq=False)
class PhaseTwist:
    """The phase-kickback unitary D on A'(x)A'' and B, written both ways."""

    a_controlled: np.ndarray
    b_controlled: np.ndarray
    unitaries: tuple[np.ndarray, ...]

    def as_twisting_operator(self, shield_registers) -> TwistingOperator:
        n = int(math.log2(len(self.unitaries)))
        return TwistingOperator(
            n, tuple(Operator(u, shield_registers, kind="unitary") for u in self.unitaries)
        )


def phase_twist_factorizations(n: int, extension: IsometricExtension) -> PhaseTwist:
    """D = sum_v [theta^v] (x) Z^v_B + P_perp (x) I  and  D = sum_j U^(j) (x) [j]_B.

    U^(j) = sum_v (-1)^{v.j} [theta^v] + P_perp; registers ordered (A'A'', B).
    """
    theta = extension.vectors
    dim = theta.shape[0]
    bdim = 2**n
    z_diag = 1 - 2 * ((bit_table(n).astype(int) @ np.array(extension.labels, dtype=int).T) % 2)
    proj_perp = np.eye(dim, dtype=complex) - theta @ theta.conj().T

    a_controlled = np.kron(proj_perp, np.eye(bdim))
    for i in range(len(extension.labels)):
        a_controlled += np.kron(np.outer(theta[:, i], theta[:, i].conj()), np.diag(z_diag[:, i]))

    unitaries = []
    b_controlled = np.zeros((dim * bdim, dim * bdim), dtype=complex)
    for j in range(bdim):
        u_j = proj_perp + (theta * z_diag[j]) @ theta.conj().T
        unitaries.append(u_j)
        projector = np.zeros((bdim, bdim))
        projector[j, j] = 1.0
        b_controlled += np.kron(u_j, projector)
    return PhaseTwist(a_controlled, b_controlled, tuple(unitaries))


def resolve_code(code: LinearCode | CodeSpec | None, n: int, default: str, seed: int | None) -> LinearCode:
    if isinstance(code, LinearCode):
        return code
    spec = code or CodeSpec(kind=default)
    if spec.rows is not None:
        return LinearCode.from_rows(spec.rows, n)
    if spec.kind == "full":
        return LinearCode.full(n)
    if spec.kind == "empty":
        return LinearCode.empty(n)
    if seed is None:
        raise ValueError("A seed is required to draw a random code")
    return LinearCode.random(n, spec.checks, seed)


@dataclass(frozen=True)
class EndToEndResult:
    outcome: DistillationOutcome
    distribution: PauliDistribution
    bit_code: LinearCode
    phase_code: LinearCode
    cosets: int
    explicit: bool
    key_security_distance: float | None = None


def _formula_only(
    n: int, d: PauliDistribution, q: float, phase_code: LinearCode
) -> DistillationOutcome:
    untwist = construct_untwisting(phase_code.cosets(), n, q, d, materialize=False)
    blocks = {
        BlockLabel(u, v, phase_code.syndrome(v)): p for u, v, p in iter_patterns(n, d)
    }
    fidelity = 0.0
    p_error = 0.0
    syndromes: dict[Bits, int] = {}
    for label, weight in blocks.items():
        amp = abs(untwist.success_amplitude(label.s, label.u, label.v))
        fidelity += weight * amp
        p_error += weight * (1.0 - amp**2)
        syndromes[label.s] = syndromes.get(label.s, 0) + 1
    fidelity = min(1.0, fidelity)
    if fidelity < 1.0 - p_error - 1e-9:
        raise DistillationError(f"F = {fidelity} is below 1 - P_e = {1.0 - p_error}")
    return DistillationOutcome(
        fidelity=fidelity,
        epsilon=math.sqrt(max(0.0, 1.0 - fidelity**2)),
        fidelity_formula=fidelity,
        average_error=p_error,
        syndromes=syndromes,
    )


def end_to_end(
    n: int,
    model: ProtocolModel,
    q: float,
    bit_code: LinearCode | CodeSpec | None = None,
    phase_code: LinearCode | CodeSpec | None = None,
    seed: int | None = None,
) -> EndToEndResult:
    """Key state -> noisy processing -> bit correction -> phase syndrome -> untwist.

    Small n runs explicitly and also reports the key-security distance of the
    untwisted state, with Eve holding the labels and Alice and Bob holding
    A', A'', B' and S. It must not exceed 2 eps. Larger n with a full bit code uses the fidelity
    formula only.
    """
    settings = get_settings()
    d = model_to_distribution(model)
    rng = np.random.default_rng(seed) if seed is not None else None
    bit = resolve_code(bit_code, n, "full", None if rng is None else int(rng.integers(2**31)))
    phase = resolve_code(phase_code, n, "empty", None if rng is None else int(rng.integers(2**31)))
    explicit = n <= settings.max_explicit_block_length

    if not explicit:
        if bit.k != n:
            raise BudgetExceededError("explicit block length n", n, settings.max_explicit_block_length)
        logger.info(f"n={n} above explicit budget; using the fidelity formula only")
        outcome = _formula_only(n, d, q, phase)
        return EndToEndResult(outcome, d, bit, phase, 2**phase.k, explicit=False)

    state = build_key_state(n, d)
    state = apply_noisy_processing(state, q)
    state = bit_error_correct(state, bit)
    state, cosets = phase_correct(state, phase)
    untwist = construct_untwisting(cosets, n, q, d, materialize=True)
    outcome = untwist_fidelity(state, untwist, explicit=True)
    distance = key_security_distance_blocks(apply_untwisting(state, untwist))
    if distance > 2 * outcome.epsilon + 1e-9:
        raise DistillationError(
            f"Key-security distance {distance} exceeds 2 eps = {2 * outcome.epsilon}"
        )
    logger.info(f"n={n} q={q}: F={outcome.fidelity:.6f} eps={outcome.epsilon:.3e} distance={distance:.3e}")
    return EndToEndResult(outcome, d, bit, phase, len(cosets), explicit=True, key_security_distance=distance)
