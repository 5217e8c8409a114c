"""Private states (pdits), twisting operators and the key-security distance."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from pdit_qkd.config import get_settings
from pdit_qkd.errors import check_budget
from pdit_qkd.quantum.measures import hermitian_eigenvalues
from pdit_qkd.quantum.states import (
    DensityOperator,
    DimensionError,
    Operator,
    RegisterError,
    Registers,
    StateValidationError,
    StateVector,
    apply_operator,
    partial_trace,
    register_dims,
    reorder,
    tensor,
    total_qubits,
)
from pdit_qkd.quantum.tolerances import EIGENVALUE_FLOOR, STRUCTURAL_TOL
from pdit_qkd.services.channel import KEY_A, KEY_B, BlockState, bell_pairs

logger = logging.getLogger(__name__)


def maximally_entangled(key_qubits: int) -> StateVector:
    """|Phi_d> on registers A, B with d = 2^key_qubits."""
    return bell_pairs(key_qubits)


@dataclass(frozen=True, eq=False)
class TwistingOperator:
    """Key-controlled shield unitaries U^(j), j = 0..d-1, acting on ``shield``."""

    key_qubits: int
    unitaries: tuple[Operator, ...]

    def __post_init__(self):
        d = 2**self.key_qubits
        if len(self.unitaries) != d:
            raise DimensionError(f"{len(self.unitaries)} unitaries for key dimension {d}")
        layouts = {u.registers for u in self.unitaries}
        if len(layouts) != 1:
            raise RegisterError(f"Shield unitaries act on different registers: {layouts}")
        for j, u in enumerate(self.unitaries):
            if not u.is_square:
                raise StateValidationError(f"U^({j}) is not square")
            gram = u.matrix.conj().T @ u.matrix
            if not np.allclose(gram, np.eye(gram.shape[0]), atol=STRUCTURAL_TOL, rtol=0):
                raise StateValidationError(f"U^({j}) is not unitary")
        object.__setattr__(self, "unitaries", tuple(self.unitaries))

    @property
    def dimension(self) -> int:
        return 2**self.key_qubits

    @property
    def shield_registers(self) -> Registers:
        return self.unitaries[0].registers

    @property
    def registers(self) -> Registers:
        k = self.key_qubits
        return ((KEY_A, k), (KEY_B, k)) + self.shield_registers

    def global_operator(self) -> Operator:
        """sum_{j,k} |j><j|_A |k><k|_B (x) (U^(j) if j == k else I), checked unitary."""
        d = self.dimension
        identity = np.eye(self.unitaries[0].matrix.shape[0], dtype=complex)
        blocks = [
            self.unitaries[j].matrix if j == k else identity for j in range(d) for k in range(d)
        ]
        return Operator(linalg.block_diag(*blocks), self.registers, kind="unitary")

    def inverse(self) -> "TwistingOperator":
        return TwistingOperator(self.key_qubits, tuple(u.dagger() for u in self.unitaries))


@dataclass(frozen=True, eq=False)
class PrivateState:
    gamma: DensityOperator
    key_qubits: int
    twisting: TwistingOperator

    @property
    def dimension(self) -> int:
        return 2**self.key_qubits


def twist(phi_d: DensityOperator, shield: DensityOperator, t: TwistingOperator) -> PrivateState:
    """gamma = U_twist (Phi_d (x) rho_shield) U_twist^dag."""
    k = t.key_qubits
    if phi_d.registers != ((KEY_A, k), (KEY_B, k)):
        raise RegisterError(f"Key state registers {phi_d.registers} do not match key size {k}")
    if shield.registers != t.shield_registers:
        raise RegisterError(
            f"Shield registers {shield.registers} do not match the twist's {t.shield_registers}"
        )
    gamma = apply_operator(tensor(phi_d, shield), t.global_operator())
    return PrivateState(gamma, k, t)


def _key_distance_from_columns(
    columns: np.ndarray, registers: Registers, key_registers: tuple[str, str]
) -> float:
    """||rho_KE - kappa (x) rho_E||_1 for the purification sum_i columns[:, i] |i>_E.

    K is the pair of Z-basis outcomes on the two key registers; kappa is the
    uniform distribution on equal outcomes.
    """
    names = [name for name, _ in registers]
    widths = dict(registers)
    ka, kb = key_registers
    for name in key_registers:
        if name not in names:
            raise RegisterError(f"Unknown key register {name!r}; have {names}")
    if widths[ka] != widths[kb]:
        raise DimensionError(f"Key registers have {widths[ka]} and {widths[kb]} qubits")
    d = 2 ** widths[ka]
    env = columns.shape[1]
    order = [names.index(ka), names.index(kb)] + [i for i, n in enumerate(names) if n not in key_registers]
    t = columns.reshape(register_dims(registers) + [env])
    t = np.transpose(t, order + [len(names)]).reshape(d, d, -1, env)

    rho_e = np.zeros((env, env), dtype=complex)
    diagonal = []
    distance = 0.0
    for a in range(d):
        for b in range(d):
            m = t[a, b]
            if a == b:
                block = m.T @ m.conj()
                diagonal.append(block)
                rho_e += block
            else:
                # positive block: trace norm is the trace
                distance += float(np.vdot(m, m).real)
    for block in diagonal:
        diff = block - rho_e / d
        diff = (diff + diff.conj().T) / 2
        distance += float(np.sum(np.abs(hermitian_eigenvalues(diff))))
    return distance


def key_security_distance(rho_abshield: DensityOperator, key_registers=(KEY_A, KEY_B)) -> float:
    """epsilon-security distance of the key obtained by measuring A and B in Z.

    The adversary holds a purification of the input state.
    """
    settings = get_settings()
    check_budget("density entries", rho_abshield.dimension**2, settings.max_density_entries)
    evals, evecs = linalg.eigh(rho_abshield.matrix)
    keep = evals > EIGENVALUE_FLOOR
    columns = evecs[:, keep] * np.sqrt(evals[keep])
    return _key_distance_from_columns(columns, rho_abshield.registers, tuple(key_registers))


def key_security_distance_blocks(s: BlockState, key_registers=(KEY_A, KEY_B)) -> float:
    """Same distance for a BlockState, Eve holding the block labels."""
    settings = get_settings()
    check_budget("block amplitudes", s.total_amplitudes, settings.max_block_amplitudes)
    return _key_distance_from_columns(s.weighted_columns(), s.registers, tuple(key_registers))


def _is_isometry(op: Operator) -> bool:
    if op.kind in ("unitary", "isometry"):
        return True
    gram = op.matrix.conj().T @ op.matrix
    return bool(np.allclose(gram, np.eye(gram.shape[0]), atol=STRUCTURAL_TOL, rtol=0))


def verify_private_state(gamma: DensityOperator, untwist: Operator) -> tuple[float, float]:
    """Apply a candidate untwisting and compare the key registers with |Phi_d>.

    Returns (F, eps) with F = sqrt(<Phi_d| rho_AB |Phi_d>) and eps = sqrt(1 - F^2).
    """
    if not _is_isometry(untwist):
        raise StateValidationError("Candidate untwisting operation is not an isometry")
    widths = dict(gamma.registers)
    if KEY_A not in widths or KEY_B not in widths or widths[KEY_A] != widths[KEY_B]:
        raise RegisterError(f"Expected equal key registers A and B, got {gamma.registers}")
    settings = get_settings()
    out_qubits = total_qubits(gamma.registers) + total_qubits(untwist.registers) - total_qubits(untwist.input_registers)
    check_budget("density entries", 4**out_qubits, settings.max_density_entries)
    untwisted = apply_operator(gamma, untwist)
    rho_ab = reorder(partial_trace(untwisted, [KEY_A, KEY_B]), [KEY_A, KEY_B])
    phi = maximally_entangled(widths[KEY_A]).amplitudes
    overlap = float(np.real(np.vdot(phi, rho_ab.matrix @ phi)))
    fidelity = math.sqrt(min(1.0, max(0.0, overlap)))
    return fidelity, math.sqrt(max(0.0, 1.0 - fidelity**2))


def _rng(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(registers, seed: int | np.random.Generator) -> Operator:
    dim = 2 ** total_qubits(tuple(registers))
    if dim == 1:
        return Operator.identity(registers)
    matrix = unitary_group.rvs(dim, random_state=_rng(seed))
    return Operator(matrix, registers, kind="unitary")


def random_twisting_operator(
    key_qubits: int, shield_registers, seed: int | np.random.Generator
) -> TwistingOperator:
    """Haar-random shield unitary for every key value."""
    rng = _rng(seed)
    return TwistingOperator(
        key_qubits,
        tuple(random_unitary(shield_registers, rng) for _ in range(2**key_qubits)),
    )


def random_density_operator(
    registers, seed: int | np.random.Generator, rank: int | None = None
) -> DensityOperator:
    """Random mixed state G G^dag / Tr from a complex Ginibre matrix."""
    rng = _rng(seed)
    registers = tuple(registers)
    dim = 2 ** total_qubits(registers)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return DensityOperator(rho / np.trace(rho).real, registers)


def random_state_vector(registers, seed: int | np.random.Generator) -> StateVector:
    rng = _rng(seed)
    registers = tuple(registers)
    dim = 2 ** total_qubits(registers)
    return StateVector.from_unnormalized(
        rng.standard_normal(dim) + 1j * rng.standard_normal(dim), registers
    )
