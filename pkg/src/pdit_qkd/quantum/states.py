"""Dense states and operators over named multi-qubit registers.

Conventions:
- A register is a ``(name, qubit_count)`` pair; a state's registers are ordered
  and the full index is the concatenation of register indices in that order.
- Within a register, qubit 0 is the most significant bit of the index, so the
  amplitude of ``|x_0 x_1 ... x_{m-1}>`` sits at ``sum_i x_i 2^(m-1-i)``.
- Amplitudes are stored row-major (C order): qubit 0 of the first register is
  the most significant bit of the flat index.
- Arrays are numpy arrays; matrices act on column vectors.
"""

from dataclasses import dataclass, field
from math import prod
from typing import Literal, TypeVar

import numpy as np

from pdit_qkd.errors import PditError
from pdit_qkd.quantum.bits import bits_to_int, parse_bits
from pdit_qkd.quantum.tolerances import STRUCTURAL_TOL

Register = tuple[str, int]
Registers = tuple[Register, ...]


class RegisterError(PditError, ValueError):
    """Raised for unknown, duplicated or mis-sized registers."""

    pass


class DimensionError(PditError, ValueError):
    """Raised when two objects have incompatible dimensions."""

    pass


class StateValidationError(PditError, ValueError):
    """Raised when a state or operator violates its structural invariants."""

    pass


def _normalize_registers(registers) -> Registers:
    regs = tuple((str(name), int(width)) for name, width in registers)
    names = [name for name, _ in regs]
    if len(set(names)) != len(names):
        raise RegisterError(f"Duplicate register names: {names}")
    if any(width < 0 for _, width in regs):
        raise RegisterError(f"Negative register width in {regs}")
    return regs


def register_dims(registers: Registers) -> list[int]:
    return [2**width for _, width in registers]


def register_names(registers: Registers) -> list[str]:
    return [name for name, _ in registers]


def total_qubits(registers: Registers) -> int:
    return sum(width for _, width in registers)


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.ndim != ndim:
        raise DimensionError(f"Expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalised pure state on labelled qubit registers."""

    amplitudes: np.ndarray
    registers: Registers

    def __post_init__(self):
        regs = _normalize_registers(self.registers)
        amps = _frozen_array(self.amplitudes, 1)
        if amps.shape[0] != 2 ** total_qubits(regs):
            raise DimensionError(
                f"{amps.shape[0]} amplitudes do not match registers {regs}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > STRUCTURAL_TOL:
            raise StateValidationError(f"State norm^2 is {norm}, expected 1")
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, registers, index: int | str | tuple[int, ...]) -> "StateVector":
        regs = _normalize_registers(registers)
        if not isinstance(index, int):
            index = bits_to_int(parse_bits(index))
        amps = np.zeros(2 ** total_qubits(regs), dtype=complex)
        amps[index] = 1.0
        return cls(amps, regs)

    @classmethod
    def from_unnormalized(cls, amplitudes, registers) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps / np.linalg.norm(amps), registers)

    @property
    def num_qubits(self) -> int:
        return total_qubits(self.registers)

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def names(self) -> list[str]:
        return register_names(self.registers)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>, requiring identical register layouts."""
        if self.registers != other.registers:
            raise RegisterError(
                f"Register layouts differ: {self.registers} vs {other.registers}"
            )
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityOperator":
        return DensityOperator(
            np.outer(self.amplitudes, self.amplitudes.conj()), self.registers
        )


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Mixed state on labelled qubit registers."""

    matrix: np.ndarray
    registers: Registers
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        regs = _normalize_registers(self.registers)
        mat = _frozen_array(self.matrix, 2)
        dim = 2 ** total_qubits(regs)
        if mat.shape != (dim, dim):
            raise DimensionError(f"Matrix shape {mat.shape} does not match registers {regs}")
        if self.validate:
            if not np.allclose(mat, mat.conj().T, atol=STRUCTURAL_TOL, rtol=0):
                raise StateValidationError("Density operator is not Hermitian")
            trace = float(np.trace(mat).real)
            if abs(trace - 1.0) > STRUCTURAL_TOL:
                raise StateValidationError(f"Density operator trace is {trace}")
            smallest = float(np.linalg.eigvalsh(mat)[0])
            if smallest < -STRUCTURAL_TOL:
                raise StateValidationError(f"Negative eigenvalue {smallest}")
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def maximally_mixed(cls, registers) -> "DensityOperator":
        regs = _normalize_registers(registers)
        dim = 2 ** total_qubits(regs)
        return cls(np.eye(dim, dtype=complex) / dim, regs)

    @classmethod
    def mixture(cls, weights, states: list[StateVector]) -> "DensityOperator":
        """Sum_i w_i |psi_i><psi_i| over states sharing one register layout."""
        if not states:
            raise DimensionError("Empty mixture")
        regs = states[0].registers
        columns = []
        for w, s in zip(weights, states):
            if s.registers != regs:
                raise RegisterError("Mixture components have different registers")
            columns.append(np.sqrt(w) * s.amplitudes)
        x = np.stack(columns, axis=1)
        return cls(x @ x.conj().T, regs)

    @property
    def num_qubits(self) -> int:
        return total_qubits(self.registers)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def names(self) -> list[str]:
        return register_names(self.registers)


OperatorKind = Literal["general", "unitary", "isometry"]


@dataclass(frozen=True, eq=False)
class Operator:
    """Linear map from ``input_registers`` to ``registers``.

    ``kind="unitary"`` and ``kind="isometry"`` are checked on construction
    (U^dag U = I within tolerance).
    """

    matrix: np.ndarray
    registers: Registers
    input_registers: Registers | None = None
    kind: OperatorKind = "general"

    def __post_init__(self):
        regs = _normalize_registers(self.registers)
        inputs = regs if self.input_registers is None else _normalize_registers(self.input_registers)
        mat = _frozen_array(self.matrix, 2)
        expected = (2 ** total_qubits(regs), 2 ** total_qubits(inputs))
        if mat.shape != expected:
            raise DimensionError(f"Operator shape {mat.shape}, expected {expected}")
        if self.kind == "unitary" and expected[0] != expected[1]:
            raise StateValidationError("A unitary must be square")
        if self.kind in ("unitary", "isometry"):
            gram = mat.conj().T @ mat
            if not np.allclose(gram, np.eye(expected[1]), atol=STRUCTURAL_TOL, rtol=0):
                raise StateValidationError(f"Operator is not a valid {self.kind}")
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "input_registers", inputs)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, registers) -> "Operator":
        regs = _normalize_registers(registers)
        return cls(np.eye(2 ** total_qubits(regs), dtype=complex), regs, kind="unitary")

    @classmethod
    def pauli(cls, register: Register, u, v) -> "Operator":
        """X^u Z^v on one register."""
        u, v = parse_bits(u), parse_bits(v)
        name, width = register
        if len(u) != width or len(v) != width:
            raise DimensionError(f"Pauli strings of length {len(u)}/{len(v)} on {width} qubits")
        mat = np.array([[1.0]], dtype=complex)
        for ui, vi in zip(u, v):
            mat = np.kron(mat, PAULI_X[ui] @ PAULI_Z[vi])
        return cls(mat, ((name, width),), kind="unitary")

    @property
    def is_square(self) -> bool:
        return self.registers == self.input_registers

    def dagger(self) -> "Operator":
        kind = self.kind if self.kind == "unitary" else "general"
        return Operator(self.matrix.conj().T, self.input_registers, self.registers, kind)

    def compose(self, first: "Operator") -> "Operator":
        """self after first, i.e. the matrix product self @ first."""
        if first.registers != self.input_registers:
            raise RegisterError(
                f"Cannot compose: {first.registers} feeds {self.input_registers}"
            )
        kinds = {self.kind, first.kind}
        if kinds == {"unitary"}:
            kind = "unitary"
        elif kinds <= {"unitary", "isometry"}:
            kind = "isometry"
        else:
            kind = "general"
        return Operator(self.matrix @ first.matrix, self.registers, first.input_registers, kind)


PAULI_X = (np.eye(2, dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex))
PAULI_Z = (np.eye(2, dtype=complex), np.array([[1, 0], [0, -1]], dtype=complex))

Tensorable = TypeVar("Tensorable", StateVector, DensityOperator, Operator)


def tensor(a: Tensorable, b: Tensorable) -> Tensorable:
    """Kronecker product with concatenated register lists."""
    if type(a) is not type(b):
        raise TypeError(f"Cannot tensor {type(a).__name__} with {type(b).__name__}")
    clash = set(register_names(a.registers)) & set(register_names(b.registers))
    if clash:
        raise RegisterError(f"Register name collision: {sorted(clash)}")
    if isinstance(a, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), a.registers + b.registers)
    if isinstance(a, DensityOperator):
        return DensityOperator(
            np.kron(a.matrix, b.matrix), a.registers + b.registers, validate=False
        )
    in_clash = set(register_names(a.input_registers)) & set(register_names(b.input_registers))
    if in_clash:
        raise RegisterError(f"Input register name collision: {sorted(in_clash)}")
    kinds = {a.kind, b.kind}
    if kinds == {"unitary"}:
        kind = "unitary"
    elif kinds <= {"unitary", "isometry"}:
        kind = "isometry"
    else:
        kind = "general"
    return Operator(
        np.kron(a.matrix, b.matrix),
        a.registers + b.registers,
        a.input_registers + b.input_registers,
        kind,
    )


def _lookup(registers: Registers, name: str) -> int:
    names = register_names(registers)
    if name not in names:
        raise RegisterError(f"Unknown register {name!r}; have {names}")
    return names.index(name)


def register_offset(registers: Registers, name: str) -> int:
    """Index of the first qubit of ``name`` in the full qubit order."""
    idx = _lookup(registers, name)
    return sum(width for _, width in registers[:idx])


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Reduced state on ``keep``; kept registers stay in the state's order."""
    keep = [keep] if isinstance(keep, str) else list(keep)
    for name in keep:
        _lookup(rho.registers, name)
    regs = rho.registers
    m = len(regs)
    dims = register_dims(regs)
    keep_idx = [i for i, (name, _) in enumerate(regs) if name in keep]
    trace_idx = [i for i in range(m) if i not in keep_idx]
    dk = prod(dims[i] for i in keep_idx)
    dt = prod(dims[i] for i in trace_idx)
    t = rho.matrix.reshape(dims + dims)
    perm = keep_idx + trace_idx + [i + m for i in keep_idx] + [i + m for i in trace_idx]
    t = np.transpose(t, perm).reshape(dk, dt, dk, dt)
    reduced = np.einsum("iaja->ij", t)
    return DensityOperator(reduced, tuple(regs[i] for i in keep_idx), validate=False)


def marginal(state: StateVector, keep) -> DensityOperator:
    """Reduced density operator of a pure state without forming |psi><psi|."""
    keep = [keep] if isinstance(keep, str) else list(keep)
    for name in keep:
        _lookup(state.registers, name)
    regs = state.registers
    dims = register_dims(regs)
    keep_idx = [i for i, (name, _) in enumerate(regs) if name in keep]
    trace_idx = [i for i in range(len(regs)) if i not in keep_idx]
    t = np.transpose(state.amplitudes.reshape(dims), keep_idx + trace_idx)
    psi = t.reshape(prod(dims[i] for i in keep_idx), -1)
    return DensityOperator(psi @ psi.conj().T, tuple(regs[i] for i in keep_idx), validate=False)


def apply_pauli(state: StateVector, reg: str, u, v) -> StateVector:
    """Apply X^u Z^v qubit-wise (X^{u_i} Z^{v_i} on qubit i) to register ``reg``."""
    u, v = parse_bits(u), parse_bits(v)
    idx = _lookup(state.registers, reg)
    width = state.registers[idx][1]
    if len(u) != width or len(v) != width:
        raise DimensionError(
            f"Pauli strings of length {len(u)}/{len(v)} on register {reg!r} of width {width}"
        )
    offset = register_offset(state.registers, reg)
    t = np.array(state.amplitudes).reshape((2,) * state.num_qubits)
    for i, (ui, vi) in enumerate(zip(u, v)):
        axis = offset + i
        if vi:
            sl = [slice(None)] * t.ndim
            sl[axis] = 1
            t[tuple(sl)] *= -1
        if ui:
            t = np.flip(t, axis=axis)
    return StateVector(t.reshape(-1), state.registers)


def _apply_columns(
    columns: np.ndarray, registers: Registers, op: Operator
) -> tuple[np.ndarray, Registers]:
    names = register_names(registers)
    dims = register_dims(registers)
    batch = columns.shape[1]
    in_names = register_names(op.input_registers)
    in_axes = [_lookup(registers, name) for name in in_names]
    for name, width in op.input_registers:
        if registers[names.index(name)][1] != width:
            raise RegisterError(f"Register {name!r} width mismatch")
    rest_axes = [i for i in range(len(names)) if i not in in_axes]
    out_names = register_names(op.registers)
    collision = set(out_names) & {names[i] for i in rest_axes}
    if collision:
        raise RegisterError(f"Operator output collides with untouched registers {sorted(collision)}")

    t = columns.reshape(dims + [batch])
    t = np.transpose(t, in_axes + rest_axes + [len(names)])
    flat = t.reshape(op.matrix.shape[1], -1)
    out = op.matrix @ flat
    out = out.reshape(register_dims(op.registers) + [dims[i] for i in rest_axes] + [batch])

    current = out_names + [names[i] for i in rest_axes]
    target = [n for n in names if n in out_names or n not in in_names]
    target += [n for n in out_names if n not in names]
    perm = [current.index(n) for n in target] + [len(current)]
    out = np.transpose(out, perm).reshape(-1, batch)
    widths = dict(registers)
    widths.update(dict(op.registers))
    return out, tuple((n, widths[n]) for n in target)


StateLike = TypeVar("StateLike", StateVector, DensityOperator)


def apply_operator(state: StateLike, op: Operator) -> StateLike:
    """Apply ``op`` to the registers it names.

    Registers untouched by ``op`` keep their place; output registers that did
    not exist before (e.g. an isometry's ancilla) are appended at the end.
    """
    if isinstance(state, StateVector):
        out, regs = _apply_columns(state.amplitudes[:, None], state.registers, op)
        vec = out[:, 0]
        if op.kind == "general":
            return StateVector.from_unnormalized(vec, regs)
        return StateVector(vec, regs)
    x, regs = _apply_columns(state.matrix, state.registers, op)
    y, _ = _apply_columns(x.conj().T, state.registers, op)
    return DensityOperator(y, regs, validate=op.kind != "general")


def reorder(state: StateLike, names) -> StateLike:
    """Permute registers into the order given by ``names``."""
    names = list(names)
    if sorted(names) != sorted(state.names):
        raise RegisterError(f"Reorder {names} must be a permutation of {state.names}")
    regs = state.registers
    perm = [_lookup(regs, n) for n in names]
    new_regs = tuple(regs[i] for i in perm)
    dims = register_dims(regs)
    if isinstance(state, StateVector):
        t = np.transpose(state.amplitudes.reshape(dims), perm)
        return StateVector(t.reshape(-1), new_regs)
    m = len(regs)
    t = np.transpose(state.matrix.reshape(dims + dims), perm + [i + m for i in perm])
    dim = state.dimension
    return DensityOperator(t.reshape(dim, dim), new_regs, validate=False)


def permute_qubits(state: StateVector, reg: str, perm) -> StateVector:
    """Relabel the qubits of one register: new qubit i is old qubit perm[i]."""
    idx = _lookup(state.registers, reg)
    width = state.registers[idx][1]
    perm = list(perm)
    if sorted(perm) != list(range(width)):
        raise DimensionError(f"{perm} is not a permutation of {width} qubits")
    offset = register_offset(state.registers, reg)
    axes = list(range(state.num_qubits))
    axes[offset : offset + width] = [offset + p for p in perm]
    t = np.transpose(state.amplitudes.reshape((2,) * state.num_qubits), axes)
    return StateVector(t.reshape(-1), state.registers)
