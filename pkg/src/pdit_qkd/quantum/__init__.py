from .bits import (
    Bits,
    add_bits,
    all_bitstrings,
    bit_table,
    bits_to_int,
    format_bits,
    int_to_bits,
    parse_bits,
    weight,
)
from .measures import (
    binary_entropy,
    binary_entropy_array,
    fidelity,
    hermitian_eigenvalues,
    psd_sqrt,
    pure_fidelity,
    spectrum_entropy,
    trace_distance,
    trace_distance_from_vectors,
    von_neumann_entropy,
)
from .states import (
    DensityOperator,
    DimensionError,
    Operator,
    Register,
    RegisterError,
    Registers,
    StateValidationError,
    StateVector,
    apply_operator,
    apply_pauli,
    marginal,
    partial_trace,
    permute_qubits,
    reorder,
    tensor,
)

__all__ = [
    "Bits",
    "add_bits",
    "all_bitstrings",
    "bit_table",
    "bits_to_int",
    "format_bits",
    "int_to_bits",
    "parse_bits",
    "weight",
    "binary_entropy",
    "binary_entropy_array",
    "fidelity",
    "hermitian_eigenvalues",
    "psd_sqrt",
    "pure_fidelity",
    "spectrum_entropy",
    "trace_distance",
    "trace_distance_from_vectors",
    "von_neumann_entropy",
    "DensityOperator",
    "DimensionError",
    "Operator",
    "Register",
    "RegisterError",
    "Registers",
    "StateValidationError",
    "StateVector",
    "apply_operator",
    "apply_pauli",
    "marginal",
    "partial_trace",
    "permute_qubits",
    "reorder",
    "tensor",
]
