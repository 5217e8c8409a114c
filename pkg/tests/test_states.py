"""Tests for register-labelled states and operators."""

import math

import numpy as np
import pytest

from pdit_qkd.quantum import (
    DensityOperator,
    DimensionError,
    Operator,
    RegisterError,
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
from pdit_qkd.quantum.bits import add_bits, bits_to_int, format_bits, int_to_bits, parse_bits
from pdit_qkd.services.channel import bell_pairs
from pdit_qkd.services.pstate import random_density_operator

PHI = bell_pairs(1)


class TestBits:
    def test_parse_and_format(self):
        assert parse_bits("0101") == (0, 1, 0, 1)
        assert parse_bits([1, 0]) == (1, 0)
        assert format_bits((1, 1, 0)) == "110"

    def test_parse_rejects_other_digits(self):
        with pytest.raises(ValueError):
            parse_bits("012")

    def test_qubit_zero_is_most_significant(self):
        assert bits_to_int((1, 0, 0)) == 4
        assert int_to_bits(1, 3) == (0, 0, 1)

    def test_add_bits(self):
        assert add_bits("110", "011") == (1, 0, 1)
        with pytest.raises(ValueError):
            add_bits("1", "10")


class TestStateVector:
    def test_basis_index_convention(self):
        state = StateVector.basis((("A", 2),), "10")
        assert state.amplitudes[2] == 1.0

    def test_row_major_across_registers(self):
        state = tensor(StateVector.basis((("A", 1),), "1"), StateVector.basis((("B", 2),), "01"))
        assert state.amplitudes[0b101] == 1.0
        assert state.amplitudes.reshape(2, 4, order="C")[1, 1] == 1.0

    def test_rejects_unnormalised(self):
        with pytest.raises(StateValidationError):
            StateVector(np.array([1.0, 1.0]), (("A", 1),))

    def test_rejects_wrong_length(self):
        with pytest.raises(DimensionError):
            StateVector(np.array([1.0, 0.0, 0.0]), (("A", 1),))

    def test_duplicate_register_names(self):
        with pytest.raises(RegisterError):
            StateVector.basis((("A", 1), ("A", 1)), 0)

    def test_inner_requires_same_layout(self):
        a = StateVector.basis((("A", 1),), 0)
        b = StateVector.basis((("B", 1),), 0)
        with pytest.raises(RegisterError):
            a.inner(b)

    def test_amplitudes_are_read_only(self):
        with pytest.raises(ValueError):
            PHI.amplitudes[0] = 0.0


class TestTensor:
    def test_basis_product(self):
        zero = StateVector.basis((("A", 1),), 0)
        one = StateVector.basis((("B", 1),), 1)
        product = tensor(zero, one)
        assert product.registers == (("A", 1), ("B", 1))
        assert np.allclose(product.amplitudes, [0, 1, 0, 0])

    def test_x_on_first_half_of_bell_pair(self):
        x_a = tensor(Operator.pauli(("A", 1), "1", "0"), Operator.identity((("B", 1),)))
        out = apply_operator(PHI, x_a)
        assert np.allclose(out.amplitudes, np.array([0, 1, 1, 0]) / math.sqrt(2))

    def test_two_bell_pairs(self):
        second = StateVector(PHI.amplitudes, (("A2", 1), ("B2", 1)))
        two = tensor(PHI, second)
        nonzero = two.amplitudes[np.abs(two.amplitudes) > 1e-12]
        assert len(nonzero) == 4
        assert np.allclose(nonzero, 0.5)

    def test_name_collision(self):
        with pytest.raises(RegisterError):
            tensor(PHI, PHI)

    def test_mixed_types(self):
        with pytest.raises(TypeError):
            tensor(PHI, PHI.density())


class TestPartialTrace:
    def test_bell_marginal_is_maximally_mixed(self):
        reduced = partial_trace(PHI.density(), ["A"])
        assert np.allclose(reduced.matrix, np.eye(2) / 2)

    def test_keep_everything(self):
        rho = PHI.density()
        assert np.allclose(partial_trace(rho, ["A", "B"]).matrix, rho.matrix)

    def test_unknown_register(self):
        with pytest.raises(RegisterError):
            partial_trace(PHI.density(), ["C"])

    def test_recovers_product_factors(self, rng):
        rho = random_density_operator((("A", 1),), rng)
        sigma = random_density_operator((("B", 2),), rng)
        joint = tensor(rho, sigma)
        assert np.allclose(partial_trace(joint, ["A"]).matrix, rho.matrix, atol=1e-12)
        assert np.allclose(partial_trace(joint, ["B"]).matrix, sigma.matrix, atol=1e-12)

    def test_marginal_matches_partial_trace(self, rng):
        amps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        state = StateVector.from_unnormalized(amps, (("A", 1), ("B", 2)))
        assert np.allclose(
            marginal(state, ["B"]).matrix, partial_trace(state.density(), ["B"]).matrix
        )

    def test_trace_preserved(self, rng):
        rho = random_density_operator((("A", 2), ("B", 1)), rng)
        assert np.trace(partial_trace(rho, "B").matrix).real == pytest.approx(1.0)


class TestApplyPauli:
    def test_identity_pattern(self):
        out = apply_pauli(PHI, "B", "0", "0")
        assert np.allclose(out.amplitudes, PHI.amplitudes)

    def test_bell_symmetry_for_x(self):
        on_a = apply_pauli(PHI, "A", "1", "0")
        on_b = apply_pauli(PHI, "B", "1", "0")
        assert np.allclose(on_a.amplitudes, on_b.amplitudes)

    def test_x_xz_equals_i_xzx(self):
        # X (x) XZ and I (x) XZX act identically on |Phi>
        lhs = apply_pauli(apply_pauli(PHI, "A", "1", "0"), "B", "1", "1")
        xzx = apply_pauli(apply_pauli(PHI, "B", "1", "0"), "B", "1", "1")
        assert np.allclose(lhs.amplitudes, xzx.amplitudes)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            apply_pauli(PHI, "A", "10", "00")

    def test_matches_pauli_operator(self):
        state = bell_pairs(2)
        direct = apply_pauli(state, "B", "10", "11")
        via_operator = apply_operator(state, Operator.pauli(("B", 2), "10", "11"))
        assert np.allclose(direct.amplitudes, via_operator.amplitudes)


class TestOperator:
    def test_unitary_flag_checked(self):
        with pytest.raises(StateValidationError):
            Operator(np.array([[1.0, 1.0], [0.0, 1.0]]), (("A", 1),), kind="unitary")

    def test_isometry_appends_new_register(self):
        # |x>_A -> |x>_A |x>_C
        matrix = np.zeros((4, 2))
        matrix[0, 0] = matrix[3, 1] = 1.0
        copy = Operator(matrix, (("A", 1), ("C", 1)), (("A", 1),), kind="isometry")
        out = apply_operator(PHI, copy)
        assert out.registers == (("A", 1), ("B", 1), ("C", 1))
        assert out.amplitudes[0] == pytest.approx(1 / math.sqrt(2))
        assert out.amplitudes[7] == pytest.approx(1 / math.sqrt(2))

    def test_compose_and_dagger(self):
        x = Operator.pauli(("A", 1), "1", "0")
        assert np.allclose(x.compose(x.dagger()).matrix, np.eye(2))

    def test_density_conjugation_keeps_trace(self, rng):
        rho = random_density_operator((("A", 1), ("B", 1)), rng)
        h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        out = apply_operator(rho, Operator(h, (("B", 1),), kind="unitary"))
        assert np.trace(out.matrix).real == pytest.approx(1.0)


class TestReorder:
    def test_reorder_roundtrip(self, rng):
        rho = random_density_operator((("A", 1), ("B", 2)), rng)
        back = reorder(reorder(rho, ["B", "A"]), ["A", "B"])
        assert np.allclose(back.matrix, rho.matrix)

    def test_reorder_requires_permutation(self):
        with pytest.raises(RegisterError):
            reorder(PHI, ["A"])

    def test_permute_qubits_swaps_order(self):
        state = StateVector.basis((("A", 2),), "10")
        swapped = permute_qubits(state, "A", [1, 0])
        assert swapped.amplitudes[bits_to_int("01")] == 1.0


class TestDensityOperator:
    def test_rejects_non_hermitian(self):
        with pytest.raises(StateValidationError):
            DensityOperator(np.array([[0.5, 0.1], [0.0, 0.5]]), (("A", 1),))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(StateValidationError):
            DensityOperator(np.diag([1.2, -0.2]), (("A", 1),))

    def test_mixture(self):
        zero = StateVector.basis((("A", 1),), 0)
        one = StateVector.basis((("A", 1),), 1)
        rho = DensityOperator.mixture([0.5, 0.5], [zero, one])
        assert np.allclose(rho.matrix, DensityOperator.maximally_mixed((("A", 1),)).matrix)
