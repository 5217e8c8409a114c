"""Tests for the distillation pipeline."""

import math

import numpy as np
import pytest

from pdit_qkd.config import settings_override
from pdit_qkd.errors import BudgetExceededError
from pdit_qkd.models import CodeSpec, PauliDistribution, ProtocolModel
from pdit_qkd.quantum import DimensionError, RegisterError, StateVector, apply_pauli, tensor
from pdit_qkd.quantum.bits import all_bitstrings, bits_to_int
from pdit_qkd.services.channel import (
    BlockLabel,
    apply_noisy_processing,
    bell_pairs,
    build_key_state,
)
from pdit_qkd.services.codes import LinearCode
from pdit_qkd.services.distill import (
    DistillationError,
    DistillationOutcome,
    apply_untwisting,
    bit_error_correct,
    build_rho,
    construct_untwisting,
    end_to_end,
    phase_correct,
    phase_twist_factorizations,
    untwist_fidelity,
)
from pdit_qkd.services.pgm import Ensemble, neumark_extend, pgm_construct
from pdit_qkd.services.pstate import key_security_distance_blocks


def _corrected(n, d, q, code=None):
    state = apply_noisy_processing(build_key_state(n, d), q)
    return bit_error_correct(state, code or LinearCode.full(n))


def _noise_and_record(n, q, u, v) -> StateVector:
    """C_{A'B'} (|phi^v>_{A'} |u>_{B'}) built term by term."""
    amps = np.zeros(4**n, dtype=complex)
    for f in all_bitstrings(n):
        w = sum(f)
        sign = (-1) ** sum(a * b for a, b in zip(f, v))
        record = tuple(a ^ b for a, b in zip(u, f))
        amps[bits_to_int(f) * 2**n + bits_to_int(record)] += (
            sign * math.sqrt(q**w * (1 - q) ** (n - w))
        )
    return StateVector(amps, (("A'", n), ("B'", n)))


def _model(Q: float, kind: str = "bb84") -> ProtocolModel:
    return ProtocolModel(kind=kind, Q=Q)


class TestBitErrorCorrect:
    def test_noiseless_leaves_state_unchanged(self, noiseless):
        s = _corrected(2, noiseless, 0.0)
        (block,) = s.blocks.values()
        expected = tensor(bell_pairs(2), StateVector.basis((("A'", 2), ("B'", 2)), 0))
        assert s.names == ["A", "B", "A'", "B'"]
        assert np.allclose(block.state.amplitudes, expected.amplitudes)

    def test_single_flip_with_parity_check(self, generic_distribution):
        s = _corrected(2, generic_distribution, 0.0, LinearCode.from_rows(["11"]))
        block = s.blocks[BlockLabel((0, 1), (0, 0))]
        expected = tensor(bell_pairs(2), StateVector.basis((("A'", 2), ("B'", 2)), "0001"))
        assert np.allclose(block.state.amplitudes, expected.amplitudes)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_full_code_matches_literal_state(self, generic_distribution, n):
        q = 0.3
        s = _corrected(n, generic_distribution, q)
        for label, block in s.blocks.items():
            literal = tensor(
                apply_pauli(bell_pairs(n), "B", (0,) * n, label.v),
                _noise_and_record(n, q, label.u, label.v),
            )
            assert abs(literal.inner(block.state)) == pytest.approx(1.0, abs=1e-10)

    def test_requires_noisy_processing(self, noiseless):
        with pytest.raises(RegisterError):
            bit_error_correct(build_key_state(1, noiseless), LinearCode.full(1))

    def test_code_length_checked(self, noiseless):
        s = apply_noisy_processing(build_key_state(2, noiseless), 0.1)
        with pytest.raises(DimensionError):
            bit_error_correct(s, LinearCode.full(3))


class TestBuildRho:
    def test_noiseless(self, noiseless):
        rho = build_rho(_corrected(1, noiseless, 0.0))
        expected = tensor(bell_pairs(1), StateVector.basis((("A'", 1), ("B'", 1)), 0))
        assert np.allclose(rho.matrix, expected.density().matrix)

    def test_phase_noise_closed_form(self):
        p, q = 0.2, 0.3
        d = PauliDistribution(p00=1 - p, p01=p, p10=0.0, p11=0.0)
        rho = build_rho(_corrected(1, d, q))
        a, b = math.sqrt(1 - q), math.sqrt(q)
        phi = bell_pairs(1)
        shield = (("A'", 1), ("B'", 1))
        v0 = tensor(phi, StateVector(np.array([a, 0, 0, b]), shield)).amplitudes
        v1 = tensor(apply_pauli(phi, "B", "0", "1"), StateVector(np.array([a, 0, 0, -b]), shield)).amplitudes
        expected = (1 - p) * np.outer(v0, v0.conj()) + p * np.outer(v1, v1.conj())
        assert np.allclose(rho.matrix, expected)

    def test_valid_state(self, generic_distribution):
        rho = build_rho(_corrected(2, generic_distribution, 0.2))
        assert np.trace(rho.matrix).real == pytest.approx(1.0)
        assert np.allclose(rho.matrix, rho.matrix.conj().T)

    def test_budget(self, generic_distribution):
        s = _corrected(2, generic_distribution, 0.2)
        with settings_override({"max_density_entries": 2**10}):
            with pytest.raises(BudgetExceededError):
                build_rho(s)


class TestPhaseCorrect:
    def test_full_code_singletons(self, generic_distribution):
        s, cosets = phase_correct(_corrected(2, generic_distribution, 0.1), LinearCode.full(2))
        assert all(len(c) == 1 for c in cosets.values())
        for label in s.labels:
            assert label.s == label.v

    def test_empty_code_single_coset(self, generic_distribution):
        s, cosets = phase_correct(_corrected(2, generic_distribution, 0.1), LinearCode.empty(2))
        assert list(cosets) == [()]
        assert len(cosets[()]) == 4
        assert {label.s for label in s.labels} == {()}

    def test_one_parity_on_three_bits(self, generic_distribution):
        s, cosets = phase_correct(_corrected(3, generic_distribution, 0.1), LinearCode.from_rows(["111"]))
        assert sorted(len(c) for c in cosets.values()) == [4, 4]
        for label in s.labels:
            assert label.v in cosets[label.s]

    def test_syndrome_held_in_register(self, generic_distribution):
        before = _corrected(2, generic_distribution, 0.1)
        s, _ = phase_correct(before, LinearCode.from_rows(["11"]))
        assert s.names == ["A", "B", "A'", "B'", "S"]
        for label, block in s.blocks.items():
            expected = tensor(before.blocks[BlockLabel(label.u, label.v)].state, StateVector.basis((("S", 1),), label.s))
            assert np.allclose(block.state.amplitudes, expected.amplitudes)

    def test_empty_code_adds_no_register(self, generic_distribution):
        s, _ = phase_correct(_corrected(2, generic_distribution, 0.1), LinearCode.empty(2))
        assert "S" not in s.names


class TestUntwisting:
    def _outcome(self, n, d, q, phase_code):
        s, cosets = phase_correct(_corrected(n, d, q), phase_code)
        untwist = construct_untwisting(cosets, n, q, d)
        return s, untwist, untwist_fidelity(s, untwist)

    def test_singleton_cosets_untwist_exactly(self, generic_distribution):
        _, _, outcome = self._outcome(2, generic_distribution, 0.2, LinearCode.full(2))
        assert outcome.fidelity == pytest.approx(1.0, abs=1e-10)
        assert outcome.epsilon == pytest.approx(0.0, abs=1e-5)

    def test_half_noise_untwists_exactly(self, generic_distribution):
        _, _, outcome = self._outcome(2, generic_distribution, 0.5, LinearCode.empty(2))
        assert outcome.fidelity == pytest.approx(1.0, abs=1e-10)

    def test_operators_are_isometries(self, generic_distribution):
        _, untwist, _ = self._outcome(2, generic_distribution, 0.2, LinearCode.empty(2))
        (op,) = untwist.operators.values()
        assert op.kind == "isometry"
        assert [name for name, _ in op.registers] == ["B", "A'", "A''", "B'"]

    def test_unmaterialised_untwisting(self, generic_distribution):
        _, cosets = phase_correct(_corrected(2, generic_distribution, 0.2), LinearCode.empty(2))
        untwist = construct_untwisting(cosets, 2, 0.2, generic_distribution, materialize=False)
        assert dict(untwist.operators) == {}

    def test_requires_phase_syndromes(self, generic_distribution):
        s = _corrected(1, generic_distribution, 0.2)
        _, cosets = phase_correct(s, LinearCode.empty(1))
        untwist = construct_untwisting(cosets, 1, 0.2, generic_distribution)
        with pytest.raises(DistillationError):
            untwist_fidelity(s, untwist)

    def test_trace_norm_bound(self, generic_distribution):
        _, _, outcome = self._outcome(2, generic_distribution, 0.15, LinearCode.empty(2))
        assert outcome.untwisted_distance <= 2 * outcome.epsilon + 1e-9

    def test_fidelity_at_least_one_minus_error(self, generic_distribution):
        _, _, outcome = self._outcome(2, generic_distribution, 0.15, LinearCode.empty(2))
        assert outcome.fidelity_formula >= 1 - outcome.average_error - 1e-12

    def test_outcome_epsilon_invariant(self):
        with pytest.raises(DistillationError):
            DistillationOutcome(
                fidelity=0.9, epsilon=0.1, fidelity_formula=0.9, average_error=0.1, syndromes={}
            )


class TestDualPathFidelity:
    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("Q", [0.0, 0.05, 0.1])
    @pytest.mark.parametrize("q", [0.0, 0.25, 0.5])
    def test_explicit_matches_formula(self, n, Q, q):
        run = end_to_end(n, _model(Q), q, bit_code=LinearCode.full(n), phase_code=LinearCode.empty(n))
        outcome = run.outcome
        assert run.explicit
        assert outcome.fidelity_explicit == pytest.approx(outcome.fidelity_formula, abs=1e-9)
        assert run.key_security_distance <= 2 * outcome.epsilon + 1e-9


def test_phase_twist_factorizations_agree():
    labels = all_bitstrings(2)
    e = Ensemble.phase_flipped(2, 0.2, labels, priors=[0.4, 0.3, 0.2, 0.1])
    ext = neumark_extend(pgm_construct(e))
    twist = phase_twist_factorizations(2, ext)
    assert np.allclose(twist.a_controlled, twist.b_controlled, atol=1e-12)
    dim = twist.a_controlled.shape[0]
    assert np.allclose(twist.a_controlled.conj().T @ twist.a_controlled, np.eye(dim), atol=1e-10)
    shield = (("A'", 2), ("A''", ext.ancilla_qubits))
    assert twist.as_twisting_operator(shield).dimension == 4


class TestEndToEnd:
    def test_noiseless_channel(self):
        run = end_to_end(2, _model(0.0), 0.0)
        assert run.outcome.fidelity == pytest.approx(1.0, abs=1e-10)
        assert run.outcome.epsilon == pytest.approx(0.0, abs=1e-5)
        assert run.key_security_distance == pytest.approx(0.0, abs=1e-9)

    def test_bb84_two_blocks(self):
        run = end_to_end(2, _model(0.05), 0.1)
        eps = math.sqrt(1 - run.outcome.fidelity**2)
        assert run.outcome.fidelity < 1.0
        assert run.key_security_distance <= 2 * eps + 1e-9

    def test_half_noise_deflects_phase_errors(self):
        run = end_to_end(3, _model(0.1), 0.5, phase_code=LinearCode.empty(3))
        assert run.outcome.fidelity == pytest.approx(1.0, abs=1e-10)
        assert run.key_security_distance == pytest.approx(0.0, abs=1e-9)

    def test_code_specs_and_seed(self):
        spec = CodeSpec(kind="random", checks=1)
        first = end_to_end(3, _model(0.05), 0.2, bit_code=CodeSpec(kind="full"), phase_code=spec, seed=4)
        second = end_to_end(3, _model(0.05), 0.2, bit_code=CodeSpec(kind="full"), phase_code=spec, seed=4)
        assert np.array_equal(first.phase_code.parity_checks, second.phase_code.parity_checks)
        assert first.outcome.fidelity == second.outcome.fidelity
        assert first.cosets == 2

    def test_low_noise_six_state_runs(self):
        run = end_to_end(
            3, _model(0.0324, "six-state"), 0.01,
            bit_code=LinearCode.full(3), phase_code=LinearCode.empty(3),
        )
        assert 0.0 < run.outcome.fidelity <= 1.0
        assert run.key_security_distance <= 2 * run.outcome.epsilon + 1e-9

    def test_random_code_needs_seed(self):
        with pytest.raises(ValueError):
            end_to_end(2, _model(0.05), 0.2, phase_code=CodeSpec(kind="random", checks=1))

    @pytest.mark.parametrize("seed", range(24))
    def test_security_soundness(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        kind = "bb84" if seed % 2 else "six-state"
        Q = float(rng.uniform(0.0, 0.12))
        q = float(rng.uniform(0.0, 0.5))
        bit = CodeSpec(kind="random", checks=int(rng.integers(0, n + 1)))
        phase = CodeSpec(kind="random", checks=int(rng.integers(0, n + 1)))
        run = end_to_end(n, _model(Q, kind), q, bit_code=bit, phase_code=phase, seed=seed)
        assert run.key_security_distance <= 2 * math.sqrt(1 - run.outcome.fidelity**2) + 1e-9

    @pytest.mark.parametrize("checks", [1, 2, 3])
    @pytest.mark.parametrize("seed", [4, 5, 9])
    def test_random_phase_codes_within_two_epsilon(self, checks, seed):
        run = end_to_end(
            3, _model(0.05), 0.2,
            bit_code=CodeSpec(kind="full"),
            phase_code=CodeSpec(kind="random", checks=checks),
            seed=seed,
        )
        assert run.key_security_distance <= 2 * run.outcome.epsilon + 1e-9

    def test_distance_shrinks_with_phase_information(self):
        distances = [
            end_to_end(3, _model(0.05), 0.2, phase_code=code).key_security_distance
            for code in (LinearCode.empty(3), LinearCode.from_rows(["111"]), LinearCode.full(3))
        ]
        assert distances[0] >= distances[1] - 1e-9
        assert distances[2] == pytest.approx(0.0, abs=1e-9)

    def test_untwisting_leaves_key_distance_unchanged(self, generic_distribution):
        s, cosets = phase_correct(_corrected(2, generic_distribution, 0.2), LinearCode.from_rows(["11"]))
        untwist = construct_untwisting(cosets, 2, 0.2, generic_distribution)
        untwisted = apply_untwisting(s, untwist)
        assert untwisted.names == ["A", "B", "A'", "B'", "S", "A''"]
        assert key_security_distance_blocks(untwisted) == pytest.approx(
            key_security_distance_blocks(s), abs=1e-9
        )

    @pytest.mark.parametrize("n", [1, 2])
    @pytest.mark.parametrize("Q", [0.02, 0.06, 0.1])
    def test_epsilon_non_increasing_in_q(self, n, Q):
        epsilons = [
            end_to_end(n, _model(Q), q, phase_code=LinearCode.empty(n)).outcome.epsilon
            for q in np.linspace(0.0, 0.5, 11)
        ]
        assert all(b <= a + 1e-9 for a, b in zip(epsilons, epsilons[1:]))

    def test_formula_path_above_explicit_budget(self):
        run = end_to_end(4, _model(0.05), 0.2)
        assert not run.explicit
        assert run.key_security_distance is None
        assert 0.0 < run.outcome.fidelity <= 1.0

    def test_budget_for_imperfect_bit_code(self):
        with pytest.raises(BudgetExceededError):
            end_to_end(4, _model(0.05), 0.2, bit_code=CodeSpec(kind="empty"))

    def test_explicit_budget_configurable(self):
        with settings_override({"max_explicit_block_length": 1}):
            run = end_to_end(2, _model(0.05), 0.2)
        assert not run.explicit


def test_key_distance_from_blocks_zero_without_noise(noiseless):
    s = _corrected(2, noiseless, 0.3)
    assert key_security_distance_blocks(s) == pytest.approx(0.0, abs=1e-9)
