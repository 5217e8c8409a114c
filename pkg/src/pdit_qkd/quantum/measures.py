"""Entropies and distance functionals on density operators."""

import math

import numpy as np
from scipy import linalg

from pdit_qkd.quantum.states import (
    DensityOperator,
    DimensionError,
    StateValidationError,
    StateVector,
)
from pdit_qkd.quantum.tolerances import (
    EIGENVALUE_FLOOR,
    PROBABILITY_SLACK,
    STRUCTURAL_TOL,
)


def hermitian_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (LAPACK tridiagonal solver)."""
    return linalg.eigh(matrix, eigvals_only=True, check_finite=False)


def clamp_spectrum(eigenvalues: np.ndarray) -> np.ndarray:
    """Zero out round-off negatives; larger negatives mean an invalid state."""
    smallest = float(np.min(eigenvalues)) if eigenvalues.size else 0.0
    if smallest < -STRUCTURAL_TOL:
        raise StateValidationError(f"Eigenvalue {smallest} is below -{STRUCTURAL_TOL}")
    return np.where(eigenvalues < EIGENVALUE_FLOOR, 0.0, eigenvalues)


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Square root of a positive semidefinite matrix via its spectral decomposition."""
    evals, evecs = linalg.eigh(matrix, check_finite=False)
    evals = clamp_spectrum(evals)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def _same_shape(rho: DensityOperator, sigma: DensityOperator) -> None:
    if rho.matrix.shape != sigma.matrix.shape:
        raise DimensionError(
            f"Dimension mismatch: {rho.matrix.shape} vs {sigma.matrix.shape}"
        )


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Root fidelity F = Tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1]."""
    _same_shape(rho, sigma)
    root = psd_sqrt(rho.matrix)
    inner = root @ sigma.matrix @ root
    inner = (inner + inner.conj().T) / 2
    evals = np.clip(hermitian_eigenvalues(inner), 0.0, None)
    return float(np.clip(np.sum(np.sqrt(evals)), 0.0, 1.0))


def pure_fidelity(psi: StateVector, phi: StateVector) -> float:
    """|<psi|phi>|, the root fidelity of two pure states."""
    return float(min(1.0, abs(psi.inner(phi))))


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """||rho - sigma||_1, the sum of absolute eigenvalues of the difference."""
    _same_shape(rho, sigma)
    diff = rho.matrix - sigma.matrix
    diff = (diff + diff.conj().T) / 2
    return float(np.sum(np.abs(hermitian_eigenvalues(diff))))


def trace_distance_from_vectors(x: np.ndarray, y: np.ndarray) -> float:
    """||X X^dag - Y Y^dag||_1 for tall matrices X, Y of weighted columns.

    Works in the span of the columns, so the cost is set by the rank rather
    than the ambient dimension.
    """
    if x.shape[0] != y.shape[0]:
        raise DimensionError(f"Row mismatch: {x.shape} vs {y.shape}")
    stacked = np.hstack([x, y])
    _, r = np.linalg.qr(stacked, mode="reduced")
    signs = np.concatenate([np.ones(x.shape[1]), -np.ones(y.shape[1])])
    reduced = (r * signs) @ r.conj().T
    reduced = (reduced + reduced.conj().T) / 2
    return float(np.sum(np.abs(hermitian_eigenvalues(reduced))))


def binary_entropy(x: float) -> float:
    """H2(x) = -x log2 x - (1-x) log2(1-x), with 0 log 0 = 0."""
    if x < -PROBABILITY_SLACK or x > 1 + PROBABILITY_SLACK:
        raise ValueError(f"binary_entropy argument {x} outside [0, 1]")
    x = min(max(float(x), 0.0), 1.0)
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def binary_entropy_array(x: np.ndarray) -> np.ndarray:
    """Vectorised H2 for arrays already known to lie in [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    inside = (x > 0) & (x < 1)
    safe = np.where(inside, x, 0.5)
    values = -safe * np.log2(safe) - (1 - safe) * np.log2(1 - safe)
    return np.where(inside, values, 0.0)


def spectrum_entropy(eigenvalues: np.ndarray) -> float:
    """Shannon entropy in bits of a (clamped) spectrum."""
    evals = clamp_spectrum(np.asarray(eigenvalues, dtype=float))
    nonzero = evals[evals > 0]
    return float(-np.sum(nonzero * np.log2(nonzero)))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """S(rho) = -sum_i lambda_i log2 lambda_i."""
    mat = rho.matrix
    if not np.allclose(mat, mat.conj().T, atol=STRUCTURAL_TOL, rtol=0):
        raise StateValidationError("von_neumann_entropy requires a Hermitian input")
    return spectrum_entropy(hermitian_eigenvalues(mat))
