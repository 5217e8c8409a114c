"""Pretty-good measurement on the phase-flipped noise ensemble.

Alice's noise purification after a phase error pattern v is
|phi^v> = Z^v |phi>^{(x) n} with |phi> = sqrt(1-q)|0> + sqrt(q)|1>. Knowing only
the coset of v, Alice and Bob distinguish these states with the PGM, and its
Neumark extension gives the orthonormal vectors used for untwisting.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from pdit_qkd.config import get_settings
from pdit_qkd.errors import PditError, check_budget
from pdit_qkd.models.channel import PauliDistribution
from pdit_qkd.models.experiment import CosetErrorStatistics, SubsetMethod
from pdit_qkd.quantum.bits import Bits, bit_table, bits_to_int, int_to_bits, parse_bits
from pdit_qkd.quantum.states import (
    DensityOperator,
    DimensionError,
    StateValidationError,
    StateVector,
)
from pdit_qkd.quantum.tolerances import (
    COMPLETENESS_DEFECT_TOL,
    COMPLETENESS_TOL,
    EIGENVALUE_FLOOR,
    STRUCTURAL_TOL,
    SUPPORT_RELATIVE_FLOOR,
)
from pdit_qkd.services.channel import NOISE_A, marginals, noise_amplitudes
from pdit_qkd.services.codes import LinearCode
from pdit_qkd.utils.seeding import trial_generators

logger = logging.getLogger(__name__)

EXTENSION_REGISTER = "A''"


class CompletenessError(PditError, ValueError):
    """Raised when POVM elements sum to more than the identity."""

    pass


def phi_amplitudes(n: int, q: float, v) -> np.ndarray:
    """Amplitudes sqrt(q_f) (-1)^{f.v} of Z^v |phi>^{(x) n}, indexed by int(f)."""
    v = parse_bits(v)
    if len(v) != n:
        raise DimensionError(f"Phase pattern of length {len(v)} for n = {n}")
    signs = 1 - 2 * ((bit_table(n).astype(int) @ np.array(v, dtype=int)) % 2)
    return noise_amplitudes(n, q) * signs


def phi_v(n: int, q: float, v) -> StateVector:
    return StateVector(phi_amplitudes(n, q, v).astype(complex), ((NOISE_A, n),))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Labelled pure states (columns of ``states``) with prior probabilities."""

    labels: tuple[Bits, ...]
    priors: np.ndarray
    states: np.ndarray
    n: int | None = None
    q: float | None = None

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=float)
        states = np.asarray(self.states, dtype=complex)
        if states.ndim != 2 or states.shape[1] != len(self.labels) or priors.shape != (len(self.labels),):
            raise DimensionError(
                f"{len(self.labels)} labels, priors {priors.shape}, states {states.shape}"
            )
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > STRUCTURAL_TOL:
            raise StateValidationError(f"Priors must be a distribution, got sum {priors.sum()}")
        norms = np.linalg.norm(states, axis=0)
        if not np.allclose(norms, 1.0, atol=STRUCTURAL_TOL):
            raise StateValidationError("Ensemble states must be normalised")
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "states", states)

    @classmethod
    def phase_flipped(cls, n: int, q: float, labels, priors=None) -> "Ensemble":
        """{ Z^v |phi>^{(x) n} : v in labels }, uniform priors unless given."""
        labels = tuple(parse_bits(v) for v in labels)
        if priors is None:
            priors = np.full(len(labels), 1.0 / len(labels))
        states = np.stack([phi_amplitudes(n, q, v) for v in labels], axis=1)
        return cls(labels, np.asarray(priors, dtype=float), states.astype(complex), n, q)

    @classmethod
    def from_states(cls, states: list[StateVector], priors=None) -> "Ensemble":
        if priors is None:
            priors = np.full(len(states), 1.0 / len(states))
        labels = tuple(int_to_bits(i, max(1, math.ceil(math.log2(max(2, len(states)))))) for i in range(len(states)))
        return cls(labels, np.asarray(priors, dtype=float), np.stack([s.amplitudes for s in states], axis=1))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int:
        return self.states.shape[0]

    def average_state(self) -> np.ndarray:
        """S = sum_v p_v |phi^v><phi^v|."""
        weighted = self.states * np.sqrt(self.priors)
        return weighted @ weighted.conj().T


def completeness_tolerance(dimension: int) -> float:
    """Round-off allowed on sum_v |t_v><t_v| <= I; grows with the dimension."""
    return COMPLETENESS_TOL * max(1, dimension)


@dataclass(frozen=True, eq=False)
class RankOnePOVM:
    """Elements |t_v><t_v| (columns of ``vectors``) plus a junk element I - sum.

    A junk element that is negative only by round-off is clipped to the
    positive cone.
    """

    labels: tuple[Bits, ...]
    vectors: np.ndarray
    junk: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=complex)
        dim = vectors.shape[0]
        junk = np.eye(dim) - vectors @ vectors.conj().T
        junk = (junk + junk.conj().T) / 2
        evals, evecs = linalg.eigh(junk)
        if evals[0] < -completeness_tolerance(dim):
            raise CompletenessError(f"POVM elements exceed the identity by {-evals[0]}")
        if evals[0] < 0.0:
            junk = (evecs * np.clip(evals, 0.0, None)) @ evecs.conj().T
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "junk", junk)

    def elements(self) -> list[np.ndarray]:
        return [np.outer(t, t.conj()) for t in self.vectors.T]

    def outcome_probabilities(self, state: np.ndarray) -> np.ndarray:
        """Probabilities of each labelled outcome and, last, the junk outcome."""
        probs = np.abs(self.vectors.conj().T @ state) ** 2
        return np.append(probs, max(0.0, 1.0 - probs.sum()))


def pgm_construct(e: Ensemble) -> RankOnePOVM:
    """|t_v> = S^{-1/2} sqrt(p_v) |phi^v>, with the inverse root taken on the support of S."""
    settings = get_settings()
    check_budget("PGM dimension", e.dimension, settings.max_pgm_dimension)
    check_budget("PGM ensemble size", e.size, settings.max_pgm_dimension)
    evals, evecs = linalg.eigh(e.average_state())
    support = evals > max(EIGENVALUE_FLOOR, SUPPORT_RELATIVE_FLOOR * evals[-1])
    basis = evecs[:, support]
    inv_root = (basis / np.sqrt(evals[support])) @ basis.conj().T
    vectors = inv_root @ (e.states * np.sqrt(e.priors))
    return RankOnePOVM(e.labels, vectors)


def success_amplitudes(e: Ensemble, m: RankOnePOVM) -> np.ndarray:
    """<t_v|phi^v> for each label; the square is the success probability of v."""
    return np.einsum("ij,ij->j", m.vectors.conj(), e.states)


def average_error(e: Ensemble, m: RankOnePOVM) -> float:
    """1 - sum_v p_v |<t_v|phi^v>|^2; the junk outcome counts as an error."""
    if m.vectors.shape != e.states.shape:
        raise DimensionError(f"POVM {m.vectors.shape} vs ensemble {e.states.shape}")
    success = float(np.sum(e.priors * np.abs(success_amplitudes(e, m)) ** 2))
    return min(1.0, max(0.0, 1.0 - success))


@dataclass(frozen=True, eq=False)
class IsometricExtension:
    """Orthonormal vectors on A' (x) A'' whose A''=0 component is the POVM vector.

    Index of a vector entry is a' * 2^ancilla_qubits + a''.
    """

    labels: tuple[Bits, ...]
    vectors: np.ndarray
    system_dimension: int
    ancilla_qubits: int

    def __post_init__(self):
        gram = self.vectors.conj().T @ self.vectors
        if not np.allclose(gram, np.eye(gram.shape[0]), atol=STRUCTURAL_TOL, rtol=0):
            raise StateValidationError("Extended vectors are not orthonormal")

    def embed(self, states: np.ndarray) -> np.ndarray:
        """|psi> -> |psi>|0>_{A''} for each column."""
        states = np.asarray(states, dtype=complex)
        out = np.zeros((self.system_dimension, 2**self.ancilla_qubits) + states.shape[1:], dtype=complex)
        out[:, 0] = states
        return out.reshape((-1,) + states.shape[1:])

    def padded(self, ancilla_qubits: int) -> "IsometricExtension":
        """Same vectors with A'' widened; the a''=0 components are unchanged."""
        if ancilla_qubits < self.ancilla_qubits:
            raise DimensionError(f"Cannot shrink A'' from {self.ancilla_qubits} to {ancilla_qubits} qubits")
        k = len(self.labels)
        arr = self.vectors.reshape(self.system_dimension, 2**self.ancilla_qubits, k)
        out = np.zeros((self.system_dimension, 2**ancilla_qubits, k), dtype=complex)
        out[:, : 2**self.ancilla_qubits] = arr
        return IsometricExtension(
            self.labels, out.reshape(-1, k), self.system_dimension, ancilla_qubits
        )

    def vector(self, label) -> np.ndarray:
        return self.vectors[:, self.labels.index(parse_bits(label))]


def _ancilla_qubits(rank: int, dimension: int) -> int:
    if rank == 0:
        return 0
    m = 1
    while (2**m - 1) * dimension < rank:
        m += 1
    return m


def neumark_extend(m: RankOnePOVM) -> IsometricExtension:
    """Complete the POVM vectors to an orthonormal family on A' (x) A''.

    With Gram matrix G = T^dag T, the extra components Y satisfy Y^dag Y = I - G
    and live in the a'' != 0 slots. The result is snapped to the nearest
    orthonormal family (polar factor) to remove round-off.
    """
    t = m.vectors
    dim, k = t.shape
    defect = np.eye(k) - t.conj().T @ t
    defect = (defect + defect.conj().T) / 2
    mu, w = linalg.eigh(defect)
    tolerance = max(COMPLETENESS_DEFECT_TOL, completeness_tolerance(dim))
    if mu.size and mu[0] < -tolerance:
        raise CompletenessError(f"Completeness defect has eigenvalue {mu[0]}")
    keep = mu > EIGENVALUE_FLOOR
    y = np.sqrt(mu[keep])[:, None] * w[:, keep].conj().T
    rank = y.shape[0]
    ancilla = _ancilla_qubits(rank, dim)
    arr = np.zeros((dim, 2**ancilla, k), dtype=complex)
    arr[:, 0, :] = t
    if rank:
        rest = np.zeros((dim * (2**ancilla - 1), k), dtype=complex)
        rest[:rank] = y
        arr[:, 1:, :] = rest.reshape(dim, 2**ancilla - 1, k)
    vectors = arr.reshape(-1, k)
    drift = np.max(np.abs(vectors.conj().T @ vectors - np.eye(k)), initial=0.0)
    if drift > tolerance:
        raise StateValidationError(f"Extended vectors deviate from orthonormal by {drift}")
    left, _, right = linalg.svd(vectors, full_matrices=False)
    return IsometricExtension(m.labels, left @ right, dim, ancilla)


def sigma_state(q: float, p_z: float) -> DensityOperator:
    """sigma = (1 - p_z)|phi><phi| + p_z Z|phi><phi|Z on one qubit of A'."""
    if not (0.0 <= q <= 1.0 and 0.0 <= p_z <= 1.0):
        raise ValueError(f"Rates outside [0, 1]: q={q}, p_z={p_z}")
    phi = np.array([math.sqrt(1 - q), math.sqrt(q)], dtype=complex)
    flipped = phi * np.array([1, -1])
    matrix = (1 - p_z) * np.outer(phi, phi.conj()) + p_z * np.outer(flipped, flipped.conj())
    return DensityOperator(matrix, ((NOISE_A, 1),))


def phase_priors(labels, d: PauliDistribution, u: Bits | None = None) -> np.ndarray:
    """Unnormalised i.i.d. weights of each phase pattern.

    Without u these are the marginals p(v); with u they are p(u, v), which is
    proportional to p(v | u) for fixed u.
    """
    table = d.as_array()
    p_z = marginals(d).p_z
    weights = []
    for v in labels:
        if u is None:
            weights.append(math.prod(p_z if b else 1.0 - p_z for b in v))
        else:
            weights.append(math.prod(table[a, b] for a, b in zip(u, v)))
    return np.array(weights, dtype=float)


def _draw_pattern(rng: np.random.Generator, n: int, d: PauliDistribution) -> tuple[Bits, Bits]:
    probs = d.as_array().reshape(-1)
    draws = rng.choice(4, size=n, p=probs / probs.sum())
    return tuple(int(x) >> 1 for x in draws), tuple(int(x) & 1 for x in draws)


def _coset_trial(
    rng: np.random.Generator,
    n: int,
    q: float,
    d: PauliDistribution,
    log_size: int,
    set_size: int,
    method: SubsetMethod,
    conditional: bool,
) -> float:
    u0, v0 = _draw_pattern(rng, n, d)
    if method == "code":
        code = LinearCode.random(n, n - log_size, rng)
        labels = code.coset(code.syndrome(v0))
    else:
        others = [w for w in range(2**n) if w != bits_to_int(v0)]
        picked = rng.choice(len(others), size=set_size - 1, replace=False)
        labels = sorted([v0] + [int_to_bits(others[i], n) for i in picked], key=bits_to_int)
    weights = phase_priors(labels, d, u0 if conditional else None)
    ensemble = Ensemble.phase_flipped(n, q, labels, weights / weights.sum())
    return average_error(ensemble, pgm_construct(ensemble))


def random_coset_error(
    n: int,
    q: float,
    d: PauliDistribution,
    set_exponent: float,
    trials: int,
    seed: int,
    method: SubsetMethod = "code",
    conditional: bool = False,
) -> CosetErrorStatistics:
    """PGM decoding error over random phase-pattern sets of size about 2^{n * set_exponent}.

    ``method="code"`` uses the syndrome coset of a random linear code with
    n - ceil(n * e) checks; ``method="subset"`` draws a uniform subset of
    ceil(2^{n * e}) patterns. Either way the set contains the realised pattern.
    """
    settings = get_settings()
    check_budget("block length n", n, settings.max_block_length)
    check_budget("PGM dimension", 2**n, settings.max_pgm_dimension)
    if trials < 1:
        raise ValueError("At least one trial is required")
    if set_exponent < 0:
        raise ValueError(f"Negative set exponent {set_exponent}")
    log_size = math.ceil(n * set_exponent - 1e-12)
    set_size = 2**log_size if method == "code" else math.ceil(2 ** (n * set_exponent) - 1e-9)
    if set_size > 2**n:
        raise ValueError(f"Set size {set_size} exceeds the {2**n} phase patterns of length {n}")

    rngs = trial_generators(seed, trials)

    def run(rng: np.random.Generator) -> float:
        return _coset_trial(rng, n, q, d, log_size, set_size, method, conditional)

    if settings.parallel_trials and trials > 1:
        with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
            errors = np.array(list(pool.map(run, rngs)))
    else:
        errors = np.array([run(rng) for rng in rngs])

    logger.debug(f"PGM coset errors n={n} q={q} e={set_exponent}: mean {errors.mean():.3e}")
    quantiles = np.quantile(errors, [0.1, 0.5, 0.9])
    return CosetErrorStatistics(
        n=n,
        q=q,
        exponent=set_exponent,
        set_size=set_size,
        method=method,
        conditional=conditional,
        trials=trials,
        seed=seed,
        mean=float(errors.mean()),
        std=float(errors.std()),
        min=float(errors.min()),
        max=float(errors.max()),
        quantiles={"q10": float(quantiles[0]), "q50": float(quantiles[1]), "q90": float(quantiles[2])},
    )
