"""Binary linear codes given by parity checks, with syndrome-table decoding."""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from pdit_qkd.errors import PditError
from pdit_qkd.quantum.bits import Bits, bit_table, bits_to_int, int_to_bits, parse_bits
from pdit_qkd.quantum.states import DimensionError

logger = logging.getLogger(__name__)


class CodeError(PditError, ValueError):
    """Raised for rank-deficient or malformed parity-check matrices."""

    pass


def gf2_rank(matrix: np.ndarray) -> int:
    """Rank over GF(2) by Gaussian elimination."""
    m = np.array(matrix, dtype=np.uint8) % 2
    rows, cols = m.shape
    rank = 0
    for col in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Length-n code with a full-rank k x n parity-check matrix.

    Syndromes are k-bit strings with check 0 as the most significant bit.
    """

    n: int
    parity_checks: np.ndarray

    def __post_init__(self):
        h = np.array(self.parity_checks, dtype=np.uint8) % 2
        if h.size == 0:
            h = h.reshape(0, self.n)
        if h.ndim != 2 or h.shape[1] != self.n:
            raise DimensionError(f"Parity checks of shape {h.shape} for a code of length {self.n}")
        if gf2_rank(h) != h.shape[0]:
            raise CodeError(f"Parity-check matrix with {h.shape[0]} rows is not full rank")
        h.setflags(write=False)
        object.__setattr__(self, "parity_checks", h)

    @classmethod
    def full(cls, n: int) -> "LinearCode":
        """n independent checks: every error string has its own syndrome."""
        return cls(n, np.eye(n, dtype=np.uint8))

    @classmethod
    def empty(cls, n: int) -> "LinearCode":
        return cls(n, np.zeros((0, n), dtype=np.uint8))

    @classmethod
    def from_rows(cls, rows, n: int | None = None) -> "LinearCode":
        parsed = [parse_bits(r) for r in rows]
        if n is None:
            if not parsed:
                raise CodeError("Cannot infer the length of a code with no rows")
            n = len(parsed[0])
        if any(len(r) != n for r in parsed):
            raise DimensionError(f"Parity-check rows must all have length {n}")
        return cls(n, np.array(parsed, dtype=np.uint8).reshape(-1, n))

    @classmethod
    def random(cls, n: int, checks: int, seed: int | np.random.Generator) -> "LinearCode":
        """Uniformly random full-rank code with ``checks`` parity checks."""
        if checks < 0 or checks > n:
            raise CodeError(f"Cannot draw {checks} independent checks on {n} bits")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        while True:
            h = rng.integers(0, 2, size=(checks, n), dtype=np.uint8)
            if gf2_rank(h) == checks:
                return cls(n, h)

    @property
    def k(self) -> int:
        """Number of parity checks."""
        return self.parity_checks.shape[0]

    def _check_length(self, bits: Bits) -> None:
        if len(bits) != self.n:
            raise DimensionError(f"Word of length {len(bits)} for a code of length {self.n}")

    def syndrome(self, bits) -> Bits:
        bits = parse_bits(bits)
        self._check_length(bits)
        values = (self.parity_checks.astype(int) @ np.array(bits, dtype=int)) % 2
        return tuple(int(x) for x in values)

    @cached_property
    def syndrome_table(self) -> np.ndarray:
        """Integer syndrome of every word, indexed by the word's integer value."""
        words = bit_table(self.n).astype(int)
        checks = (words @ self.parity_checks.T.astype(int)) % 2
        if self.k == 0:
            return np.zeros(2**self.n, dtype=np.int64)
        weights = 1 << np.arange(self.k - 1, -1, -1)
        return (checks * weights).sum(axis=1).astype(np.int64)

    @cached_property
    def leader_table(self) -> np.ndarray:
        """Minimum-weight word per syndrome; ties go to the smallest integer."""
        leaders = np.full(2**self.k, -1, dtype=np.int64)
        weights = bit_table(self.n).sum(axis=1)
        order = np.lexsort((np.arange(2**self.n), weights))
        for word in order:
            s = self.syndrome_table[word]
            if leaders[s] < 0:
                leaders[s] = word
        return leaders

    def coset(self, s) -> list[Bits]:
        """All words with syndrome s, in increasing integer order."""
        s = parse_bits(s)
        if len(s) != self.k:
            raise DimensionError(f"Syndrome of length {len(s)} for a code with {self.k} checks")
        target = bits_to_int(s)
        words = np.flatnonzero(self.syndrome_table == target)
        return [int_to_bits(int(w), self.n) for w in words]

    def cosets(self) -> dict[Bits, list[Bits]]:
        return {int_to_bits(s, self.k): self.coset(int_to_bits(s, self.k)) for s in range(2**self.k)}

    def leader(self, s) -> Bits:
        s = parse_bits(s)
        return int_to_bits(int(self.leader_table[bits_to_int(s)]), self.n)

    def decode(self, bits) -> Bits:
        """Correction for an observed error word: the leader of its syndrome."""
        return self.leader(self.syndrome(bits))

    def correction_table(self) -> np.ndarray:
        """Integer correction for every integer error word."""
        return self.leader_table[self.syndrome_table]
