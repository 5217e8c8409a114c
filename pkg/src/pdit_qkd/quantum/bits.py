"""Bit-string helpers. Qubit 0 of a register is the most significant index bit."""

from collections.abc import Iterable, Sequence
from functools import lru_cache

import numpy as np

Bits = tuple[int, ...]


def parse_bits(value: str | Iterable[int]) -> Bits:
    """Accept "0101", [0, 1, 0, 1] or a tuple and return a tuple of 0/1 ints."""
    if isinstance(value, str):
        items = [c for c in value.strip() if c not in " _,"]
        if any(c not in "01" for c in items):
            raise ValueError(f"Not a bit string: {value!r}")
        return tuple(int(c) for c in items)
    bits = tuple(int(b) for b in value)
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"Not a bit string: {value!r}")
    return bits


def format_bits(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def int_to_bits(value: int, n: int) -> Bits:
    return tuple((value >> (n - 1 - i)) & 1 for i in range(n))


def weight(bits: Sequence[int]) -> int:
    return int(sum(bits))


def add_bits(a: Sequence[int], b: Sequence[int]) -> Bits:
    """Bitwise XOR of two equal-length strings."""
    if len(a) != len(b):
        raise ValueError(f"Length mismatch: {len(a)} vs {len(b)}")
    return tuple(int(x) ^ int(y) for x, y in zip(a, b))


@lru_cache(maxsize=32)
def _bit_table(n: int) -> np.ndarray:
    table = ((np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1).astype(np.uint8)
    table.setflags(write=False)
    return table


def bit_table(n: int) -> np.ndarray:
    """All 2^n strings as rows of a (2^n, n) uint8 array, in integer order."""
    return _bit_table(n)


def all_bitstrings(n: int) -> list[Bits]:
    return [tuple(int(b) for b in row) for row in bit_table(n)]


