"""Scalar search routines: golden-section maximisation and sign bisection."""

import math
from collections.abc import Callable
from dataclasses import dataclass

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQ = (3 - math.sqrt(5)) / 2


def golden_section_max(
    obj: Callable[[float], float], a: float, b: float, tol: float = 1e-8
) -> tuple[float, float]:
    """Maximise a unimodal function on [a, b].

    Returns (x, obj(x)) with the bracket shrunk below ``tol``.
    """
    dist = b - a
    if dist <= tol:
        x = (a + b) / 2
        return x, obj(x)

    iterations = int(math.ceil(math.log(tol / dist) / math.log(INV_PHI)))

    c = a + INV_PHI_SQ * dist
    d = a + INV_PHI * dist
    yc = obj(c)
    yd = obj(d)

    for _ in range(iterations - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            dist = INV_PHI * dist
            c = a + INV_PHI_SQ * dist
            yc = obj(c)
        else:
            a = c
            c = d
            yc = yd
            dist = INV_PHI * dist
            d = a + INV_PHI * dist
            yd = obj(d)

    x = (a + d) / 2 if yc > yd else (c + b) / 2
    return x, obj(x)


@dataclass(frozen=True)
class BisectionResult:
    root: float
    low: float
    high: float
    iterations: int


def bisect_sign_change(
    positive: Callable[[float], bool], low: float, high: float, tol: float
) -> BisectionResult:
    """Locate the boundary between ``positive(x)`` true at ``low`` and false at ``high``.

    The caller guarantees the bracket; the predicate is assumed to switch once.
    """
    iterations = 0
    while high - low > tol:
        mid = (low + high) / 2
        if positive(mid):
            low = mid
        else:
            high = mid
        iterations += 1
    return BisectionResult(root=(low + high) / 2, low=low, high=high, iterations=iterations)
