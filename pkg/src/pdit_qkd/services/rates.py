"""Asymptotic key rate with noisy processing, q optimisation and thresholds.

R = 1 - H2(p~) - sum_u p_u (H2(p_{1|u}) - H2(lambda+_u)),
lambda+_u = (1 + sqrt(1 - 16 q (1-q) p_{1|u} (1-p_{1|u}))) / 2.
"""

import logging
import math

import numpy as np

from pdit_qkd.config import get_settings
from pdit_qkd.errors import PditError
from pdit_qkd.models.channel import PauliDistribution
from pdit_qkd.models.rates import (
    OptimizedRate,
    RateCurveRow,
    RateInput,
    RateResult,
    ThresholdResult,
)
from pdit_qkd.protocols import ProtocolRegistry
from pdit_qkd.quantum.measures import binary_entropy, binary_entropy_array
from pdit_qkd.services.channel import effective_bit_error, marginals
from pdit_qkd.utils.optimize import bisect_sign_change, golden_section_max

logger = logging.getLogger(__name__)

RADICAND_SLACK = 1e-12


class RateError(PditError):
    """Raised for invalid rate inputs or rate curves that break monotonicity."""

    pass


def lambda_plus(q: float, p1u: float) -> float:
    """Larger eigenvalue of sigma_u."""
    radicand = 1.0 - 16.0 * q * (1.0 - q) * p1u * (1.0 - p1u)
    if radicand < -RADICAND_SLACK:
        raise RateError(f"Negative radicand {radicand} for q={q}, p={p1u}")
    return 0.5 * (1.0 + math.sqrt(max(0.0, radicand)))


def key_rate(rate_input: RateInput) -> RateResult:
    m = marginals(rate_input.distribution)
    q = rate_input.q
    p_tilde = effective_bit_error(m.p_x, q)
    lam = (lambda_plus(q, m.p_phase_given_bit[0]), lambda_plus(q, m.p_phase_given_bit[1]))
    bit_term = binary_entropy(p_tilde)
    phase_term = sum(p * binary_entropy(c) for p, c in zip(m.p_bit, m.p_phase_given_bit))
    shield_term = sum(p * binary_entropy(x) for p, x in zip(m.p_bit, lam))
    return RateResult(
        R=1.0 - bit_term - phase_term + shield_term,
        q=q,
        p_tilde=p_tilde,
        bit_term=bit_term,
        phase_term=phase_term,
        shield_term=shield_term,
        lambda_plus=lam,
    )


def rate_on_grid(d: PauliDistribution, qs: np.ndarray) -> np.ndarray:
    """Vectorised R(q) for an array of q values."""
    m = marginals(d)
    qs = np.asarray(qs, dtype=float)
    rate = 1.0 - binary_entropy_array(m.p_x * (1 - qs) + qs * (1 - m.p_x))
    for p_u, c in zip(m.p_bit, m.p_phase_given_bit):
        radicand = np.clip(1.0 - 16.0 * qs * (1 - qs) * c * (1 - c), 0.0, None)
        lam = 0.5 * (1.0 + np.sqrt(radicand))
        rate -= p_u * (binary_entropy(c) - binary_entropy_array(lam))
    return rate


def optimize_q(d: PauliDistribution) -> OptimizedRate:
    """Maximise R over q in [0, 1/2]: grid search, then golden-section refinement."""
    settings = get_settings()
    grid = np.linspace(0.0, 0.5, settings.rate_grid_points)
    values = rate_on_grid(d, grid)
    best = int(np.argmax(values))
    low = grid[max(best - 1, 0)]
    high = grid[min(best + 1, len(grid) - 1)]

    def objective(q: float) -> float:
        return float(rate_on_grid(d, np.array([q]))[0])

    q_star, r_star = golden_section_max(objective, low, high, settings.golden_tolerance)
    candidates = [(q_star, r_star), (0.0, float(values[0])), (0.5, float(values[-1])), (float(grid[best]), float(values[best]))]
    q_star, _ = max(candidates, key=lambda c: c[1])
    result = key_rate(RateInput(distribution=d, q=q_star))
    return OptimizedRate(q_star=q_star, R_star=result.R, result=result)


def _g(x: float) -> float:
    """artanh(x) / x with its limit 1 at x = 0."""
    if x < 1e-8:
        return 1.0 + x * x / 3.0
    if x >= 1.0:
        return math.inf
    return math.atanh(x) / x


def limit_curvature(d: PauliDistribution) -> float:
    """Coefficient a in R(1/2 - t) = a t^2 / ln 2 + O(t^4).

    R vanishes at q = 1/2; a > 0 means the rate is positive just below it.
    """
    m = marginals(d)
    a = 2.0 * (1.0 - 2.0 * m.p_x) ** 2
    for p_u, c in zip(m.p_bit, m.p_phase_given_bit):
        if p_u == 0.0 or c in (0.0, 1.0):
            continue
        a -= 8.0 * p_u * c * (1.0 - c) * _g(abs(1.0 - 2.0 * c))
    return a


def _positive_rate(d: PauliDistribution, q_policy: str, q: float) -> bool:
    floor = get_settings().rate_positivity_floor
    if q_policy == "fixed":
        return key_rate(RateInput(distribution=d, q=q)).R > floor
    return optimize_q(d).R_star > floor or limit_curvature(d) > 0.0


def threshold(kind: str, q_policy: str = "optimized", q: float = 0.0) -> ThresholdResult:
    """Largest Q with a positive key rate, by bisection on the sign of the rate."""
    settings = get_settings()
    protocol = ProtocolRegistry.create(kind)

    def positive(Q: float) -> bool:
        return _positive_rate(protocol.distribution(Q), q_policy, q)

    low, high = 0.0, protocol.bracket_high
    if not positive(low):
        raise RateError(f"{kind}: no positive key rate even at Q = 0 with policy {q_policy!r}")
    ceiling = min(protocol.max_Q, 0.5) - 1e-9
    while positive(high):
        if high >= ceiling:
            raise RateError(f"{kind}: rate stays positive up to Q = {high}")
        widened = min(ceiling, high + 0.05)
        logger.warning(f"{kind}: rate still positive at Q = {high}; widening bracket to {widened}")
        high = widened

    result = bisect_sign_change(positive, low, high, settings.threshold_tolerance)
    logger.info(f"{kind} threshold ({q_policy}): {result.root:.6f} after {result.iterations} steps")
    return ThresholdResult(
        protocol=kind,
        threshold=result.root,
        q_policy=q_policy,
        bracket=(low, high),
        iterations=result.iterations,
    )


def rate_curve(kind: str, Q_grid, q_policy: str = "optimized", q: float = 0.0) -> list[RateCurveRow]:
    """Rate and its terms at each Q; the rate must not increase with Q."""
    protocol = ProtocolRegistry.create(kind)
    rows = []
    for Q in sorted(float(x) for x in Q_grid):
        d = protocol.distribution(Q)
        if q_policy == "fixed":
            result = key_rate(RateInput(distribution=d, q=q))
        else:
            result = optimize_q(d).result
        rows.append(
            RateCurveRow(
                Q=Q,
                q=result.q,
                R=result.R,
                bit_term=result.bit_term,
                phase_term=result.phase_term,
                shield_term=result.shield_term,
            )
        )
    for prev, row in zip(rows, rows[1:]):
        if row.R > prev.R + 1e-9:
            raise RateError(f"Rate rises from {prev.R} at Q={prev.Q} to {row.R} at Q={row.Q}")
    return rows
