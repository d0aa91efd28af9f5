"""Law of the stage count in the geometric-ladder stopping construction.

Stage 0 runs Brownian motion from 0 until it leaves (-1, beta).  Whenever a
stage ends at its lower barrier ``-(1+delta)^n``, the next one runs until
``-(1+delta)^(n+1)`` or ``beta (1+delta)^(n+1)``.  ``sigma`` is the index of
the stage that ends at its upper barrier.  Everything here follows from the
gambler's ruin probabilities of those stages.
"""
from __future__ import annotations

import math

from .errors import DivergenceError, DomainError


def _check(beta: float, delta: float) -> None:
    if not beta > 0:
        raise DomainError(f"beta={beta!r} must be positive")
    if not delta > 0:
        raise DomainError(f"delta={delta!r} must be positive")


def continue_probability(beta: float, delta: float) -> float:
    """Chance that a stage n >= 1 ends at its lower barrier."""
    _check(beta, delta)
    return (beta * (1.0 + delta) + 1.0) / ((beta + 1.0) * (1.0 + delta))


def prob_sigma_zero(beta: float) -> float:
    return 1.0 / (beta + 1.0)


def prob_sigma_greater(n: int, beta: float, delta: float) -> float:
    """P(sigma > n) for n >= 0."""
    return beta / (beta + 1.0) * continue_probability(beta, delta) ** n


def prob_sigma_equal(n: int, beta: float, delta: float) -> float:
    if n == 0:
        return prob_sigma_zero(beta)
    q = continue_probability(beta, delta)
    return beta / (beta + 1.0) * q ** (n - 1) * delta / ((beta + 1.0) * (1.0 + delta))


def moment_ratio(beta: float, delta: float, p: float) -> float:
    """Ratio (beta(1+delta)+1)(1+delta)^(p-1)/(beta+1) of the moment series."""
    _check(beta, delta)
    return (beta * (1.0 + delta) + 1.0) * (1.0 + delta) ** (p - 1.0) / (beta + 1.0)


def one_minus_ratio(beta: float, delta: float, p: float) -> float:
    """1 - moment_ratio, computed without cancellation for small delta."""
    _check(beta, delta)
    lg = math.log1p(delta)
    shrink = -math.expm1((p - 1.0) * lg)          # 1 - (1+delta)^(p-1)
    grow = math.exp((p - 1.0) * lg)               # (1+delta)^(p-1)
    return ((beta + 1.0) * shrink - beta * delta * grow) / (beta + 1.0)


def require_convergent(beta: float, delta: float, p: float) -> float:
    gap = one_minus_ratio(beta, delta, p)
    if not gap > 0:
        raise DivergenceError(
            f"moment series diverges: ratio (beta(1+delta)+1)(1+delta)^(p-1)/(beta+1) "
            f"= {1.0 - gap:.12g} >= 1 for beta={beta}, delta={delta}, p={p}")
    return gap


def stage_power_moment(beta: float, delta: float, p: float) -> float:
    """E (1+delta)^(p sigma), summed in closed form."""
    gap = require_convergent(beta, delta, p)
    r = 1.0 + delta
    return 1.0 / (beta + 1.0) + beta * delta * r ** (p - 1.0) / ((beta + 1.0) ** 2 * gap)


def stage_power_partial(beta: float, delta: float, p: float, last: int) -> float:
    """sum_{n=1}^{last} (1+delta)^(p n) P(sigma = n) in closed form."""
    r = 1.0 + delta
    rho = moment_ratio(beta, delta, p)
    gap = one_minus_ratio(beta, delta, p)
    lead = beta * delta * r ** (p - 1.0) / (beta + 1.0) ** 2
    if gap == 0.0:
        return lead * last
    return lead * (-math.expm1(last * math.log(rho))) / gap
