"""Closed-form moments of the extremal constructions and their limits.

Two families of formulas live here.  The ``*_lower`` / ``*_bound`` values are
the geometric sums over the stages ``n >= 1`` used to bound the moments from
one side, together with their delta -> 0 and K -> infinity limits.  The
``exact_*`` values add the stage-0 contribution and are what a Monte Carlo run
of the same construction estimates.

All series share the ratio ``rho = (beta(1+delta)+1)(1+delta)^(p-1)/(beta+1)``
and the lead factor ``beta delta (1+delta)^(p-1)/(beta+1)^2``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from . import stages
from .constants import check_exponent, constants_bundle, tail_integral_I2
from .errors import DomainError

DELTA_LIMIT = 1e-6
K_LIMIT = 100.0
BETA_FRACTION = 0.999


def _lead(beta: float, delta: float, p: float) -> float:
    return beta * delta * (1.0 + delta) ** (p - 1.0) / (beta + 1.0) ** 2


def _geometric_tail(beta: float, delta: float, p: float) -> float:
    """sum_{n>=1} (1+delta)^(pn) P(sigma=n)."""
    stages.require_convergent(beta, delta, p)
    return _lead(beta, delta, p) / stages.one_minus_ratio(beta, delta, p)


def _check_sup(beta: float, p: float) -> None:
    if not 0.0 < beta < 1.0 / p - 1.0:
        raise DomainError(f"beta={beta} must lie in (0, 1/p - 1 = {1.0 / p - 1.0:.12g})")


# ---------------------------------------------------------------- infimum, uncapped


@dataclass(frozen=True)
class UncappedNorms:
    x_norm: float          # E|X|^p
    minus_bound: float     # sum_n (1+delta)^(pn) P(sigma=n) >= E(-M-)^p
    minus_exact: float     # E(-M-)^p under the conditional-minimum law

    @property
    def bound_ratio(self) -> float:
        return self.x_norm / self.minus_bound

    @property
    def exact_ratio(self) -> float:
        return self.x_norm / self.minus_exact


def conditional_min_moment(start: float, lower: float, upper: float, p: float) -> float:
    """E(-m)^p for the minimum m of a path from ``start`` exiting (lower, upper) at ``upper``."""
    if not lower < start < upper:
        raise DomainError("need lower < start < upper")
    if start > 0:
        raise DomainError("the running minimum must be nonpositive")
    scale = (upper - start) * (upper - lower) / (start - lower)

    def integrand(y: float) -> float:
        return (-y) ** p * scale / (upper - y) ** 2

    pts = [0.0] if lower < 0.0 < start else None
    val, _ = integrate.quad(integrand, lower, start, points=pts, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def thm1_uncapped_norms(beta: float, delta: float, p: float) -> UncappedNorms:
    """E|X|^p = beta^p E(1+delta)^(p sigma) and the bounds on E(-M-)^p."""
    p = check_exponent(p, (0.0, 1.0))
    if not beta > 0:
        raise DomainError("beta must be positive")
    s = stages.stage_power_moment(beta, delta, p)
    r = 1.0 + delta
    j0 = conditional_min_moment(0.0, -1.0, beta, p)
    j1 = conditional_min_moment(-1.0 / r, -1.0, beta, p)
    exact = j0 / (beta + 1.0) + j1 * (s - 1.0 / (beta + 1.0))
    return UncappedNorms(beta ** p * s, s, exact)


# ---------------------------------------------------------------- infimum, capped


@dataclass(frozen=True)
class CappedNorms:
    minus_bound: float     # stages 1..N plus the capped remainder
    x_norm: float          # same decomposition for |X|^p
    minus_exact_bound: float  # adds the stage-0 term 1/(beta+1)
    x_exact: float            # adds the stage-0 term beta^p/(beta+1)

    @property
    def ratio(self) -> float:
        return self.x_norm / self.minus_bound

    @property
    def exact_ratio(self) -> float:
        return self.x_exact / self.minus_exact_bound


def _capped_parts(beta: float, delta: float, cap: int, p: float) -> tuple[float, float]:
    """(sum_{n=1}^{N} (1+delta)^(pn) P(sigma=n), (1+delta)^((N+1)p) P(sigma>N))."""
    gap = stages.one_minus_ratio(beta, delta, p)
    log_rho = math.log1p(beta * delta / (beta + 1.0)) + (p - 1.0) * math.log1p(delta)
    lead = beta * delta * (1.0 + delta) ** (p - 1.0) / (beta + 1.0)
    if gap == 0.0:
        series = lead * cap / (beta + 1.0)
    else:
        series = lead * (-math.expm1(cap * log_rho)) / ((beta + 1.0) * gap)
    remainder = beta * (1.0 + delta) ** p / (beta + 1.0) * math.exp(cap * log_rho)
    return series, remainder


def thm1_capped_norms(beta: float, delta: float, cap: int, p: float) -> CappedNorms:
    """Moments of the construction stopped after at most ``cap`` stages.

    On {sigma > N} the terminal value and the infimum are taken as
    ``-(1+delta)^(N+1)``.
    """
    p = check_exponent(p, (0.0, 1.0))
    if not beta > 0 or not delta > 0:
        raise DomainError("beta and delta must be positive")
    if int(cap) != cap or cap < 0:
        raise DomainError(f"cap={cap!r} must be a nonnegative integer")
    series, rem = _capped_parts(beta, delta, int(cap), p)
    minus = series + rem
    x = beta ** p * series + rem
    return CappedNorms(minus, x, minus + 1.0 / (beta + 1.0), x + beta ** p / (beta + 1.0))


def _capped_exponential(beta: float, K: float, p: float) -> float:
    return math.exp(p * K - K / (beta + 1.0))


def thm1_capped_K_limit(beta: float, K: float, p: float) -> tuple[float, float]:
    """N -> infinity with delta = K/N: limits of (minus_bound, x_norm)."""
    e = _capped_exponential(beta, K, p)
    den = 1.0 - p - beta * p
    w = beta / (beta + 1.0)
    return w * ((1.0 - e) / den + e), w * (beta ** p * (1.0 - e) / den + e)


def thm1_capped_K_ratio(beta: float, K: float, p: float) -> float:
    m, x = thm1_capped_K_limit(beta, K, p)
    return x / m


def thm1_capped_ratio_limit(beta: float, p: float) -> float:
    """K -> infinity limit 1 + (beta^p - 1)/((beta+1) p), valid for beta > 1/p - 1."""
    return 1.0 + (beta ** p - 1.0) / ((beta + 1.0) * p)


# ---------------------------------------------------------------- supremum


@dataclass(frozen=True)
class SupForms:
    minus_series: float    # beta/(beta+1) + sum_{n>=1}(...) as the delta-limit form
    plus_lower: float      # sum_{n>=1} E[(M+)^p; sigma=n]
    minus_exact: float     # E(-M-)^p
    plus_exact: float      # E(M+)^p

    @property
    def ratio(self) -> float:
        return self.plus_lower / self.minus_series

    @property
    def exact_ratio(self) -> float:
        return self.plus_exact / self.minus_exact


def thm2_closed_forms(beta: float, delta: float, p: float) -> SupForms:
    p = check_exponent(p, (0.0, 1.0))
    _check_sup(beta, p)
    tail = _geometric_tail(beta, delta, p)
    s = 1.0 / (beta + 1.0) + tail
    i2 = tail_integral_I2(beta, p)
    return SupForms(beta / (beta + 1.0) + tail, (beta + 1.0) * i2 * tail, s, (beta + 1.0) * i2 * s)


def thm2_minus_limit(beta: float, p: float) -> float:
    """delta -> 0 limit beta(2-p-beta p)/((beta+1)(1-p-beta p))."""
    return beta * (2.0 - p - beta * p) / ((beta + 1.0) * (1.0 - p - beta * p))


def thm2_ratio_limit(beta: float, p: float) -> float:
    """delta -> 0 limit (beta+1) I2(beta)/(2-p-beta p) of the lower-bound ratio."""
    return (beta + 1.0) * tail_integral_I2(beta, p) / (2.0 - p - beta * p)


def thm2_exact_ratio(beta: float, p: float) -> float:
    """E(M+)^p/E(-M-)^p = (beta+1) I2(beta), the same for every delta."""
    return (beta + 1.0) * tail_integral_I2(beta, p)


# ---------------------------------------------------------------- two-sided


def _two_sided_weight(beta: float, p: float) -> float:
    return (1.0 - beta) / 2.0 + (beta + 1.0) * tail_integral_I2(1.0, p)


def thm3_closed_forms(beta: float, delta: float, p: float) -> SupForms:
    p = check_exponent(p, (0.0, 1.0))
    if not p > 0.5:
        raise DomainError(f"the two-sided construction needs 1/2 < p < 1, got p={p}")
    _check_sup(beta, p)
    tail = _geometric_tail(beta, delta, p)
    s = 1.0 / (beta + 1.0) + tail
    a = _two_sided_weight(beta, p)
    return SupForms(beta / (beta + 1.0) + tail, a * tail, s, a * s)


def thm3_ratio_limit(beta: float, p: float) -> float:
    return _two_sided_weight(beta, p) / (2.0 - p - beta * p)


def thm3_exact_ratio(beta: float, p: float) -> float:
    return _two_sided_weight(beta, p)


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class RatioCurvePoint:
    thm: int
    p: float
    beta: float
    beta_fraction: float
    delta: float
    K: float | None
    N: int | None
    numerator: float
    denominator: float
    ratio: float
    limit: float          # value of the limiting expression at this beta
    limit_tag: str        # which limit ``limit`` refers to
    asymptote: float      # the sharp constant to the p-th power

    def as_row(self) -> dict:
        return asdict(self)


def sweep_fractions(start: float = 0.5, stop: float = BETA_FRACTION, steps: int = 11) -> np.ndarray:
    if not 0.0 < start <= stop < 1.0:
        raise DomainError(f"beta fractions need 0 < from <= to < 1, got {start}:{stop}")
    if steps < 1:
        raise DomainError("a sweep needs at least one step")
    if steps == 1:
        return np.array([stop])
    return np.linspace(start, stop, steps)


def beta_cap(thm: int, p: float) -> float:
    """Supremum of admissible beta for the chain of theorem ``thm``."""
    b = constants_bundle(p)
    if thm == 1 and p > b.p0:
        return b.x_star
    return 1.0 / p - 1.0


def thm1_sharpness_chain(p: float, fractions=None, delta: float = DELTA_LIMIT,
                         K: float = K_LIMIT) -> list[RatioCurvePoint]:
    """Ratio chain approaching C_p^p.

    For p <= p0 the uncapped construction gives the ratio beta^p between
    E|X|^p and the series bound on E(-M-)^p.  For p > p0 the capped
    construction with delta = K/N is used.
    """
    b = constants_bundle(p)
    fr = sweep_fractions() if fractions is None else np.asarray(fractions, dtype=float)
    cap = beta_cap(1, p)
    rows = []
    for f in fr:
        beta = float(f * cap)
        if p <= b.p0:
            nm = thm1_uncapped_norms(beta, delta, p)
            rows.append(RatioCurvePoint(1, p, beta, float(f), delta, None, None, nm.x_norm,
                                        nm.minus_bound, nm.bound_ratio, beta ** p,
                                        "beta->limit", b.C ** p))
            continue
        N = int(round(K / delta))
        d = K / N
        nm = thm1_capped_norms(beta, d, N, p)
        limit = thm1_capped_ratio_limit(beta, p) if beta > 1.0 / p - 1.0 else beta ** p
        rows.append(RatioCurvePoint(1, p, beta, float(f), d, K, N, nm.x_exact, nm.minus_exact_bound,
                                    nm.exact_ratio, limit, "K->inf", b.C ** p))
    return rows


def _sup_chain(thm: int, p: float, fractions, delta: float) -> list[RatioCurvePoint]:
    b = constants_bundle(p)
    fr = sweep_fractions() if fractions is None else np.asarray(fractions, dtype=float)
    cap = 1.0 / p - 1.0
    forms, limit_fn, asym = ((thm2_closed_forms, thm2_ratio_limit, b.c ** p) if thm == 2
                             else (thm3_closed_forms, thm3_ratio_limit, b.frak_c ** p))
    rows = []
    for f in fr:
        beta = float(f * cap)
        fm = forms(beta, delta, p)
        rows.append(RatioCurvePoint(thm, p, beta, float(f), delta, None, None, fm.plus_exact,
                                    fm.minus_exact, fm.exact_ratio, limit_fn(beta, p),
                                    "delta->0", asym))
    return rows


def thm2_sharpness_chain(p: float, fractions=None, delta: float = DELTA_LIMIT) -> list[RatioCurvePoint]:
    return _sup_chain(2, p, fractions, delta)


def thm3_sharpness_chain(p: float, fractions=None, delta: float = DELTA_LIMIT) -> list[RatioCurvePoint]:
    if not p > 0.5:
        raise DomainError(f"the two-sided chain needs 1/2 < p < 1, got p={p}; for p <= 1/2 use the supremum chain")
    return _sup_chain(3, p, fractions, delta)


def sharpness_chain(thm: int, p: float, fractions=None, delta: float = DELTA_LIMIT,
                    K: float = K_LIMIT) -> list[RatioCurvePoint]:
    if thm == 1:
        return thm1_sharpness_chain(p, fractions, delta, K)
    if thm == 2:
        return thm2_sharpness_chain(p, fractions, delta)
    if thm == 3:
        return thm3_sharpness_chain(p, fractions, delta)
    raise DomainError(f"thm must be 1, 2 or 3, got {thm!r}")
