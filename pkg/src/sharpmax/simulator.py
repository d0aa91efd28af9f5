"""Exact sampling of the stopped-Brownian-motion extremal constructions.

Every random quantity is drawn from its closed-form law, so there is no
path discretization: the stage count from its geometric tail, minima and
maxima of single stages from gambler's-ruin formulas, and the overshoot of
the final excursion from its ``1/(y + (1+delta)^n)`` tail.

Each draw consumes one row of four uniforms from :class:`~sharpmax.rng.SeedSpec`:
``u[0]`` the stage count, ``u[1]`` the extremum of the final excursion,
``u[2]`` the running maximum of a capped path that never reached its upper
barrier.  ``u[3]`` is reserved.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from . import stages
from .constants import DEFAULT_P_BOUNDS, check_exponent, constants_bundle
from .errors import DomainError
from .rng import SeedSpec

DEFAULT_CHUNK = 1 << 16
FIELDS = ("x_terminal", "m_plus", "m_minus", "m_abs")


class Variant(str, Enum):
    THM1_UNCAPPED = "thm1"
    THM1_CAPPED = "thm1-capped"
    THM2 = "thm2"
    THM3 = "thm3"


@dataclass(frozen=True)
class StagedParams:
    """Parameters of one extremal construction.

    ``cap`` is the stage cap ``N`` and is required exactly for ``THM1_CAPPED``.
    """

    p: float
    beta: float
    delta: float
    variant: Variant
    cap: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "p", check_exponent(self.p, DEFAULT_P_BOUNDS))
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta={self.beta!r} must be positive and finite")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise DomainError(f"delta={self.delta!r} must be positive and finite")
        p, beta = self.p, self.beta
        if self.variant is Variant.THM1_CAPPED:
            if self.cap is None or int(self.cap) != self.cap or self.cap < 0:
                raise DomainError(f"cap={self.cap!r} must be a nonnegative integer")
            object.__setattr__(self, "cap", int(self.cap))
            limit = constants_bundle(p).x_star
            if not beta < limit:
                raise DomainError(f"beta={beta} must be below alpha_p^(1/(1-p))={limit:.12g}")
            return
        if self.cap is not None:
            raise DomainError(f"cap is only meaningful for {Variant.THM1_CAPPED.value}")
        if not beta < 1.0 / p - 1.0:
            raise DomainError(f"beta={beta} must be below 1/p - 1={1.0 / p - 1.0:.12g}")
        if self.variant is Variant.THM3 and not p > 0.5:
            raise DomainError(f"{Variant.THM3.value} needs 1/2 < p < 1, got p={p}")
        if self.variant is Variant.THM1_UNCAPPED:
            stages.require_convergent(beta, self.delta, p)

    @property
    def ratio(self) -> float:
        """Ratio of the geometric moment series."""
        return stages.moment_ratio(self.beta, self.delta, self.p)

    @property
    def growth(self) -> float:
        return 1.0 + self.delta


class SampleOutcome(NamedTuple):
    sigma: int
    x_terminal: float
    m_plus: float
    m_minus: float
    m_abs: float


@dataclass
class OutcomeBatch:
    """Columnar batch of outcomes; ``sigma == cap + 1`` marks a capped path."""

    sigma: np.ndarray
    x_terminal: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    m_abs: np.ndarray

    def __len__(self) -> int:
        return len(self.sigma)

    def __iter__(self) -> Iterator[SampleOutcome]:
        for row in zip(self.sigma.tolist(), self.x_terminal.tolist(), self.m_plus.tolist(),
                       self.m_minus.tolist(), self.m_abs.tolist()):
            yield SampleOutcome(*row)

    def __getitem__(self, i: int) -> SampleOutcome:
        return SampleOutcome(int(self.sigma[i]), float(self.x_terminal[i]), float(self.m_plus[i]),
                             float(self.m_minus[i]), float(self.m_abs[i]))

    @classmethod
    def concat(cls, batches: Iterable["OutcomeBatch"]) -> "OutcomeBatch":
        batches = list(batches)
        return cls(*(np.concatenate([getattr(b, f) for b in batches])
                     for f in ("sigma",) + FIELDS))

    def violations(self) -> np.ndarray:
        """Indices of rows breaking m_minus <= 0 <= m_plus, the x ordering, or m_abs."""
        bad = ((self.m_minus > 0) | (self.m_plus < 0)
               | (self.x_terminal < self.m_minus) | (self.x_terminal > self.m_plus)
               | (self.m_abs != np.maximum(self.m_plus, -self.m_minus))
               | (self.sigma < 0))
        return np.flatnonzero(bad)


# ---------------------------------------------------------------- primitive laws


def sigma_from_uniform(beta: float, delta: float, u) -> np.ndarray:
    """Inverse transform of the stage-count law at uniforms ``u`` in [0, 1).

    sigma is the least n with P(sigma > n) <= 1 - u, which gives the same law
    as stopping stage by stage with probabilities 1/(beta+1), then 1 - q.
    """
    u = np.asarray(u, dtype=float)
    q = stages.continue_probability(beta, delta)
    w = (1.0 - u) * (beta + 1.0) / beta
    with np.errstate(divide="ignore"):
        n = np.floor(np.log(w) / math.log(q)) + 1.0
    return np.where(w > 1.0, 0, n).astype(np.int64)


def sample_sigma(beta: float, delta: float, rng: np.random.Generator, size=None):
    if not (beta > 0 and delta > 0):
        raise DomainError("beta and delta must be positive")
    s = sigma_from_uniform(beta, delta, rng.random(size))
    return int(s) if size is None else s


def conditional_min_from_uniform(start, lower, upper, v):
    """Quantile of the minimum of a path from ``start`` that exits (lower, upper) at ``upper``.

    P(min <= y) = (upper - start)(y - lower) / ((upper - y)(start - lower)),
    evaluated at ``v`` in (0, 1].
    """
    s, l, u, v = (np.asarray(a, dtype=float) for a in (start, lower, upper, v))
    up, down = u - s, s - l
    return (v * u * down + l * up) / (up + v * down)


def _check_order(start, lower, upper):
    if not np.all((np.asarray(lower) < np.asarray(start)) & (np.asarray(start) < np.asarray(upper))):
        raise DomainError("need lower < start < upper")


def sample_conditional_min(start: float, lower: float, upper: float,
                           rng: np.random.Generator, size=None):
    _check_order(start, lower, upper)
    v = 1.0 - rng.random(size)
    m = conditional_min_from_uniform(start, lower, upper, v)
    return float(m) if size is None else m


def mplus_tail_from_uniform(n, beta: float, delta: float, v):
    """Running maximum after the final upper exit, ``P(M+ >= y) = (beta+1)r^n/(y+r^n)``."""
    scale = (1.0 + delta) ** np.asarray(n, dtype=float)
    return scale * ((beta + 1.0) / np.asarray(v, dtype=float) - 1.0)


def sample_mplus_tail(n: int, beta: float, delta: float, rng: np.random.Generator, size=None):
    y = mplus_tail_from_uniform(n, beta, delta, 1.0 - rng.random(size))
    return float(y) if size is None else y


def capped_max_cdf(y, beta: float, delta: float, cap: int) -> np.ndarray:
    """P(M+ < y | the path is stopped at the cap), for y >= 0.

    Stage k ends at its lower barrier; given that, its maximum exceeds y with
    probability (beta - y)/((y+1) beta) for k = 0 and
    delta (beta r^k - y)/((y + r^k)(beta r + 1)) for k >= 1.
    """
    y = np.asarray(y, dtype=float)[..., None]
    r = 1.0 + delta
    k = np.arange(1, cap + 1, dtype=float)
    rk = r ** k
    p0 = np.clip((beta - y[..., 0]) / ((y[..., 0] + 1.0) * beta), 0.0, 1.0)
    pk = np.clip(delta * (beta * rk - y) / ((y + rk) * (beta * r + 1.0)), 0.0, 1.0)
    return (1.0 - p0) * np.prod(1.0 - pk, axis=-1)


def capped_max_from_uniform(beta: float, delta: float, cap: int, v, iterations: int = 60):
    """Invert :func:`capped_max_cdf` by bisection on [0, beta (1+delta)^cap]."""
    v = np.asarray(v, dtype=float)
    lo = np.zeros_like(v)
    hi = np.full_like(v, beta * (1.0 + delta) ** cap)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = capped_max_cdf(mid, beta, delta, cap) < v
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- composed outcomes


def _final_stage(sigma: np.ndarray, beta: float, r: float):
    """(start, lower, upper) of the stage whose upper exit stops the walk."""
    rs = r ** sigma.astype(float)
    start = np.where(sigma == 0, 0.0, -rs / r)
    return start, -rs, beta * rs


def outcomes_from_uniforms(params: StagedParams, u: np.ndarray,
                           sigma_uniform: np.ndarray | None = None) -> OutcomeBatch:
    """Map rows of four uniforms to outcomes; ``sigma_uniform`` overrides ``u[:, 0]``."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    beta, delta, r = params.beta, params.delta, params.growth
    u0 = u[:, 0] if sigma_uniform is None else sigma_uniform
    sigma = sigma_from_uniform(beta, delta, u0)
    v1 = 1.0 - u[:, 1]
    variant = params.variant

    if variant in (Variant.THM2, Variant.THM3):
        rs = r ** sigma.astype(float)
        m_plus = mplus_tail_from_uniform(sigma, beta, delta, v1)
        x = -rs
        m_minus = -rs
        m_abs = np.maximum(m_plus, rs)
        return OutcomeBatch(sigma, x, m_plus, m_minus, m_abs)

    if variant is Variant.THM1_CAPPED:
        cap = params.cap
        capped = sigma > cap
        sigma = np.where(capped, cap + 1, sigma)
    else:
        capped = np.zeros(sigma.shape, dtype=bool)

    start, lower, upper = _final_stage(sigma, beta, r)
    x = upper.copy()
    m_plus = upper.copy()
    m_minus = conditional_min_from_uniform(start, lower, upper, v1)
    if capped.any():
        # displayed convention: |X| = -M- = (1+delta)^(N+1) on {sigma > N}
        edge = -(r ** (params.cap + 1))
        x[capped] = edge
        m_minus[capped] = edge
        m_plus[capped] = capped_max_from_uniform(beta, delta, params.cap, 1.0 - u[capped, 2])
    m_abs = np.maximum(m_plus, -m_minus)
    return OutcomeBatch(sigma, x, m_plus, m_minus, m_abs)


def sample_outcome(params: StagedParams, rng: np.random.Generator) -> SampleOutcome:
    return outcomes_from_uniforms(params, rng.random((1, 4)))[0]


def stratified_uniforms(u0: np.ndarray, start: int, total: int) -> np.ndarray:
    """Place draw ``i`` of ``total`` in the i-th equal-probability cell."""
    idx = np.arange(start, start + len(u0), dtype=float)
    return (idx + u0) / total


def sample_batch(params: StagedParams, count: int, seed: SeedSpec, start: int = 0,
                 stratify_total: int | None = None) -> OutcomeBatch:
    """Draws ``start .. start+count-1`` of the stream ``seed``."""
    u = seed.uniforms(start, count)
    su = None if stratify_total is None else stratified_uniforms(u[:, 0], start, stratify_total)
    return outcomes_from_uniforms(params, u, su)


# ---------------------------------------------------------------- moments


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int
    seed: int | None = None


def field_values(outcomes, name: str) -> np.ndarray:
    """Nonnegative magnitude of a field: ``-m_minus`` and ``|x_terminal|`` are used."""
    if name not in FIELDS:
        raise ValueError(f"unknown field {name!r}; expected one of {FIELDS}")
    if isinstance(outcomes, OutcomeBatch):
        vals = getattr(outcomes, name)
    else:
        vals = np.fromiter((getattr(o, name) for o in outcomes), dtype=float)
    return np.abs(np.asarray(vals, dtype=float))


def mc_moment(outcomes, name: str, p: float, seed: int | None = None) -> MCEstimate:
    """Sample mean and standard error of ``|field|^p``."""
    vals = field_values(outcomes, name) ** p
    n = len(vals)
    if n == 0:
        raise ValueError("empty outcome stream")
    if n < 2:
        raise ValueError("need at least two outcomes for a standard error")
    # shifting by one sample keeps a constant stream exact
    shift = vals[0]
    dev = vals - shift
    return MCEstimate(float(shift + dev.mean()), float(dev.std(ddof=1) / math.sqrt(n)), n, seed)


@dataclass(frozen=True)
class MomentSummary:
    """Count, means and centred co-moment matrix of the powered fields."""

    n: int
    mean: np.ndarray
    comoment: np.ndarray

    @classmethod
    def of(cls, batch: OutcomeBatch, p: float) -> "MomentSummary":
        v = np.column_stack([field_values(batch, f) ** p for f in FIELDS])
        mean = v.mean(axis=0)
        d = v - mean
        return cls(len(v), mean, d.T @ d)

    def merge(self, other: "MomentSummary") -> "MomentSummary":
        n = self.n + other.n
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        diff = other.mean - self.mean
        mean = self.mean + diff * (other.n / n)
        com = self.comoment + other.comoment + np.outer(diff, diff) * (self.n * other.n / n)
        return MomentSummary(n, mean, com)

    def covariance(self) -> np.ndarray:
        return self.comoment / (self.n - 1)

    def estimate(self, name: str, seed: int | None = None) -> MCEstimate:
        i = FIELDS.index(name)
        return MCEstimate(float(self.mean[i]), float(math.sqrt(max(self.covariance()[i, i], 0.0) / self.n)),
                          self.n, seed)

    def ratio(self, num: str, den: str) -> tuple[float, float]:
        """Ratio of means with a delta-method standard error."""
        i, j = FIELDS.index(num), FIELDS.index(den)
        cov = self.covariance()
        a, b = self.mean[i], self.mean[j]
        rat = a / b
        var = (cov[i, i] - 2.0 * rat * cov[i, j] + rat * rat * cov[j, j]) / (self.n * b * b)
        return float(rat), float(math.sqrt(max(var, 0.0)))


def theorem_fields(variant: Variant) -> tuple[str, str]:
    """Numerator and denominator fields of the inequality a variant witnesses."""
    variant = Variant(variant)
    if variant in (Variant.THM1_UNCAPPED, Variant.THM1_CAPPED):
        return "x_terminal", "m_minus"
    if variant is Variant.THM2:
        return "m_plus", "m_minus"
    return "m_abs", "m_minus"


def sharp_constant_power(params: StagedParams) -> float:
    b = constants_bundle(params.p)
    const = {Variant.THM1_UNCAPPED: b.C, Variant.THM1_CAPPED: b.C,
             Variant.THM2: b.c, Variant.THM3: b.frak_c}[params.variant]
    return const ** params.p


@dataclass(frozen=True)
class SimulationResult:
    params: StagedParams
    seed: int
    stream: int
    n: int
    moments: dict[str, MCEstimate]
    ratio: float
    ratio_stderr: float
    constant_power: float
    stratify: bool = False
    oracle_step: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def excess(self) -> float:
        """(ratio - constant^p) in units of the ratio's standard error."""
        if self.ratio_stderr == 0.0:
            return math.inf if self.ratio > self.constant_power else -math.inf
        return (self.ratio - self.constant_power) / self.ratio_stderr


def _chunk_summary(args) -> MomentSummary:
    params, seed, start, count, total, stratify, oracle_step = args
    if oracle_step is not None:
        from .oracle import oracle_batch

        batch = oracle_batch(params, oracle_step, seed, start, count)
    else:
        batch = sample_batch(params, count, seed, start, total if stratify else None)
    return MomentSummary.of(batch, params.p)


def simulate(params: StagedParams, n: int, seed: int, stream: int = 0, workers: int = 1,
             chunk_size: int = DEFAULT_CHUNK, stratify: bool = False,
             oracle_step: float | None = None) -> SimulationResult:
    """Monte Carlo moments and the theorem ratio from ``n`` draws.

    Draws are split into fixed chunks of ``chunk_size`` and the chunk
    summaries are merged in index order, so the result does not depend on
    ``workers``.
    """
    if n < 2:
        raise DomainError(f"n={n} must be at least 2")
    if chunk_size < 1:
        raise DomainError("chunk_size must be positive")
    if oracle_step is not None and not oracle_step > 0:
        raise DomainError(f"oracle step {oracle_step!r} must be positive")
    if oracle_step is not None and stratify:
        raise DomainError("stratification applies to the exact sampler only")
    spec = SeedSpec(seed, stream)
    jobs = [(params, spec, s, min(chunk_size, n - s), n, stratify, oracle_step)
            for s in range(0, n, chunk_size)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_chunk_summary(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_summary, jobs))
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    moments = {f: total.estimate(f, seed) for f in FIELDS}
    num, den = theorem_fields(params.variant)
    ratio, ratio_se = total.ratio(num, den)
    return SimulationResult(params, seed, stream, n, moments, ratio, ratio_se,
                            sharp_constant_power(params), stratify, oracle_step)
