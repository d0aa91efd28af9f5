"""Discretized-path oracle for the exact sampler.

Brownian motion is replaced by a simple random walk whose increments in
stage ``k`` are ``+-sqrt(dt) (1+delta)^k``, so every stage is resolved with
the same number of lattice steps per unit of its own scale.  Stages, exits
and running extrema follow the construction literally; barriers are clamped
on exit.  The reported extrema are spread uniformly over the last lattice
cell they fell in, which removes the lattice atom that a KS comparison
would otherwise see.  Hitting probabilities are exact only when the
barriers sit on the lattice, i.e. when ``beta m`` and ``delta m/(1+delta)`` are
integers for ``m = round(1/sqrt(dt))``; otherwise they carry an O(sqrt(dt)) bias.

After the final upper exit of the supremum constructions the walk runs on
the rescaled coordinate ``t = (x - l)/(x_0 - l)`` towards ``t = 0``, with step
``2^b / m`` on the band ``t in [2^b, 2^(b+1))``.  The band walk is still a
martingale between band edges, so hitting probabilities of lattice levels
are exact while the heavy-tailed overshoot stays cheap to simulate.

Randomness is a splitmix64 stream per path, seeded from the run key and
the path index, so results do not depend on how paths are batched.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import DomainError
from .rng import SeedSpec
from .simulator import OutcomeBatch, SampleOutcome, StagedParams, Variant

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0

_CODES = {Variant.THM1_UNCAPPED: 0, Variant.THM1_CAPPED: 1, Variant.THM2: 2, Variant.THM3: 3}


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _path_state(key, index):
    return _mix(key ^ _mix(np.uint64(index) + _GOLDEN))


@njit(cache=True)
def _next(state):
    state = state + _GOLDEN
    return state, _mix(state)


@njit(cache=True)
def _uniform(state):
    state, z = _next(state)
    return state, (z >> _S11) * _INV53


@njit(cache=True)
def _walk(lo, hi, state):
    """Walk from 0 with unit steps until j <= lo or j >= hi.

    Returns (exited_up, jmin, jmax, state).
    """
    j = 0
    jmin = 0
    jmax = 0
    bits = np.uint64(0)
    left = 0
    while True:
        if left == 0:
            state, bits = _next(state)
            left = 64
        if bits & _ONE:
            j += 1
            if j > jmax:
                jmax = j
            if j >= hi:
                return True, jmin, jmax, state
        else:
            j -= 1
            if j < jmin:
                jmin = j
            if j <= lo:
                return False, jmin, jmax, state
        bits = bits >> _ONE
        left -= 1


@njit(cache=True)
def _band_excursion(m, state):
    """Band walk from j = m down to 0; returns (jmax, step at jmax, state)."""
    j = m
    jmax = m
    band = 0
    step = 1
    lo_edge = 0
    hi_edge = 2 * m
    step_at_max = 1
    bits = np.uint64(0)
    left = 0
    while j > 0:
        if left == 0:
            state, bits = _next(state)
            left = 64
        if bits & _ONE:
            j += step
            if j >= hi_edge:
                band += 1
                step *= 2
                lo_edge = hi_edge
                hi_edge *= 2
            if j > jmax:
                jmax = j
                step_at_max = step
        else:
            j -= step
            if j < lo_edge:
                band -= 1
                step //= 2
                hi_edge = lo_edge
                lo_edge = 0 if band == 0 else lo_edge // 2
        bits = bits >> _ONE
        left -= 1
    return jmax, step_at_max, state


@njit(cache=True)
def _run_path(code, beta, r, cap, m, key, index):
    state = _path_state(key, index)
    k = 0
    scale = 1.0
    start = 0.0
    best_max = 0.0
    while True:
        lower = -scale
        upper = beta * scale
        st = scale / m
        lo = (lower - start) / st
        hi = (upper - start) / st
        up, jmin, jmax, state = _walk(lo, hi, state)
        if up:
            state, v = _uniform(state)
            cell = min(1.0, jmin - lo)
            m_minus = min(start + st * (jmin - v * cell), 0.0)
            if code <= 1:
                return k, upper, upper, m_minus
            jm, sm, state = _band_excursion(m, state)
            state, v = _uniform(state)
            m_plus = lower + (upper - lower) * (jm + v * sm) / m
            return k, lower, m_plus, lower
        state, v = _uniform(state)
        cell = min(1.0, hi - jmax)
        stage_max = start + st * (jmax + v * cell)
        if stage_max > best_max:
            best_max = stage_max
        if code == 1 and k == cap:
            edge = -scale * r
            return cap + 1, edge, best_max, edge
        start = lower
        k += 1
        scale *= r


@njit(cache=True)
def _run_batch(code, beta, r, cap, m, key, start, count, out_sigma, out_x, out_plus, out_minus):
    for i in range(count):
        s, x, mp, mm = _run_path(code, beta, r, cap, m, key, start + i)
        out_sigma[i] = s
        out_x[i] = x
        out_plus[i] = mp
        out_minus[i] = mm


@njit(cache=True)
def _cond_min_batch(start, lower, upper, h, key, n, out):
    lo = (lower - start) / h
    hi = (upper - start) / h
    accepted = 0
    index = 0
    while accepted < n:
        state = _path_state(key, index)
        index += 1
        up, jmin, jmax, state = _walk(lo, hi, state)
        if not up:
            continue
        state, v = _uniform(state)
        cell = min(1.0, jmin - lo)
        out[accepted] = start + h * (jmin - v * cell)
        accepted += 1
    return index


@njit(cache=True)
def _hits_batch(lower, upper, h, key, n):
    lo = lower / h
    hi = upper / h
    hits = 0
    for i in range(n):
        up, jmin, jmax, state = _walk(lo, hi, _path_state(key, i))
        if up:
            hits += 1
    return hits


def lattice_size(step: float) -> int:
    """Lattice points per unit scale for a time step ``dt``: round(1/sqrt(dt))."""
    if not step > 0:
        raise DomainError(f"step={step!r} must be positive")
    return max(1, int(round(1.0 / math.sqrt(step))))


def oracle_batch(params: StagedParams, step: float, seed: SeedSpec, start: int = 0,
                 count: int = 1) -> OutcomeBatch:
    """Paths ``start .. start+count-1`` of the oracle stream for ``seed``."""
    m = lattice_size(step)
    sigma = np.empty(count, dtype=np.int64)
    x = np.empty(count)
    mp = np.empty(count)
    mm = np.empty(count)
    cap = -1 if params.cap is None else params.cap
    _run_batch(_CODES[params.variant], params.beta, params.growth, cap, m,
               np.uint64(seed.oracle_key()), start, count, sigma, x, mp, mm)
    if params.variant is Variant.THM3:
        m_abs = np.maximum(mp, (params.growth ** sigma.astype(float)))
    else:
        m_abs = np.maximum(mp, -mm)
    return OutcomeBatch(sigma, x, mp, mm, m_abs)


def path_oracle(params: StagedParams, step: float, rng: np.random.Generator) -> SampleOutcome:
    key = int(rng.integers(0, 2 ** 63))
    return oracle_batch(params, step, SeedSpec(key), 0, 1)[0]


def oracle_conditional_min(start: float, lower: float, upper: float, step: float, n: int,
                           seed: SeedSpec) -> np.ndarray:
    """``n`` minima of walks from ``start`` that leave (lower, upper) through ``upper``.

    The walk has increments ``+-sqrt(step)``; paths exiting at ``lower`` are discarded.
    """
    if not lower < start < upper:
        raise DomainError("need lower < start < upper")
    h = 1.0 / lattice_size(step)
    out = np.empty(n)
    _cond_min_batch(float(start), float(lower), float(upper), h, np.uint64(seed.oracle_key()), n, out)
    return out


def oracle_hit_fraction(beta: float, step: float, n: int, seed: SeedSpec) -> float:
    """Fraction of walks from 0 that reach ``beta`` before -1."""
    h = 1.0 / lattice_size(step)
    return _hits_batch(-1.0, float(beta), h, np.uint64(seed.oracle_key()), n) / n
