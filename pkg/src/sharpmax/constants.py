"""Sharp constants for the maximal L^p inequalities, 0 < p < 1.

All quantities are computed numerically: ``p0`` and ``alpha`` by bracketed
root finding, the tail integrals by adaptive quadrature after a change of
variables that turns them into proper integrals of smooth functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError

DEFAULT_P_BOUNDS = (0.01, 0.99)
DEFAULT_TOL = 1e-12

P0_BRACKET = (1e-6, 1.0 - 1e-6)


def check_exponent(p: float, bounds: tuple[float, float] = DEFAULT_P_BOUNDS) -> float:
    """Validate a moment exponent and return it as a float.

    ``p`` must lie in the open interval (0, 1) and additionally inside
    ``bounds`` (inclusive). Out-of-range values raise :class:`DomainError`.
    """
    p = float(p)
    if not 0.0 < p < 1.0 or math.isnan(p):
        raise DomainError(f"exponent p={p!r} must satisfy 0 < p < 1")
    lo, hi = bounds
    if not lo <= p <= hi:
        raise DomainError(f"exponent p={p!r} outside the accepted range [{lo}, {hi}]")
    return p


def p0_equation(p: float) -> float:
    """h(p) = (1/p - 1) - (1/p - 1)^(1-p) - 1; positive below p0, negative above."""
    a = 1.0 / p - 1.0
    return a - a ** (1.0 - p) - 1.0


@lru_cache(maxsize=None)
def solve_p0(tol: float = DEFAULT_TOL) -> float:
    """Unique root of :func:`p0_equation` in (0, 1)."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    lo, hi = P0_BRACKET
    if not (p0_equation(lo) > 0 > p0_equation(hi)):
        raise RuntimeError("p0 bracket does not straddle a sign change")
    root = optimize.brentq(p0_equation, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(p0_equation(root)) > tol:
        raise RuntimeError(f"p0 residual {abs(p0_equation(root)):.3e} exceeds tol={tol}")
    return root


def alpha_equation(a: float, p: float) -> float:
    """(1-p)(a^(1/(1-p)) + 1) - (a + 1); zero at alpha_p when p > p0."""
    return (1.0 - p) * (a ** (1.0 / (1.0 - p)) + 1.0) - (a + 1.0)


def alpha_closed_form(p: float) -> float:
    return ((1.0 - p) / p) ** (1.0 - p)


def alpha_root(p: float) -> float:
    """Positive root of :func:`alpha_equation`.

    The function is convex in ``a`` and equals ``-p`` at zero, so the root is
    unique; the upper end of the bracket is doubled from 2 until it changes sign.
    """
    upper = 2.0
    while alpha_equation(upper, p) <= 0.0:
        upper *= 2.0
        if upper > 1e300:
            raise RuntimeError(f"could not bracket alpha for p={p}")
    return optimize.brentq(alpha_equation, 0.0, upper, args=(p,), xtol=1e-15,
                           rtol=4 * np.finfo(float).eps, maxiter=500)


def alpha(p: float) -> float:
    p = check_exponent(p, (0.0, 1.0))
    if p <= solve_p0():
        return alpha_closed_form(p)
    return alpha_root(p)


def constant_C(p: float) -> float:
    p = check_exponent(p, (0.0, 1.0))
    if p <= solve_p0():
        return (1.0 - p) / p
    return (1.0 + 1.0 / alpha_root(p)) ** (1.0 / p)


# Tail integrals.  With s = 1/t and then t = u^(1/(1-p)),
#   int_a^inf s^(p-1)/(s+1) ds   = int_0^U du / ((1-p)(1 + u^k)),
#   int_a^inf s^p/(s+1)^2 ds     = int_0^U du / ((1-p)(1 + u^k)^2),
# where k = 1/(1-p) and U = a^(-(1-p)).


def _logistic_tail(u: float, k: float) -> float:
    # 1/(1 + u^k) without overflow for large u^k
    if u <= 0.0:
        return 1.0
    t = k * math.log(u)
    if t > 0.0:
        e = math.exp(-t)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(t))


def transformed_upper_limit(a: float, p: float) -> float:
    return a ** (-(1.0 - p))


def _tail_quad(a: float, p: float, power: int, tol: float) -> float:
    if not a > 0:
        raise DomainError(f"lower limit a={a!r} must be positive")
    if not 0.0 < p < 1.0:
        raise DomainError(f"exponent p={p!r} must satisfy 0 < p < 1")
    k = 1.0 / (1.0 - p)
    upper = transformed_upper_limit(a, p)

    def integrand(u: float) -> float:
        return _logistic_tail(u, k) ** power

    value, _ = integrate.quad(integrand, 0.0, upper, epsabs=tol, epsrel=1e-13, limit=400)
    return value / (1.0 - p)


def tail_integral_I1(a: float, p: float, tol: float = DEFAULT_TOL) -> float:
    """int_a^inf s^(p-1)/(s+1) ds."""
    return _tail_quad(float(a), float(p), 1, tol)


def tail_integral_I2(a: float, p: float, tol: float = DEFAULT_TOL) -> float:
    """int_a^inf s^p/(s+1)^2 ds."""
    return _tail_quad(float(a), float(p), 2, tol)


def constant_c(p: float) -> float:
    p = check_exponent(p, (0.0, 1.0))
    a = 1.0 / p - 1.0
    return (a ** p + tail_integral_I1(a, p)) ** (1.0 / p)


def constant_frak_c(p: float) -> float:
    p = check_exponent(p, (0.0, 1.0))
    if p <= 0.5:
        return constant_c(p)
    return (1.0 + tail_integral_I1(1.0, p)) ** (1.0 / p)


@dataclass(frozen=True)
class ConstantsBundle:
    """Every sharp constant for one exponent, computed once.

    ``tail_threshold`` is ``I1(1/p - 1, p)`` and ``tail_one`` is ``I1(1, p)``;
    the special functions reuse them so that nothing is re-integrated.
    """

    p: float
    p0: float
    alpha: float
    C: float
    c: float
    frak_c: float
    tail_threshold: float
    tail_one: float
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def threshold(self) -> float:
        """1/p - 1, the branch ratio of the supremum special function."""
        return 1.0 / self.p - 1.0

    @property
    def x_star(self) -> float:
        """Tangency point alpha_p^(1/(1-p)) of the first special function."""
        return self.alpha ** (1.0 / (1.0 - self.p))

    def replace(self, **changes) -> "ConstantsBundle":
        from dataclasses import replace

        return replace(self, **changes)


@lru_cache(maxsize=256)
def constants_bundle(p: float, tol: float = DEFAULT_TOL,
                     p_bounds: tuple[float, float] = DEFAULT_P_BOUNDS) -> ConstantsBundle:
    p = check_exponent(p, p_bounds)
    p0 = solve_p0(tol)
    a = 1.0 / p - 1.0
    if p <= p0:
        al = alpha_closed_form(p)
        C = (1.0 - p) / p
        res_alpha = 0.0
    else:
        al = alpha_root(p)
        C = (1.0 + 1.0 / al) ** (1.0 / p)
        res_alpha = abs(alpha_equation(al, p))
    tail_threshold = tail_integral_I1(a, p, tol)
    tail_one = tail_integral_I1(1.0, p, tol)
    c_pow = a ** p + tail_threshold
    c = c_pow ** (1.0 / p)
    if p <= 0.5:
        frak_c, frak_pow, frak_tail = c, c_pow, tail_threshold
        frak_base = a ** p
    else:
        frak_pow = 1.0 + tail_one
        frak_c = frak_pow ** (1.0 / p)
        frak_tail, frak_base = tail_one, 1.0
    residuals = {
        "p0": abs(p0_equation(p0)),
        "alpha": res_alpha,
        "c": abs(c ** p - a ** p - tail_threshold) / max(1.0, c_pow),
        "frak_c": abs(frak_c ** p - frak_base - frak_tail) / max(1.0, frak_pow),
    }
    # relative residuals for c, frak_c: c^p reaches ~1e2 near the endpoints
    worst = max(residuals.values())
    if worst > max(tol, 1e-12):
        raise RuntimeError(f"constant residual {worst:.3e} exceeds tolerance at p={p}")
    return ConstantsBundle(p=p, p0=p0, alpha=al, C=C, c=c, frak_c=frak_c,
                           tail_threshold=tail_threshold, tail_one=tail_one,
                           residuals=residuals)
