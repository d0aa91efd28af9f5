"""Special functions behind the three maximal inequalities.

``U1(x, z)`` serves the bound on ``X`` by its running infimum, ``U2(x, y, z)``
the bound on the running supremum, and ``U3(x, y, z)`` (``1/2 < p < 1``) the
bound on the two-sided maximal function.  Coordinates: ``x`` current value,
``y >= 0`` running supremum, ``z < 0`` running infimum.

``U2`` and ``U3`` share one shape.  With a branch ratio ``a`` and a constant
``K`` they read::

    y^p - K^p (-z)^p + p (x - z) (-z)^(p-1) I1(-y/z)          if y > a(-z)
    (a^p - K^p) (-z)^p + p (x - z) (-z)^(p-1) I1(a)           otherwise

with ``(a, K) = (1/p - 1, c_p)`` for ``U2`` and ``(1, frak_c_p)`` for ``U3``.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

from .constants import ConstantsBundle, tail_integral_I1
from .errors import DomainError


class StatePoint2(NamedTuple):
    x: float
    z: float


class StatePoint3(NamedTuple):
    x: float
    y: float
    z: float


@lru_cache(maxsize=1 << 18)
def _tail(s: float, p: float) -> float:
    # grids revisit the same ratio -y/z many times
    return tail_integral_I1(s, p, tol=1e-14)


def tail_density(s: float, p: float) -> float:
    """Integrand s^(p-1)/(s+1) of the I1 tail integral."""
    return s ** (p - 1.0) / (s + 1.0)


def _require_negative_z(z: float) -> None:
    if not z < 0.0:
        raise DomainError(f"running infimum z={z!r} must be strictly negative")


# ---------------------------------------------------------------- U1


def U1(pt: StatePoint2, bundle: ConstantsBundle) -> float:
    x, z = pt
    _require_negative_z(z)
    p = bundle.p
    return (-z) ** (p - 1.0) * (p * x - (p - 1.0) * z) / bundle.alpha


def U1_partials(pt: StatePoint2, bundle: ConstantsBundle) -> tuple[float, float]:
    """(U_x, U_z) in closed form; U_z vanishes on the diagonal x = z."""
    x, z = pt
    _require_negative_z(z)
    p = bundle.p
    u_x = p * (-z) ** (p - 1.0) / bundle.alpha
    u_z = p * (1.0 - p) * (-z) ** (p - 2.0) * (x - z) / bundle.alpha
    return u_x, u_z


def phi(x: float, bundle: ConstantsBundle) -> float:
    """U1 restricted to z = -1."""
    return U1(StatePoint2(x, -1.0), bundle)


def phi_prime(bundle: ConstantsBundle) -> float:
    return bundle.p / bundle.alpha


def psi(x: float, bundle: ConstantsBundle) -> float:
    """Payoff |x|^p - C^p at z = -1."""
    return abs(x) ** bundle.p - bundle.C ** bundle.p


def psi_prime(x: float, bundle: ConstantsBundle) -> float:
    p = bundle.p
    if x == 0.0:
        raise DomainError("psi is not differentiable at 0")
    sign = 1.0 if x > 0 else -1.0
    return sign * p * abs(x) ** (p - 1.0)


# ---------------------------------------------------------------- U2 / U3


class _Shape(NamedTuple):
    p: float
    ratio: float      # branch ratio a
    const_pow: float  # K^p
    tail_ratio: float  # I1(a, p)
    upper_inclusive: bool  # whether y == a(-z) belongs to the upper branch


def _shape_sup(bundle: ConstantsBundle) -> _Shape:
    p = bundle.p
    return _Shape(p, bundle.threshold, bundle.c ** p, bundle.tail_threshold, False)


def _shape_two_sided(bundle: ConstantsBundle) -> _Shape:
    p = bundle.p
    if not p > 0.5:
        raise DomainError(f"the two-sided special function needs 1/2 < p < 1, got p={p}")
    return _Shape(p, 1.0, bundle.frak_c ** p, bundle.tail_one, True)


def _on_upper(y: float, z: float, sh: _Shape) -> bool:
    b = sh.ratio * (-z)
    return y >= b if sh.upper_inclusive else y > b


def _value(x: float, y: float, z: float, sh: _Shape, branch: str | None = None) -> float:
    if branch is None:
        branch = "upper" if _on_upper(y, z, sh) else "lower"
    p = sh.p
    w = -z
    if branch == "upper":
        s = y / w
        return y ** p - sh.const_pow * w ** p + p * (x - z) * w ** (p - 1.0) * _tail(s, p)
    return (sh.ratio ** p - sh.const_pow) * w ** p + p * (x - z) * w ** (p - 1.0) * sh.tail_ratio


def _partials(x: float, y: float, z: float, sh: _Shape,
              branch: str | None = None) -> tuple[float, float, float]:
    if branch is None:
        branch = "upper" if _on_upper(y, z, sh) else "lower"
    p = sh.p
    w = -z
    if branch == "upper":
        s = y / w
        tail = _tail(s, p)
        dens = tail_density(s, p)
        u_x = p * w ** (p - 1.0) * tail
        u_y = p * y ** (p - 1.0) - p * (x - z) * w ** (p - 2.0) * dens
        u_z = (p * sh.const_pow * w ** (p - 1.0) - p * w ** (p - 1.0) * tail
               + p * (1.0 - p) * (x - z) * w ** (p - 2.0) * tail
               - p * (x - z) * w ** (p - 3.0) * y * dens)
        return u_x, u_y, u_z
    tail = sh.tail_ratio
    u_x = p * w ** (p - 1.0) * tail
    u_z = (-p * (sh.ratio ** p - sh.const_pow) * w ** (p - 1.0) - p * w ** (p - 1.0) * tail
           + p * (1.0 - p) * (x - z) * w ** (p - 2.0) * tail)
    return u_x, 0.0, u_z


def _check3(y: float, z: float) -> None:
    _require_negative_z(z)
    if y < 0.0:
        raise DomainError(f"running supremum y={y!r} must be nonnegative")


def U2(pt: StatePoint3, bundle: ConstantsBundle, branch: str | None = None) -> float:
    """Special function for the supremum bound.

    ``branch`` forces ``"upper"`` or ``"lower"`` evaluation; by default the
    branch is chosen from ``y`` against ``(1/p - 1)(-z)``.
    """
    x, y, z = pt
    _check3(y, z)
    return _value(x, y, z, _shape_sup(bundle), branch)


def U2_partials(pt: StatePoint3, bundle: ConstantsBundle,
                branch: str | None = None) -> tuple[float, float, float]:
    x, y, z = pt
    _check3(y, z)
    return _partials(x, y, z, _shape_sup(bundle), branch)


def U3(pt: StatePoint3, bundle: ConstantsBundle, branch: str | None = None) -> float:
    """Special function for the two-sided bound; defined for 1/2 < p < 1 only."""
    x, y, z = pt
    _check3(y, z)
    return _value(x, y, z, _shape_two_sided(bundle), branch)


def U3_partials(pt: StatePoint3, bundle: ConstantsBundle,
                branch: str | None = None) -> tuple[float, float, float]:
    x, y, z = pt
    _check3(y, z)
    return _partials(x, y, z, _shape_two_sided(bundle), branch)


# ---------------------------------------------------------------- jump auxiliaries


def jump_aux(s: float, s0: float, p: float) -> float:
    """(s^p - s0^p)/(s+1) - p * int_{s0}^s r^(p-1)/(r+1) dr.

    With ``s0 = 1/p - 1`` this is the function F of the branch-crossing jump
    case; with ``s0 = -y/z`` it is G.  Nonpositive for ``s >= s0``.
    """
    inner = _tail(s0, p) - _tail(s, p)
    return (s ** p - s0 ** p) / (s + 1.0) - p * inner


def jump_aux_prime(s: float, s0: float, p: float) -> float:
    return -(s ** p - s0 ** p) / (s + 1.0) ** 2
