"""Grid verification of the special-function properties.

Each clause is evaluated at every grid point and reduced to a worst signed
violation.  For an inequality ``lhs >= rhs`` the violation at a point is
``(rhs - lhs) / scale``; for an identity it is ``|lhs - rhs| / scale``.  The
scale is ``max(1, (-z)^p, |lhs|, |rhs|)``: the functions are p-homogeneous, so
this puts every point on the footing of ``z = -1`` and leaves the tolerance to
absorb floating-point roundoff only.  A clause passes when its worst violation
is at most the grid tolerance, so a negative value means slack everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .constants import ConstantsBundle, constants_bundle
from .errors import DomainError
from .special_functions import (
    StatePoint2,
    StatePoint3,
    U1,
    U1_partials,
    U2,
    U2_partials,
    U3,
    U3_partials,
    jump_aux,
    jump_aux_prime,
    phi,
    phi_prime,
    psi,
    psi_prime,
)

DEFAULT_OFFSETS = (0.0, 1e-3, 1e-1, 1.0, 10.0, 1e3)
FD_STEP = 1e-6
FD_RTOL = 1e-6
EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid.

    ``z_range`` and ``y_range`` hold ``(min, max, count)`` for |z| and y on a
    geometric scale.  ``x_count`` points are placed affinely from ``z`` to
    ``y`` (three-variable lemmas) or from ``z`` to ``x_ratio * (-z)`` (first
    lemma; ``None`` picks four times the tangency point).
    """

    z_range: tuple[float, float, int] = (1e-2, 1e2, 20)
    y_range: tuple[float, float, int] = (1e-2, 1e2, 25)
    x_count: int = 20
    x_ratio: float | None = None
    offsets: tuple[float, ...] = DEFAULT_OFFSETS
    tolerance: float = 1e-12

    def __post_init__(self):
        for name in ("z_range", "y_range"):
            lo, hi, n = getattr(self, name)
            if n < 2 or not 0 < lo < hi:
                raise DomainError(f"{name} must have 0 < min < max and count >= 2")
        if self.x_count < 2:
            raise DomainError("x_count must be >= 2")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if any(d < 0 for d in self.offsets):
            raise DomainError("jump offsets must be nonnegative")

    def z_values(self) -> np.ndarray:
        lo, hi, n = self.z_range
        return -np.geomspace(lo, hi, n)

    def y_values(self) -> np.ndarray:
        lo, hi, n = self.y_range
        return np.geomspace(lo, hi, n)


def default_grid(lemma: int) -> GridSpec:
    """Default grids: 10^4 state points each and six jump offsets."""
    if lemma == 0:
        return GridSpec(z_range=(1e-2, 1e2, 40), x_count=250)
    return GridSpec()


@dataclass
class PropertyReport:
    lemma: int
    clause: str
    label: str
    points: int = 0
    worst_violation: float = -math.inf
    tolerance: float = 1e-12
    worst_point: tuple = field(default=())

    @property
    def passed(self) -> bool:
        return self.points > 0 and self.worst_violation <= self.tolerance

    def record(self, violation: float, point: tuple) -> None:
        self.points += 1
        if violation > self.worst_violation or math.isnan(violation):
            self.worst_violation = violation if not math.isnan(violation) else math.inf
            self.worst_point = point

    def as_row(self) -> dict:
        return {
            "lemma": self.lemma,
            "clause": self.clause,
            "label": self.label,
            "points": self.points,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def merge_reports(parts: Iterable[list[PropertyReport]]) -> list[PropertyReport]:
    """Combine reports from disjoint grid partitions by worst-violation reduction."""
    merged: dict[str, PropertyReport] = {}
    order: list[str] = []
    for reports in parts:
        for r in reports:
            if r.clause not in merged:
                merged[r.clause] = PropertyReport(r.lemma, r.clause, r.label, tolerance=r.tolerance)
                order.append(r.clause)
            m = merged[r.clause]
            m.points += r.points
            if r.worst_violation > m.worst_violation:
                m.worst_violation = r.worst_violation
                m.worst_point = r.worst_point
    return [merged[k] for k in order]


class _Clauses:
    def __init__(self, lemma: int, tol: float):
        self.lemma = lemma
        self.tol = tol
        self.reports: dict[str, PropertyReport] = {}

    def _get(self, clause: str, label: str) -> PropertyReport:
        if clause not in self.reports:
            self.reports[clause] = PropertyReport(self.lemma, clause, label, tolerance=self.tol)
        return self.reports[clause]

    def geq(self, clause: str, label: str, lhs: float, rhs: float, scale: float, point: tuple):
        s = max(1.0, scale, abs(lhs), abs(rhs))
        self._get(clause, label).record((rhs - lhs) / s, point)

    def eq(self, clause: str, label: str, lhs: float, rhs: float, scale: float, point: tuple):
        s = max(1.0, scale, abs(lhs), abs(rhs))
        self._get(clause, label).record(abs(lhs - rhs) / s, point)

    def fd(self, clause: str, label: str, f: Callable[[float], float], h: float,
           exact: float, dscale: float, point: tuple, direction: float = 0.0):
        """Compare ``exact`` with a difference quotient of ``f`` at 0.

        Central differences when ``direction`` is 0, otherwise second-order
        one-sided differences towards ``sign(direction)``.  Allowed error is
        ``FD_RTOL`` relative plus the roundoff floor ``eps * |f| / h``.
        """
        if direction == 0.0:
            vals = (f(h), f(-h))
            approx = (vals[0] - vals[1]) / (2 * h)
        else:
            sg = 1.0 if direction > 0 else -1.0
            vals = (f(0.0), f(sg * h), f(2 * sg * h))
            approx = sg * (-3 * vals[0] + 4 * vals[1] - vals[2]) / (2 * h)
        mag = max(abs(v) for v in vals)
        den = max(abs(exact), dscale)
        allowed = FD_RTOL * den + 64 * EPS * mag / h
        self._get(clause, label).record((abs(approx - exact) - allowed) / den, point)

    def out(self) -> list[PropertyReport]:
        return list(self.reports.values())


# ---------------------------------------------------------------- first lemma


def verify_lemma0(p: float, grid: GridSpec | None = None,
                  bundle: ConstantsBundle | None = None,
                  target_C: float | None = None) -> list[PropertyReport]:
    """Check the properties of ``U1`` on a grid.

    ``target_C`` overrides the constant in the majorization target (used for
    fault injection); by default it is ``C_p`` from the bundle.
    """
    b = bundle or constants_bundle(p)
    grid = grid or default_grid(0)
    p = b.p
    Cp = (b.C if target_C is None else target_C) ** p
    out = _Clauses(0, grid.tolerance)
    x_ratio = grid.x_ratio if grid.x_ratio is not None else 4.0 * max(b.x_star, 1.0)
    ts = np.linspace(0.0, 1.0, grid.x_count)
    for z in grid.z_values():
        z = float(z)
        w = -z
        scale = w ** p
        xs = z + ts * (x_ratio * w - z)
        _, uz_diag = U1_partials(StatePoint2(z, z), b)
        out.eq("U_z(z,z)=0", "partial derivatives", uz_diag * w, 0.0, scale, (z, z))
        for x in xs:
            x = float(x)
            pt = StatePoint2(x, z)
            u = U1(pt, b)
            u_x, u_z = U1_partials(pt, b)
            out.geq("U_x>=0", "partial derivatives", u_x, 0.0, 0.0, (x, z))
            for d in grid.offsets:
                lhs = U1(StatePoint2(x + d, z), b)
                out.eq("jump", "jump identity", lhs, u + u_x * d, scale, (x, z, d))
            target = abs(x) ** p - Cp * w ** p
            out.geq("majorization", "majorization by |x|^p - C^p(-z)^p", u, target, scale, (x, z))
            # closed-form partials against central differences
            dscale = w ** (p - 1.0)
            hx = FD_STEP * max(w, abs(x))
            out.fd("partials_fd", "partial derivatives", lambda t: U1(StatePoint2(x + t, z), b),
                   hx, u_x, dscale, (x, z))
            out.fd("partials_fd", "partial derivatives", lambda t: U1(StatePoint2(x, z + t), b),
                   FD_STEP * w, u_z, dscale, (x, z))
            lam = 3.7
            out.eq("homogeneity", "U(lx,lz)=l^p U(x,z)", U1(StatePoint2(lam * x, lam * z), b),
                   lam ** p * u, lam ** p * scale, (x, z))
    xs_star = b.x_star
    out.eq("tangency_value", "tangency at x*", phi(xs_star, b), psi(xs_star, b), 1.0, (xs_star,))
    out.eq("tangency_slope", "tangency at x*", phi_prime(b), psi_prime(xs_star, b), 1.0, (xs_star,))
    # boundary comparison at x = -1; identity when p > p0
    out.geq("boundary", "phi(-1) >= psi(-1)", phi(-1.0, b), psi(-1.0, b), 1.0, (-1.0,))
    if p > b.p0:
        out.eq("boundary_equality", "phi(-1) >= psi(-1)", phi(-1.0, b), psi(-1.0, b), 1.0, (-1.0,))
    return out.out()


# ---------------------------------------------------------------- three-variable lemmas


def _verify_sup_family(lemma: int, b: ConstantsBundle, grid: GridSpec, ratio: float,
                       value: Callable, partials: Callable, target: Callable,
                       extra_targets: list[tuple[str, str, Callable]]) -> list[PropertyReport]:
    p = b.p
    out = _Clauses(lemma, grid.tolerance)
    ts = np.linspace(0.0, 1.0, grid.x_count)
    label_jump = "jump inequality"
    label_part = "partial derivatives"
    label_maj = ("majorization by y^p - c^p(-z)^p" if lemma == 1
                 else "majorization by max(y,-z)^p - frak_c^p(-z)^p")
    aux_name = "F" if lemma == 1 else "F1"
    for z in grid.z_values():
        z = float(z)
        w = -z
        scale = w ** p
        dscale = w ** (p - 1.0)
        boundary = ratio * w
        # branch continuity at y = ratio * (-z)
        for t in (0.0, 0.5, 1.0):
            x = z + t * (boundary - z)
            pt = StatePoint3(x, boundary, z)
            out.eq("continuity", "branch boundary", value(pt, branch="upper"),
                   value(pt, branch="lower"), scale, (x, boundary, z))
        for y in grid.y_values():
            y = float(y)
            # finite-difference stencils must not straddle the branch boundary
            fd_ok = abs(y - boundary) > 10 * FD_STEP * max(y, w)
            # diagonal partials
            diag = StatePoint3(y, y, z)
            _, u_y, _ = partials(diag)
            out.eq("U_y(y,y,z)=0", label_part, u_y * w, 0.0, scale, (y, y, z))
            corner = StatePoint3(z, y, z)
            _, _, u_z = partials(corner)
            out.geq("U_z(z,y,z)>=0", label_part, u_z * w, 0.0, 0.0, (z, y, z))
            if fd_ok:
                branch = "upper" if value.on_upper(y, z) else "lower"
                # one-sided differences that stay inside the active branch; moving
                # z also moves the boundary, hence the same direction rule
                sgn = 1.0 if branch == "upper" else -1.0
                hy = FD_STEP * y
                out.fd("diag_fd", label_part,
                       lambda t: value(StatePoint3(y, y + t, z), branch=branch),
                       hy, u_y, dscale, (y, y, z), direction=sgn)
                out.fd("diag_fd", label_part,
                       lambda t: value(StatePoint3(z, y, z + t), branch=branch),
                       FD_STEP * w, u_z, dscale, (z, y, z), direction=sgn)
            xs = z + ts * (y - z)
            for x in xs:
                x = float(x)
                pt = StatePoint3(x, y, z)
                u = value(pt)
                u_x, u_yy, u_zz = partials(pt)
                if z < x < y:
                    out.geq("U_x>=0", label_part, u_x, 0.0, 0.0, (x, y, z))
                for d in grid.offsets:
                    xd = x + d
                    lhs = value(StatePoint3(xd, max(xd, y), z))
                    rhs = u + u_x * d
                    out.geq("jump", label_jump, rhs, lhs, scale, (x, y, z, d))
                    if xd <= y:
                        out.eq("jump_linear", label_jump, lhs, rhs, scale, (x, y, z, d))
                out.geq("majorization", label_maj, u, target(x, y, z), scale, (x, y, z))
                for clause, label, tgt in extra_targets:
                    out.geq(clause, label, u, tgt(x, y, z), scale, (x, y, z))
                lam = 3.7
                out.eq("homogeneity", "U(lx,ly,lz)=l^p U", value(StatePoint3(lam * x, lam * y, lam * z)),
                       lam ** p * u, lam ** p * scale, (x, y, z))
                if fd_ok and z < x < y:
                    branch = "upper" if value.on_upper(y, z) else "lower"
                    hx = FD_STEP * max(w, abs(x))
                    out.fd("partials_fd", label_part,
                           lambda t: value(StatePoint3(x + t, y, z), branch=branch),
                           hx, u_x, dscale, (x, y, z))
                    out.fd("partials_fd", label_part,
                           lambda t: value(StatePoint3(x, y + t, z), branch=branch),
                           FD_STEP * y, u_yy, dscale, (x, y, z))
                    out.fd("partials_fd", label_part,
                           lambda t: value(StatePoint3(x, y, z + t), branch=branch),
                           FD_STEP * w, u_zz, dscale, (x, y, z))
            # auxiliary G for this (y, z): zero at -y/z, nonpositive and nonincreasing beyond
            s0 = y / w
            out.eq("G(s0)=0", label_jump, jump_aux(s0, s0, p), 0.0, 1.0, (s0,))
            for s in s0 * np.geomspace(1.0 + 1e-3, 1e3, 8):
                s = float(s)
                out.geq("G<=0", label_jump, 0.0, jump_aux(s, s0, p), 1.0, (s, s0))
                out.geq("G'<=0", label_jump, 0.0, jump_aux_prime(s, s0, p), 1.0, (s, s0))
    s0 = ratio
    out.eq(f"{aux_name}(s0)=0", label_jump, jump_aux(s0, s0, p), 0.0, 1.0, (s0,))
    for s in s0 * np.geomspace(1.0 + 1e-6, 1e6, 200):
        s = float(s)
        out.geq(f"{aux_name}<=0", label_jump, 0.0, jump_aux(s, s0, p), 1.0, (s, s0))
        out.geq(f"{aux_name}'<=0", label_jump, 0.0, jump_aux_prime(s, s0, p), 1.0, (s, s0))
    return out.out()


class _Bound:
    """Callable wrapper binding a bundle to a special function and its branch rule."""

    def __init__(self, fn, bundle: ConstantsBundle, ratio: float, upper_inclusive: bool):
        self.fn = fn
        self.bundle = bundle
        self.ratio = ratio
        self.upper_inclusive = upper_inclusive

    def __call__(self, pt, branch=None):
        return self.fn(pt, self.bundle, branch)

    def on_upper(self, y: float, z: float) -> bool:
        bd = self.ratio * (-z)
        return y >= bd if self.upper_inclusive else y > bd


def verify_lemma1(p: float, grid: GridSpec | None = None,
                  bundle: ConstantsBundle | None = None,
                  target_c: float | None = None) -> list[PropertyReport]:
    """Check the properties of ``U2``.

    Besides the four clauses this also checks the strengthened majorization
    by ``max(y, (1/p - 1)(-z))^p`` and, for ``p <= 1/2``, the two-sided target
    ``max(y, -z)^p - c_p^p (-z)^p`` that makes ``U2`` serve the two-sided bound.
    """
    b = bundle or constants_bundle(p)
    grid = grid or default_grid(1)
    p = b.p
    a = b.threshold
    cp = (b.c if target_c is None else target_c) ** p
    value = (_Bound(U2, b, a, False))
    partials = (_Bound(U2_partials, b, a, False))

    def target(x, y, z):
        return y ** p - cp * (-z) ** p

    extras = [("majorization_strong", "majorization by max(y,(1/p-1)(-z))^p - c^p(-z)^p",
               lambda x, y, z: max(y, a * (-z)) ** p - cp * (-z) ** p)]
    if p <= 0.5:
        extras.append(("majorization_two_sided", "majorization by max(y,-z)^p - c^p(-z)^p",
                       lambda x, y, z: max(y, -z) ** p - cp * (-z) ** p))
    return _verify_sup_family(1, b, grid, a, value, partials, target, extras)


def verify_lemma2(p: float, grid: GridSpec | None = None,
                  bundle: ConstantsBundle | None = None,
                  target_frak_c: float | None = None) -> list[PropertyReport]:
    """Check the properties of ``U3`` (requires 1/2 < p < 1)."""
    b = bundle or constants_bundle(p)
    if not b.p > 0.5:
        raise DomainError(f"the two-sided lemma needs 1/2 < p < 1, got p={b.p}")
    grid = grid or default_grid(2)
    p = b.p
    kp = (b.frak_c if target_frak_c is None else target_frak_c) ** p
    value = (_Bound(U3, b, 1.0, True))
    partials = (_Bound(U3_partials, b, 1.0, True))

    def target(x, y, z):
        return max(y, -z) ** p - kp * (-z) ** p

    return _verify_sup_family(2, b, grid, 1.0, value, partials, target, [])


def all_passed(reports: Iterable[PropertyReport]) -> bool:
    return all(r.passed for r in reports)
