import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sharpmax.constants import constants_bundle, tail_integral_I1
from sharpmax.errors import DomainError
from sharpmax.special_functions import (
    U1,
    U1_partials,
    U2,
    U2_partials,
    U3,
    U3_partials,
    StatePoint2,
    StatePoint3,
    jump_aux,
    jump_aux_prime,
    phi,
    phi_prime,
    psi,
    psi_prime,
)

PS = [0.05, 0.15, 0.3, 0.5, 0.75, 0.9]


@pytest.mark.parametrize("p", PS)
def test_U1_examples(p):
    b = constants_bundle(p)
    assert U1(StatePoint2(-1.0, -1.0), b) == pytest.approx(-1 / b.alpha, rel=1e-15)
    assert U1(StatePoint2(0.0, -1.0), b) == pytest.approx((p - 1) / b.alpha, rel=1e-15)
    xs = b.x_star
    assert U1(StatePoint2(xs, -1.0), b) == pytest.approx(xs ** p - b.C ** p, rel=1e-12, abs=1e-12)


def test_U1_hand_values_at_half():
    # p = 1/2, alpha = 1 + sqrt 2: U1(x,z) = (x + z) / (2 alpha sqrt(-z))
    b = constants_bundle(0.5)
    al = 1 + math.sqrt(2)
    assert U1(StatePoint2(1.0, -1.0), b) == pytest.approx(0.0, abs=1e-16)
    assert U1(StatePoint2(3.0, -4.0), b) == pytest.approx(-0.25 / al, rel=1e-15)
    assert U1(StatePoint2(-1.0, -1.0), b) == pytest.approx(-1 / al, rel=1e-15)


@pytest.mark.parametrize("p", PS)
def test_U1_partials(p):
    b = constants_bundle(p)
    for z in (-0.5, -1.0, -3.0):
        ux, uz = U1_partials(StatePoint2(z, z), b)
        assert abs(uz) < 1e-12
        assert ux == pytest.approx(p / b.alpha * (-z) ** (p - 1), rel=1e-15) and ux > 0
    h = 1e-6
    for x, z in ((0.3, -1.0), (-0.7, -2.0), (5.0, -0.8)):
        ux, uz = U1_partials(StatePoint2(x, z), b)
        fx = (U1(StatePoint2(x + h, z), b) - U1(StatePoint2(x - h, z), b)) / (2 * h)
        fz = (U1(StatePoint2(x, z + h), b) - U1(StatePoint2(x, z - h), b)) / (2 * h)
        assert fx == pytest.approx(ux, rel=1e-6)
        assert fz == pytest.approx(uz, rel=1e-6, abs=1e-9)


def test_U1_rejects_nonnegative_z():
    b = constants_bundle(0.5)
    for z in (0.0, 1.0):
        with pytest.raises(DomainError):
            U1(StatePoint2(0.0, z), b)
        with pytest.raises(DomainError):
            U1_partials(StatePoint2(0.0, z), b)


@pytest.mark.parametrize("p", PS)
def test_tangency(p):
    b = constants_bundle(p)
    xs = b.x_star
    assert phi(xs, b) == pytest.approx(psi(xs, b), rel=1e-12, abs=1e-12)
    assert phi_prime(b) == pytest.approx(psi_prime(xs, b), rel=1e-12)


def test_boundary_strict_below_p0():
    b = constants_bundle(0.15)
    assert phi(-1.0, b) > psi(-1.0, b) + 1e-3
    b = constants_bundle(0.5)
    assert phi(-1.0, b) == pytest.approx(psi(-1.0, b), abs=1e-13)


def test_psi_prime_undefined_at_zero():
    with pytest.raises(DomainError):
        psi_prime(0.0, constants_bundle(0.5))


@pytest.mark.parametrize("p", PS)
def test_U2_examples(p):
    b = constants_bundle(p)
    a = 1 / p - 1
    z = -2.0
    # lower branch does not see y
    assert U2(StatePoint3(0.3, 0.1, z), b) == U2(StatePoint3(0.3, 0.9 * a * 2.0, z), b)
    # on x = z only the first two terms survive
    y = 1.5 * a * 2.0
    assert U2(StatePoint3(z, y, z), b) == pytest.approx(y ** p - b.c ** p * 2.0 ** p, rel=1e-13)
    # continuity across y = a(-z)
    yb = a * 2.0
    for x in (z, 0.0, yb):
        up = U2(StatePoint3(x, yb, z), b, branch="upper")
        lo = U2(StatePoint3(x, yb, z), b, branch="lower")
        assert abs(up - lo) < 1e-10 * max(1.0, abs(up))


@pytest.mark.parametrize("p", [0.6, 0.75, 0.9])
def test_U3_examples(p):
    b = constants_bundle(p)
    z = -1.5
    assert U3(StatePoint3(0.2, 0.3, z), b) == U3(StatePoint3(0.2, 1.2, z), b)
    y = 4.0
    assert U3(StatePoint3(z, y, z), b) == pytest.approx(y ** p - b.frak_c ** p * 1.5 ** p, rel=1e-13)
    for x in (z, 0.0, 1.5):
        up = U3(StatePoint3(x, 1.5, z), b, branch="upper")
        lo = U3(StatePoint3(x, 1.5, z), b, branch="lower")
        assert abs(up - lo) < 1e-10 * max(1.0, abs(up))


def test_U3_rejects_small_p():
    b = constants_bundle(0.4)
    with pytest.raises(DomainError):
        U3(StatePoint3(0.0, 1.0, -1.0), b)
    with pytest.raises(DomainError):
        U3_partials(StatePoint3(0.0, 1.0, -1.0), b)


def test_three_variable_domain():
    b = constants_bundle(0.75)
    with pytest.raises(DomainError):
        U2(StatePoint3(0.0, -0.1, -1.0), b)
    with pytest.raises(DomainError):
        U2(StatePoint3(0.0, 1.0, 0.0), b)


@pytest.mark.parametrize("fn,pfn,p", [(U2, U2_partials, 0.3), (U2, U2_partials, 0.75),
                                      (U3, U3_partials, 0.75)])
def test_partials_match_central_differences(fn, pfn, p):
    b = constants_bundle(p)
    h = 1e-6
    for x, y, z in ((0.4, 3.0, -1.0), (-0.5, 0.2, -1.0), (1.0, 8.0, -2.5)):
        pt = StatePoint3(x, y, z)
        exact = pfn(pt, b)
        for i in range(3):
            up = list(pt)
            dn = list(pt)
            up[i] += h
            dn[i] -= h
            fd = (fn(StatePoint3(*up), b) - fn(StatePoint3(*dn), b)) / (2 * h)
            assert fd == pytest.approx(exact[i], rel=1e-6, abs=1e-8), (pt, i)


def test_jump_aux():
    for p in (0.3, 0.75):
        s0 = 1 / p - 1
        assert jump_aux(s0, s0, p) == 0.0
        for s in (s0 * 1.5, s0 * 10, s0 * 1e3):
            assert jump_aux(s, s0, p) <= 0.0
            assert jump_aux_prime(s, s0, p) <= 0.0
        # derivative check against central differences
        s, h = 2 * s0, 1e-5
        fd = (jump_aux(s + h, s0, p) - jump_aux(s - h, s0, p)) / (2 * h)
        assert fd == pytest.approx(jump_aux_prime(s, s0, p), rel=1e-5)


def test_jump_aux_matches_tail_difference():
    p, s0, s = 0.5, 1.0, 4.0
    inner = tail_integral_I1(s0, p) - tail_integral_I1(s, p)
    # int_1^4 r^(-1/2)/(r+1) dr = 2(atan 2 - atan 1)
    assert inner == pytest.approx(2 * (math.atan(2) - math.atan(1)), rel=1e-12)


coords = st.tuples(
    st.floats(0.05, 0.95),           # p
    st.floats(0.1, 10.0),            # -z
    st.floats(0.0, 1.0),             # x position between z and y
    st.floats(0.0, 20.0),            # y / (-z)
    st.floats(0.1, 10.0),            # lambda
)


@settings(max_examples=150, deadline=None)
@given(coords)
def test_homogeneity(c):
    p, w, t, s, lam = c
    p = round(p, 3)
    b = constants_bundle(p)
    z = -w
    y = s * w
    x = z + t * (y - z)
    v1 = U1(StatePoint2(x, z), b)
    assert U1(StatePoint2(lam * x, lam * z), b) == pytest.approx(lam ** p * v1, rel=1e-10, abs=1e-10 * w ** p)
    v2 = U2(StatePoint3(x, y, z), b)
    assert U2(StatePoint3(lam * x, lam * y, lam * z), b) == pytest.approx(
        lam ** p * v2, rel=1e-10, abs=1e-10 * (lam * w) ** p)
    if p > 0.5:
        v3 = U3(StatePoint3(x, y, z), b)
        assert U3(StatePoint3(lam * x, lam * y, lam * z), b) == pytest.approx(
            lam ** p * v3, rel=1e-10, abs=1e-10 * (lam * w) ** p)


@settings(max_examples=150, deadline=None)
@given(coords)
def test_sup_majorization_property(c):
    p, w, t, s, _ = c
    p = round(p, 3)
    b = constants_bundle(p)
    z, y = -w, s * w
    x = z + t * (y + 5 * w - z)
    scale = max(1.0, w ** p, y ** p)
    assert U2(StatePoint3(x, y, z), b) >= y ** p - b.c ** p * w ** p - 1e-12 * scale
    if p > 0.5:
        assert U3(StatePoint3(x, y, z), b) >= max(y, w) ** p - b.frak_c ** p * w ** p - 1e-12 * scale
