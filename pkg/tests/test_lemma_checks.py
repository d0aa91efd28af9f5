import pytest

from sharpmax.constants import constants_bundle
from sharpmax.errors import DomainError
from sharpmax.lemma_checks import (
    DEFAULT_OFFSETS,
    GridSpec,
    PropertyReport,
    all_passed,
    default_grid,
    merge_reports,
    verify_lemma0,
    verify_lemma1,
    verify_lemma2,
)
from sharpmax.special_functions import U2, U2_partials, StatePoint3

SMALL = GridSpec(z_range=(0.1, 10.0, 5), y_range=(0.05, 20.0, 6), x_count=6)


def _by_clause(reports):
    return {r.clause: r for r in reports}


def test_default_grids_are_large_enough():
    for lemma in (0, 1, 2):
        g = default_grid(lemma)
        assert len(g.offsets) == 6 and tuple(g.offsets) == DEFAULT_OFFSETS
        if lemma == 0:
            assert g.z_range[2] * g.x_count >= 10 ** 4
        else:
            assert g.z_range[2] * g.y_range[2] * g.x_count >= 10 ** 4


def test_grid_validation():
    with pytest.raises(DomainError):
        GridSpec(z_range=(1.0, 1.0, 3))
    with pytest.raises(DomainError):
        GridSpec(y_range=(0.1, 1.0, 1))
    with pytest.raises(DomainError):
        GridSpec(tolerance=0.0)
    with pytest.raises(DomainError):
        GridSpec(offsets=(0.0, -1.0))


def test_report_pass_rule():
    r = PropertyReport(0, "c", "label")
    assert not r.passed  # no points checked
    r.record(-1.0, (0,))
    assert r.passed
    r.record(2e-12, (1,))
    assert not r.passed and r.worst_point == (1,)
    r2 = PropertyReport(0, "n", "label")
    r2.record(float("nan"), (0,))
    assert not r2.passed


@pytest.mark.parametrize("p", [0.15, 0.5, 0.9])
def test_lemma0_small_grid(p):
    reps = _by_clause(verify_lemma0(p, SMALL))
    assert all_passed(reps.values())
    assert ("boundary_equality" in reps) == (p > constants_bundle(p).p0)
    if p < constants_bundle(p).p0:
        assert reps["boundary"].worst_violation < -1e-3


@pytest.mark.parametrize("p", [0.3, 0.4, 0.5, 0.75])
def test_lemma1_small_grid(p):
    reps = _by_clause(verify_lemma1(p, SMALL))
    assert all_passed(reps.values())
    assert "majorization_strong" in reps
    # for p <= 1/2 the supremum function already dominates the two-sided target
    assert ("majorization_two_sided" in reps) == (p <= 0.5)


def test_lemma2_small_grid_and_domain():
    assert all_passed(verify_lemma2(0.75, SMALL))
    with pytest.raises(DomainError):
        verify_lemma2(0.5, SMALL)


def test_jump_zero_offset_is_exact():
    g = GridSpec(z_range=(0.1, 10.0, 4), y_range=(0.05, 20.0, 4), x_count=4, offsets=(0.0,))
    for reps in (verify_lemma0(0.5, g), verify_lemma1(0.5, g), verify_lemma2(0.75, g)):
        jump = _by_clause(reps)["jump"]
        assert jump.worst_violation <= 1e-15


def test_jump_equality_below_running_max():
    b = constants_bundle(0.5)
    x, y, z, d = 0.2, 3.0, -1.5, 1.0
    lhs = U2(StatePoint3(x + d, y, z), b)
    rhs = U2(StatePoint3(x, y, z), b) + U2_partials(StatePoint3(x, y, z), b)[0] * d
    assert lhs == pytest.approx(rhs, rel=1e-13)


@pytest.mark.parametrize("x,y,z,d", [
    (0.1, 0.3, -1.0, 0.4),    # stays below the branch line
    (0.1, 0.3, -1.0, 5.0),    # crosses from the lower to the upper branch
    (2.0, 2.5, -1.0, 3.0),    # upper branch, new maximum
])
def test_jump_inequality_spot_checks(x, y, z, d):
    b = constants_bundle(0.5)
    lhs = U2(StatePoint3(x + d, max(x + d, y), z), b)
    rhs = U2(StatePoint3(x, y, z), b) + U2_partials(StatePoint3(x, y, z), b)[0] * d
    assert lhs <= rhs + 1e-13


def test_fault_injection_breaks_majorization():
    b = constants_bundle(0.5)
    r0 = _by_clause(verify_lemma0(0.5, SMALL, b, target_C=b.C * (1 - 1e-3)))
    assert not r0["majorization"].passed
    r1 = _by_clause(verify_lemma1(0.5, SMALL, b, target_c=b.c * (1 - 1e-3)))
    assert not r1["majorization"].passed
    b2 = constants_bundle(0.75)
    r2 = _by_clause(verify_lemma2(0.75, SMALL, b2, target_frak_c=b2.frak_c * (1 - 1e-3)))
    assert not r2["majorization"].passed


def test_merge_is_partition_independent():
    a = GridSpec(z_range=(0.1, 1.0, 3), y_range=(0.05, 20.0, 4), x_count=4)
    c = GridSpec(z_range=(2.0, 10.0, 3), y_range=(0.05, 20.0, 4), x_count=4)
    ra, rc = verify_lemma1(0.75, a), verify_lemma1(0.75, c)
    m1 = _by_clause(merge_reports([ra, rc]))
    m2 = _by_clause(merge_reports([rc, ra]))
    for clause, rep in m1.items():
        assert rep.points == m2[clause].points
        assert rep.worst_violation == m2[clause].worst_violation
        parts = [r.worst_violation for r in ra + rc if r.clause == clause]
        assert rep.worst_violation == max(parts)
