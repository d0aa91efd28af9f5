"""Acceptance suite: one PASS/FAIL line per criterion in the terminal summary."""
import math
import time

import numpy as np
import pytest
from scipy import stats

from sharpmax import cli
from sharpmax.constants import (
    alpha_closed_form,
    alpha_root,
    constant_C,
    constant_c,
    constants_bundle,
    solve_p0,
    tail_integral_I1,
    tail_integral_I2,
)
from sharpmax.lemma_checks import default_grid, verify_lemma0, verify_lemma1, verify_lemma2
from sharpmax.oracle import oracle_conditional_min
from sharpmax.rng import SeedSpec
from sharpmax.sharpness import sharpness_chain, thm2_closed_forms, thm3_closed_forms
from sharpmax.simulator import StagedParams, Variant, sample_batch, sample_conditional_min, simulate

N = 10 ** 6


def test_1_p0(criterion):
    t0 = time.perf_counter()
    p0 = solve_p0.__wrapped__()
    dt = time.perf_counter() - t0
    ok = abs(p0 - 0.1945) <= 5e-4 and dt < 1.0
    assert criterion(1, "p0 reproduction", ok, f"p0={p0:.10f} ({dt:.3f}s)")


def test_2_anchors(criterion):
    t0 = time.perf_counter()
    errs = {
        "C(0.5)": abs(constant_C(0.5) - 2.0) / 1e-9,
        "c(0.5)": abs(constant_c(0.5) - (1 + math.pi / 2) ** 2) / 1e-8,
        "I1(1,0.5)": abs(tail_integral_I1(1.0, 0.5) - math.pi / 2) / 1e-10,
        "I2(1,0.5)": abs(tail_integral_I2(1.0, 0.5) - (0.5 + math.pi / 4)) / 1e-10,
    }
    dt = time.perf_counter() - t0
    ok = max(errs.values()) <= 1.0 and dt < 1.0
    worst = max(errs, key=errs.get)
    assert criterion(2, "closed-form anchors", ok,
                     f"worst {worst} at {errs[worst]:.2g} of tolerance ({dt:.3f}s)")


def test_3_identities(criterion):
    t0 = time.perf_counter()
    grid = np.linspace(0.02, 0.98, 50)
    ident = max(abs(p * constants_bundle(p).c ** p - tail_integral_I2(1 / p - 1, p)) for p in grid)
    p0 = solve_p0()
    jumps = {
        "alpha@p0": abs(alpha_root(p0) - alpha_closed_form(p0)),
        "C@p0": abs((1 - p0) / p0 - (1 + 1 / alpha_root(p0)) ** (1 / p0)),
        "frak_c@1/2": abs((1 + tail_integral_I1(1.0, 0.5)) ** 2 - constant_c(0.5)),
    }
    dt = time.perf_counter() - t0
    ok = ident <= 1e-8 and max(jumps.values()) <= 1e-9 and dt < 10.0
    assert criterion(3, "identity suite", ok,
                     f"max |p c^p - I2| = {ident:.2e}, max branch jump = {max(jumps.values()):.2e} "
                     f"({dt:.2f}s)")


def test_4_lemmas(criterion):
    t0 = time.perf_counter()
    failed = []
    worst = -math.inf
    for p in (0.05, 0.15, 0.3, 0.5, 0.75, 0.9):
        checks = [(0, verify_lemma0), (1, verify_lemma1)]
        if p > 0.5:
            checks.append((2, verify_lemma2))
        for lemma, fn in checks:
            grid = default_grid(lemma)
            assert len(grid.offsets) >= 6
            for rep in fn(p, grid):
                worst = max(worst, rep.worst_violation)
                if not rep.passed:
                    failed.append(f"p={p} lemma{lemma} {rep.clause}")
    dt = time.perf_counter() - t0
    ok = not failed and dt < 60.0
    detail = f"worst violation {worst:.2e} ({dt:.1f}s)" + (f"; failed: {failed}" if failed else "")
    assert criterion(4, "lemma verification", ok, detail)


@pytest.mark.slow
def test_5_distributions(criterion):
    t0 = time.perf_counter()
    parts = []
    ok = True
    for beta, delta in ((1.0, 1.0), (0.5, 0.01)):
        # the stage law does not depend on p
        b = sample_batch(StagedParams(0.3, beta, delta, Variant.THM1_UNCAPPED), N, SeedSpec(51))
        target = 1 / (beta + 1)
        hat = float(np.mean(b.sigma == 0))
        z = abs(hat - target) / math.sqrt(target * (1 - target) / N)
        ok &= z <= 4
        parts.append(f"P(sigma=0) z={z:.2f}")
    n = 10 ** 5
    walk = oracle_conditional_min(0.0, -1.0, 1.0, 1e-4, n, SeedSpec(52))
    exact = sample_conditional_min(0.0, -1.0, 1.0, np.random.default_rng(53), size=n)
    ks = stats.ks_2samp(walk, exact).statistic
    ok &= ks < 0.01
    dt = time.perf_counter() - t0
    ok &= dt < 300
    assert criterion(5, "distribution checks", ok, f"{', '.join(parts)}, KS={ks:.4f} ({dt:.1f}s)")


DIRECTION_CASES = [
    StagedParams(0.1, 8.0, 0.05, Variant.THM1_UNCAPPED),
    StagedParams(0.3, 1.0, 0.05, Variant.THM1_UNCAPPED),
    StagedParams(0.5, 2.0, 0.01, Variant.THM1_CAPPED, 200),
    StagedParams(0.8, 1.0, 0.05, Variant.THM1_CAPPED, 50),
    StagedParams(0.3, 0.5, 0.05, Variant.THM2),
    StagedParams(0.5, 0.9, 0.01, Variant.THM2),
    StagedParams(0.75, 0.2, 0.05, Variant.THM3),
    StagedParams(0.9, 0.1, 0.1, Variant.THM3),
]


@pytest.mark.slow
def test_6_inequality_direction(criterion):
    t0 = time.perf_counter()
    worst = -math.inf
    bad = []
    for i, params in enumerate(DIRECTION_CASES):
        res = simulate(params, N, seed=600 + i)
        worst = max(worst, res.excess)
        if res.ratio > res.constant_power + 4 * res.ratio_stderr:
            bad.append(f"{params.variant.value} p={params.p}")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 300
    assert criterion(6, "inequality direction", ok,
                     f"{len(DIRECTION_CASES)} cases, max (ratio - const^p)/se = {worst:.1f} ({dt:.1f}s)"
                     + (f"; violated: {bad}" if bad else ""))


def test_7_sharpness(criterion):
    t0 = time.perf_counter()
    targets = [(1, 0.1, constant_C(0.1) ** 0.1), (1, 0.5, constant_C(0.5) ** 0.5),
               (2, 0.5, constants_bundle(0.5).c ** 0.5), (3, 0.75, constants_bundle(0.75).frak_c ** 0.75)]
    gaps = []
    for thm, p, want in targets:
        last = sharpness_chain(thm, p, delta=1e-6, K=100.0)[-1]
        assert last.beta_fraction == pytest.approx(0.999)
        gaps.append(abs(last.ratio - want))
    dt = time.perf_counter() - t0
    ok = max(gaps) <= 1e-3 and dt < 30
    assert criterion(7, "sharpness convergence", ok,
                     "gaps " + ", ".join(f"{g:.1e}" for g in gaps) + f" ({dt:.1f}s)")


@pytest.mark.slow
def test_8_closed_forms_vs_mc(criterion):
    t0 = time.perf_counter()
    # p = 0.3 keeps (M+)^p square integrable; for p > 1/2 neither (-M-)^p nor
    # M^p has finite variance, so the stderr is only indicative and the seed is fixed
    cases = [
        (StagedParams(0.3, 0.5, 0.05, Variant.THM2), thm2_closed_forms, "m_plus"),
        (StagedParams(0.55, 0.5, 0.05, Variant.THM3), thm3_closed_forms, "m_abs"),
    ]
    zs = []
    for i, (params, forms, top) in enumerate(cases):
        f = forms(params.beta, params.delta, params.p)
        res = simulate(params, N, seed=800 + i)
        for name, target in (("m_minus", f.minus_exact), (top, f.plus_exact)):
            est = res.moments[name]
            zs.append(abs(est.mean - target) / est.stderr)
    dt = time.perf_counter() - t0
    ok = max(zs) <= 4 and dt < 300
    assert criterion(8, "closed forms vs Monte Carlo", ok,
                     "z " + ", ".join(f"{z:.2f}" for z in zs) + f" ({dt:.1f}s)")


@pytest.mark.slow
def test_9_reproducibility(criterion, tmp_path):
    outputs = []
    for workers in (1, 4, 8):
        path = tmp_path / f"w{workers}.csv"
        code = cli.main(["simulate", "--thm", "2", "--p", "0.5", "--beta", "0.9", "--delta", "0.01",
                         "--n", str(N), "--seed", "42", "--workers", str(workers), "--out", str(path)])
        assert code == 0
        outputs.append(path.read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    assert criterion(9, "reproducibility across workers", ok,
                     f"1/4/8 workers byte-identical={ok} ({len(outputs[0])} bytes)")
