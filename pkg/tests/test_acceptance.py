"""Acceptance criteria, one test each, at full size.

Every test prints a PASS/FAIL line (also collected in the terminal
summary) and then asserts the same condition.  Runtime budgets are
checked on the wall clock of the test body.
"""

import math
import time

import numpy as np
import pytest

from conftest import SMALL_PARAMS
from holderlab import dynamics as dyn
from holderlab.experiments import run_experiment
from holderlab.operators import commutator_T, frac_laplacian
from holderlab.rng import SplitMix64
from holderlab.spectral import GridSpec, single_mode

pytestmark = pytest.mark.slow


def _run(experiment, **params):
    return run_experiment(experiment, {k: str(v) for k, v in params.items()}, 0)[1].reports


def _within(value, low=None, high=None):
    return math.isfinite(value) and (low is None or value >= low) and (high is None or value <= high)


def test_eigenrelation(record):
    t0 = time.perf_counter()
    grid = GridSpec(32)
    rng = SplitMix64(11)
    worst = 0.0
    for alpha in (0.1, 0.25, 0.4):
        for _ in range(20):
            k = tuple(rng.integer(-15, 15) for _ in range(3))
            if k == (0, 0, 0):
                k = (1, 0, 0)
            e = single_mode(grid, k, real=False)
            lam = float(np.linalg.norm(k)) ** (2 * alpha)
            worst = max(worst, float(np.abs(frac_laplacian(e, alpha).coeffs - lam * e.coeffs).max()))
    elapsed = time.perf_counter() - t0
    ok = record("1 eigenrelation", worst <= 1e-12 and elapsed < 1.0, f"max error {worst:.2e} (<= 1e-12), {elapsed:.2f} s")
    assert ok


def test_cross_realization_fractional_laplacian(record):
    t0 = time.perf_counter()
    si = _run("fraclap-check")["singular_integral"].metrics
    elapsed = time.perf_counter() - t0
    err, ratio = si["relative_error"], si["doubling_ratio"]
    ok = _within(err, high=1e-3) and _within(ratio, 0.35, 0.65) and elapsed < 120
    record(
        "2 cross-realization fractional Laplacian",
        ok,
        f"relative error {err:.2e} (<= 1e-3), shell-doubling error ratio {ratio:.3f} (0.5 +- 30%), {elapsed:.0f} s",
    )
    assert ok


def test_commutator_oracle(record):
    t0 = time.perf_counter()
    rep = _run("commutator-check", pairs=50)["commutator"]
    elapsed = time.perf_counter() - t0
    err = rep.metrics["max_error"]
    ok = record("3 commutator oracle", err <= 1e-10 and elapsed < 5, f"max error {err:.2e} over 50 pairs (<= 1e-10), {elapsed:.1f} s")
    assert ok


def test_mollification_rates(record):
    t0 = time.perf_counter()
    worst, where = 0.0, ""
    for theta in (0.3, 0.4, 0.6):
        for name, rep in _run("mollify-scan", theta=theta).items():
            miss = abs(rep.slope - rep.metrics["target_slope"])
            if miss >= worst:
                worst, where = miss, f"theta={theta} {name} slope {rep.slope:.3f} vs {rep.metrics['target_slope']:.2f}"
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.15 and elapsed < 300
    record("4 mollification rates", ok, f"largest slope miss {worst:.3f} (<= 0.15) at {where}, {elapsed:.0f} s")
    assert ok


def test_pressure_holder_gain(record):
    t0 = time.perf_counter()
    low = _run("pressure-scan", theta=0.35)["pressure"].metrics
    high = _run("pressure-scan", theta=0.7)["pressure"].metrics
    elapsed = time.perf_counter() - t0
    tu, tp, tg = low["median_theta_u"], low["median_theta_p"], high["median_theta_grad_p"]
    ok = _within(tu, 0.30, 0.40) and tp >= 0.6 and tg >= 0.3 and elapsed < 300
    record(
        "5 pressure Hoelder gain",
        ok,
        f"theta=0.35: theta_u {tu:.3f} (0.35 +- 0.05), theta_p {tp:.3f} (>= 0.6); "
        f"theta=0.7: theta_grad_p {tg:.3f} (>= 0.3); {elapsed:.0f} s",
    )
    assert ok


def test_triple_divergence_exponent(record):
    t0 = time.perf_counter()
    m = _run("pressure-scan", theta=0.6, include_q="true")["pressure"].metrics
    elapsed = time.perf_counter() - t0
    tq = m["median_theta_q"]
    ok = record("6 triple-divergence exponent", tq >= 0.1 and elapsed < 180, f"median theta_q {tq:.3f} (>= 0.1), {elapsed:.0f} s")
    assert ok


@pytest.fixture(scope="module")
def extend_reports():
    t0 = time.perf_counter()
    reports = _run("extend-check")
    return reports, time.perf_counter() - t0


def test_divergence_free_extension(record, extend_reports):
    reports, elapsed = extend_reports
    m = reports["extension"].metrics
    ok = (
        m["max_match_error"] <= 1e-6
        and m["max_divergence"] <= 1e-6
        and m["max_support_leak"] == 0.0
        and m["max_norm_ratio"] <= 10
        and elapsed < 120
    )
    record(
        "7 divergence-free extension",
        ok,
        f"match {m['max_match_error']:.1e}, |div| {m['max_divergence']:.1e}, leak {m['max_support_leak']:.1e}, "
        f"norm ratio {m['max_norm_ratio']:.2f} (<= 10) over 5 seeds, {elapsed:.0f} s with the oracle",
    )
    assert ok


def test_potential_oracle(record, extend_reports):
    reports, elapsed = extend_reports
    m = reports["oracle"].metrics
    ok = m["relative_error"] <= 0.05 and elapsed < 180
    record("8 potential oracle", ok, f"max relative error {m['relative_error']:.2e} at 100 points (<= 5%)")
    assert ok


def test_beltrami_decay_and_conservation(record):
    t0 = time.perf_counter()
    errs = []
    for alpha in (0.2, 0.4):
        m = _run("simulate", init="beltrami", k="1, 0, 0", nu=0.1, alpha=alpha, dt=1e-3, t_end=1.0, snapshot_stride=100)
        errs.append(m["energy"].metrics["decay_error"])
    drift = _run("simulate", init="smooth", nu=0.0, dt=1e-3, t_end=1.0, snapshot_stride=100)["energy"].metrics["max_total_drift"]
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 1e-8 and drift <= 1e-8 and elapsed < 120
    record(
        "9 Beltrami decay and Euler conservation",
        ok,
        f"decay errors {errs[0]:.1e}, {errs[1]:.1e} (<= 1e-8), energy drift {drift:.1e} (<= 1e-8), {elapsed:.0f} s",
    )
    assert ok


@pytest.fixture(scope="module")
def identity_reports():
    t0 = time.perf_counter()
    reports = _run("identity-check")
    return reports, time.perf_counter() - t0


def test_mollified_energy_identity(record, identity_reports):
    reports, elapsed = identity_reports
    m = reports["identity"].metrics
    ok = m["finest_residual"] <= 1e-5 and m["order"] >= 1.9 and elapsed < 180
    record(
        "10 mollified energy identity",
        ok,
        f"finest residual {m['finest_residual']:.1e} (<= 1e-5), dt order {m['order']:.3f} (>= 2 within 5%), {elapsed:.0f} s",
    )
    assert ok


def test_flux_rate(record, identity_reports):
    rep = identity_reports[0]["flux"]
    ok = record("11 flux rate", rep.slope >= 0.05, f"slope {rep.slope:.3f} (>= 0.05), per-seed median {rep.metrics['median_seed_slope']:.3f}")
    assert ok


def test_pressure_decomposition(record):
    t0 = time.perf_counter()
    euler = _run("decomposition-check")["decomposition"].metrics
    visc = _run("decomposition-check", nu=0.01, alpha=0.2)["decomposition"].metrics
    elapsed = time.perf_counter() - t0
    order = min(math.log2(euler["refinement_ratio"]), math.log2(visc["refinement_ratio"]))
    ok = euler["residual"] <= 1e-3 and visc["residual"] <= 5e-3 and order >= 1.9 and elapsed < 240
    record(
        "12 five-term pressure decomposition",
        ok,
        f"residual {euler['residual']:.1e} (nu=0, <= 1e-3), {visc['residual']:.1e} (nu>0, <= 5e-3), "
        f"quadrature order {order:.3f}, {elapsed:.0f} s",
    )
    assert ok


def test_energy_modulus(record):
    t0 = time.perf_counter()
    m = _run("energy-scan")["summary"].metrics
    flagged = _run("energy-scan", **dict(SMALL_PARAMS["energy-scan"], theta=1.0 / 3.0))["summary"].metrics
    elapsed = time.perf_counter() - t0
    ok = (
        m["C_theta_spread"] <= 3
        and math.isfinite(m["max_C_theta"])
        and flagged["conservation_threshold"] is True
        and m["conservation_threshold"] is False
        and elapsed < 300
    )
    record(
        "13 energy modulus",
        ok,
        f"C_theta spread {m['C_theta_spread']:.2f} over 5 seeds (<= 3), exponent {m['exponent']:.4f}, "
        f"theta=1/3 flagged {flagged['conservation_threshold']}, {elapsed:.0f} s",
    )
    assert ok


def test_determinism(record):
    t0 = time.perf_counter()
    mismatched = []
    for experiment, params in sorted(SMALL_PARAMS.items()):
        a = run_experiment(experiment, params, 7)[1].reports
        b = run_experiment(experiment, params, 7)[1].reports
        for name in a:
            if (a[name].to_json(), a[name].to_csv()) != (b[name].to_json(), b[name].to_csv()):
                mismatched.append(f"{experiment}.{name}")
    elapsed = time.perf_counter() - t0
    ok = not mismatched and elapsed < 60
    record("14 determinism", ok, f"{len(SMALL_PARAMS)} experiments re-run, mismatches: {mismatched or 'none'}, {elapsed:.0f} s")
    assert ok
