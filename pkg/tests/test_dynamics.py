import json
import math

import numpy as np
import pytest

from holderlab.dynamics import (
    NumericalFailure,
    SolverConfig,
    abc_flow,
    beltrami_mode,
    check_cfl,
    dealias_mask,
    energy_exponent,
    energy_ledger,
    energy_modulus_scan,
    flux,
    integrate,
    kinetic_energy,
    mollified_energy_identity,
    pressure_decomposition_check,
    save_trajectory,
    smooth_flow,
    time_modulus_scan,
)
from holderlab.norms import c0_norm
from holderlab.operators import MollifierSpec, UnderResolvedError, divergence
from holderlab.spectral import GridSpec, from_samples, single_mode, to_samples, zeros


@pytest.fixture(scope="module")
def grid():
    return GridSpec(16)


@pytest.fixture(scope="module")
def euler_traj(grid):
    cfg = SolverConfig(grid, dt=2e-3, t_end=0.04)
    return integrate(smooth_flow(grid, 3, seed=1), cfg)


@pytest.mark.parametrize(
    "kwargs",
    [dict(dt=0.0), dict(dt=1e-3, nu=-1.0), dict(dt=1e-3, alpha=0.5), dict(dt=1e-3, t_end=0.0),
     dict(dt=1e-3, dealias="none"), dict(dt=1e-3, snapshot_stride=0)],
)
def test_config_validation(grid, kwargs):
    with pytest.raises(ValueError):
        SolverConfig(grid, **kwargs)


def test_config_cfl_with_velocity_scale(grid):
    with pytest.raises(NumericalFailure):
        SolverConfig(grid, dt=1.0, velocity_scale=1.0)


def test_cfl_check():
    check_cfl(0.1, 0.4, 2.0)
    with pytest.raises(NumericalFailure):
        check_cfl(0.2, 0.4, 2.0)


def test_cfl_abort_in_integrate(grid):
    with pytest.raises(NumericalFailure):
        integrate(smooth_flow(grid, 3, 0, amplitude=50.0), SolverConfig(grid, dt=0.05, t_end=0.1))


def test_dealias_mask_counts():
    m = dealias_mask(GridSpec(12))
    assert m.sum() == 7**3


def test_rejects_compressible(grid):
    u = from_samples(np.stack([np.cos(grid.mesh()[0]), 0 * grid.mesh()[0], 0 * grid.mesh()[0]]), grid)
    with pytest.raises(ValueError):
        integrate(u, SolverConfig(grid, dt=1e-3, t_end=1e-2))


def test_rejects_unresolved(grid):
    u = beltrami_mode(grid, (7, 0, 0))
    with pytest.raises(ValueError):
        integrate(u, SolverConfig(grid, dt=1e-3, t_end=1e-2))


def test_zero_trajectory(grid):
    traj = integrate(zeros(grid, "vector"), SolverConfig(grid, dt=1e-2, t_end=0.1, nu=0.1))
    assert len(traj) == 11
    assert all(np.abs(u.coeffs).max() == 0 for u in traj.snapshots)
    led = energy_ledger(traj)
    assert max(led.kinetic) == 0 and max(led.total) == 0


def test_beltrami_is_curl_eigenfield(grid):
    from holderlab.operators import curl

    k = np.array([1, 2, 2])
    u = beltrami_mode(grid, k, 0.7, 0.4)
    np.testing.assert_allclose(to_samples(curl(u)), 3.0 * to_samples(u), atol=1e-12)
    assert np.abs(to_samples(divergence(u))).max() < 1e-13


def test_abc_flow_is_beltrami(grid):
    from holderlab.operators import curl

    u = abc_flow(grid, 1.0, 0.5, 0.3)
    np.testing.assert_allclose(to_samples(curl(u)), to_samples(u), atol=1e-12)


@pytest.mark.parametrize("alpha", [0.2, 0.4])
def test_beltrami_decay(alpha, grid):
    nu, k = 0.3, (1, 1, 0)
    u0 = beltrami_mode(grid, k, 1.0, 0.2)
    traj = integrate(u0, SolverConfig(grid, dt=1e-2, t_end=1.0, nu=nu, alpha=alpha, snapshot_stride=10))
    rate = nu * math.sqrt(2) ** (2 * alpha)
    expect = to_samples(u0) * math.exp(-rate * traj.times[-1])
    assert np.abs(to_samples(traj.snapshots[-1]) - expect).max() <= 1e-8 * c0_norm(u0)
    led = energy_ledger(traj)
    np.testing.assert_allclose(led.kinetic, np.array(led.kinetic[0]) * np.exp(-2 * rate * np.array(led.times)), rtol=1e-7)


def test_euler_conserves_energy(grid):
    traj = integrate(smooth_flow(grid, 3, 2), SolverConfig(grid, dt=1e-3, t_end=0.2, snapshot_stride=50))
    e = energy_ledger(traj).kinetic
    assert abs(e[-1] - e[0]) <= 1e-8 * e[0]


def test_snapshots_stay_divergence_free(euler_traj):
    for u in euler_traj.snapshots:
        assert np.abs(to_samples(divergence(u))).max() <= 1e-10


def test_dissipative_energy_balance(grid):
    cfg = SolverConfig(grid, dt=1e-3, t_end=0.1, nu=0.2, alpha=0.3)
    traj = integrate(smooth_flow(grid, 3, 4), cfg)
    led = energy_ledger(traj)
    total = np.array(led.total)
    rate = np.abs(np.diff(total) / np.diff(led.times)).max()
    assert rate <= 1e-6 * led.kinetic[0]
    assert led.kinetic[-1] < led.kinetic[0]


def test_save_trajectory(tmp_path, grid):
    traj = integrate(beltrami_mode(grid, (1, 0, 0)), SolverConfig(grid, dt=1e-2, t_end=0.03))
    save_trajectory(traj, tmp_path / "run")
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["times"] == pytest.approx([0.0, 0.01, 0.02, 0.03])
    assert manifest["config"]["grid"] == 16
    assert all((tmp_path / "run" / f).exists() for f in manifest["files"])


def test_identity_zero_field(grid):
    traj = integrate(zeros(grid, "vector"), SolverConfig(grid, dt=1e-2, t_end=0.05))
    res = mollified_energy_identity(traj, MollifierSpec(4 * grid.h))
    assert res.max_residual == 0.0
    assert all(v == 0 for v in res.lhs + res.rhs)


def test_identity_smooth_flow(euler_traj, grid):
    res = mollified_energy_identity(euler_traj, MollifierSpec(4 * grid.h))
    assert res.max_residual <= 1e-4


def test_identity_refuses_small_delta(euler_traj, grid):
    with pytest.raises(UnderResolvedError):
        mollified_energy_identity(euler_traj, MollifierSpec(grid.h))


def test_flux_of_beltrami_vanishes(grid):
    # u_d is again a curl eigenfield, so the mollified energy is conserved and the flux is zero
    assert abs(flux(beltrami_mode(grid, (1, 1, 0)), 4 * grid.h)) <= 1e-14


def test_time_modulus_steady_beltrami(grid):
    traj = integrate(beltrami_mode(grid, (0, 1, 1)), SolverConfig(grid, dt=1e-2, t_end=0.1))
    rep = time_modulus_scan(traj)
    assert max(r["modulus"] for r in rep.rungs) <= 1e-13


def test_time_modulus_decaying_beltrami(grid):
    traj = integrate(beltrami_mode(grid, (1, 1, 1)), SolverConfig(grid, dt=2e-2, t_end=0.32, nu=0.5, alpha=0.3))
    rep = time_modulus_scan(traj)
    assert rep.metrics["inequality_holds"]


def test_time_modulus_smooth_exponent(grid):
    traj = integrate(smooth_flow(grid, 3, 5), SolverConfig(grid, dt=1e-2, t_end=0.32))
    rep = time_modulus_scan(traj)
    assert rep.slope >= 0.9
    assert rep.metrics["inequality_holds"]


def test_time_modulus_needs_snapshots(grid):
    traj = integrate(beltrami_mode(grid, (1, 0, 0)), SolverConfig(grid, dt=1e-2, t_end=0.05))
    with pytest.raises(ValueError):
        time_modulus_scan(traj)


@pytest.mark.parametrize(
    "theta,nu,alpha,expect",
    [(0.4, 0.0, 0.25, 4.0 / 3.0), (1.0 / 3.0, 0.0, 0.25, 1.0), (0.4, 0.1, 0.2, 0.4 / 0.2 * 1.0)],
)
def test_energy_exponent(theta, nu, alpha, expect):
    if nu > 0:
        expect = 2 * (theta - alpha) / (1 - 3 * theta + 2 * (theta - alpha))
    assert energy_exponent(theta, nu, alpha) == pytest.approx(expect, rel=1e-14)


@pytest.mark.parametrize("theta,alpha", [(0.2, 0.3), (0.25, 0.25), (0.9, 0.1)])
def test_energy_exponent_refusals(theta, alpha):
    with pytest.raises(ValueError):
        energy_exponent(theta, 0.1, alpha)


def test_energy_modulus_threshold_flag(euler_traj):
    rep = energy_modulus_scan(euler_traj, 1.0 / 3.0)
    assert rep.metrics["conservation_threshold"] is True
    assert energy_modulus_scan(euler_traj, 0.4).metrics["conservation_threshold"] is False


def test_energy_modulus_steady_state(grid):
    traj = integrate(beltrami_mode(grid, (1, 0, 0)), SolverConfig(grid, dt=1e-2, t_end=0.05))
    assert energy_modulus_scan(traj, 0.4).metrics["C_theta"] <= 1e-12


def test_decomposition_same_time_is_zero(euler_traj, grid):
    res = pressure_decomposition_check(euler_traj, MollifierSpec(4 * grid.h), 3, 3)
    assert res.lhs_norm == 0.0
    assert all(v == 0.0 for v in res.term_norms.values())


def test_decomposition_euler(euler_traj, grid):
    res = pressure_decomposition_check(euler_traj, MollifierSpec(4 * grid.h), 0, 4)
    assert res.residual <= 1e-3


def test_decomposition_dissipative(grid):
    traj = integrate(smooth_flow(grid, 3, 6), SolverConfig(grid, dt=2e-3, t_end=0.01, nu=0.01, alpha=0.2))
    res = pressure_decomposition_check(traj, MollifierSpec(4 * grid.h), 0, 4)
    assert res.residual <= 5e-3
    assert res.term_norms["p4"] > 0 and res.term_norms["p5"] > 0


def test_decomposition_stride_must_divide(euler_traj, grid):
    with pytest.raises(ValueError):
        pressure_decomposition_check(euler_traj, MollifierSpec(4 * grid.h), 0, 5, stride=2)
