"""Pseudo-spectral hypodissipative Navier-Stokes / Euler and energy diagnostics.

The solver advances du/dt = -P div(u (x) u) - nu (-Delta)^alpha u with
classical RK4, an exact integrating factor for the dissipative part,
2/3-rule dealiasing and Leray projection at every stage.  The pressure is
eliminated by the projection and recovered on demand with
:func:`~holderlab.pressure.solve_pressure`.
"""

import itertools
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.fft as sfft

from .norms import besov_seminorm, c0_norm, fit_loglog
from .operators import (
    MollifierSpec,
    UnderResolvedError,
    _mollify_dense,
    commutator_T,
    divergence,
    frac_laplacian,
    fractional_symbol,
    grad,
    outer,
    outer3,
    reynolds_stress,
)
from .pressure import pressure_from_stress, q_from_tensor3, solve_pressure
from .report import ScalingReport, fit_report
from .spectral import (
    AXES,
    GridSpec,
    SpectralField,
    axis_wavenumbers,
    derivative_symbols,
    inverse_k_squared,
    leray_project,
    random_band_limited,
    save_snapshot,
    to_samples,
    wavevector,
)


class NumericalFailure(RuntimeError):
    """Integration produced non-finite values or broke the CFL bound."""


# ------------------------------------------------------------------ config


@dataclass(frozen=True)
class SolverConfig:
    """Grid, time step and PDE parameters.

    When ``velocity_scale`` (an upper bound for max |u0|) is given the CFL
    bound dt <= 0.5 h / velocity_scale is checked at construction; the
    integrator re-checks it on the actual data at every snapshot.
    """

    grid: GridSpec
    dt: float
    nu: float = 0.0
    alpha: float = 0.25
    t_end: float = 1.0
    dealias: str = "two_thirds"
    snapshot_stride: int = 1
    velocity_scale: float = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie strictly inside (0, 1/2)")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.dealias != "two_thirds":
            raise ValueError("only the two_thirds dealias rule is supported")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.velocity_scale is not None:
            check_cfl(self.dt, self.grid.h, self.velocity_scale)

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))


def check_cfl(dt, h, umax):
    if umax > 0 and dt > 0.5 * h / umax:
        raise NumericalFailure(f"CFL violated: dt={dt:.3g} > 0.5 h / max|u| = {0.5 * h / umax:.3g}")


def dealias_mask(grid):
    """True for modes kept by the 2/3 rule (|k_i| < n/3 on every axis)."""
    keep = np.abs(axis_wavenumbers(grid.n)) < grid.n / 3.0
    return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]


# --------------------------------------------------------------- trajectories


@dataclass
class Trajectory:
    times: list
    snapshots: list
    config: SolverConfig

    def __len__(self):
        return len(self.times)


class _HalfSpectrum:
    """Symbols on the real-FFT half spectrum (last axis 0..n/2)."""

    def __init__(self, grid, nu, alpha, dt):
        n = grid.n
        k = axis_wavenumbers(n)
        kz = np.arange(n // 2 + 1, dtype=float)
        self.shape = (n, n, n)
        self.k = (k[:, None, None], k[None, :, None], kz[None, None, :])
        k2 = self.k[0] ** 2 + self.k[1] ** 2 + self.k[2] ** 2
        self.inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
        keep = [np.abs(v) < n / 3.0 for v in self.k]
        self.mask = keep[0] & keep[1] & keep[2]
        self.ik = tuple(1j * v * self.mask for v in self.k)
        lin = nu * k2**alpha if nu > 0 else np.zeros_like(k2)
        self.eh = np.exp(-lin * dt / 2)
        self.ef = self.eh * self.eh

    def to_half(self, c):
        return np.ascontiguousarray(c[..., : self.shape[-1] // 2 + 1])

    def to_full(self, ch):
        u = sfft.irfftn(ch, s=self.shape, axes=AXES, norm="forward")
        return sfft.fftn(u, axes=AXES, norm="forward")

    def nonlinear(self, ch):
        """-P div(u (x) u), 2/3-dealiased, on half-spectrum coefficients."""
        u = sfft.irfftn(ch * self.mask, s=self.shape, axes=AXES, norm="forward")
        div = np.zeros_like(ch)
        for i, j in itertools.combinations_with_replacement(range(3), 2):
            t = sfft.rfftn(u[i] * u[j], axes=AXES, norm="forward")
            div[i] += self.ik[j] * t
            if i != j:
                div[j] += self.ik[i] * t
        kd = (self.k[0] * div[0] + self.k[1] * div[1] + self.k[2] * div[2]) * self.inv
        for i in range(3):
            div[i] -= self.k[i] * kd
        return -div


def integrate(u0, cfg, on_snapshot=None):
    """Integrate from ``u0`` and store every ``snapshot_stride``-th step.

    Internally the state is the real-FFT half spectrum; snapshots are
    rebuilt as full coefficient arrays.
    """
    grid = cfg.grid
    if u0.grid != grid or u0.rank != "vector":
        raise ValueError("u0 must be a vector field on the solver grid")
    mask = dealias_mask(grid)
    scale = np.abs(u0.coeffs).max(initial=0.0)
    if scale > 0 and np.abs(u0.coeffs * ~mask).max() > 1e-12 * scale:
        raise ValueError("u0 is not band-limited under the 2/3 rule")
    d = derivative_symbols(grid)
    div0 = np.abs(sum(d[j] * u0.coeffs[j] for j in range(3))).max()
    if scale > 0 and div0 > 1e-10 * scale * grid.n:
        raise ValueError("u0 is not divergence-free")
    hs = _HalfSpectrum(grid, cfg.nu, cfg.alpha, cfg.dt)
    eh, ef, dt = hs.eh, hs.ef, cfg.dt
    c = hs.to_half(np.array(u0.coeffs) * mask)
    times, snaps = [0.0], [u0.with_coeffs(np.array(u0.coeffs) * mask)]
    check_cfl(dt, grid.h, c0_norm(snaps[0]))
    active = bool(np.any(c))
    for step in range(1, cfg.steps + 1):
        if active:
            k1 = hs.nonlinear(c)
            k2 = hs.nonlinear(eh * (c + 0.5 * dt * k1))
            k3 = hs.nonlinear(eh * c + 0.5 * dt * k2)
            k4 = hs.nonlinear(ef * c + dt * eh * k3)
            c = ef * c + dt / 6.0 * (ef * k1 + 2.0 * eh * (k2 + k3) + k4)
        if step % cfg.snapshot_stride == 0 or step == cfg.steps:
            if not np.all(np.isfinite(c)):
                raise NumericalFailure(f"non-finite coefficients at step {step}")
            snap = u0.with_coeffs(hs.to_full(c) * mask)
            check_cfl(dt, grid.h, c0_norm(snap))
            times.append(step * dt)
            snaps.append(snap)
            if on_snapshot is not None:
                on_snapshot(step * dt, snap)
    return Trajectory(times, snaps, cfg)


def save_trajectory(traj, directory):
    """HLD1 snapshots plus a JSON manifest of times and solver config."""
    os.makedirs(directory, exist_ok=True)
    names = []
    for i, snap in enumerate(traj.snapshots):
        name = f"snapshot_{i:05d}.hld"
        save_snapshot(os.path.join(directory, name), snap)
        names.append(name)
    cfg = asdict(traj.config)
    cfg["grid"] = traj.config.grid.n
    manifest = {"times": list(map(float, traj.times)), "files": names, "config": cfg}
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


# ------------------------------------------------------------ initial data


def beltrami_mode(grid, k, amplitude=1.0, phase=0.0):
    """Real curl eigenfield Re(a (e1 + i e2) e^{ik.x}) with curl u = |k| u."""
    k = np.asarray(k, dtype=float)
    kn = np.linalg.norm(k)
    khat = k / kn
    trial = np.array([1.0, 0.0, 0.0]) if abs(khat[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - khat * (khat @ trial)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(khat, e1)
    h = amplitude * np.exp(1j * phase) * (e1 + 1j * e2) / 2.0
    c = np.zeros((3,) + (grid.n,) * 3, complex)
    idx = tuple(int(v) % grid.n for v in k)
    neg = tuple(int(-v) % grid.n for v in k)
    c[(slice(None),) + idx] += h
    c[(slice(None),) + neg] += np.conj(h)
    return SpectralField(grid, "vector", c)


def abc_flow(grid, A=1.0, B=1.0, C=1.0):
    """Arnold-Beltrami-Childress flow, curl u = u."""
    x = grid.coordinates()
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    u = np.stack([A * np.sin(Z) + C * np.cos(Y), B * np.sin(X) + A * np.cos(Z), C * np.sin(Y) + B * np.cos(X)])
    from .spectral import from_samples

    return from_samples(u, grid)


def smooth_flow(grid, kmax=3, seed=0, amplitude=1.0):
    """Divergence-free random flow on modes 0 < |k| <= kmax, max |u| = amplitude."""
    u = leray_project(random_band_limited(grid, kmax, seed, "vector", decay=1.0))
    return u * (amplitude / c0_norm(u))


# ------------------------------------------------------------ energy ledger


@dataclass
class EnergyReport:
    times: list
    kinetic: list
    dissipation_rate: list
    dissipation: list
    total: list
    nu: float = 0.0

    def to_csv(self):
        lines = ["t,kinetic,dissipation_rate,dissipation_integral,total"]
        for row in zip(self.times, self.kinetic, self.dissipation_rate, self.dissipation, self.total):
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def kinetic_energy(u):
    """1/2 int |u|^2 over the torus via Parseval."""
    return 0.5 * u.grid.volume * float(np.sum(np.abs(u.coeffs) ** 2))


def dissipation_rate(u, alpha):
    """|| (-Delta)^(alpha/2) u ||_{L^2}^2."""
    return u.grid.volume * float(np.sum(fractional_symbol(u.grid, alpha) * np.abs(u.coeffs) ** 2))


def energy_ledger(traj):
    cfg = traj.config
    t = np.asarray(traj.times, float)
    e = np.array([kinetic_energy(u) for u in traj.snapshots])
    d = np.array([dissipation_rate(u, cfg.alpha) for u in traj.snapshots])
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(t))])
    total = e + cfg.nu * integral
    return EnergyReport(list(t), list(e), list(d), list(integral), list(total), cfg.nu)


# ------------------------------------------------------- mollified identity


def flux(u, delta, npts=64):
    """-int R_delta : grad u_delta over the torus."""
    return flux_ladder(u, [delta], npts)[0]


def flux_ladder(u, deltas, npts=64):
    """Flux for several delta, sharing the product u (x) u."""
    if min(deltas) < 2 * u.grid.h:
        raise UnderResolvedError(f"delta={min(deltas):.4g} is below 2h={2 * u.grid.h:.4g}")
    T = outer(u, u)
    out = []
    for d in deltas:
        ud = _mollify_dense(u, d, npts)
        R = outer(ud, ud) - _mollify_dense(T, d, npts)
        G = grad(ud)
        out.append(-u.grid.volume * float(np.sum((R.coeffs * np.conj(G.coeffs)).real)))
    return out


@dataclass
class IdentityResult:
    times: list
    lhs: list
    rhs: list
    residual: list

    @property
    def max_residual(self):
        return float(max(self.residual)) if self.residual else 0.0


def mollified_energy_identity(traj, m, floor=None):
    """Per-snapshot residual of d/dt 1/2|u_d|^2 + nu |L^(a/2) u_d|^2 = -int R_d : grad u_d.

    The time derivative is a centred difference over neighbouring
    snapshots, so the first and last snapshots are skipped.
    """
    grid = traj.config.grid
    if m.delta < 2 * grid.h:
        raise UnderResolvedError(f"delta={m.delta:.4g} is below 2h={2 * grid.h:.4g}")
    cfg = traj.config
    ud = [_mollify_dense(u, m.delta, m.quadrature_points_per_axis) for u in traj.snapshots]
    e = [kinetic_energy(v) for v in ud]
    if floor is None:
        floor = 1e-12 * max(kinetic_energy(traj.snapshots[0]), 1e-300)
    t = traj.times
    times, lhs, rhs, res = [], [], [], []
    for i in range(1, len(t) - 1):
        de = (e[i + 1] - e[i - 1]) / (t[i + 1] - t[i - 1])
        left = de + cfg.nu * dissipation_rate(ud[i], cfg.alpha)
        right = flux(traj.snapshots[i], m.delta, m.quadrature_points_per_axis)
        times.append(t[i])
        lhs.append(left)
        rhs.append(right)
        res.append(abs(left - right) / max(abs(left), abs(right), floor))
    return IdentityResult(times, lhs, rhs, res)


def flux_rate_scan(u, deltas, npts=64):
    """|int R_d : grad u_d| against delta on a frozen field."""
    vals = [abs(v) for v in flux_ladder(u, deltas, npts)]
    return fit_report("flux-rate", deltas, vals, "delta", "abs_flux")


# ---------------------------------------------------------- time modulus


def mollified_time_derivative(u, delta, nu, alpha, npts=64):
    """d/dt u_delta from the mollified equation: -P div (u u)_delta - nu L u_delta."""
    T = _mollify_dense(outer(u, u), delta, npts)
    div = divergence(T)
    rhs = -leray_project(div)
    if nu > 0:
        rhs = rhs - frac_laplacian(_mollify_dense(u, delta, npts), alpha) * nu
    return rhs


def time_modulus_scan(traj, theta_probe=1.0, npts=64):
    """sup_x |u(t) - u(s)| against |t - s| with the delta = |t - s| majorant.

    Gaps run over dyadic snapshot-index differences; for each gap every
    non-overlapping pair is examined.  The majorant is
    ||u(s) - u_d(s)|| + ||u(t) - u_d(t)|| + |t - s| max_r ||d/dt u_d(r)||.
    """
    n = len(traj.times)
    if n < 8:
        raise ValueError("time_modulus_scan needs at least 8 snapshots")
    cfg = traj.config
    samples = [to_samples(u) for u in traj.snapshots]
    rows = []
    gap = 1
    while gap < n:
        worst_mod, worst_major, margin = 0.0, 0.0, math.inf
        for s in range(0, n - gap, gap):
            t = s + gap
            dt = traj.times[t] - traj.times[s]
            mod = float(np.sqrt(((samples[t] - samples[s]) ** 2).sum(axis=0)).max())
            ud = [_mollify_dense(traj.snapshots[r], dt, npts) for r in (s, t)]
            rough = sum(c0_norm(traj.snapshots[r] - v) for r, v in zip((s, t), ud))
            # every stored snapshot in [s, t] contributes to the sup of d/dt u_d
            speed = max(
                c0_norm(mollified_time_derivative(traj.snapshots[r], dt, cfg.nu, cfg.alpha, npts))
                for r in range(s, t + 1)
            )
            major = rough + dt * speed
            worst_mod = max(worst_mod, mod)
            worst_major = max(worst_major, major)
            margin = min(margin, major - mod)
        rows.append(
            {
                "gap": traj.times[gap] - traj.times[0],
                "modulus": worst_mod,
                "majorant": worst_major,
                "margin": margin,
                "holder_quotient": worst_mod / (traj.times[gap] - traj.times[0]) ** theta_probe,
            }
        )
        gap *= 2
    xs = [r["gap"] for r in rows]
    ys = [r["modulus"] for r in rows]
    rep = fit_report("time-modulus", xs, ys, "gap", "modulus")
    rep.rungs = rows
    rep.metrics = {
        "inequality_holds": all(r["margin"] >= 0 for r in rows),
        "min_margin": min(r["margin"] for r in rows),
        "degenerate": all(r["modulus"] == 0 for r in rows),
        "theta_probe": theta_probe,
    }
    return rep


# ------------------------------------------------------- energy modulus


def energy_exponent(theta, nu=0.0, alpha=0.0):
    """2 theta / (1 - theta) for Euler; 2(theta - a) / (1 - 3 theta + 2 (theta - a)) when nu > 0."""
    if nu == 0:
        return 2.0 * theta / (1.0 - theta)
    if theta <= alpha:
        raise ValueError("the dissipative bound needs alpha < theta")
    denom = 1.0 - 3.0 * theta + 2.0 * (theta - alpha)
    if denom <= 0:
        raise ValueError(f"nonpositive exponent denominator {denom:.3g} for theta={theta}, alpha={alpha}")
    return 2.0 * (theta - alpha) / denom


def energy_modulus_scan(traj, theta, gaps=None, p=3):
    """Smallest C with |e(t) - e(s)| <= C ([u]^2 + [u]^3) |t - s|^eta over snapshot pairs.

    [u] is the largest Besov B^theta_{p,inf} seminorm over the snapshots.
    For nu > 0 the total energy E_u replaces e_u.
    """
    cfg = traj.config
    eta = energy_exponent(theta, cfg.nu, cfg.alpha)
    ledger = energy_ledger(traj)
    energy = np.array(ledger.total if cfg.nu > 0 else ledger.kinetic)
    t = np.asarray(traj.times)
    besov = max(besov_seminorm(u, theta, p) for u in traj.snapshots)
    weight = besov**2 + besov**3
    n = len(t)
    gap_set = None if gaps is None else sorted(set(gaps))
    rows = []
    best = 0.0
    for gi, g in enumerate(range(1, n)):
        if gap_set is not None and g not in gap_set:
            continue
        diffs = np.abs(energy[g:] - energy[:-g])
        spans = t[g:] - t[:-g]
        ratio = diffs / (weight * spans**eta)
        best = max(best, float(ratio.max()))
        rows.append({"gap": float(spans.max()), "max_energy_change": float(diffs.max()), "max_ratio": float(ratio.max())})
    pick = rows if len(rows) <= 64 else [rows[i] for i in np.unique(np.geomspace(1, len(rows), 32).astype(int) - 1)]
    rep = fit_report(
        "energy-modulus",
        [r["gap"] for r in pick],
        [r["max_energy_change"] for r in pick],
        "gap",
        "max_energy_change",
        extra_rows=[{"max_ratio": r["max_ratio"]} for r in pick],
    )
    rep.metrics = {
        "exponent": eta,
        "C_theta": best,
        "besov_seminorm": besov,
        "theta": theta,
        "conservation_threshold": bool(abs(eta - 1.0) < 1e-12),
    }
    return rep


# ------------------------------------------------------- pressure decomposition


@dataclass
class DecompositionResult:
    residual: float
    lhs_norm: float
    term_norms: dict = field(default_factory=dict)


def _trapezoid(values, times):
    acc = None
    for i in range(len(times) - 1):
        w = 0.5 * (times[i + 1] - times[i])
        piece = (values[i] + values[i + 1]) * w
        acc = piece if acc is None else acc + piece
    return acc


def pressure_decomposition_check(traj, m, s_index, t_index, stride=1, floor=1e-14):
    """Check p_d(t) - p_d(s) = p1 + ... + p5 with trapezoidal time integrals.

    Each term is the zero-mean solution of

      -Delta p1 = div div (R_d(s) - R_d(t))
      -Delta p2 = int div div [(div R_d - grad p_d) (x) u_d + u_d (x) (div R_d - grad p_d)]
      -Delta p3 = -int div div div (u_d (x) u_d (x) u_d)
      -Delta p4 = nu int div div T^a(u_d, u_d)
      -Delta p5 = -nu int div div (-Delta)^a (u_d (x) u_d)

    using the snapshots s, s + stride, ..., t.
    """
    cfg = traj.config
    if t_index < s_index:
        raise ValueError("need s <= t")
    idx = list(range(s_index, t_index + 1, stride))
    if idx[-1] != t_index:
        raise ValueError("stride must divide t - s")
    if t_index > s_index and len(idx) < 2:
        raise ValueError("insufficient intermediate snapshots")
    delta, npts = m.delta, m.quadrature_points_per_axis
    if delta < 2 * cfg.grid.h:
        raise UnderResolvedError(f"delta={delta:.4g} is below 2h")
    times = [traj.times[i] for i in idx]

    def p_delta(u):
        return _mollify_dense(solve_pressure(u, tol=1e-6), delta, npts)

    lhs = p_delta(traj.snapshots[t_index]) - p_delta(traj.snapshots[s_index])
    Rs = reynolds_stress(traj.snapshots[s_index], m)
    Rt = reynolds_stress(traj.snapshots[t_index], m)
    terms = {"p1": pressure_from_stress(Rs - Rt)}
    integrands = {"p2": [], "p3": [], "p4": [], "p5": []}
    for i in idx:
        u = traj.snapshots[i]
        ud = _mollify_dense(u, delta, npts)
        R = reynolds_stress(u, m)
        a = divergence(R) - grad(p_delta(u))
        integrands["p2"].append(pressure_from_stress(outer(a, ud) + outer(ud, a)).coeffs)
        integrands["p3"].append(-q_from_tensor3(outer3(ud, ud, ud)).coeffs)
        if cfg.nu > 0:
            T = commutator_T(ud, ud, cfg.alpha)
            L = frac_laplacian(outer(ud, ud), cfg.alpha)
            integrands["p4"].append(cfg.nu * pressure_from_stress(T).coeffs)
            integrands["p5"].append(-cfg.nu * pressure_from_stress(L).coeffs)
    for name, vals in integrands.items():
        if vals and len(times) > 1:
            terms[name] = lhs.with_coeffs(_trapezoid(vals, times))
    total = None
    for v in terms.values():
        total = v if total is None else total + v
    lhs_norm = c0_norm(lhs)
    resid = c0_norm(lhs - total) if total is not None else lhs_norm
    norms = {k: c0_norm(v) for k, v in terms.items()}
    return DecompositionResult(resid / (lhs_norm + floor), lhs_norm, norms)
