"""Pressure solvers, the real-space potential oracle and the divergence-free extension.

Sign conventions: ``solve_pressure`` returns the zero-mean p with
-Delta p = div div (u (x) u), so p_hat = -k_i k_j (u u)_hat_ij / |k|^2;
``solve_q`` returns q with -Delta q = div div div (v (x) w (x) z).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .norms import dyadic_ladder, holder_exponent_estimate
from .operators import curl, divergence, grad, outer, triple_divergence
from .report import ScalingReport
from .spectral import (
    GridSpec,
    RandomFieldSpec,
    derivative_symbols,
    inverse_k_squared,
    make_rough_field,
    to_samples,
)


class NotSolenoidalError(ValueError):
    """Input velocity has a divergence above tolerance."""


def divergence_defect(u):
    """max |div u| relative to max |u| (spectral derivative)."""
    d = np.max(np.abs(to_samples(divergence(u))))
    scale = np.max(np.abs(to_samples(u)))
    return float(d / scale) if scale > 0 else float(d)


def pressure_from_stress(T):
    """Zero-mean p with -Delta p = div div T for a 2-tensor T."""
    d = derivative_symbols(T.grid)
    rhs = sum(d[i] * d[j] * T.coeffs[i, j] for i in range(3) for j in range(3))
    return T.with_coeffs(rhs * inverse_k_squared(T.grid), rank="scalar")


def q_from_tensor3(T):
    """Zero-mean q with -Delta q = div div div T for a 3-tensor T."""
    d = derivative_symbols(T.grid)
    rhs = sum(d[i] * d[j] * d[k] * T.coeffs[i, j, k] for i in range(3) for j in range(3) for k in range(3))
    return T.with_coeffs(rhs * inverse_k_squared(T.grid), rank="scalar")


def solve_pressure(u, tol=1e-8):
    """Zero-mean pressure of a divergence-free velocity (dealiased product)."""
    if u.rank != "vector":
        raise ValueError("solve_pressure needs a vector field")
    if np.any(u.coeffs) and divergence_defect(u) > tol:
        raise NotSolenoidalError(f"div u exceeds {tol:g} relative to max |u|")
    return pressure_from_stress(outer(u, u))


def solve_q(v, w, z):
    """Zero-mean q with -Delta q = div div div (v (x) w (x) z)."""
    if not (v.grid == w.grid == z.grid):
        raise ValueError("solve_q arguments must share a grid")
    rhs = triple_divergence(v, w, z)
    return rhs.with_coeffs(rhs.coeffs * inverse_k_squared(v.grid))


# ---------------------------------------------------------------- potential oracle


@dataclass(frozen=True)
class PotentialOracleConfig:
    """Ball B_{R0}(x0) containing supp R and the quadrature resolution.

    ``radial_nodes`` Gauss-Legendre nodes per ray and a product angular rule
    of ``polar_nodes`` Gauss-Legendre nodes in cos(polar angle) times
    ``2 * polar_nodes`` azimuthal trapezoid nodes, centred at each
    evaluation point.
    """

    support_radius: float
    center: tuple = (0.0, 0.0, 0.0)
    radial_nodes: int = 96
    polar_nodes: int = 48
    boundary_margin: float = 0.5

    def __post_init__(self):
        if self.support_radius <= 0:
            raise ValueError("support_radius must be positive")


class BoundaryLayerWarning(UserWarning):
    pass


def _sphere_rule(nmu):
    mu, wmu = np.polynomial.legendre.leggauss(nmu)
    nphi = 2 * nmu
    phi = 2.0 * math.pi * (np.arange(nphi) + 0.5) / nphi
    st = np.sqrt(1.0 - mu**2)
    om = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)), np.outer(mu, np.ones(nphi))], -1)
    w = np.outer(wmu, np.full(nphi, 2.0 * math.pi / nphi))
    return om.reshape(-1, 3), w.ravel()


def potential_oracle_p(R, points, cfg):
    """Potential-theoretic p of -Delta p = div div R at ``points`` (M, 3).

    ``R`` is a callable mapping points (P, 3) to symmetric tensors (P, 3, 3),
    supported in the ball of ``cfg``.  Each point x uses spherical
    coordinates centred at x: the volume term
    int d_ij Phi(x - y) (R_ij(y) - R_ij(x)) dy becomes
    int dOmega int_0^rho(omega) (3 w_i w_j - delta_ij) (R_ij(x + r w) - R_ij(x)) / (4 pi r) dr
    with rho the distance to the sphere along omega, and the boundary term
    -R_ij(x) int_{dB} d_i Phi(x - y) nu_j dS(y) is integrated on the sphere.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x0 = np.asarray(cfg.center, dtype=float)
    R0 = cfg.support_radius
    om, wom = _sphere_rule(cfg.polar_nodes)
    tr, tw = np.polynomial.legendre.leggauss(cfg.radial_nodes)
    tr, tw = (tr + 1.0) / 2.0, tw / 2.0
    kern = (3.0 * om[:, :, None] * om[:, None, :] - np.eye(3)) / (4.0 * math.pi)
    out = np.empty(points.shape[0])
    for m, x in enumerate(points):
        off = x - x0
        if np.linalg.norm(off) > R0 - cfg.boundary_margin:
            warnings.warn("evaluation point close to the ball boundary", BoundaryLayerWarning, stacklevel=2)
        # distance to the sphere along each direction
        b = om @ off
        rho = -b + np.sqrt(b**2 - (off @ off - R0**2))
        Rx = R(x[None, :])[0]
        r = rho[:, None] * tr[None, :]
        ys = x[None, None, :] + r[..., None] * om[:, None, :]
        Ry = R(ys.reshape(-1, 3)).reshape(om.shape[0], tr.size, 3, 3)
        diff = Ry - Rx
        contracted = np.einsum("dij,drij->dr", kern, diff)
        ray = (contracted / r * tw[None, :]).sum(axis=1) * rho
        volume = float(ray @ wom)
        # boundary: y = x0 + R0 nu, d_i Phi(x - y) = -(x - y)_i / (4 pi |x - y|^3)
        ysurf = x0 + R0 * om
        z = x - ysurf
        dist = np.linalg.norm(z, axis=1)
        dphi = -z / (4.0 * math.pi * dist[:, None] ** 3)
        surf = np.einsum("di,dj,d->ij", dphi, om, wom) * R0**2
        out[m] = volume - float(np.einsum("ij,ij->", Rx, surf))
    return out


def discrete_laplacian(func, points, step):
    """7-point Laplacian of a point function at ``points``."""
    points = np.atleast_2d(points)
    centre = func(points)
    acc = -6.0 * centre
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = step
        acc = acc + func(points + e) + func(points - e)
    return acc / step**2


# ------------------------------------------------------------------- extension


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def smooth_step_derivative(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    ts = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / ts)
    b = np.exp(-1.0 / (1.0 - ts))
    da = a / ts**2
    db = -b / (1.0 - ts) ** 2
    d = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return np.where(inside, d, 0.0)


def cutoff(points, inner=6.0, outer_radius=12.0):
    """phi = 1 on B_inner, 0 outside B_outer, and its gradient."""
    points = np.asarray(points, dtype=float)
    r = np.sqrt((points**2).sum(axis=-1))
    t = (outer_radius - r) / (outer_radius - inner)
    phi = smooth_step(t)
    dphi_dr = -smooth_step_derivative(t) / (outer_radius - inner)
    safe = np.where(r > 0, r, 1.0)
    gphi = (dphi_dr / safe)[..., None] * points
    return phi, gphi


@dataclass(frozen=True)
class ExtensionResult:
    """Extended field on the lattice h * j, |j_i| <= J, covering [-12, 12]^3.

    ``extended_field`` has shape (3, m, m, m); ``divergence`` is the
    product-rule divergence using spectral derivatives of the periodic
    factors and the exact gradient of the cutoff.
    """

    axis: np.ndarray
    extended_field: np.ndarray
    cutoff: np.ndarray
    divergence: np.ndarray
    spacing: float


def vector_potential(u):
    """A with -Delta A = curl u, so curl A = u for zero-mean solenoidal u."""
    w = curl(u)
    return w.with_coeffs(w.coeffs * inverse_k_squared(u.grid))


def extend_divfree(u, inner=6.0, outer_radius=12.0, tol=1e-8):
    """Compactly supported solenoidal extension u_tilde = curl(phi A)."""
    if u.rank != "vector":
        raise ValueError("extend_divfree needs a vector field")
    mean = np.abs(u.coeffs[:, 0, 0, 0]).max()
    scale = max(np.abs(u.coeffs).max(), 1e-300)
    if mean > 1e-12 * scale:
        raise ValueError("extension needs a zero-mean field")
    n, h = u.grid.n, u.grid.h
    J = int(math.ceil(outer_radius / h))
    idx = np.arange(-J, J + 1)
    axis = h * idx
    A = vector_potential(u)
    ug, Ag = to_samples(u), to_samples(A)
    divu = to_samples(divergence(u))
    curlA = to_samples(curl(A))
    wrap = np.mod(idx, n)
    sub = np.ix_(wrap, wrap, wrap)
    ue = np.stack([c[sub] for c in ug])
    Ae = np.stack([c[sub] for c in Ag])
    ce = np.stack([c[sub] for c in curlA])
    de = divu[sub]
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    phi, gphi = cutoff(np.stack([X, Y, Z], axis=-1), inner, outer_radius)
    gphi = np.moveaxis(gphi, -1, 0)
    ext = phi * ue + np.cross(gphi, Ae, axis=0)
    # div(phi u + grad phi x A) = grad phi . (u - curl A) + phi div u
    div = (gphi * (ue - ce)).sum(axis=0) + phi * de
    return ExtensionResult(axis, ext, phi, div, h)


# ------------------------------------------------------------ gain experiment


def schauder_gain_experiment(theta, seeds, n=128, octaves=5, modes_per_octave=8, pairs=4096, include_q=False):
    """Measure the exponents of u, p (and grad p when theta > 1/2) per seed.

    One rung per seed.  The regression is theta_p against theta_u across
    seeds; medians go into ``metrics``.  With ``include_q`` the exponent of
    q = solve_q(u, u, u) is measured as well.
    """
    if abs(theta - 0.5) < 1e-12:
        raise ValueError(
            "theta = 1/2 is the borderline case: the C^{2 theta} pressure bound is not "
            "expected there (Schauder estimates lose an epsilon in C^1)"
        )
    grid = GridSpec(n)
    rows = []
    for seed in seeds:
        u = make_rough_field(RandomFieldSpec(theta, octaves, modes_per_octave, seed), grid, "vector")
        p = solve_pressure(u)
        ladder = dyadic_ladder(grid, pairs, seed)
        row = {
            "seed": int(seed),
            "theta_u": holder_exponent_estimate(u, ladder).slope,
            "theta_p": holder_exponent_estimate(p, ladder).slope,
        }
        if theta > 0.5:
            row["theta_grad_p"] = holder_exponent_estimate(grad(p), ladder).slope
        if include_q:
            row["theta_q"] = holder_exponent_estimate(solve_q(u, u, u), ladder).slope
        rows.append(row)
    tu = np.array([r["theta_u"] for r in rows])
    tp = np.array([r["theta_p"] for r in rows])
    slope = intercept = r2 = float("nan")
    if len(rows) > 1 and np.ptp(tu) > 0:
        slope, intercept = np.polyfit(tu, tp, 1)
        ss = float(np.sum((tp - tp.mean()) ** 2))
        r2 = 1.0 - float(np.sum((tp - slope * tu - intercept) ** 2)) / ss if ss > 0 else 1.0
    metrics = {
        "theta_target": theta,
        "n_seeds": len(rows),
        "median_theta_u": float(np.median(tu)),
        "median_theta_p": float(np.median(tp)),
        "min_gain": float(np.min(tp - tu)),
    }
    if theta > 0.5:
        metrics["median_theta_grad_p"] = float(np.median([r["theta_grad_p"] for r in rows]))
    if include_q:
        metrics["median_theta_q"] = float(np.median([r["theta_q"] for r in rows]))
    config = {"theta": theta, "n": n, "octaves": octaves, "modes_per_octave": modes_per_octave, "pairs": pairs}
    return ScalingReport(
        "pressure-scan", float(slope), float(intercept), float(r2), rows, metrics, config,
        seed=int(seeds[0]) if len(seeds) else 0, x_key="theta_u", y_key="theta_p",
    )
