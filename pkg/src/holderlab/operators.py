"""Mollification, fractional Laplacian, differential operators and commutators.

All operators act on :class:`~holderlab.spectral.SpectralField` values;
mollification and products also accept :class:`~holderlab.series.ModeSeries`
so that rough fields with frequencies beyond the grid stay exact.
"""

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.integrate import quad
from scipy.special import erfc, gamma, roots_jacobi, roots_legendre

from .series import ModeSeries
from .spectral import (
    AXES,
    GridSpec,
    SpectralField,
    axis_wavenumbers,
    derivative_symbols,
    inverse_k_squared,
    k_squared,
    nyquist_mask,
    pad_coeffs,
    rank_of_ndim,
    truncate_coeffs,
    wavevector,
)


class UnderResolvedError(ValueError):
    """Mollification scale below the grid resolution floor."""


# ------------------------------------------------------------------ mollifier

KERNELS = ("smooth_bump",)
SYMBOL_CUTOFF = 2000.0


@dataclass(frozen=True)
class MollifierSpec:
    """Kernel rho_delta(x) = delta^-3 rho(x/delta) with rho the unit-mass bump.

    ``quadrature_points_per_axis`` is the number of radial Gauss-Legendre
    nodes on [0, 1]; the kernel is radial so one axis suffices.
    """

    delta: float
    kernel: str = "smooth_bump"
    quadrature_points_per_axis: int = 64

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.delta >= math.pi:
            raise ValueError("delta must be below pi")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.quadrature_points_per_axis < 8:
            raise ValueError("need at least 8 quadrature points")

    @property
    def support_radius(self):
        return self.delta


def bump(r):
    """Unnormalized profile exp(-1/(1-r^2)) on r < 1, zero outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@functools.lru_cache(maxsize=64)
def radial_rule(npts):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = roots_legendre(npts)
    return (x + 1.0) / 2.0, w / 2.0


@functools.lru_cache(maxsize=64)
def kernel_mass(npts=256):
    """Integral of the unnormalized bump over the unit ball."""
    r, w = radial_rule(npts)
    return float(np.sum(w * 4.0 * math.pi * r**2 * bump(r)))


def kernel(x, m=None):
    """Normalized kernel rho (or rho_delta when ``m`` is given) at points ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    d = 1.0 if m is None else m.delta
    r = np.sqrt((x**2).sum(axis=-1)) / d
    return bump(r) / (kernel_mass() * d**3)


def kernel_symbol(s, npts=64):
    """Fourier transform of the unit-mass bump at radial frequencies ``s``.

    rho_hat(s) = 4 pi int_0^1 rho(r) r^2 sinc(s r) dr, evaluated with a
    Gauss-Legendre rule whose size grows with s so the oscillation is
    resolved.  Beyond s = 2000 the transform is below 1e-17 and is set to 0.
    """
    s = np.asarray(s, dtype=float)
    flat = np.abs(s).ravel()
    out = np.zeros_like(flat)
    mass = kernel_mass()
    need = np.maximum(npts, 64 * np.ceil((flat / 2.0 + 64.0) / 64.0)).astype(int)
    need[flat > SYMBOL_CUTOFF] = 0
    for nodes in np.unique(need[need > 0]):
        sel = need == nodes
        r, w = radial_rule(int(nodes))
        weights = w * 4.0 * math.pi * r**2 * bump(r) / mass
        arg = np.outer(flat[sel], r)
        out[sel] = np.sinc(arg / math.pi) @ weights
    out[flat == 0] = 1.0
    return out.reshape(s.shape)


@functools.lru_cache(maxsize=8)
def _unique_k(n):
    k2 = k_squared(GridSpec(n))
    uniq, inv = np.unique(k2, return_inverse=True)
    return np.sqrt(uniq), inv.reshape(k2.shape)


def mollifier_multiplier(grid, delta, npts=64):
    """rho_hat(|k| delta) on the full wavenumber lattice."""
    kmag, inv = _unique_k(grid.n)
    return kernel_symbol(kmag * delta, npts)[inv]


def mollify(f, m):
    """Convolution with rho_delta, applied mode by mode.

    Each Fourier mode is an eigenfunction of the convolution, with
    eigenvalue given by the radial quadrature of :func:`kernel_symbol`, so
    the result equals the real-space convolution with periodic wrap.
    Dense fields refuse delta < 2h.
    """
    if isinstance(f, ModeSeries):
        return f.scale(kernel_symbol(f.norms() * m.delta, m.quadrature_points_per_axis))
    if m.delta < 2.0 * f.grid.h:
        raise UnderResolvedError(f"delta={m.delta:.4g} is below 2h={2 * f.grid.h:.4g}")
    return _mollify_dense(f, m.delta, m.quadrature_points_per_axis)


def _mollify_dense(f, delta, npts=64):
    return f.with_coeffs(f.coeffs * mollifier_multiplier(f.grid, delta, npts))


# --------------------------------------------------------------- products


def _physical(c, real):
    z = sfft.ifftn(c, axes=AXES, norm="forward")
    return z.real if real else z


def outer(f, g, pad=1.5):
    """Dealiased pointwise tensor product ``f (x) g``.

    Both factors are zero-padded to ``pad * n`` points per axis, multiplied
    in sample space and truncated back; Nyquist planes of the result are
    zeroed.  With ``pad=1.5`` every product mode inside the band is exact.
    """
    if isinstance(f, ModeSeries):
        return f.outer(g)
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    n = f.grid.n
    m = _padded_size(n, pad)
    real = f.hermitian and g.hermitian
    a = _physical(pad_coeffs(f.coeffs, n, m), real)
    b = _physical(pad_coeffs(g.coeffs, n, m), real)
    na, nb = a.ndim - 3, b.ndim - 3
    prod = a.reshape(a.shape[:na] + (1,) * nb + a.shape[-3:]) * b.reshape((1,) * na + b.shape)
    c = sfft.fftn(prod, axes=AXES, norm="forward")
    return SpectralField(f.grid, rank_of_ndim(na + nb), truncate_coeffs(c, m, n), real)


def outer3(u, v, w):
    """Dealiased triple product ``u (x) v (x) w`` (padding 2n, exact for cubics)."""
    n = u.grid.n
    m = 2 * n
    real = u.hermitian and v.hermitian and w.hermitian
    a, b, c = (_physical(pad_coeffs(x.coeffs, n, m), real) for x in (u, v, w))
    prod = a[:, None, None] * b[None, :, None] * c[None, None, :]
    out = sfft.fftn(prod, axes=AXES, norm="forward")
    return SpectralField(u.grid, "tensor3", truncate_coeffs(out, m, n), real)


def triple_divergence(v, w, z):
    """div div div (v (x) w (x) z) as a scalar field, one product at a time.

    Equivalent to contracting :func:`outer3` with three derivative symbols
    but holds only one padded product in memory.  Real inputs use real
    FFTs, and when all three factors are the same object only the ten
    symmetric index triples are formed.
    """
    n = v.grid.n
    m = 2 * n
    real = v.hermitian and w.hermitian and z.hermitian
    cache = {}

    def comp(f, i):
        key = (id(f), i)
        if key not in cache:
            cache[key] = _physical(pad_coeffs(f.coeffs[i], n, m), real)
        return cache[key]

    if v is w is z:
        triples = [(t, len(set(itertools.permutations(t)))) for t in itertools.combinations_with_replacement(range(3), 3)]
    else:
        triples = [(t, 1) for t in itertools.product(range(3), repeat=3)]
    if not real:
        d = derivative_symbols(v.grid)
        acc = np.zeros((n, n, n), complex)
        for (i, j, k), mult in triples:
            t = truncate_coeffs(sfft.fftn(comp(v, i) * comp(w, j) * comp(z, k), norm="forward"), m, n)
            acc += mult * d[i] * d[j] * d[k] * t
        return SpectralField(v.grid, "scalar", acc, False)
    h = n // 2
    idx = np.r_[0:h, m - h : m]
    kk = axis_wavenumbers(n)
    dk = (1j * kk[:, None, None], 1j * kk[None, :, None], 1j * np.arange(h + 1.0)[None, None, :])
    acc = np.zeros((n, n, h + 1), complex)
    for (i, j, k), mult in triples:
        t = sfft.rfftn(comp(v, i) * comp(w, j) * comp(z, k), norm="forward")
        t = t[idx[:, None, None], idx[None, :, None], np.arange(h + 1)[None, None, :]]
        acc += mult * dk[i] * dk[j] * dk[k] * t
    acc[h, :, :] = 0.0
    acc[:, h, :] = 0.0
    acc[:, :, h] = 0.0
    full = sfft.fftn(sfft.irfftn(acc, s=(n, n, n), norm="forward"), norm="forward")
    return SpectralField(v.grid, "scalar", full, True)


def _padded_size(n, pad):
    m = int(math.ceil(pad * n))
    return m + (m % 2)


def reynolds_stress(u, m):
    """R_delta = u_delta (x) u_delta - (u (x) u)_delta."""
    if not isinstance(u, ModeSeries):
        if u.rank != "vector":
            raise ValueError("reynolds_stress needs a vector field")
        if m.delta < 2.0 * u.grid.h:
            raise UnderResolvedError(f"delta={m.delta:.4g} is below 2h={2 * u.grid.h:.4g}")
    ud = mollify(u, m)
    return outer(ud, ud) - mollify(outer(u, u), m)


def _reynolds_unchecked(u, delta, npts=64):
    ud = _mollify_dense(u, delta, npts)
    return outer(ud, ud) - _mollify_dense(outer(u, u), delta, npts)


# ------------------------------------------------------- differential operators


def _require(f, *ranks):
    if f.rank not in ranks:
        raise ValueError(f"rank {f.rank!r} not accepted here (expected {ranks})")


def grad(f):
    """Gradient; the derivative index is appended last."""
    _require(f, "scalar", "vector", "tensor2")
    d = derivative_symbols(f.grid)
    c = np.stack([f.coeffs * dj for dj in d], axis=f.coeffs.ndim - 3)
    return f.with_coeffs(c, rank=rank_of_ndim(f.coeffs.ndim - 2))


def divergence(f):
    """Contraction of the derivative with the last component index."""
    _require(f, "vector", "tensor2", "tensor3")
    d = derivative_symbols(f.grid)
    c = sum(f.coeffs[..., j, :, :, :] * d[j] for j in range(3))
    return f.with_coeffs(c, rank=rank_of_ndim(f.coeffs.ndim - 4))


def div_div(f):
    """d_i d_j f_ij for a 2-tensor."""
    _require(f, "tensor2")
    return divergence(divergence(f))


def div_div_div(f):
    """d_i d_j d_k f_ijk for a 3-tensor."""
    _require(f, "tensor3")
    return divergence(divergence(divergence(f)))


def curl(u):
    _require(u, "vector")
    d = derivative_symbols(u.grid)
    c = u.coeffs
    out = np.stack([d[1] * c[2] - d[2] * c[1], d[2] * c[0] - d[0] * c[2], d[0] * c[1] - d[1] * c[0]])
    return u.with_coeffs(out)


def laplacian(f):
    keep = ~nyquist_mask(f.grid)
    return f.with_coeffs(-f.coeffs * k_squared(f.grid) * keep)


def inverse_laplacian(f):
    """Zero-mean solution of Delta g = f."""
    return f.with_coeffs(-f.coeffs * inverse_k_squared(f.grid))


# ---------------------------------------------------- fractional Laplacian

REALIZATIONS = ("fourier_multiplier", "singular_integral")


@dataclass(frozen=True)
class FracLaplacianSpec:
    alpha: float
    realization: str = "fourier_multiplier"
    image_shells: int = 3

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie strictly inside (0, 1/2)")
        if self.realization not in REALIZATIONS:
            raise ValueError(f"unknown realization {self.realization!r}")
        if self.realization == "singular_integral" and self.image_shells < 1:
            raise ValueError("singular_integral needs image_shells >= 1")


def fractional_symbol(grid, alpha):
    """|k|^(2 alpha) with k = 0 and Nyquist modes sent to 0."""
    k2 = k_squared(grid)
    return np.where(nyquist_mask(grid), 0.0, k2**alpha)


def fractional_constant(alpha, dim=3):
    """C_alpha = 4^a Gamma(d/2 + a) / (pi^(d/2) |Gamma(-a)|)."""
    return 4.0**alpha * gamma(dim / 2 + alpha) / (math.pi ** (dim / 2) * abs(gamma(-alpha)))


def frac_laplacian(f, spec):
    """(-Delta)^alpha f by the Fourier multiplier or the singular integral."""
    if not isinstance(spec, FracLaplacianSpec):
        spec = FracLaplacianSpec(float(spec))
    if spec.realization == "fourier_multiplier":
        return f.with_coeffs(f.coeffs * fractional_symbol(f.grid, spec.alpha))
    return SingularIntegral(spec.alpha, spec.image_shells).apply(f)


class SingularIntegral:
    """Real-space quadrature of C_a int (f(x) - f(x+z)) |z|^(-3-2a) dz.

    A smooth radial partition chi splits the kernel.  The near part
    (chi = 1 around the origin) is integrated in spherical coordinates with
    Gauss-Jacobi radial nodes absorbing r^(1-2a) and a Gauss-Legendre x
    trapezoid angular rule; translations are exact phase shifts.  The far
    part is a lattice sum over the central cell and ``image_shells`` layers
    of periodic images, folded into one periodic weight array and applied
    as a circular convolution.  The f(x) term of the far part is integrated
    over all of R^3 in closed radial form.
    """

    def __init__(self, alpha, image_shells=3, width=0.31):
        if not 0.0 < alpha < 0.5:
            raise ValueError("alpha must lie strictly inside (0, 1/2)")
        if image_shells < 1:
            raise ValueError("image_shells must be >= 1")
        self.alpha = alpha
        self.shells = int(image_shells)
        self.width = width
        self.r_mid = 6.0 * width
        self.r_lo = self.r_mid - 6.0 * width
        self.r_hi = self.r_mid + 6.0 * width
        self.constant = fractional_constant(alpha)

    def chi(self, r):
        r = np.asarray(r, dtype=float)
        out = 0.5 * erfc((r - self.r_mid) / self.width)
        out = np.where(r <= self.r_lo, 1.0, out)
        return np.where(r >= self.r_hi, 0.0, out)

    def far_tail(self):
        """4 pi int_0^inf (1 - chi(r)) r^(-1-2a) dr."""
        a = self.alpha
        body = quad(lambda r: (1.0 - self.chi(r)) * r ** (-1 - 2 * a), max(self.r_lo, 1e-12), self.r_hi, limit=200)[0]
        return 4.0 * math.pi * (body + self.r_hi ** (-2 * a) / (2 * a))

    def far_weights(self, n):
        """Periodic weight array W(j) = sum over images of h^3 (1 - chi) |z|^(-3-2a)."""
        h = 2.0 * math.pi / n
        base = -math.pi + h * np.arange(n)
        W = np.zeros((n, n, n))
        s = self.shells
        for a in range(-s, s + 1):
            zx = (base + 2 * math.pi * a)[:, None, None]
            for b in range(-s, s + 1):
                zy = (base + 2 * math.pi * b)[None, :, None]
                for c in range(-s, s + 1):
                    zz = (base + 2 * math.pi * c)[None, None, :]
                    r = np.sqrt(zx**2 + zy**2 + zz**2)
                    g = np.zeros_like(r)
                    keep = r > self.r_lo
                    g[keep] = (1.0 - self.chi(r[keep])) * r[keep] ** (-3 - 2 * self.alpha)
                    W += g
        W *= h**3
        return np.roll(W, (n // 2,) * 3, axis=(0, 1, 2))

    def near_symbol(self, kvecs, kmax):
        """sum_q w_q (1 - cos(k . z_q)) for the near-field nodes, per wavevector."""
        a = self.alpha
        reach = kmax * self.r_hi
        nr = int(math.ceil(reach / 3.0)) + 30
        nmu = int(math.ceil(reach / 2.0)) + 32
        nphi = 2 * nmu + (-2 * nmu) % 4
        x, wj = roots_jacobi(nr, 0.0, 1.0 - 2.0 * a)
        r = self.r_hi * (x + 1.0) / 2.0
        wr = wj * (self.r_hi / 2.0) ** (2.0 - 2.0 * a)
        mu, wmu = roots_legendre(nmu)
        phi = 2.0 * math.pi * np.arange(nphi) / nphi
        st = np.sqrt(1.0 - mu**2)
        om = np.stack(
            [np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)), np.outer(mu, np.ones(nphi))], axis=-1
        ).reshape(-1, 3)
        wom = np.outer(wmu, np.full(nphi, 2.0 * math.pi / nphi)).ravel()
        kom = kvecs @ om.T
        out = np.zeros(kvecs.shape[0])
        rad = wr * self.chi(r) / r**2
        for ri, wi in zip(r, rad):
            out += wi * ((1.0 - np.cos(ri * kom)) @ wom)
        return out

    def symbol(self, grid, support):
        """Operator eigenvalue on the wavevectors flagged in ``support``."""
        n = grid.n
        kk = axis_wavenumbers(n)
        idx = np.nonzero(support)
        kv = np.stack([kk[idx[0]], kk[idx[1]], kk[idx[2]]], axis=1)
        # The angular rule is invariant under sign flips and the x<->y swap,
        # so wavevectors are reduced to a canonical representative first.
        canon = np.abs(kv)
        canon[:, :2] = np.sort(canon[:, :2], axis=1)
        uniq, inv = np.unique(canon, axis=0, return_inverse=True)
        kmax = float(np.sqrt((uniq**2).sum(axis=1)).max(initial=1.0))
        near = self.near_symbol(uniq, kmax)[inv.ravel()]
        W_hat = sfft.fftn(self.far_weights(n)).real
        out = np.zeros((n, n, n))
        out[idx] = self.constant * (self.far_tail() - W_hat[idx] + near)
        return out

    def apply(self, f):
        n = f.grid.n
        mag = np.abs(f.coeffs).reshape((-1, n, n, n)).max(axis=0)
        kk = np.abs(axis_wavenumbers(n))
        band = np.maximum(np.maximum(kk[:, None, None], kk[None, :, None]), kk[None, None, :])
        if np.any(mag[band > n / 3] > 1e-12 * mag.max(initial=0.0)):
            raise ValueError("singular_integral needs a field band-limited to |k_i| <= n/3")
        support = (mag > 0) & (k_squared(f.grid) > 0)
        return f.with_coeffs(f.coeffs * self.symbol(f.grid, support))


def calibrate_singular_constant(alpha, n=16, image_shells=3):
    """C_alpha fixed by matching |k|^(2 alpha) on the single mode k = (1, 0, 0)."""
    op = SingularIntegral(alpha, image_shells)
    grid = GridSpec(n)
    support = np.zeros((n, n, n), bool)
    support[1, 0, 0] = True
    raw = op.symbol(grid, support)[1, 0, 0] / op.constant
    return 1.0 / raw


# --------------------------------------------------------------- commutator


@dataclass(frozen=True)
class CommutatorRequest:
    f: SpectralField
    g: SpectralField
    alpha: float

    def __post_init__(self):
        if self.f.grid != self.g.grid:
            raise ValueError("commutator fields must share a grid")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie strictly inside (0, 1/2)")


def commutator_T(req, g=None, alpha=None):
    """T^a(f, g) = L(f (x) g) - L f (x) g - f (x) L g with L = (-Delta)^a.

    Products and the multiplier are evaluated on the 3/2-padded grid, so
    every output mode inside the band is exact.
    """
    if not isinstance(req, CommutatorRequest):
        req = CommutatorRequest(req, g, alpha)
    f, g, a = req.f, req.g, req.alpha
    n = f.grid.n
    m = _padded_size(n, 1.5)
    big = GridSpec(m)
    lap_big = fractional_symbol(big, a)
    real = f.hermitian and g.hermitian
    fc, gc = pad_coeffs(f.coeffs, n, m), pad_coeffs(g.coeffs, n, m)
    fp, gp = _physical(fc, real), _physical(gc, real)
    lfp, lgp = _physical(fc * lap_big, real), _physical(gc * lap_big, real)
    nf, ng = fp.ndim - 3, gp.ndim - 3

    def prod(a_, b_):
        return a_.reshape(a_.shape[:nf] + (1,) * ng + a_.shape[-3:]) * b_.reshape((1,) * nf + b_.shape)

    fg = sfft.fftn(prod(fp, gp), axes=AXES, norm="forward")
    rest = sfft.fftn(prod(lfp, gp) + prod(fp, lgp), axes=AXES, norm="forward")
    out = truncate_coeffs(fg * lap_big - rest, m, n)
    return SpectralField(f.grid, rank_of_ndim(nf + ng), out, real)


def commutator_symbol(k, l, alpha):
    """|k+l|^(2a) - |k|^(2a) - |l|^(2a)."""
    k, l = np.asarray(k, float), np.asarray(l, float)
    return (
        np.linalg.norm(k + l, axis=-1) ** (2 * alpha)
        - np.linalg.norm(k, axis=-1) ** (2 * alpha)
        - np.linalg.norm(l, axis=-1) ** (2 * alpha)
    )

