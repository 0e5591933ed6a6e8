"""Sparse trigonometric series ``f(x) = sum_m c_m e^{i k_m . x}``.

Lacunary fields with many octaves have far fewer modes than a dense grid
has coefficients, and their mollifications and products stay exact in
this form.  Grid samples are exact at any resolution: a wavevector k and
its alias k mod n take the same value at the grid points, so folding the
coefficients onto an n^3 array before one inverse FFT loses nothing.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .spectral import AXES, SpectralField, axis_wavenumbers, lacunary_modes, rank_of_ndim

_KEY_BASE = 1 << 20


def _keys(k):
    b = np.int64(_KEY_BASE)
    return ((k[:, 0] + b) * (2 * b) + (k[:, 1] + b)) * (2 * b) + (k[:, 2] + b)


@dataclass(frozen=True, eq=False)
class ModeSeries:
    """Exact trigonometric polynomial with integer wavevectors.

    ``coeffs`` has shape ``(m,) + component_shape``; entries with equal
    wavevectors are summed by :meth:`compress`.
    """

    wavevectors: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.wavevectors, dtype=np.int64).reshape(-1, 3)
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape[0] != k.shape[0]:
            raise ValueError("one coefficient block per wavevector")
        if np.abs(k).max(initial=0) >= _KEY_BASE:
            raise ValueError("wavevector too large for the series key encoding")
        object.__setattr__(self, "wavevectors", k)
        object.__setattr__(self, "coeffs", c)

    @property
    def rank(self):
        return rank_of_ndim(self.coeffs.ndim - 1)

    @property
    def size(self):
        return self.wavevectors.shape[0]

    def norms(self):
        return np.sqrt((self.wavevectors.astype(float) ** 2).sum(axis=1))

    def max_wavenumber(self):
        return float(self.norms().max(initial=0.0))

    def compress(self, tol=0.0):
        """Merge duplicate wavevectors; drop entries with ``|c| <= tol``."""
        keys = _keys(self.wavevectors)
        uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
        c = np.zeros((uniq.size,) + self.coeffs.shape[1:], complex)
        np.add.at(c, inv, self.coeffs)
        k = self.wavevectors[first]
        mag = np.abs(c).reshape(c.shape[0], -1).max(axis=1) if c.ndim > 1 else np.abs(c)
        keep = mag > tol
        return ModeSeries(k[keep], c[keep])

    def scale(self, symbol):
        """Multiply each mode by ``symbol`` (array of length m)."""
        s = np.asarray(symbol).reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        return ModeSeries(self.wavevectors, self.coeffs * s)

    def __add__(self, other):
        return ModeSeries(
            np.concatenate([self.wavevectors, other.wavevectors]),
            np.concatenate([self.coeffs, other.coeffs]),
        ).compress()

    def __sub__(self, other):
        return self + other.scale(-np.ones(other.size))

    def grad(self):
        """Gradient; the new derivative index is last."""
        ik = 1j * self.wavevectors.astype(float)
        c = self.coeffs[..., None] * ik.reshape((self.size,) + (1,) * (self.coeffs.ndim - 1) + (3,))
        return ModeSeries(self.wavevectors, c)

    def outer(self, other):
        """Pointwise tensor product, exact (all pair sums kept)."""
        k = (self.wavevectors[:, None, :] + other.wavevectors[None, :, :]).reshape(-1, 3)
        a = self.coeffs.reshape(self.size, 1, -1, 1)
        b = other.coeffs.reshape(1, other.size, 1, -1)
        c = (a * b).reshape((k.shape[0],) + self.coeffs.shape[1:] + other.coeffs.shape[1:])
        return ModeSeries(k, c).compress()

    def sample(self, grid):
        """Exact real samples on ``grid`` (aliasing fold plus one inverse FFT)."""
        n = grid.n
        idx = np.mod(self.wavevectors, n)
        flat = (idx[:, 0] * n + idx[:, 1]) * n + idx[:, 2]
        comps = self.coeffs.reshape(self.size, -1)
        out = np.zeros((comps.shape[1], n**3), complex)
        for j in range(comps.shape[1]):
            out[j] = np.bincount(flat, weights=comps[:, j].real, minlength=n**3) + 1j * np.bincount(
                flat, weights=comps[:, j].imag, minlength=n**3
            )
        out = out.reshape(self.coeffs.shape[1:] + (n, n, n))
        return sfft.ifftn(out, axes=AXES, norm="forward").real

    def evaluate(self, points, chunk=4096):
        """Direct evaluation at arbitrary points ``(P, 3)``."""
        points = np.atleast_2d(points)
        comps = self.coeffs.reshape(self.size, -1)
        out = np.zeros((points.shape[0], comps.shape[1]))
        kf = self.wavevectors.astype(float)
        for s in range(0, points.shape[0], chunk):
            ph = np.exp(1j * points[s : s + chunk] @ kf.T)
            out[s : s + chunk] = (ph @ comps).real
        return out.reshape((points.shape[0],) + self.coeffs.shape[1:])

    def to_field(self, grid):
        """Dense coefficients; every wavevector must lie strictly inside Nyquist."""
        if self.size and np.abs(self.wavevectors).max() >= grid.n // 2:
            raise ValueError(f"series has modes beyond the Nyquist band of n={grid.n}")
        n = grid.n
        c = np.zeros((n, n, n) + self.coeffs.shape[1:], complex)
        idx = np.mod(self.wavevectors, n)
        np.add.at(c, (idx[:, 0], idx[:, 1], idx[:, 2]), self.coeffs)
        c = np.moveaxis(c, (0, 1, 2), (-3, -2, -1))
        return SpectralField(grid, self.rank, np.ascontiguousarray(c))


def lacunary_series(spec, rank="scalar"):
    """Lacunary field as a conjugate-closed mode series."""
    ks, amps, phases, dirs = lacunary_modes(spec, rank)
    half = 0.5 * amps * np.exp(1j * phases)
    if rank == "vector":
        c = half[:, None] * dirs
    else:
        c = half
    k = np.concatenate([ks, -ks])
    return ModeSeries(k, np.concatenate([c, np.conj(c)])).compress()


def dense_to_series(f, tol=0.0):
    """Nonzero coefficients of a dense field as a series."""
    n = f.grid.n
    kk = axis_wavenumbers(n).astype(np.int64)
    mag = np.abs(f.coeffs).reshape((-1, n, n, n)).max(axis=0)
    sel = np.nonzero(mag > tol)
    k = np.stack([kk[sel[0]], kk[sel[1]], kk[sel[2]]], axis=1)
    c = np.moveaxis(f.coeffs[(...,) + sel], -1, 0)
    return ModeSeries(k, c)

