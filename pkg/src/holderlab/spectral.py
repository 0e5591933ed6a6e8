"""Periodic fields on the torus [0, 2pi)^3 and their Fourier coefficients.

Coefficients use the forward-normalized DFT, ``c(k) = mean_x f(x) e^{-ik.x}``,
so ``cos(x1)`` has ``c(+-1, 0, 0) = 1/2`` and the k = 0 entry is the mean.
Arrays are stored in numpy FFT order with the component axes first,
``coeffs.shape == component_shape + (n, n, n)``.
"""

import functools
import math
import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .rng import SplitMix64, integer_block

AXES = (-3, -2, -1)
RANKS = ("scalar", "vector", "tensor2", "tensor3")
TWO_PI = 2.0 * math.pi


def rank_of_ndim(ndim):
    return RANKS[ndim]


def component_shape(rank):
    return (3,) * RANKS.index(rank)


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with ``n_per_axis`` points on each side of [0, 2pi)^3."""

    n_per_axis: int

    def __post_init__(self):
        n = self.n_per_axis
        if int(n) != n or n < 8 or n % 2:
            raise ValueError(f"n_per_axis must be an even integer >= 8, got {n}")

    @property
    def n(self):
        return self.n_per_axis

    @property
    def domain_length(self):
        return TWO_PI

    @property
    def h(self):
        return TWO_PI / self.n_per_axis

    @property
    def volume(self):
        return TWO_PI**3

    def coordinates(self):
        """1-D coordinate array shared by the three axes."""
        return self.h * np.arange(self.n_per_axis)

    def mesh(self):
        x = self.coordinates()
        return np.meshgrid(x, x, x, indexing="ij")


@functools.lru_cache(maxsize=32)
def axis_wavenumbers(n):
    return np.fft.fftfreq(n, 1.0 / n)


@functools.lru_cache(maxsize=8)
def _k2_cache(n):
    k = axis_wavenumbers(n)
    k2 = k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2
    k2.flags.writeable = False
    return k2


@functools.lru_cache(maxsize=8)
def _nyquist_cache(n):
    ny = np.abs(axis_wavenumbers(n)) == n // 2
    mask = ny[:, None, None] | ny[None, :, None] | ny[None, None, :]
    mask.flags.writeable = False
    return mask


def wavevector(grid):
    """Broadcastable wavenumber arrays ``(kx, ky, kz)``."""
    k = axis_wavenumbers(grid.n)
    return (k[:, None, None], k[None, :, None], k[None, None, :])


def k_squared(grid):
    return _k2_cache(grid.n)


def nyquist_mask(grid):
    """True where any component of k equals the Nyquist wavenumber n/2."""
    return _nyquist_cache(grid.n)


def derivative_symbols(grid):
    """Multipliers ``i k_j`` with Nyquist modes zeroed, as full arrays."""
    keep = ~nyquist_mask(grid)
    return [1j * np.broadcast_to(kj, keep.shape) * keep for kj in wavevector(grid)]


def inverse_k_squared(grid):
    """``1/|k|^2`` with zero at k = 0 and at Nyquist modes."""
    k2 = k_squared(grid)
    out = np.zeros_like(k2)
    good = (k2 > 0) & ~nyquist_mask(grid)
    out[good] = 1.0 / k2[good]
    return out


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a scalar, vector or tensor field.

    The coefficient array is made read-only on construction.
    """

    grid: GridSpec
    rank: str
    coeffs: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        if self.rank not in RANKS:
            raise ValueError(f"unknown rank {self.rank!r}")
        c = np.asarray(self.coeffs, dtype=np.complex128)
        expected = component_shape(self.rank) + (self.grid.n,) * 3
        if c.shape != expected:
            raise ValueError(f"coeffs shape {c.shape} does not match {expected}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self):
        return self.grid.n

    def samples(self):
        return to_samples(self)

    def mean(self):
        m = self.coeffs[..., 0, 0, 0]
        return m.real.copy() if self.hermitian else m.copy()

    def component(self, *index):
        c = self.coeffs[index]
        return SpectralField(self.grid, rank_of_ndim(c.ndim - 3), c, self.hermitian)

    def with_coeffs(self, coeffs, rank=None, hermitian=None):
        return SpectralField(
            self.grid,
            self.rank if rank is None else rank,
            coeffs,
            self.hermitian if hermitian is None else hermitian,
        )

    def __add__(self, other):
        _check_same(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs, hermitian=self.hermitian and other.hermitian)

    def __sub__(self, other):
        _check_same(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs, hermitian=self.hermitian and other.hermitian)

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar):
        scalar = complex(scalar) if np.iscomplexobj(scalar) else float(scalar)
        herm = self.hermitian and isinstance(scalar, float)
        return self.with_coeffs(self.coeffs * scalar, hermitian=herm)

    __rmul__ = __mul__


def _check_same(a, b):
    if a.grid != b.grid or a.rank != b.rank:
        raise ValueError("fields must share grid and rank")


def zeros(grid, rank="scalar"):
    return SpectralField(grid, rank, np.zeros(component_shape(rank) + (grid.n,) * 3, complex))


def hermitian_defect(coeffs):
    """Max of ``|c(k) - conj(c(-k))|`` over the lattice."""
    flipped = np.roll(np.flip(coeffs, axis=AXES), 1, axis=AXES)
    return float(np.max(np.abs(coeffs - np.conj(flipped)), initial=0.0))


def to_samples(f):
    """Real samples on the uniform grid.

    Raises ``ValueError`` if the field is flagged non-hermitian or if the
    inverse transform has a non-negligible imaginary part.
    """
    if not f.hermitian:
        raise ValueError("real samples requested from a non-hermitian field")
    z = sfft.ifftn(f.coeffs, axes=AXES, norm="forward")
    scale = max(float(np.max(np.abs(z.real), initial=0.0)), float(np.max(np.abs(f.coeffs), initial=0.0)))
    # the absolute floor admits pure-roundoff fields such as div of a solenoidal field
    if np.max(np.abs(z.imag), initial=0.0) > 1e-10 * scale + 1e-13:
        raise ValueError("coefficients are not hermitian; samples would be complex")
    return z.real


def complex_samples(f):
    """Samples of a possibly complex-valued field."""
    return sfft.ifftn(f.coeffs, axes=AXES, norm="forward")


def from_samples(g, grid):
    """Fourier coefficients of grid samples ``g`` (component axes first)."""
    g = np.asarray(g)
    n = grid.n
    if g.ndim < 3 or g.ndim > 6 or g.shape[-3:] != (n, n, n) or any(s != 3 for s in g.shape[:-3]):
        raise ValueError(f"sample shape {g.shape} does not match grid n={n}")
    c = sfft.fftn(g, axes=AXES, norm="forward")
    return SpectralField(grid, rank_of_ndim(g.ndim - 3), c, hermitian=not np.iscomplexobj(g))


def single_mode(grid, k, amplitude=1.0, real=True):
    """``amplitude * cos(k.x)`` (real) or ``amplitude * e^{ik.x}`` (complex)."""
    c = np.zeros((grid.n,) * 3, complex)
    idx = tuple(int(v) % grid.n for v in k)
    if real:
        neg = tuple(int(-v) % grid.n for v in k)
        c[idx] += amplitude / 2
        c[neg] += np.conj(amplitude) / 2
    else:
        c[idx] = amplitude
    return SpectralField(grid, "scalar", c, hermitian=real)


def leray_project(u):
    """Divergence-free part ``(I - k k^T/|k|^2) u_hat``; Nyquist modes zeroed."""
    if u.rank != "vector":
        raise ValueError("leray_project needs a vector field")
    grid = u.grid
    kk = wavevector(grid)
    inv = inverse_k_squared(grid)
    c = np.array(u.coeffs)
    kdotu = sum(kk[i] * c[i] for i in range(3)) * inv
    for i in range(3):
        c[i] = c[i] - kk[i] * kdotu
    mean = c[:, 0, 0, 0].copy()
    c[:, nyquist_mask(grid)] = 0.0
    c[:, 0, 0, 0] = mean
    return u.with_coeffs(c)


def shift_samples(f, y):
    """Exact translate ``f(. + y)`` via phase factors ``e^{ik.y}``.

    A Nyquist index is read as the symmetric pair +-n/2, whose shift
    factor is ``cos(n y / 2)``; this keeps shifted real fields real and is
    exact for grid-aligned shifts.
    """
    n = f.grid.n
    k = axis_wavenumbers(n)
    factors = []
    for j in range(3):
        ph = np.exp(1j * k * y[j])
        ph[n // 2] = math.cos(n * y[j] / 2)
        factors.append(ph)
    phase = factors[0][:, None, None] * factors[1][None, :, None] * factors[2][None, None, :]
    return f.with_coeffs(f.coeffs * phase)


def pad_coeffs(c, n, m):
    """Zero-pad FFT-ordered coefficients from size n to size m per axis."""
    h = n // 2
    out = np.zeros(c.shape[:-3] + (m, m, m), complex)
    idx = np.r_[0:h, m - h : m]
    out[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]] = c
    return out


def truncate_coeffs(c, m, n):
    """Keep the central n^3 block of size-m coefficients; Nyquist planes zeroed."""
    h = n // 2
    idx = np.r_[0:h, m - h : m]
    out = c[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]]
    out[..., nyquist_mask(GridSpec(n))] = 0.0
    return out


# ---------------------------------------------------------------- rough fields


@dataclass(frozen=True)
class RandomFieldSpec:
    """Lacunary (Weierstrass-type) field parameters."""

    theta: float
    octaves: int
    modes_per_octave: int = 8
    seed: int = 0
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.octaves < 0 or self.modes_per_octave < 1:
            raise ValueError("octaves must be >= 0 and modes_per_octave >= 1")


def lacunary_modes(spec, rank="scalar"):
    """Draw the (wavevector, phase, direction) list of a lacunary field.

    Returns integer wavevectors ``(m, 3)``, amplitudes ``(m,)``, phases
    ``(m,)`` and unit directions ``(m, 3)`` (all ones for scalars).
    """
    if rank not in ("scalar", "vector"):
        raise ValueError("rough fields are scalar or vector")
    rng = SplitMix64(spec.seed)
    ks, amps, phases, dirs = [], [], [], []
    for j in range(spec.octaves + 1):
        top = 2 ** (j + 1) - 1
        lo2, hi2 = 4**j, 4 ** (j + 1)
        count = 0
        while count < spec.modes_per_octave:
            k = (rng.integer(-top, top), rng.integer(-top, top), rng.integer(-top, top))
            k2 = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
            if not lo2 <= k2 < hi2:
                continue
            phases.append(2.0 * math.pi * rng.uniform())
            if rank == "vector":
                e = np.array(rng.unit_vector())
                kv = np.array(k, float)
                e = e - kv * (kv @ e) / k2
                norm = np.linalg.norm(e)
                e = e / norm if norm > 0 else e
                dirs.append(e)
            else:
                dirs.append(np.ones(1))
            ks.append(k)
            amps.append(spec.amplitude * 2.0 ** (-j * spec.theta))
            count += 1
    return np.array(ks, dtype=np.int64), np.array(amps), np.array(phases), np.array(dirs)


def check_band_limit(octaves, grid):
    """The top octave must sit inside the grid: 2^J <= n/3 and 2^(J+1) <= n/2."""
    top = 2**octaves
    if top > grid.n / 3 or 2 * top > grid.n / 2:
        raise ValueError(
            f"band-limit violation: octave J={octaves} needs 2^J <= n/3 and 2^(J+1) <= n/2 (n={grid.n})"
        )


def make_rough_field(spec, grid, rank="scalar"):
    """Dense realization of the lacunary field on ``grid``.

    Vector fields draw a random unit direction per mode and project it
    orthogonal to k, so the output is divergence-free.
    """
    check_band_limit(spec.octaves, grid)
    from .series import lacunary_series

    return lacunary_series(spec, rank).to_field(grid)


def random_band_limited(grid, kmax, seed, rank="scalar", decay=0.0):
    """Real random field with modes ``0 < |k| <= kmax`` and ``|c| ~ |k|^-decay``.

    Coefficients come from SplitMix64 uniforms; the field is hermitian.
    """
    n = grid.n
    shape = component_shape(rank) + (n, n, n)
    size = int(np.prod(shape))
    u = integer_block(seed, 2 * size, 0, (1 << 30) - 1) / float(1 << 30)
    c = (u[:size] - 0.5).reshape(shape) + 1j * (u[size:] - 0.5).reshape(shape)
    k2 = k_squared(grid)
    keep = (k2 > 0) & (k2 <= kmax**2) & ~nyquist_mask(grid)
    weight = np.where(keep, np.maximum(k2, 1.0) ** (-decay / 2), 0.0)
    c = c * weight
    flipped = np.roll(np.flip(c, axis=AXES), 1, axis=AXES)
    c = 0.5 * (c + np.conj(flipped))
    return SpectralField(grid, rank, c)


# ------------------------------------------------------------- snapshot I/O

MAGIC = b"HLD1"
_HEADER = struct.Struct("<4sqqq")


def save_snapshot(path, f):
    """Write ``f`` as HLD1: magic, n, rank index, hermitian flag, coefficients.

    Header integers are 64-bit little-endian; coefficients follow as
    little-endian complex128 in row-major order over (components, kx, ky, kz)
    in FFT index order.
    """
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, f.grid.n, RANKS.index(f.rank), int(bool(f.hermitian))))
        fh.write(np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes())


def load_snapshot(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, n, rank, herm = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: not an HLD1 snapshot")
        grid = GridSpec(int(n))
        shape = component_shape(RANKS[rank]) + (grid.n,) * 3
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: truncated coefficient block")
    return SpectralField(grid, RANKS[rank], data.reshape(shape).astype(np.complex128), bool(herm))


def export_csv(path, f, stride=1):
    """Sampled values as CSV rows ``x,y,z,<components>``."""
    g = to_samples(f)
    x = f.grid.coordinates()[::stride]
    comps = g.reshape((-1,) + g.shape[-3:])[..., ::stride, ::stride, ::stride]
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    cols = [X.ravel(), Y.ravel(), Z.ravel()] + [c.ravel() for c in comps]
    names = ["x", "y", "z"] + [f"f{i}" for i in range(len(comps))]
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(names), comments="", fmt="%.17g")
