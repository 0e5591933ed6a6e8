"""Discrete estimators for C^0, Hoelder, Besov and Sobolev-Slobodeckij seminorms.

Increments are always taken between grid points, so every separation is
an exact multiple of the grid spacing and no interpolation enters.  Pairs
are drawn from a seeded SplitMix64 stream: one draw picks the base point,
the next picks a direction, and the offset is the direction scaled to the
rung and rounded to the lattice.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .series import ModeSeries
from .spectral import GridSpec, SpectralField, shift_samples, to_samples
from .rng import SplitMix64, integer_block, uniform_block


class DegenerateFieldError(ValueError):
    """Raised when an exponent fit is requested for a constant field."""


@dataclass(frozen=True)
class SamplePairLadder:
    """Dyadic separations (physical units) and pairs sampled per rung."""

    separations: tuple
    pairs_per_separation: int = 4096
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "separations", tuple(float(r) for r in self.separations))
        if any(r <= 0 or r > math.pi + 1e-12 for r in self.separations):
            raise ValueError("separations must lie in (0, pi]")
        if self.pairs_per_separation < 1:
            raise ValueError("need at least one pair per separation")

    def check_resolution(self, h):
        if min(self.separations) < 2.0 * h - 1e-12:
            raise ValueError(f"separation {min(self.separations):.4g} is below 2h={2 * h:.4g}")


def dyadic_ladder(grid, pairs=4096, seed=0, top=math.pi / 2):
    """Separations {2h, 4h, ...} up to ``top`` (default pi/2)."""
    seps = []
    r = 2.0 * grid.h
    while r <= top * (1 + 1e-12):
        seps.append(r)
        r *= 2.0
    return SamplePairLadder(tuple(seps), pairs, seed)


@dataclass(frozen=True)
class HolderEstimate:
    theta: float
    seminorm: float
    ladder: SamplePairLadder
    field_id: str = ""
    rung_max: tuple = ()


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    separations_used: tuple
    medians: tuple = field(default=())


def _as_samples(f, grid=None):
    """Samples with component axes first, plus the grid they live on."""
    if isinstance(f, SpectralField):
        return to_samples(f), f.grid
    if isinstance(f, ModeSeries):
        return f.sample(grid), grid
    arr = np.asarray(f, dtype=float)
    if grid is None and arr.shape[-1] % 2 == 0 and arr.shape[-1] >= 8:
        grid = GridSpec(arr.shape[-1])
    return arr, grid


def _components(g):
    return g.reshape((-1,) + g.shape[-3:])


def c0_norm(f, grid=None):
    """Max of |f| (Euclidean norm over components) on the grid."""
    g, _ = _as_samples(f, grid)
    comps = _components(g)
    if comps.shape[0] == 1:
        return float(np.max(np.abs(comps[0])))
    return float(np.sqrt((comps**2).sum(axis=0)).max())


def lp_norm(f, p, grid=None):
    """(int |f|^p dx)^(1/p) over the torus by the grid rectangle rule."""
    g, grid = _as_samples(f, grid)
    comps = _components(g)
    mag = np.sqrt((comps**2).sum(axis=0))
    return float((grid.h**3 * np.sum(mag**p)) ** (1.0 / p))


def rung_pairs(shape, h, r, count, seed, periodic=True):
    """Base indices ``(count, 3)`` and integer offsets ``(count, 3)`` for rung r.

    Offsets are unit directions scaled to r/h and rounded; offsets whose
    length misses r/h by more than 15% are redrawn.
    """
    target = r / h
    rng = SplitMix64(seed)
    offsets = []
    while len(offsets) < count:
        d = np.array(rng.unit_vector()) * target
        off = np.rint(d).astype(np.int64)
        length = math.sqrt(float(off @ off))
        if abs(length - target) <= 0.15 * target:
            offsets.append(off)
    offsets = np.array(offsets)
    base = np.empty((count, 3), dtype=np.int64)
    sub = rng.next_u64()
    for ax in range(3):
        n_ax = shape[ax]
        if periodic:
            base[:, ax] = integer_block(sub + ax, count, 0, n_ax - 1)
        else:
            lo = np.maximum(0, -offsets[:, ax])
            hi = np.minimum(n_ax - 1, n_ax - 1 - offsets[:, ax])
            u = uniform_block(sub + ax, count)
            base[:, ax] = lo + np.floor(u * (hi - lo + 1)).astype(np.int64)
    return base, offsets


def _increments(g, base, off, periodic=True):
    comps = _components(g)
    shape = np.array(comps.shape[-3:])
    other = base + off
    if periodic:
        other = np.mod(other, shape)
    a = comps[:, base[:, 0], base[:, 1], base[:, 2]]
    b = comps[:, other[:, 0], other[:, 1], other[:, 2]]
    return np.sqrt(((a - b) ** 2).sum(axis=0))


def ladder_increments(f, ladder, grid=None, periodic=True, spacing=None):
    """Per-rung arrays (distances, increments) for the sampled pairs."""
    g, grid = _as_samples(f, grid)
    h = spacing if spacing is not None else grid.h
    if periodic:
        ladder.check_resolution(h)
    out = []
    for i, r in enumerate(ladder.separations):
        base, off = rung_pairs(g.shape[-3:], h, r, ladder.pairs_per_separation, ladder.seed * 1000003 + i, periodic)
        dist = h * np.sqrt((off**2).sum(axis=1))
        out.append((dist, _increments(g, base, off, periodic)))
    return out


def holder_seminorm(f, theta, ladder, grid=None, periodic=True, spacing=None, field_id=""):
    """Max over sampled pairs of |f(x) - f(y)| / |x - y|^theta."""
    rungs = ladder_increments(f, ladder, grid, periodic, spacing)
    maxima = tuple(float(np.max(inc / dist**theta)) for dist, inc in rungs)
    return HolderEstimate(theta, max(maxima), ladder, field_id, maxima)


def holder_norm(f, theta, ladder, grid=None):
    """C^0 norm plus the sampled C^theta seminorm."""
    return c0_norm(f, grid) + holder_seminorm(f, theta, ladder, grid).seminorm


def fit_loglog(x, y):
    """Least-squares line through (log x, log y): slope, intercept, r^2."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(slope), float(intercept), min(max(r2, 0.0), 1.0)


def holder_exponent_estimate(f, ladder, grid=None, periodic=True, spacing=None):
    """Slope of log(median increment) against log(separation)."""
    if len(ladder.separations) < 4:
        raise ValueError("exponent fits need at least 4 ladder rungs")
    rungs = ladder_increments(f, ladder, grid, periodic, spacing)
    med = np.array([np.median(inc) for _, inc in rungs])
    if not np.all(med > 0):
        raise DegenerateFieldError("median increment vanishes; the field is (locally) constant")
    slope, intercept, r2 = fit_loglog(ladder.separations, med)
    return ExponentFit(slope, intercept, r2, ladder.separations, tuple(float(m) for m in med))


def besov_shifts(grid):
    """Dyadic shift set: lengths 2h..pi/2 along the 3 axes and 4 diagonals."""
    dirs = np.array(
        [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1], [1, -1, 1], [1, 1, -1], [-1, 1, 1]], dtype=float
    )
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    lengths = dyadic_ladder(grid).separations
    return [r * d for r in lengths for d in dirs]


def besov_seminorm(f, theta, p, shifts=None):
    """sup over shifts y of ||f(. + y) - f||_{L^p} / |y|^theta, with exact spectral shifts."""
    if p not in (1.5, 2, 2.0, 3, 3.0):
        raise ValueError("p must be one of 3/2, 2, 3")
    shifts = besov_shifts(f.grid) if shifts is None else shifts
    best = 0.0
    for y in shifts:
        diff = shift_samples(f, y) - f
        best = max(best, lp_norm(diff, p) / float(np.linalg.norm(y)) ** theta)
    return best


@dataclass(frozen=True)
class SlobodeckijEstimate:
    value: float
    standard_error: float
    samples: int


def sobolev_slobodeckij(f, theta, p=3, samples_per_stratum=2048, seed=0, grid=None):
    """Monte-Carlo estimate of (int int |f(x)-f(y)|^p / |x-y|^(3+theta p))^(1/p).

    y - x ranges over lattice offsets in the periodic cell [-pi, pi)^3,
    stratified into dyadic shells of |offset|; inside a shell offsets and
    base points are uniform.  The lattice sum misses |x - y| < h.
    """
    if p != 3:
        raise ValueError("only p = 3 is supported")
    if samples_per_stratum < 32:
        raise ValueError("insufficient sample budget: need >= 32 samples per stratum")
    g, grid = _as_samples(f, grid)
    n, h = grid.n, grid.h
    comps = _components(g)
    half = n // 2
    ax = np.arange(-half, half)
    ox, oy, oz = np.meshgrid(ax, ax, ax, indexing="ij")
    offs = np.stack([ox.ravel(), oy.ravel(), oz.ravel()], axis=1)
    rad = np.sqrt((offs**2).sum(axis=1))
    total, var = 0.0, 0.0
    rng = SplitMix64(seed)
    lo = 1.0
    while lo < half * math.sqrt(3) + 1:
        shell = offs[(rad >= lo) & (rad < 2 * lo)]
        lo *= 2
        if shell.shape[0] == 0:
            continue
        s = rng.next_u64()
        pick = shell[integer_block(s, samples_per_stratum, 0, shell.shape[0] - 1)]
        base = np.stack([integer_block(s + 1 + a, samples_per_stratum, 0, n - 1) for a in range(3)], axis=1)
        inc = _increments(comps, base, pick)
        dist = h * np.sqrt((pick**2).sum(axis=1))
        vals = inc**p / dist ** (3 + theta * p)
        weight = shell.shape[0] * h**3 * grid.volume
        total += weight * vals.mean()
        var += weight**2 * vals.var(ddof=1) / samples_per_stratum
    if total <= 0:
        return SlobodeckijEstimate(0.0, 0.0, 0)
    value = total ** (1.0 / p)
    se = math.sqrt(var) / (p * total ** ((p - 1.0) / p))
    return SlobodeckijEstimate(value, se, samples_per_stratum)
