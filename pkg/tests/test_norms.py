import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holderlab.norms import (
    DegenerateFieldError,
    SamplePairLadder,
    besov_seminorm,
    besov_shifts,
    c0_norm,
    dyadic_ladder,
    holder_exponent_estimate,
    holder_seminorm,
    lp_norm,
    sobolev_slobodeckij,
)
from holderlab.spectral import (
    GridSpec,
    RandomFieldSpec,
    from_samples,
    make_rough_field,
    random_band_limited,
    shift_samples,
    single_mode,
    to_samples,
    zeros,
)

SEEDS = st.integers(min_value=0, max_value=2**32)


@pytest.fixture(scope="module")
def grid64():
    return GridSpec(64)


@pytest.fixture(scope="module")
def rough64(grid64):
    return make_rough_field(RandomFieldSpec(0.4, 4, 8, seed=2), grid64)


def test_c0_zero(grid16):
    assert c0_norm(zeros(grid16)) == 0.0


def test_c0_cosine(grid64):
    assert c0_norm(single_mode(grid64, (1, 0, 0))) == pytest.approx(1.0, abs=1e-4)


def test_c0_matches_brute_force(grid16):
    f = random_band_limited(grid16, 5, 3, "vector")
    g = to_samples(f)
    brute = max(math.sqrt(sum(g[c][idx] ** 2 for c in range(3))) for idx in np.ndindex(16, 16, 16))
    assert c0_norm(f) == brute


def test_lp_norm_constant(grid16):
    f = from_samples(np.full((16, 16, 16), 2.0), grid16)
    assert lp_norm(f, 3) == pytest.approx(2.0 * (2 * math.pi) ** 1.0, rel=1e-12)


def test_lipschitz_constant_of_cosine(grid64):
    f = single_mode(grid64, (1, 0, 0))
    est = holder_seminorm(f, 1.0, dyadic_ladder(grid64, 4096))
    assert est.seminorm == pytest.approx(1.0, rel=0.05)


def test_seminorm_ignores_constants(rough64, grid64):
    lad = dyadic_ladder(grid64, 1024)
    shifted = rough64.with_coeffs(rough64.coeffs + (np.arange(64**3).reshape(64, 64, 64) == 0) * 5.0)
    a = holder_seminorm(rough64, 0.4, lad).seminorm
    b = holder_seminorm(shifted, 0.4, lad).seminorm
    assert a == pytest.approx(b, rel=1e-12)


def test_seminorm_stable_in_pair_count(rough64, grid64):
    a = holder_seminorm(rough64, 0.4, dyadic_ladder(grid64, 1024)).seminorm
    b = holder_seminorm(rough64, 0.4, dyadic_ladder(grid64, 4096)).seminorm
    assert 0.5 <= b / a <= 2.0


def test_seminorm_deterministic(rough64, grid64):
    lad = dyadic_ladder(grid64, 512, seed=9)
    assert holder_seminorm(rough64, 0.3, lad) == holder_seminorm(rough64, 0.3, lad)


def test_seminorm_homogeneous(rough64, grid64):
    lad = dyadic_ladder(grid64, 512)
    a = holder_seminorm(rough64, 0.4, lad).seminorm
    b = holder_seminorm(rough64 * -3.5, 0.4, lad).seminorm
    assert b == pytest.approx(3.5 * a, rel=1e-12)


def test_seminorm_monotone_in_probe(rough64, grid64):
    lad = dyadic_ladder(grid64, 512)
    vals = [holder_seminorm(rough64, t, lad).seminorm for t in (0.1, 0.3, 0.5, 0.7)]
    assert vals == sorted(vals)


def test_seminorm_shift_invariant(rough64, grid64):
    lad = dyadic_ladder(grid64, 4096)
    a = holder_seminorm(rough64, 0.4, lad).seminorm
    b = holder_seminorm(shift_samples(rough64, (0.3, -1.1, 2.0)), 0.4, lad).seminorm
    assert b == pytest.approx(a, rel=0.02) or abs(math.log(b / a)) < 0.15


def test_ladder_below_resolution(grid16):
    lad = SamplePairLadder((grid16.h, 2 * grid16.h, 4 * grid16.h, 8 * grid16.h))
    with pytest.raises(ValueError):
        holder_seminorm(single_mode(grid16, (1, 0, 0)), 0.5, lad)


@pytest.mark.parametrize("seps", [(0.0, 1.0), (1.0, 4.0)])
def test_ladder_rejects_separations(seps):
    with pytest.raises(ValueError):
        SamplePairLadder(seps)


def test_smooth_mode_exponent_ceiling(grid64):
    fit = holder_exponent_estimate(single_mode(grid64, (0, 1, 1)), dyadic_ladder(grid64, 1024))
    assert 0.9 <= fit.slope <= 1.0
    assert 0.0 <= fit.r_squared <= 1.0
    assert len(fit.separations_used) >= 4


def test_constant_field_is_degenerate(grid64):
    with pytest.raises(DegenerateFieldError):
        holder_exponent_estimate(zeros(grid64), dyadic_ladder(grid64, 64))


def test_exponent_needs_four_rungs(grid64):
    lad = SamplePairLadder(tuple(dyadic_ladder(grid64).separations[:3]))
    with pytest.raises(ValueError):
        holder_exponent_estimate(single_mode(grid64, (1, 0, 0)), lad)


def test_exponent_increases_with_theta(grid64):
    lad = dyadic_ladder(grid64, 1024)
    for seed in range(3):
        slopes = [
            holder_exponent_estimate(make_rough_field(RandomFieldSpec(t, 4, 8, seed=seed), grid64), lad).slope
            for t in (0.2, 0.4, 0.6)
        ]
        assert slopes == sorted(slopes)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="six octaves at n=256 bias the fit low for theta=0.7; see README")
def test_rough_field_exponent_theta_07():
    grid = GridSpec(256)
    slopes = [
        holder_exponent_estimate(make_rough_field(RandomFieldSpec(0.7, 6, 8, seed=s), grid), dyadic_ladder(grid, 4096, seed=s)).slope
        for s in range(5)
    ]
    assert 0.6 <= np.median(slopes) <= 0.8


def test_besov_constant_is_zero(grid16):
    assert besov_seminorm(from_samples(np.full((16, 16, 16), 1.5), grid16), 0.5, 2) == 0.0


def test_besov_single_mode_closed_form(grid16):
    k = np.array([1, 2, 0])
    f = single_mode(grid16, k)
    shifts = besov_shifts(grid16)
    # |cos(k.(x+y)) - cos(k.x)| = 2|sin(k.y/2)| |sin(k.x + k.y/2)|, whose L^2 norm is 2|sin(k.y/2)| (vol/2)^(1/2)
    vol = (2 * math.pi) ** 3
    expect = max(2 * abs(math.sin(k @ y / 2)) * math.sqrt(vol / 2) / np.linalg.norm(y) for y in shifts)
    assert besov_seminorm(f, 1.0, 2) == pytest.approx(expect, abs=1e-6)


def test_besov_rejects_p(grid16):
    with pytest.raises(ValueError):
        besov_seminorm(single_mode(grid16, (1, 0, 0)), 0.5, 4)


@given(SEEDS)
@settings(max_examples=10, deadline=None)
def test_besov_embeds_in_holder(seed):
    grid = GridSpec(32)
    f = make_rough_field(RandomFieldSpec(0.4, 3, 4, seed=seed), grid)
    b = besov_seminorm(f, 0.4, 3)
    h = holder_seminorm(f, 0.4, dyadic_ladder(grid, 2048)).seminorm
    assert b <= (2 * math.pi) * 1.1 * h


def test_slobodeckij_zero(grid16):
    assert sobolev_slobodeckij(zeros(grid16), 0.3).value == 0.0


def test_slobodeckij_smooth_mode_stable(grid16):
    f = single_mode(grid16, (1, 0, 0))
    vals = [sobolev_slobodeckij(f, 0.3, seed=s).value for s in range(4)]
    assert max(vals) / min(vals) < 1.05


def test_slobodeckij_grows_above_theta():
    # probing above the field exponent makes the seminorm blow up under refinement
    spec_lo = RandomFieldSpec(0.4, 3, 8, seed=1)
    spec_hi = RandomFieldSpec(0.4, 5, 8, seed=1)
    lo = sobolev_slobodeckij(make_rough_field(spec_lo, GridSpec(32)), 0.8).value
    hi = sobolev_slobodeckij(make_rough_field(spec_hi, GridSpec(128)), 0.8).value
    assert hi > 1.5 * lo
    lo_b = sobolev_slobodeckij(make_rough_field(spec_lo, GridSpec(32)), 0.1).value
    hi_b = sobolev_slobodeckij(make_rough_field(spec_hi, GridSpec(128)), 0.1).value
    assert hi_b < 1.5 * lo_b


def test_slobodeckij_budget(grid16):
    with pytest.raises(ValueError):
        sobolev_slobodeckij(single_mode(grid16, (1, 0, 0)), 0.3, samples_per_stratum=8)
