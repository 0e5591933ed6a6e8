"""Experiment runners behind the command line.

Each experiment has a parameter schema (type and default per key), a
validation step that builds every module spec before any compute, and a
runner that returns named :class:`~holderlab.report.ScalingReport` objects.
Multi-seed experiments use the seeds ``base, base + 1, ...``.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from .norms import (
    c0_norm,
    dyadic_ladder,
    fit_loglog,
    holder_exponent_estimate,
    holder_seminorm,
    lp_norm,
)
from .operators import (
    FracLaplacianSpec,
    MollifierSpec,
    SingularIntegral,
    calibrate_singular_constant,
    commutator_T,
    fractional_constant,
    frac_laplacian,
    kernel_symbol,
)
from .pressure import (
    PotentialOracleConfig,
    cutoff,
    discrete_laplacian,
    extend_divfree,
    potential_oracle_p,
    schauder_gain_experiment,
)
from .report import ScalingReport, fit_report
from .rng import SplitMix64
from .series import lacunary_series
from .spectral import (
    GridSpec,
    RandomFieldSpec,
    check_band_limit,
    make_rough_field,
    random_band_limited,
    save_snapshot,
    single_mode,
    to_samples,
)


class ConfigError(ValueError):
    """Invalid experiment name, parameter or value."""


def _floats(text):
    return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SOLVER_PARAMS = {
    "n": (int, 32),
    "dt": (float, 1e-3),
    "nu": (float, 0.0),
    "alpha": (float, 0.25),
    "t_end": (float, 1.0),
    "snapshot_stride": (int, 1),
    "init": (str, "smooth"),
    "k": (_ints, (1, 0, 0)),
    "kmax": (int, 3),
    "amplitude": (float, 1.0),
}

SCHEMAS = {
    "gen-field": {
        "theta": (float, 0.4),
        "octaves": (int, 4),
        "modes_per_octave": (int, 8),
        "n": (int, 64),
        "rank": (str, "scalar"),
        "amplitude": (float, 1.0),
        "pairs": (int, 4096),
    },
    "mollify-scan": {
        "theta": (float, 0.4),
        "n": (int, 128),
        "octaves": (int, 10),
        "modes_per_octave": (int, 8),
        "delta_exponents": (_ints, (3, 4, 5, 6, 7, 8)),
        "seeds": (int, 5),
        "quadrature_points": (int, 64),
        "p_values": (_floats, (1.5, 3.0)),
    },
    "fraclap-check": {
        "n": (int, 32),
        "alpha": (float, 0.25),
        "image_shells": (int, 3),
        "kmax": (int, 6),
        "eigen_alphas": (_floats, (0.1, 0.25, 0.4)),
        "eigen_count": (int, 20),
        "shell_doubling": (_bool, True),
    },
    "commutator-check": {
        "n": (int, 16),
        "alpha": (float, 0.25),
        "pairs": (int, 50),
        "kmax": (int, 3),
        "k": (_ints, ()),
        "l": (_ints, ()),
    },
    "pressure-scan": {
        "theta": (float, 0.35),
        "n": (int, 128),
        "octaves": (int, 5),
        "modes_per_octave": (int, 8),
        "seeds": (int, 10),
        "pairs": (int, 4096),
        "include_q": (_bool, False),
    },
    "extend-check": {
        "theta": (float, 0.4),
        "n": (int, 32),
        "octaves": (int, 3),
        "seeds": (int, 5),
        "inner": (float, 6.0),
        "outer_radius": (float, 12.0),
        "pairs": (int, 2048),
        "oracle_points": (int, 100),
        "oracle_radius": (float, 9.0),
        "oracle_radial_nodes": (int, 48),
        "oracle_polar_nodes": (int, 24),
        "laplacian_step": (float, 0.05),
    },
    "simulate": dict(SOLVER_PARAMS, save_snapshots=(_bool, False)),
    "energy-scan": dict(
        SOLVER_PARAMS, dt=(float, 5e-3), snapshot_stride=(int, 1), theta=(float, 0.4), seeds=(int, 5), besov_p=(float, 3.0)
    ),
    "identity-check": dict(
        SOLVER_PARAMS,
        dt_ladder=(_floats, (4e-3, 2e-3, 1e-3)),
        t_end=(float, 0.05),
        delta_cells=(float, 8.0),
        flux=(_bool, True),
        flux_theta=(float, 0.4),
        flux_n=(int, 64),
        flux_octaves=(int, 4),
        flux_seeds=(int, 3),
        flux_delta_cells=(_floats, (2.0, 4.0, 8.0, 16.0)),
    ),
    "decomposition-check": dict(
        SOLVER_PARAMS, dt=(float, 5e-3), t_end=(float, 0.02), delta_cells=(float, 4.0), span=(int, 4)
    ),
}

EXPERIMENTS = tuple(SCHEMAS)


def resolve_parameters(experiment, raw):
    """Typed parameter table with defaults filled in; unknown keys are errors."""
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    schema = SCHEMAS[experiment]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {experiment}: {', '.join(unknown)}")
    out = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            try:
                out[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"parameter {key}: {exc}") from exc
        else:
            out[key] = default
    return out


def _seed_list(base, count):
    if count < 1:
        raise ConfigError("seeds must be >= 1")
    return [int(base) + i for i in range(count)]


def _solver_config(p, dt=None):
    return dyn.SolverConfig(
        GridSpec(p["n"]),
        dt if dt is not None else p["dt"],
        p["nu"],
        p["alpha"],
        p["t_end"],
        "two_thirds",
        p["snapshot_stride"],
    )


def _initial_flow(p, grid, seed):
    if p["init"] == "beltrami":
        return dyn.beltrami_mode(grid, p["k"], p["amplitude"])
    if p["init"] == "abc":
        return dyn.abc_flow(grid) * p["amplitude"]
    if p["init"] == "smooth":
        return dyn.smooth_flow(grid, p["kmax"], seed, p["amplitude"])
    raise ConfigError(f"unknown init {p['init']!r}")


def validate(experiment, p, seed):
    """Build every spec the run will need; raise ConfigError on violation."""
    try:
        _validate(experiment, p, seed)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _needs_fit_rungs(n):
    if len(dyadic_ladder(GridSpec(n), 1).separations) < 4:
        raise ConfigError(f"n={n} gives fewer than 4 ladder rungs for an exponent fit; use n >= 64")


def _validate(experiment, p, seed):
    if not 0 <= int(seed) < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if "n" in p:
        GridSpec(p["n"])
    if experiment in ("gen-field", "pressure-scan"):
        _needs_fit_rungs(p["n"])
    if experiment == "gen-field":
        RandomFieldSpec(p["theta"], p["octaves"], p["modes_per_octave"], seed, p["amplitude"])
        check_band_limit(p["octaves"], GridSpec(p["n"]))
        if p["rank"] not in ("scalar", "vector"):
            raise ConfigError("rank must be scalar or vector")
    elif experiment == "mollify-scan":
        RandomFieldSpec(p["theta"], p["octaves"], p["modes_per_octave"], seed)
        for e in p["delta_exponents"]:
            MollifierSpec(math.pi * 2.0 ** (-e), quadrature_points_per_axis=p["quadrature_points"])
        if len(p["delta_exponents"]) < 2:
            raise ConfigError("need at least two delta rungs")
        if any(q not in (1.5, 2.0, 3.0) for q in p["p_values"]):
            raise ConfigError("p_values must be drawn from 1.5, 2, 3")
        _seed_list(seed, p["seeds"])
    elif experiment == "fraclap-check":
        FracLaplacianSpec(p["alpha"], "singular_integral", p["image_shells"])
        for a in p["eigen_alphas"]:
            FracLaplacianSpec(a)
        if p["kmax"] > p["n"] / 3:
            raise ConfigError("kmax must be <= n/3 for the singular integral")
    elif experiment == "commutator-check":
        if not 0 < p["alpha"] < 0.5:
            raise ConfigError("alpha must lie strictly inside (0, 1/2)")
        if bool(p["k"]) != bool(p["l"]) or (p["k"] and (len(p["k"]) != 3 or len(p["l"]) != 3)):
            raise ConfigError("k and l must both be given as three integers")
        if 2 * p["kmax"] >= p["n"] / 2:
            raise ConfigError("2 kmax must stay below n/2")
    elif experiment == "pressure-scan":
        RandomFieldSpec(p["theta"], p["octaves"], p["modes_per_octave"], seed)
        check_band_limit(p["octaves"], GridSpec(p["n"]))
        if abs(p["theta"] - 0.5) < 1e-12:
            raise ConfigError("theta = 1/2 is the borderline case of the pressure bound and is refused")
        _seed_list(seed, p["seeds"])
    elif experiment == "extend-check":
        RandomFieldSpec(p["theta"], p["octaves"], 8, seed)
        check_band_limit(p["octaves"], GridSpec(p["n"]))
        if not 0 < p["inner"] < p["outer_radius"]:
            raise ConfigError("need 0 < inner < outer_radius")
        if p["oracle_points"] and not 0 < p["oracle_radius"] < p["outer_radius"] - 0.5:
            raise ConfigError("oracle_radius must sit inside the support ball with margin 0.5")
        _seed_list(seed, p["seeds"])
    elif experiment in ("simulate", "energy-scan", "identity-check", "decomposition-check"):
        dts = p.get("dt_ladder") or (p["dt"],)
        for dt in dts:
            cfg = _solver_config(p, dt)
            u0 = _initial_flow(p, cfg.grid, seed)
            dyn.check_cfl(dt, cfg.grid.h, c0_norm(u0))
        if experiment == "energy-scan":
            dyn.energy_exponent(p["theta"], p["nu"], p["alpha"])
            _seed_list(seed, p["seeds"])
        if experiment == "identity-check":
            grid = GridSpec(p["n"])
            MollifierSpec(p["delta_cells"] * grid.h)
            if p["delta_cells"] < 2:
                raise ConfigError("delta must be at least 2h")
            if len(dts) < 2:
                raise ConfigError("dt_ladder needs at least two entries")
            if p["flux"]:
                fg = GridSpec(p["flux_n"])
                check_band_limit(p["flux_octaves"], fg)
                if min(p["flux_delta_cells"]) < 2:
                    raise ConfigError("flux deltas must be at least 2h")
        if experiment == "decomposition-check":
            if p["delta_cells"] < 2:
                raise ConfigError("delta must be at least 2h")
            if p["span"] < 2 or p["span"] % 2:
                raise ConfigError("span must be an even number of steps >= 2")
            if p["span"] * p["dt"] > p["t_end"] + 1e-12:
                raise ConfigError("t_end must cover span steps")


# ------------------------------------------------------------- runners


@dataclass
class Outcome:
    reports: dict = field(default_factory=dict)


def run_gen_field(p, seed, out_dir):
    grid = GridSpec(p["n"])
    spec = RandomFieldSpec(p["theta"], p["octaves"], p["modes_per_octave"], seed, p["amplitude"])
    f = make_rough_field(spec, grid, p["rank"])
    if out_dir:
        save_snapshot(os.path.join(out_dir, "field.hld"), f)
    ladder = dyadic_ladder(grid, p["pairs"], seed)
    fit = holder_exponent_estimate(f, ladder)
    rep = fit_report("gen-field", fit.separations_used, fit.medians, "separation", "median_increment", seed=seed)
    rep.metrics = {"theta_hat": fit.slope, "c0": c0_norm(f), "theta_target": p["theta"]}
    return Outcome({"field": rep})


MOLLIFY_TARGETS = {"error": lambda t: t, "grad": lambda t: t - 1.0, "reynolds": lambda t: 2.0 * t}


def mollify_quantities(theta, octaves, modes_per_octave, seed, grid, deltas, npts=64, p_values=(1.5, 3.0)):
    """Per-delta C^0 and L^p sizes of f_d - f, grad f_d and f_d^2 - (f^2)_d.

    The lacunary field is kept as an exact trigonometric series, so the
    octaves may run far beyond the sampling grid; samples are exact point
    values on ``grid``.
    """
    s = lacunary_series(RandomFieldSpec(theta, octaves, modes_per_octave, seed))
    s2 = s.outer(s)
    kn, k2n = s.norms(), s2.norms()
    names = ["c0_error", "c1", "c0_reynolds"]
    for q in p_values:
        names += [f"L{q:g}_error", f"L{q:g}_grad", f"L{q:g}_reynolds"]
    out = {k: [] for k in names}
    for d in deltas:
        sym = kernel_symbol(kn * d, npts)
        err = s.scale(sym - 1.0).sample(grid)
        fd_series = s.scale(sym)
        g = fd_series.grad().sample(grid)
        fd = fd_series.sample(grid)
        R = fd**2 - s2.scale(kernel_symbol(k2n * d, npts)).sample(grid)
        out["c0_error"].append(float(np.abs(err).max()))
        out["c1"].append(float(np.sqrt((g**2).sum(axis=0)).max()))
        out["c0_reynolds"].append(float(np.abs(R).max()))
        for q in p_values:
            out[f"L{q:g}_error"].append(lp_norm(err, q, grid))
            out[f"L{q:g}_grad"].append(lp_norm(g, q, grid))
            out[f"L{q:g}_reynolds"].append(lp_norm(R, q, grid))
    return out


def run_mollify_scan(p, seed, out_dir):
    grid = GridSpec(p["n"])
    deltas = [math.pi * 2.0 ** (-e) for e in p["delta_exponents"]]
    seeds = _seed_list(seed, p["seeds"])
    per_seed = [
        mollify_quantities(
            p["theta"], p["octaves"], p["modes_per_octave"], s, grid, deltas, p["quadrature_points"], p["p_values"]
        )
        for s in seeds
    ]
    reports = {}
    for name in per_seed[0]:
        kind = name.split("_")[-1]
        target = MOLLIFY_TARGETS["grad" if kind in ("grad", "c1") or name == "c1" else kind](p["theta"])
        values = np.array([q[name] for q in per_seed])
        slopes = [fit_loglog(deltas, v)[0] for v in values]
        med = np.median(values, axis=0)
        rep = fit_report("mollify-scan", deltas, med, "delta", name, seed=seed)
        rep.metrics = {
            "target_slope": target,
            "median_seed_slope": float(np.median(slopes)),
            "seed_slopes": [float(v) for v in slopes],
        }
        reports[name] = rep
    return Outcome(reports)


def _band_field(grid, kmax, seed):
    f = random_band_limited(grid, kmax, seed)
    n = grid.n
    from .spectral import axis_wavenumbers

    kk = np.abs(axis_wavenumbers(n))
    box = (kk[:, None, None] <= kmax) & (kk[None, :, None] <= kmax) & (kk[None, None, :] <= kmax)
    return f.with_coeffs(f.coeffs * box)


def run_fraclap_check(p, seed, out_dir):
    grid = GridSpec(p["n"])
    rng = SplitMix64(seed)
    half = grid.n // 2 - 1
    rows, worst = [], 0.0
    for a in p["eigen_alphas"]:
        for _ in range(p["eigen_count"]):
            k = (rng.integer(-half, half), rng.integer(-half, half), rng.integer(-half, half))
            e = single_mode(grid, k, 1.0, real=False)
            lam = float(np.linalg.norm(k)) ** (2 * a)
            got = frac_laplacian(e, a)
            err = float(np.abs(got.coeffs - lam * e.coeffs).max() / max(lam, 1.0))
            worst = max(worst, err)
            rows.append({"alpha": a, "kx": k[0], "ky": k[1], "kz": k[2], "error": err})
    eig = ScalingReport("fraclap-check", rungs=rows, seed=seed)
    eig.metrics = {"max_error": worst, "count": len(rows)}

    f = _band_field(grid, p["kmax"], seed)
    ref = frac_laplacian(f, FracLaplacianSpec(p["alpha"]))
    norm = c0_norm(ref)
    shells = [p["image_shells"]] + ([2 * p["image_shells"]] if p["shell_doubling"] else [])
    srows = []
    for s in shells:
        got = frac_laplacian(f, FracLaplacianSpec(p["alpha"], "singular_integral", s))
        srows.append({"image_shells": s, "relative_error": c0_norm(got - ref) / norm})
    si = fit_report(
        "fraclap-check",
        [r["image_shells"] for r in srows],
        [r["relative_error"] for r in srows],
        "image_shells",
        "relative_error",
        seed=seed,
    )
    si.metrics = {
        "relative_error": srows[0]["relative_error"],
        "calibrated_constant": calibrate_singular_constant(p["alpha"], 16, p["image_shells"]),
        "closed_form_constant": fractional_constant(p["alpha"]),
    }
    if len(srows) > 1:
        si.metrics["doubling_ratio"] = srows[1]["relative_error"] / srows[0]["relative_error"]
    return Outcome({"eigen": eig, "singular_integral": si})


def run_commutator_check(p, seed, out_dir):
    grid = GridSpec(p["n"])
    a = p["alpha"]
    if p["k"]:
        pairs = [(p["k"], p["l"])]
    else:
        rng = SplitMix64(seed)
        km = p["kmax"]
        pairs = [
            (tuple(rng.integer(-km, km) for _ in range(3)), tuple(rng.integer(-km, km) for _ in range(3)))
            for _ in range(p["pairs"])
        ]
    rows, worst = [], 0.0
    for k, l in pairs:
        f = single_mode(grid, k, 1.0, real=False)
        g = single_mode(grid, l, 1.0, real=False)
        s = [float(np.linalg.norm(v)) ** (2 * a) for v in (np.add(k, l), k, l)]
        expect = single_mode(grid, tuple(np.add(k, l)), s[0] - s[1] - s[2], real=False)
        err = float(np.abs(commutator_T(f, g, a).coeffs - expect.coeffs).max())
        worst = max(worst, err)
        rows.append({"k": " ".join(map(str, k)), "l": " ".join(map(str, l)), "error": err})
    rep = ScalingReport("commutator-check", rungs=rows, seed=seed)
    rep.metrics = {"max_error": worst, "pairs": len(rows)}
    return Outcome({"commutator": rep})


def run_pressure_scan(p, seed, out_dir):
    rep = schauder_gain_experiment(
        p["theta"],
        _seed_list(seed, p["seeds"]),
        p["n"],
        p["octaves"],
        p["modes_per_octave"],
        p["pairs"],
        p["include_q"],
    )
    rep.seed = seed
    return Outcome({"pressure": rep})


def _abc_extended(points, inner, outer_radius):
    """Analytic extension of the ABC flow (A = B = C = 1, curl u = u, so A_pot = u)."""
    X, Y, Z = points[..., 0], points[..., 1], points[..., 2]
    u = np.stack([np.sin(Z) + np.cos(Y), np.sin(X) + np.cos(Z), np.sin(Y) + np.cos(X)], axis=-1)
    phi, gphi = cutoff(points, inner, outer_radius)
    return phi[..., None] * u + np.cross(gphi, u)


def _divdiv_fd(R, points, step):
    """Fourth-order central differences of d_i d_j R_ij."""
    coef = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))
    eye = np.eye(3)
    acc = np.zeros(points.shape[0])
    for i in range(3):
        for j in range(3):
            for a, ca in coef:
                for b, cb in coef:
                    shifted = points + (a * eye[i] + b * eye[j]) * step
                    acc += ca * cb * R(shifted)[:, i, j]
    return acc / (12.0 * step) ** 2


def run_extend_check(p, seed, out_dir):
    grid = GridSpec(p["n"])
    rows = []
    for s in _seed_list(seed, p["seeds"]):
        u = make_rough_field(RandomFieldSpec(p["theta"], p["octaves"], 8, s), grid, "vector")
        ext = extend_divfree(u, p["inner"], p["outer_radius"])
        ug = to_samples(u)
        n = grid.n
        idx = np.rint(ext.axis / grid.h).astype(int) % n
        sub = np.ix_(idx, idx, idx)
        ue = np.stack([c[sub] for c in ug])
        X, Y, Z = np.meshgrid(ext.axis, ext.axis, ext.axis, indexing="ij")
        r = np.sqrt(X**2 + Y**2 + Z**2)
        scale = float(np.abs(ug).max())
        inside = r <= p["inner"]
        outside = r >= p["outer_radius"]
        ladder = dyadic_ladder(grid, p["pairs"], s)
        sem_u = holder_seminorm(u, p["theta"], ladder).seminorm
        sem_e = holder_seminorm(ext.extended_field, p["theta"], ladder, periodic=False, spacing=grid.h).seminorm
        c0_e = float(np.sqrt((ext.extended_field**2).sum(axis=0)).max())
        rows.append(
            {
                "seed": s,
                "match_error": float(np.abs(ext.extended_field[:, inside] - ue[:, inside]).max()) / scale,
                "max_divergence": float(np.abs(ext.divergence).max()),
                "support_leak": float(np.abs(ext.extended_field[:, outside]).max(initial=0.0)),
                "norm_ratio": (c0_e + sem_e) / (c0_norm(u) + sem_u),
            }
        )
    rep = ScalingReport("extend-check", rungs=rows, seed=seed)
    rep.metrics = {
        "max_match_error": max(r["match_error"] for r in rows),
        "max_divergence": max(r["max_divergence"] for r in rows),
        "max_support_leak": max(r["support_leak"] for r in rows),
        "max_norm_ratio": max(r["norm_ratio"] for r in rows),
    }
    reports = {"extension": rep}
    if p["oracle_points"]:
        reports["oracle"] = _oracle_check(p, seed)
    return Outcome(reports)


def _oracle_check(p, seed):
    inner, outer_radius = p["inner"], p["outer_radius"]

    def R(x):
        v = _abc_extended(x, inner, outer_radius)
        return v[..., :, None] * v[..., None, :]

    rng = SplitMix64(seed)
    pts = []
    while len(pts) < p["oracle_points"]:
        x = np.array([2.0 * rng.uniform() - 1.0 for _ in range(3)]) * p["oracle_radius"]
        if x @ x <= p["oracle_radius"] ** 2:
            pts.append(x)
    pts = np.array(pts)
    cfg = PotentialOracleConfig(outer_radius, radial_nodes=p["oracle_radial_nodes"], polar_nodes=p["oracle_polar_nodes"])
    lap = discrete_laplacian(lambda x: potential_oracle_p(R, x, cfg), pts, p["laplacian_step"])
    ref = -_divdiv_fd(R, pts, 1e-2)
    err = np.abs(lap - ref)
    scale = float(np.abs(ref).max())
    rows = [
        {"x": float(x[0]), "y": float(x[1]), "z": float(x[2]), "laplacian": float(a), "minus_divdiv": float(b)}
        for x, a, b in zip(pts, lap, ref)
    ]
    rep = ScalingReport("extend-check", rungs=rows, seed=seed)
    rep.metrics = {"relative_error": float(err.max()) / scale, "median_relative_error": float(np.median(err)) / scale}
    return rep


def _energy_report(name, ledger, seed):
    rows = [
        {"t": t, "kinetic": e, "dissipation_rate": d, "dissipation_integral": i, "total": tot}
        for t, e, d, i, tot in zip(ledger.times, ledger.kinetic, ledger.dissipation_rate, ledger.dissipation, ledger.total)
    ]
    return ScalingReport(name, rungs=rows, seed=seed)


def run_simulate(p, seed, out_dir):
    cfg = _solver_config(p)
    u0 = _initial_flow(p, cfg.grid, seed)
    traj = dyn.integrate(u0, cfg)
    if out_dir and p["save_snapshots"]:
        dyn.save_trajectory(traj, os.path.join(out_dir, "trajectory"))
    ledger = dyn.energy_ledger(traj)
    rep = _energy_report("simulate", ledger, seed)
    e0 = ledger.kinetic[0]
    total = np.array(ledger.total)
    rep.metrics = {
        "energy_ratio": ledger.kinetic[-1] / e0 if e0 > 0 else 1.0,
        "max_total_drift": float(np.abs(total - total[0]).max() / max(total[0], 1e-300)),
        "max_divergence": max(float(np.abs(dyn.divergence(u).coeffs).max()) for u in traj.snapshots),
    }
    if p["init"] == "beltrami":
        kn = float(np.linalg.norm(p["k"]))
        rate = p["nu"] * kn ** (2 * p["alpha"])
        t = traj.times[-1]
        exact = u0 * math.exp(-rate * t)
        rep.metrics["expected_energy_ratio"] = math.exp(-2 * rate * t)
        rep.metrics["energy_ratio_error"] = abs(rep.metrics["energy_ratio"] - math.exp(-2 * rate * t))
        rep.metrics["decay_error"] = c0_norm(traj.snapshots[-1] - exact) / c0_norm(u0)
    return Outcome({"energy": rep})


def run_energy_scan(p, seed, out_dir):
    rows, reports = [], {}
    for s in _seed_list(seed, p["seeds"]):
        cfg = _solver_config(p)
        traj = dyn.integrate(_initial_flow(p, cfg.grid, s), cfg)
        r = dyn.energy_modulus_scan(traj, p["theta"], p=p["besov_p"])
        rows.append({"seed": s, "C_theta": r.metrics["C_theta"], "besov_seminorm": r.metrics["besov_seminorm"]})
        reports[f"seed{s}"] = r
    cs = [r["C_theta"] for r in rows]
    rep = ScalingReport("energy-scan", rungs=rows, seed=seed)
    rep.metrics = {
        "exponent": dyn.energy_exponent(p["theta"], p["nu"], p["alpha"]),
        "conservation_threshold": abs(dyn.energy_exponent(p["theta"], p["nu"], p["alpha"]) - 1.0) < 1e-12,
        "max_C_theta": max(cs),
        "min_C_theta": min(cs),
        "C_theta_spread": max(cs) / min(cs) if min(cs) > 0 else float("inf"),
    }
    reports["summary"] = rep
    return Outcome(reports)


def flux_scan(theta, n, octaves, seeds, delta_cells, npts=64):
    """Median over seeds of |int R_d : grad u_d| on frozen lacunary vector fields."""
    grid = GridSpec(n)
    deltas = [c * grid.h for c in delta_cells]
    values = []
    for s in seeds:
        u = make_rough_field(RandomFieldSpec(theta, octaves, 8, s), grid, "vector")
        values.append([abs(v) for v in dyn.flux_ladder(u, deltas, npts)])
    values = np.array(values)
    slopes = [fit_loglog(deltas, v)[0] for v in values]
    rep = fit_report("identity-check", deltas, np.median(values, axis=0), "delta", "abs_flux", seed=int(seeds[0]))
    rep.metrics = {
        "target_slope": 3 * theta - 1,
        "median_seed_slope": float(np.median(slopes)),
        "seed_slopes": [float(v) for v in slopes],
    }
    return rep


def run_identity_check(p, seed, out_dir):
    rows = []
    for dt in p["dt_ladder"]:
        cfg = _solver_config(p, dt)
        traj = dyn.integrate(_initial_flow(p, cfg.grid, seed), cfg)
        res = dyn.mollified_energy_identity(traj, MollifierSpec(p["delta_cells"] * cfg.grid.h))
        rows.append({"dt": dt, "max_residual": res.max_residual})
    rep = fit_report("identity-check", [r["dt"] for r in rows], [r["max_residual"] for r in rows], "dt", "max_residual", seed=seed)
    finest = min(rows, key=lambda r: r["dt"])
    rep.metrics = {"finest_residual": finest["max_residual"], "order": rep.slope}
    reports = {"identity": rep}
    if p["flux"]:
        reports["flux"] = flux_scan(
            p["flux_theta"], p["flux_n"], p["flux_octaves"], _seed_list(seed, p["flux_seeds"]), p["flux_delta_cells"]
        )
    return Outcome(reports)


def run_decomposition_check(p, seed, out_dir):
    cfg = _solver_config(p)
    traj = dyn.integrate(_initial_flow(p, cfg.grid, seed), cfg)
    steps = round(p["span"] / cfg.snapshot_stride)
    m = MollifierSpec(p["delta_cells"] * cfg.grid.h)
    fine = dyn.pressure_decomposition_check(traj, m, 0, steps, 1)
    coarse = dyn.pressure_decomposition_check(traj, m, 0, steps, 2)
    rows = [
        {"quadrature_step": 2 * cfg.dt * cfg.snapshot_stride, "residual": coarse.residual},
        {"quadrature_step": cfg.dt * cfg.snapshot_stride, "residual": fine.residual},
    ]
    rep = fit_report("decomposition-check", [r["quadrature_step"] for r in rows], [r["residual"] for r in rows], "quadrature_step", "residual", seed=seed)
    rep.metrics = dict(
        residual=fine.residual,
        coarse_residual=coarse.residual,
        refinement_ratio=coarse.residual / fine.residual if fine.residual > 0 else float("inf"),
        lhs_norm=fine.lhs_norm,
        **{f"norm_{k}": v for k, v in fine.term_norms.items()},
    )
    return Outcome({"decomposition": rep})


RUNNERS = {
    "gen-field": run_gen_field,
    "mollify-scan": run_mollify_scan,
    "fraclap-check": run_fraclap_check,
    "commutator-check": run_commutator_check,
    "pressure-scan": run_pressure_scan,
    "extend-check": run_extend_check,
    "simulate": run_simulate,
    "energy-scan": run_energy_scan,
    "identity-check": run_identity_check,
    "decomposition-check": run_decomposition_check,
}


def run_experiment(experiment, raw_params, seed=0, out_dir=None):
    """Resolve, validate and run; returns (resolved parameters, Outcome)."""
    p = resolve_parameters(experiment, raw_params)
    validate(experiment, p, seed)
    outcome = RUNNERS[experiment](p, int(seed), out_dir)
    for rep in outcome.reports.values():
        rep.config = {k: list(v) if isinstance(v, tuple) else v for k, v in p.items()}
        rep.seed = int(seed)
    return p, outcome
