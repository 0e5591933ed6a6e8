"""Command line: ``holderlab <experiment> --config <path> [--out <dir>] [--seed <u64>]``.

The config is an INI file::

    [experiment]
    name = mollify-scan        ; optional, must match the command if given
    seed = 0                   ; optional, --seed wins

    [parameters]
    theta = 0.4
    delta_exponents = 3, 4, 5, 6, 7, 8

    [acceptance]
    c0_error.slope = 0.25, 0.55    ; report.field = low, high (either may be blank)

Exit codes: 0 success, 1 acceptance failure, 2 invalid config,
3 numerical failure.  ``HOLDERLAB_OUT`` sets the default output directory
and ``HOLDERLAB_THREADS`` the FFT worker count.
"""

import argparse
import configparser
import datetime
import json
import math
import os
import sys

import scipy.fft as sfft

from . import __version__
from .dynamics import NumericalFailure
from .experiments import EXPERIMENTS, ConfigError, run_experiment
from .operators import UnderResolvedError

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

REPORT_FIELDS = ("slope", "intercept", "r_squared")


def load_config(path):
    """(name or None, seed or None, raw parameter dict, acceptance rules)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    unknown = sorted(set(cp.sections()) - {"experiment", "parameters", "acceptance"})
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
    name = seed = None
    if cp.has_section("experiment"):
        sec = cp["experiment"]
        extra = sorted(set(sec) - {"name", "seed"})
        if extra:
            raise ConfigError(f"unknown key(s) in [experiment]: {', '.join(extra)}")
        name = sec.get("name")
        if "seed" in sec:
            seed = parse_seed(sec["seed"])
    params = dict(cp["parameters"]) if cp.has_section("parameters") else {}
    rules = parse_acceptance(dict(cp["acceptance"])) if cp.has_section("acceptance") else []
    return name, seed, params, rules


def parse_seed(text):
    try:
        seed = int(str(text), 0)
    except ValueError as exc:
        raise ConfigError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def parse_acceptance(section):
    """Rules ``(report or None, field, low or None, high or None)``."""
    rules = []
    for key, value in section.items():
        report, _, fld = key.rpartition(".")
        parts = [v.strip() for v in value.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"acceptance {key}: expected 'low, high', got {value!r}")
        try:
            lo, hi = (float(v) if v else None for v in parts)
        except ValueError as exc:
            raise ConfigError(f"acceptance {key}: {exc}") from exc
        if lo is None and hi is None:
            raise ConfigError(f"acceptance {key}: give at least one bound")
        rules.append((report or None, fld, lo, hi))
    return rules


def _lookup(outcome, report, fld):
    if report is None:
        if len(outcome.reports) != 1:
            raise ConfigError(f"acceptance {fld}: name a report, one of {', '.join(outcome.reports)}")
        report = next(iter(outcome.reports))
    if report not in outcome.reports:
        raise ConfigError(f"acceptance: unknown report {report!r}; have {', '.join(outcome.reports)}")
    rep = outcome.reports[report]
    if fld in REPORT_FIELDS:
        return report, getattr(rep, fld)
    if fld not in rep.metrics:
        raise ConfigError(f"acceptance: report {report!r} has no metric {fld!r}")
    return report, rep.metrics[fld]


def check_acceptance(outcome, rules):
    checks = []
    for report, fld, lo, hi in rules:
        name, value = _lookup(outcome, report, fld)
        try:
            v = float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"acceptance {name}.{fld}: metric is not numeric") from exc
        ok = math.isfinite(v) and (lo is None or v >= lo) and (hi is None or v <= hi)
        checks.append({"check": f"{name}.{fld}", "value": v, "low": lo, "high": hi, "passed": ok})
    return checks


def write_outputs(out_dir, experiment, params, seed, outcome, checks, timestamp):
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, rep in outcome.reports.items():
        base = os.path.join(out_dir, f"{experiment}.{name}")
        with open(base + ".json", "w") as fh:
            fh.write(rep.to_json())
        written.append(base + ".json")
        csv_text = rep.to_csv()
        if csv_text:
            with open(base + ".csv", "w") as fh:
                fh.write(csv_text)
            written.append(base + ".csv")
        svg = rep.to_svg()
        if svg:
            with open(base + ".svg", "w") as fh:
                fh.write(svg)
            written.append(base + ".svg")
    summary = {
        "experiment": experiment,
        "seed": seed,
        "version": __version__,
        "parameters": {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()},
        "acceptance": checks,
        "passed": all(c["passed"] for c in checks),
        "reports": sorted(outcome.reports),
        "timestamp": timestamp,
    }
    with open(os.path.join(out_dir, f"{experiment}.summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written


def build_parser():
    ap = argparse.ArgumentParser(prog="holderlab", description="Hoelder-regularity numerical experiments.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="INI file with [parameters] and [acceptance]")
    ap.add_argument("--out", default=None, help="output directory (default $HOLDERLAB_OUT or ./holderlab-out)")
    ap.add_argument("--seed", default=None, help="unsigned 64-bit seed, overrides the config")
    ap.add_argument("--version", action="version", version=f"holderlab {__version__}")
    return ap


def _threads():
    text = os.environ.get("HOLDERLAB_THREADS")
    if not text:
        return os.cpu_count() or 1
    try:
        value = int(text)
    except ValueError as exc:
        raise ConfigError(f"HOLDERLAB_THREADS must be an integer, got {text!r}") from exc
    if value < 1:
        raise ConfigError("HOLDERLAB_THREADS must be >= 1")
    return value


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        name, cfg_seed, params, rules = load_config(args.config)
        if name is not None and name != args.experiment:
            raise ConfigError(f"config is for {name!r}, not {args.experiment!r}")
        seed = parse_seed(args.seed) if args.seed is not None else (cfg_seed or 0)
        out_dir = args.out or os.environ.get("HOLDERLAB_OUT") or "holderlab-out"
        workers = _threads()
        with sfft.set_workers(workers):
            resolved, outcome = run_experiment(args.experiment, params, seed, out_dir=_ensure(out_dir))
        checks = check_acceptance(outcome, rules)
    except ConfigError as exc:
        print(f"holderlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, UnderResolvedError, FloatingPointError, ArithmeticError) as exc:
        print(f"holderlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"holderlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    write_outputs(out_dir, args.experiment, resolved, seed, outcome, checks, stamp)
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['check']} = {c['value']:.6g} (low={c['low']}, high={c['high']})")
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_ACCEPTANCE


def _ensure(path):
    os.makedirs(path, exist_ok=True)
    return path


if __name__ == "__main__":
    sys.exit(main())
