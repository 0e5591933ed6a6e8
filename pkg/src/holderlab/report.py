"""Scaling reports: log-log fits with their rung tables, as JSON, CSV and SVG."""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__


@dataclass
class ScalingReport:
    """Outcome of one ladder experiment.

    ``rungs`` is a list of flat dicts (one per ladder rung or seed);
    ``metrics`` holds named scalar results that acceptance checks refer to.
    """

    experiment: str
    slope: float = float("nan")
    intercept: float = float("nan")
    r_squared: float = float("nan")
    rungs: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int = 0
    x_key: str = ""
    y_key: str = ""
    version: str = __version__

    def to_dict(self, timestamp=None):
        out = {
            "experiment": self.experiment,
            "slope": _clean(self.slope),
            "intercept": _clean(self.intercept),
            "r_squared": _clean(self.r_squared),
            "metrics": {k: _clean(v) for k, v in sorted(self.metrics.items())},
            "rungs": [{k: _clean(v) for k, v in row.items()} for row in self.rungs],
            "config": {k: _clean(v) for k, v in sorted(self.config.items())},
            "seed": self.seed,
            "version": self.version,
        }
        if timestamp is not None:
            out["timestamp"] = timestamp
        return out

    def to_json(self, timestamp=None):
        return json.dumps(self.to_dict(timestamp), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        if self.rungs:
            keys = list(self.rungs[0].keys())
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(keys)
            for row in self.rungs:
                w.writerow([_fmt(row.get(k)) for k in keys])
        return buf.getvalue()

    def to_svg(self, width=480, height=360):
        if not (self.x_key and self.y_key and self.rungs):
            return None
        xs = [r[self.x_key] for r in self.rungs]
        ys = [r[self.y_key] for r in self.rungs]
        return loglog_svg(xs, ys, self.x_key, self.y_key, self.slope, self.intercept, width, height)


def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    return v


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def fit_report(experiment, xs, ys, x_key, y_key, extra_rows=None, **kw):
    """ScalingReport with the least-squares log-log line through (xs, ys)."""
    from .norms import fit_loglog

    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    good = (xs > 0) & (ys > 0)
    if good.sum() >= 2:
        slope, intercept, r2 = fit_loglog(xs[good], ys[good])
    else:
        slope = intercept = r2 = float("nan")
    rows = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        row = {x_key: float(x), y_key: float(y)}
        if extra_rows:
            row.update(extra_rows[i])
        rows.append(row)
    return ScalingReport(experiment, slope, intercept, r2, rows, x_key=x_key, y_key=y_key, **kw)


def loglog_svg(xs, ys, xlabel, ylabel, slope=None, intercept=None, width=480, height=360):
    """Self-contained SVG of a log-log point set with an optional fit line."""
    pts = [(math.log10(x), math.log10(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if not pts:
        return None
    m = 50
    lx = [p[0] for p in pts]
    ly = [p[1] for p in pts]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return m + (v - x0) / (x1 - x0) * (width - 2 * m)

    def sy(v):
        return height - m - (v - y0) / (y1 - y0) * (height - 2 * m)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>',
    ]
    for px, py in pts:
        parts.append(f'<circle cx="{sx(px):.2f}" cy="{sy(py):.2f}" r="3" fill="steelblue"/>')
    if slope is not None and intercept is not None and math.isfinite(slope) and math.isfinite(intercept):
        f = lambda v: (slope * v * math.log(10) + intercept) / math.log(10)  # noqa: E731
        parts.append(
            f'<line x1="{sx(x0):.2f}" y1="{sy(f(x0)):.2f}" x2="{sx(x1):.2f}" y2="{sy(f(x1)):.2f}" '
            'stroke="firebrick" stroke-dasharray="4 3"/>'
        )
        parts.append(f'<text x="{width - m}" y="{m - 10}" text-anchor="end" font-size="12">slope {slope:.3f}</text>')
    parts.append(f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">log10 {xlabel}</text>')
    parts.append(
        f'<text x="14" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2})">log10 {ylabel}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
