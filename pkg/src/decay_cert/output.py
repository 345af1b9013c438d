"""Run reports, CSV trajectories and the SVG decay plot.

All outputs are deterministic for fixed inputs: no timestamps, fixed float
formatting, canonical JSON key order.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .certifier import log_grid

__all__ = ["RunReport", "emit_csv", "emit_svg", "fmt17"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REFUTED = 2
EXIT_DOMINANCE = 3


def fmt17(x):
    """17 significant digits; lossless for binary64."""
    return format(float(x), ".17g")


@dataclass
class RunReport:
    scenario: str
    command: str
    exit_status: int
    verdict: str
    certificate: Optional[dict] = None
    feasibility: Optional[dict] = None
    dominance: Optional[dict] = None
    integrator: Optional[dict] = None
    messages: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def emit_csv(traj, env, path, grid=None):
    """Write ``t, g, bound, margin`` rows (``margin = bound - g``).

    Without a trajectory, the envelope is tabulated on ``grid`` (or a default
    log grid) and the ``g``/``margin`` cells are left empty.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["t", "g", "bound", "margin"])
        if traj is not None:
            ts = traj.times
            g = traj.values
            b = np.asarray(env.bound(ts), dtype=float)
            for t, gi, bi in zip(ts, g, b):
                w.writerow([fmt17(t), fmt17(gi), fmt17(bi), fmt17(bi - gi)])
        else:
            ts = np.asarray(grid if grid is not None and len(grid) else log_grid(100.0, 512))
            for t, bi in zip(ts, np.asarray(env.bound(ts), dtype=float)):
                w.writerow([fmt17(t), "", fmt17(bi), ""])


_W, _H = 800, 500
_ML, _MR, _MT, _MB = 80, 30, 40, 60


def _decimate(n, limit=4000):
    if n <= limit:
        return np.arange(n)
    idx = np.unique(np.linspace(0, n - 1, limit).round().astype(int))
    return idx


def emit_svg(traj, env, path, horizon=None, violation=None, refutation=None, title=""):
    """Single-figure SVG: envelope and trajectory on a log vertical axis.

    ``violation`` and ``refutation`` are ``(t, value)`` markers. The envelope
    polyline shares its abscissae with the trajectory polyline, so a dominated
    trajectory never crosses it on screen.
    """
    if traj is not None:
        idx = _decimate(traj.times.size)
        ts = traj.times[idx]
        gs = traj.values[idx]
        horizon = float(traj.times[-1]) if horizon is None else horizon
    else:
        horizon = 100.0 if horizon is None else horizon
        ts = log_grid(horizon, 400)
        gs = None
    bs = np.asarray(env.bound(ts), dtype=float)
    hi = float(np.max(bs)) if gs is None else max(float(np.max(bs)), float(np.max(gs)))
    positives = bs[bs > 0]
    if gs is not None:
        positives = np.concatenate([positives, gs[gs > 0]])
    lo = float(np.min(positives)) if positives.size else hi * 1e-3
    lo = max(lo, hi * 1e-15)
    y_hi = math.ceil(math.log10(hi))
    y_lo = math.floor(math.log10(lo))
    if y_hi == y_lo:
        y_lo -= 1
    x_max = horizon if horizon > 0 else 1.0
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def X(t):
        return _ML + pw * (float(t) / x_max)

    def Y(v):
        v = max(float(v), 10.0 ** y_lo)
        return _MT + ph * (y_hi - math.log10(v)) / (y_hi - y_lo)

    def pts(xs, ys):
        return " ".join(f"{X(a):.3f},{Y(b):.3f}" for a, b in zip(xs, ys))

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for d in range(y_lo, y_hi + 1):
        y = Y(10.0 ** d)
        out.append(f'<line x1="{_ML}" y1="{y:.3f}" x2="{_ML + pw}" y2="{y:.3f}" stroke="#dddddd"/>')
        out.append(f'<text x="{_ML - 8}" y="{y + 4:.3f}" font-size="11" text-anchor="end">1e{d}</text>')
    for k in range(6):
        t = x_max * k / 5
        out.append(f'<text x="{X(t):.3f}" y="{_MT + ph + 18}" font-size="11" text-anchor="middle">{t:.4g}</text>')
    out.append(f'<text x="{_ML + pw / 2:.1f}" y="{_H - 15}" font-size="13" text-anchor="middle">t</text>')
    if title:
        out.append(f'<text x="{_ML + pw / 2:.1f}" y="{_MT - 15}" font-size="14" text-anchor="middle">{title}</text>')
    out.append(f'<polyline id="envelope" fill="none" stroke="#1f77b4" stroke-width="1.5" '
               f'stroke-dasharray="6,3" points="{pts(ts, bs)}"/>')
    if gs is not None:
        out.append(f'<polyline id="trajectory" fill="none" stroke="#d62728" stroke-width="1.5" '
                   f'points="{pts(ts, gs)}"/>')
    if violation is not None:
        t, v = violation
        out.append(f'<circle id="violation" class="violation" data-t="{fmt17(t)}" cx="{X(t):.3f}" '
                   f'cy="{Y(v):.3f}" r="5" fill="none" stroke="black" stroke-width="2"/>')
    if refutation is not None:
        t, v = refutation
        out.append(f'<rect id="refutation" class="refutation" data-t="{fmt17(t)}" x="{X(t) - 4:.3f}" '
                   f'y="{Y(v) - 4:.3f}" width="8" height="8" fill="orange" stroke="black"/>')
    ly = _MT + 15
    out.append(f'<line x1="{_ML + pw - 150}" y1="{ly}" x2="{_ML + pw - 120}" y2="{ly}" stroke="#1f77b4" '
               f'stroke-dasharray="6,3"/>')
    out.append(f'<text x="{_ML + pw - 115}" y="{ly + 4}" font-size="11">envelope 1/mu(t)</text>')
    if gs is not None:
        out.append(f'<line x1="{_ML + pw - 150}" y1="{ly + 16}" x2="{_ML + pw - 120}" y2="{ly + 16}" '
                   f'stroke="#d62728"/>')
        out.append(f'<text x="{_ML + pw - 115}" y="{ly + 20}" font-size="11">trajectory g(t)</text>')
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
