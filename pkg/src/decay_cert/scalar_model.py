"""Scalar data of the comparison theory.

Three families of objects live here:

* dissipation profiles ``gamma(t) >= 0`` bounding ``Re(A(t)u, u) <= -gamma(t)|u|^2``,
* nonlinearity majorants ``alpha(t, v)`` together with a forcing ``beta(t)``,
* envelopes ``mu(t) > 0`` whose reciprocal bounds the solution norm.

All objects are frozen and evaluate elementwise on scalars or numpy arrays.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, RangeError

__all__ = [
    "ConstantProfile",
    "PowerLawProfile",
    "TabulatedProfile",
    "PowerAlpha",
    "GeneralAlpha",
    "NonlinearityBound",
    "ExponentialEnvelope",
    "PowerLawEnvelope",
    "TabulatedEnvelope",
    "evaluate_gamma",
    "integrating_factor",
    "log_integrating_factor",
    "envelope_bound",
    "DEFAULT_V_GRID",
]


def _as_float(t):
    arr = np.asarray(t, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _check_nonneg_time(t):
    if np.any(np.asarray(t) < 0):
        raise DomainError("time must be non-negative")


def _check_span(grid, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < grid[0]) or np.any(t_arr > grid[-1]):
        raise RangeError(f"time outside tabulated span [{grid[0]}, {grid[-1]}]")


def _as_grid(grid, values, name):
    g = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.ndim != 1 or g.shape != v.shape or g.size < 2:
        raise DomainError(f"{name}: grid and values must be 1-D of equal length >= 2")
    if np.any(np.diff(g) <= 0):
        raise DomainError(f"{name}: grid must be strictly increasing")
    g.setflags(write=False)
    v.setflags(write=False)
    return g, v


# ---------------------------------------------------------------------------
# dissipation profiles


@dataclass(frozen=True)
class ConstantProfile:
    """gamma(t) = kappa_abs."""

    kappa_abs: float

    def __post_init__(self):
        if not self.kappa_abs > 0:
            raise DomainError("ConstantProfile requires kappa_abs > 0")

    def __call__(self, t):
        _check_nonneg_time(t)
        return _as_float(np.full(np.shape(t), float(self.kappa_abs)))

    def log_integrating_factor(self, t):
        _check_nonneg_time(t)
        return _as_float(self.kappa_abs * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class PowerLawProfile:
    """gamma(t) = c1 / (1 + t)**q with q <= 1."""

    c1: float
    q: float

    def __post_init__(self):
        if not self.c1 > 0:
            raise DomainError("PowerLawProfile requires c1 > 0")
        if not self.q <= 1:
            raise DomainError(f"PowerLawProfile requires q <= 1, got q={self.q}")

    def __call__(self, t):
        _check_nonneg_time(t)
        return _as_float(self.c1 * (1.0 + np.asarray(t, dtype=float)) ** -self.q)

    def log_integrating_factor(self, t):
        _check_nonneg_time(t)
        s = 1.0 + np.asarray(t, dtype=float)
        if self.q == 1:
            out = self.c1 * np.log(s)
        else:
            # expm1/log1p form keeps precision for q close to 1
            e = 1.0 - self.q
            out = self.c1 * np.expm1(e * np.log(s)) / e
        return _as_float(out)


@dataclass(frozen=True, eq=False)
class TabulatedProfile:
    """Piecewise-linear gamma on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g, v = _as_grid(self.grid, self.values, "TabulatedProfile")
        if np.any(v < 0):
            raise DomainError("TabulatedProfile values must be non-negative")
        if g[0] != 0.0:
            raise DomainError("TabulatedProfile grid must start at t = 0")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(g) * (v[1:] + v[:-1]))])
        cum.setflags(write=False)
        object.__setattr__(self, "_cumulative", cum)

    def __call__(self, t):
        _check_nonneg_time(t)
        _check_span(self.grid, t)
        return _as_float(np.interp(t, self.grid, self.values))

    def log_integrating_factor(self, t):
        _check_nonneg_time(t)
        _check_span(self.grid, t)
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        i = np.clip(np.searchsorted(self.grid, t_arr, side="right") - 1, 0, len(self.grid) - 2)
        dt = t_arr - self.grid[i]
        g_i = self.values[i]
        slope = (self.values[i + 1] - g_i) / (self.grid[i + 1] - self.grid[i])
        out = self._cumulative[i] + g_i * dt + 0.5 * slope * dt * dt
        return float(out[0]) if np.ndim(t) == 0 else out


def evaluate_gamma(profile, t):
    """Value of the dissipation profile at ``t >= 0``."""
    return profile(t)


def log_integrating_factor(profile, t):
    """``log a(t) = int_0^t gamma(s) ds``; safe for long horizons."""
    return profile.log_integrating_factor(t)


def integrating_factor(profile, t):
    """``a(t) = exp(int_0^t gamma(s) ds)``.

    Closed form for constant and power-law profiles; the tabulated case
    integrates the piecewise-linear interpolant exactly.
    """
    return _as_float(np.exp(profile.log_integrating_factor(t)))


# ---------------------------------------------------------------------------
# nonlinearity majorants

DEFAULT_V_GRID = np.logspace(-12, 3, 256)
DEFAULT_T_SAMPLES = (0.0, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class PowerAlpha:
    """alpha(t, v) = c0 * v**p with p > 1."""

    c0: float
    p: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise DomainError("PowerAlpha requires c0 > 0")
        if not self.p > 1:
            raise DomainError("PowerAlpha requires p > 1")

    def __call__(self, t, v):
        v = np.maximum(np.asarray(v, dtype=float), 0.0)
        return _as_float(self.c0 * v ** self.p)


@dataclass(frozen=True, eq=False)
class GeneralAlpha:
    """A black-box majorant ``func(t, v)``, sampled for monotonicity in ``v``.

    The check runs on ``v_grid`` at each time in ``t_samples``; it cannot prove
    monotonicity, only catch obvious violations.
    """

    func: Callable[[float, float], float]
    v_grid: Optional[Sequence[float]] = None
    t_samples: Sequence[float] = DEFAULT_T_SAMPLES
    monotone_checked: bool = field(default=False, init=False)

    def __post_init__(self):
        v = np.sort(np.asarray(DEFAULT_V_GRID if self.v_grid is None else self.v_grid, dtype=float))
        for t in self.t_samples:
            vals = np.array([self.func(t, x) for x in v], dtype=float)
            if np.any(vals < 0):
                raise DomainError(f"alpha(t, v) must be non-negative (t={t})")
            bad = np.nonzero(np.diff(vals) < 0)[0]
            if bad.size:
                raise DomainError(
                    f"alpha(t, v) is not non-decreasing in v: t={t}, v={v[bad[0]]} -> {v[bad[0] + 1]}"
                )
        object.__setattr__(self, "monotone_checked", True)

    def __call__(self, t, v):
        if np.ndim(t) == 0 and np.ndim(v) == 0:
            return float(self.func(float(t), max(float(v), 0.0)))
        t_b, v_b = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(v, dtype=float))
        return np.array([self.func(a, max(b, 0.0)) for a, b in zip(t_b.ravel(), v_b.ravel())]).reshape(t_b.shape)


def _zero_beta(t):
    return _as_float(np.zeros(np.shape(t)))


@dataclass(frozen=True)
class NonlinearityBound:
    """Majorant pair: ``|F(t, u)| <= alpha(t, |u|)`` plus forcing ``beta(t)``."""

    alpha: object
    beta: Optional[Callable] = None

    def __post_init__(self):
        if not isinstance(self.alpha, (PowerAlpha, GeneralAlpha)):
            raise DomainError("alpha must be PowerAlpha or GeneralAlpha")

    @classmethod
    def power(cls, c0, p):
        return cls(PowerAlpha(c0, p))

    @property
    def is_power(self):
        return isinstance(self.alpha, PowerAlpha)

    @property
    def has_forcing(self):
        return self.beta is not None

    def alpha_at(self, t, v):
        return self.alpha(t, v)

    def beta_at(self, t):
        if self.beta is None:
            return _zero_beta(t)
        out = np.asarray(self.beta(t), dtype=float)
        if np.any(out < 0):
            raise DomainError("beta(t) must be non-negative")
        return _as_float(out)


# ---------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True)
class ExponentialEnvelope:
    """mu(t) = lam * exp(b t)."""

    lam: float
    b: float

    def __post_init__(self):
        if not (self.lam > 0 and self.b > 0):
            raise DomainError("ExponentialEnvelope requires lam > 0 and b > 0")

    @property
    def family(self):
        return "exponential"

    @property
    def rate(self):
        return self.b

    def mu(self, t):
        return _as_float(self.lam * np.exp(self.b * np.asarray(t, dtype=float)))

    def bound(self, t):
        return _as_float(np.exp(-self.b * np.asarray(t, dtype=float)) / self.lam)

    def log_derivative(self, t):
        return _as_float(np.full(np.shape(t), float(self.b)))


@dataclass(frozen=True)
class PowerLawEnvelope:
    """mu(t) = lam * (1 + t)**nu."""

    lam: float
    nu: float

    def __post_init__(self):
        if not (self.lam > 0 and self.nu > 0):
            raise DomainError("PowerLawEnvelope requires lam > 0 and nu > 0")

    @property
    def family(self):
        return "powerlaw"

    @property
    def rate(self):
        return self.nu

    def mu(self, t):
        return _as_float(self.lam * (1.0 + np.asarray(t, dtype=float)) ** self.nu)

    def bound(self, t):
        return _as_float((1.0 + np.asarray(t, dtype=float)) ** -self.nu / self.lam)

    def log_derivative(self, t):
        return _as_float(self.nu / (1.0 + np.asarray(t, dtype=float)))


@dataclass(frozen=True, eq=False)
class TabulatedEnvelope:
    """Envelope sampled on a grid.

    ``log mu`` is interpolated linearly, so the bound is exact at the nodes
    and geometric in between; the log-derivative is a second-order finite
    difference of ``log mu`` at the nodes, interpolated linearly.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g, v = _as_grid(self.grid, self.values, "TabulatedEnvelope")
        if np.any(~(v > 0)) or np.any(~np.isfinite(v)):
            raise DomainError("TabulatedEnvelope values must be positive and finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        logv = np.log(v)
        dlog = np.gradient(logv, g, edge_order=2) if g.size >= 3 else np.full(2, (logv[1] - logv[0]) / (g[1] - g[0]))
        logv.setflags(write=False)
        dlog.setflags(write=False)
        object.__setattr__(self, "_log_values", logv)
        object.__setattr__(self, "_dlog", dlog)

    @classmethod
    def from_bound(cls, grid, bound_values):
        return cls(grid, 1.0 / np.asarray(bound_values, dtype=float))

    @property
    def family(self):
        return "tabulated"

    @property
    def rate(self):
        return None

    def mu(self, t):
        _check_span(self.grid, t)
        return _as_float(np.exp(np.interp(t, self.grid, self._log_values)))

    def bound(self, t):
        _check_span(self.grid, t)
        t_arr = np.asarray(t, dtype=float)
        # nodes return the stored reciprocal exactly
        out = np.exp(-np.interp(t_arr, self.grid, self._log_values))
        idx = np.searchsorted(self.grid, t_arr)
        idx = np.clip(idx, 0, len(self.grid) - 1)
        hit = self.grid[idx] == t_arr
        out = np.where(hit, 1.0 / self.values[idx], out)
        return _as_float(out)

    def log_derivative(self, t):
        _check_span(self.grid, t)
        return _as_float(np.interp(t, self.grid, self._dlog))


def envelope_bound(env, t):
    """The decay bound ``1/mu(t)``."""
    _check_nonneg_time(t)
    return env.bound(t)
