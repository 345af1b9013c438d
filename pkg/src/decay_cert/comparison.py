"""Scalar comparison machinery.

The extremal ODE ``g' = -gamma(t) g + alpha(t, g) + beta(t)`` majorizes every
function obeying the corresponding differential inequality. Integrating it
and checking the result against an envelope gives a numerical witness that
is independent of the certificate's algebra.

The ODE is integrated in ``g`` rather than in ``v = g a(t)``: the integrating
factor grows exponentially and overflows on long horizons, while ``g`` stays
under the envelope. ``transform_v`` rebuilds ``v`` for short diagnostics.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _backend
from ._dopri import BLOWUP_CAP, STATUS_OK, dense_eval, dopri_scalar
from ._pykernels import GAMMA_CONSTANT, GAMMA_POWERLAW
from .errors import DomainError
from .scalar_model import ConstantProfile, PowerLawProfile, integrating_factor

__all__ = [
    "ScalarTrajectory",
    "DominanceReport",
    "solve_extremal",
    "verify_envelope",
    "transform_v",
    "DEFAULT_RTOL",
    "DEFAULT_ATOL",
    "DENSE_POINTS_PER_STEP",
]

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
DENSE_POINTS_PER_STEP = 8


@dataclass(frozen=True, eq=False)
class ScalarTrajectory:
    """Nonnegative scalar trajectory with dense output.

    ``dense`` maps an array of times inside ``[times[0], times[-1]]`` to
    values. Stored and dense values are clipped at zero.
    """

    times: np.ndarray
    values: np.ndarray
    dense: Optional[Callable] = None
    blowup: bool = False
    blowup_time: Optional[float] = None
    n_steps: int = 0
    n_rejected: int = 0
    n_evals: int = 0
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    backend: str = "python"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.maximum(np.asarray(self.values, dtype=float), 0.0)
        if t.ndim != 1 or t.shape != v.shape:
            raise DomainError("times and values must be 1-D arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DomainError("trajectory times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def t_end(self):
        return float(self.times[-1])

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.times[0]) or np.any(t_arr > self.times[-1]):
            raise DomainError("evaluation outside the trajectory span")
        if self.dense is None or self.times.size < 2:
            out = np.interp(t_arr, self.times, self.values)
        else:
            out = self.dense(t_arr)
        out = np.maximum(np.asarray(out, dtype=float), 0.0)
        return float(out) if out.ndim == 0 else out

    def sample_times(self, per_step=DENSE_POINTS_PER_STEP):
        """Stored times plus ``per_step`` interior points in every step."""
        if self.times.size < 2:
            return self.times.copy()
        th = np.arange(1, per_step + 1) / (per_step + 1)
        h = np.diff(self.times)
        inner = (self.times[:-1, None] + h[:, None] * th[None, :]).ravel()
        return np.sort(np.concatenate([self.times, inner]))

    def stats(self):
        return {
            "steps": int(self.n_steps),
            "rejected": int(self.n_rejected),
            "evaluations": int(self.n_evals),
            "blowup": bool(self.blowup),
            "blowup_time": self.blowup_time,
            "t_end": self.t_end,
            "backend": self.backend,
        }


@dataclass(frozen=True)
class DominanceReport:
    passed: bool
    max_violation: float
    t_worst: float
    tolerance: float
    n_checked: int
    reached_horizon: bool = True
    scaled_max_violation: Optional[float] = None

    def to_dict(self):
        return {
            "passed": self.passed,
            "max_violation": self.max_violation,
            "t_worst": self.t_worst,
            "tolerance": self.tolerance,
            "n_checked": self.n_checked,
            "reached_horizon": self.reached_horizon,
        }


def _coeff_dense(times, coeffs):
    def dense(t):
        return dense_eval(times, coeffs, t)
    return dense


def _kernel_args(bound, gamma):
    """Parameters for the specialized kernel, or None if it does not apply."""
    if not (bound.is_power and not bound.has_forcing):
        return None
    if isinstance(gamma, ConstantProfile):
        return GAMMA_CONSTANT, float(gamma.kappa_abs), 0.0
    if isinstance(gamma, PowerLawProfile):
        return GAMMA_POWERLAW, float(gamma.c1), float(gamma.q)
    return None


def solve_extremal(bound, gamma, g0, horizon, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                   backend=None, cap=BLOWUP_CAP):
    """Integrate the extremal scalar ODE from ``g(0) = g0`` up to ``horizon``.

    Uses an adaptive Dormand-Prince 5(4) pair with dense output. If ``g``
    exceeds ``cap * max(1, g0)`` the integration stops; the partial trajectory is returned
    with ``blowup`` set and ``blowup_time`` at the crossing.

    ``backend`` picks the kernel for power nonlinearities with constant or
    power-law dissipation ("cython", "python", or None for the active one);
    other inputs always take the generic pure-Python path.
    """
    if g0 < 0:
        raise DomainError("g0 must be non-negative")
    if not (rtol > 0 and atol > 0):
        raise DomainError("tolerances must be positive")
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    cap = float(cap) * max(1.0, float(g0))
    args = _kernel_args(bound, gamma)
    if args is not None:
        kernel = _backend.get_kernel(backend)
        used = backend or _backend.BACKEND
        kind, g1, g2 = args
        alpha = bound.alpha
        times, values, coeffs, n_rej, n_ev, status = kernel(
            kind, g1, g2, float(alpha.c0), float(alpha.p), float(g0), float(horizon),
            float(rtol), float(atol), float(cap))
    else:
        used = "python"

        def rhs(t, g):
            gp = g if g > 0.0 else 0.0
            return -float(gamma(t)) * g + float(bound.alpha_at(t, gp)) + float(bound.beta_at(t))

        times, values, coeffs, n_rej, n_ev, status = dopri_scalar(
            rhs, 0.0, float(g0), float(horizon), rtol, atol, cap=cap, nonneg=True)
    blown = status != STATUS_OK
    return ScalarTrajectory(
        times=times,
        values=values,
        dense=_coeff_dense(times, coeffs),
        blowup=blown,
        blowup_time=float(times[-1]) if blown else None,
        n_steps=len(times) - 1,
        n_rejected=int(n_rej),
        n_evals=int(n_ev),
        rtol=rtol,
        atol=atol,
        backend=used,
    )


def verify_envelope(traj, env, gamma=None, tol=None, per_step=DENSE_POINTS_PER_STEP):
    """Check ``g(t) <= 1/mu(t)`` on stored and dense-output points.

    The tolerance defaults to ``10 * traj.atol``. ``max_violation`` is the
    signed maximum of ``g - 1/mu`` (negative when the envelope has room).
    When ``gamma`` is supplied, the same comparison in the scaled variables
    ``v = a g`` against ``eta = a/mu`` is reported as well; that number is
    only meaningful on horizons where ``a`` does not overflow.
    A trajectory that blew up before the horizon fails.
    """
    tol = 10.0 * traj.atol if tol is None else tol
    ts = traj.sample_times(per_step)
    g = np.asarray(traj(ts), dtype=float)
    bound = np.asarray(env.bound(ts), dtype=float)
    diff = g - bound
    i = int(np.argmax(diff))
    worst = float(diff[i])
    scaled = None
    if gamma is not None:
        with np.errstate(over="ignore", invalid="ignore"):
            a = np.asarray(integrating_factor(gamma, ts), dtype=float)
            sd = a * diff
        if np.all(np.isfinite(sd)):
            scaled = float(np.max(sd))
    reached = not traj.blowup
    return DominanceReport(
        passed=bool(worst <= tol and reached),
        max_violation=worst,
        t_worst=float(ts[i]),
        tolerance=float(tol),
        n_checked=int(ts.size),
        reached_horizon=reached,
        scaled_max_violation=scaled,
    )


def transform_v(traj, gamma):
    """The scaled trajectory ``v(t) = g(t) a(t)`` with ``a = exp(int gamma)``."""
    a_stored = np.asarray(integrating_factor(gamma, traj.times), dtype=float)
    base = traj

    def dense(t):
        return np.asarray(base(t), dtype=float) * np.asarray(integrating_factor(gamma, t), dtype=float)

    return ScalarTrajectory(
        times=traj.times,
        values=traj.values * a_stored,
        dense=dense,
        blowup=traj.blowup,
        blowup_time=traj.blowup_time,
        n_steps=traj.n_steps,
        n_rejected=traj.n_rejected,
        n_evals=traj.n_evals,
        rtol=traj.rtol,
        atol=traj.atol,
        backend=traj.backend,
    )
