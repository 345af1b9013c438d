"""Decay certificates.

Two routes lead to a certificate for the envelope ``|u(t)| <= 1/mu(t)``:

``certify_closed_form``
    For power nonlinearities with constant or power-law dissipation and the
    matching envelope family, the master inequality reduces to finitely many
    scalar constraints, which are checked exactly (up to a round-off
    allowance of ``CLOSED_FORM_RTOL``).

``certify_grid``
    For anything evaluable, the residual

        r(t) = (1/mu)(gamma - mu'/mu) - alpha(t, 1/mu) - beta(t)

    is sampled on a grid. This is a sampled check, not an interval-rigorous
    proof; the certificate says so in ``note``.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, InfeasibleError
from .scalar_model import (
    ConstantProfile,
    ExponentialEnvelope,
    NonlinearityBound,
    PowerLawEnvelope,
    PowerLawProfile,
)

__all__ = [
    "Status",
    "Strictness",
    "Constraint",
    "FeasibilityReport",
    "Certificate",
    "exponential_params",
    "powerlaw_params",
    "certify_closed_form",
    "certify_grid",
    "optimize_rate",
    "master_residual",
    "log_grid",
]

CLOSED_FORM_RTOL = 1e-12
# relative to the magnitude of the residual's terms
GRID_ROUNDOFF_RTOL = 1e-12
TOL_REFINE = 1e-8
REFINE_ROUNDS = 2

SAMPLED_NOTE = "grid certificate: residual sampled on a finite grid, not interval-rigorous"


class Status(str, enum.Enum):
    CERTIFIED_CLOSED_FORM = "CertifiedClosedForm"
    CERTIFIED_GRID = "CertifiedGrid"
    REFUTED = "Refuted"
    INCONCLUSIVE = "Inconclusive"

    @property
    def certified(self):
        return self in (Status.CERTIFIED_CLOSED_FORM, Status.CERTIFIED_GRID)


class Strictness(str, enum.Enum):
    STRICT = "strict"
    NON_STRICT = "non-strict"


@dataclass(frozen=True)
class Constraint:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    description: str = ""


@dataclass(frozen=True)
class FeasibilityReport:
    constraints: tuple
    chosen_params: dict

    @property
    def all_satisfied(self):
        return all(c.satisfied for c in self.constraints)

    def failing(self):
        return [c.name for c in self.constraints if not c.satisfied]

    def to_dict(self):
        return {
            "constraints": [
                {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "satisfied": c.satisfied,
                 "description": c.description}
                for c in self.constraints
            ],
            "chosen_params": dict(self.chosen_params),
        }


@dataclass(frozen=True, eq=False)
class Certificate:
    envelope: object
    status: Status
    margin_min: Optional[float]
    grid: np.ndarray = field(default_factory=lambda: np.zeros(0))
    initial_ok: bool = False
    strictness: Strictness = Strictness.NON_STRICT
    g0: Optional[float] = None
    witness_t: Optional[float] = None
    failed_constraint: Optional[str] = None
    note: str = ""

    @property
    def certified(self):
        return self.status.certified

    def to_dict(self):
        return {
            "envelope": envelope_to_dict(self.envelope),
            "status": self.status.value,
            "margin_min": self.margin_min,
            "grid_points": int(np.size(self.grid)),
            "initial_ok": self.initial_ok,
            "strictness": self.strictness.value,
            "g0": self.g0,
            "witness_t": self.witness_t,
            "failed_constraint": self.failed_constraint,
            "note": self.note,
        }


def envelope_to_dict(env):
    if isinstance(env, ExponentialEnvelope):
        return {"family": "exponential", "lambda": env.lam, "b": env.b}
    if isinstance(env, PowerLawEnvelope):
        return {"family": "powerlaw", "lambda": env.lam, "nu": env.nu}
    if env is None:
        return None
    return {"family": getattr(env, "family", type(env).__name__)}


def _leq(lhs, rhs):
    return lhs <= rhs + CLOSED_FORM_RTOL * max(abs(lhs), abs(rhs), 1e-300)


def _initial_ok(g0, bound0, strictness):
    if strictness == Strictness.STRICT:
        return g0 < bound0
    return _leq(g0, bound0)


# ---------------------------------------------------------------------------
# closed-form parameter choices


def exponential_params(c0, p, kappa_abs, eps):
    """Envelope parameters for constant dissipation ``|kappa|``.

    Returns ``(lam, b)`` with ``b = |kappa| - eps`` and the smallest ``lam``
    making ``c0/lam**(p-1) + b <= |kappa|`` hold, i.e. with equality.
    """
    if not (c0 > 0 and p > 1 and kappa_abs > 0):
        raise DomainError("need c0 > 0, p > 1, kappa_abs > 0")
    if not 0 < eps < kappa_abs:
        raise DomainError(f"eps must lie in (0, {kappa_abs}), got {eps}")
    return (c0 / eps) ** (1.0 / (p - 1.0)), kappa_abs - eps


def powerlaw_params(c0, p, c1, q, eps):
    """Envelope parameters for power-law dissipation ``c1/(1+t)**q``.

    Returns ``(lam, nu)`` with ``nu = c1 - eps`` and ``lam = (c0/eps)**(1/(p-1))``.
    Raises InfeasibleError when ``(p-1) nu < q``.
    """
    if not (c0 > 0 and p > 1 and c1 > 0):
        raise DomainError("need c0 > 0, p > 1, c1 > 0")
    if q > 1:
        raise DomainError(f"power-law dissipation requires q <= 1, got {q}")
    if not 0 < eps < c1:
        raise DomainError(f"eps must lie in (0, {c1}), got {eps}")
    nu = c1 - eps
    if (p - 1.0) * nu < q:
        raise InfeasibleError(
            f"exponent floor violated: (p-1)(c1-eps) = {(p - 1.0) * nu} < q = {q}",
            constraint="exponent_floor",
        )
    return (c0 / eps) ** (1.0 / (p - 1.0)), nu


def _closed_form_constraints(alpha, gamma, env, g0, strictness):
    c0, p, lam = alpha.c0, alpha.p, env.lam
    budget = c0 / lam ** (p - 1.0)
    cons = []
    if isinstance(env, ExponentialEnvelope):
        lhs = budget + env.b
        cons.append(Constraint("rate_budget", lhs, gamma.kappa_abs, _leq(lhs, gamma.kappa_abs),
                               "c0/lambda^(p-1) + b <= |kappa|"))
    else:
        cons.append(Constraint("q_at_most_one", gamma.q, 1.0, gamma.q <= 1.0, "q <= 1"))
        floor = (p - 1.0) * env.nu
        cons.append(Constraint("exponent_floor", gamma.q, floor, _leq(gamma.q, floor),
                               "(p-1) nu >= q"))
        lhs = budget + env.nu
        cons.append(Constraint("rate_budget", lhs, gamma.c1, _leq(lhs, gamma.c1),
                               "c0/lambda^(p-1) + nu <= c1"))
    ok0 = _initial_ok(g0, 1.0 / lam, strictness)
    cons.append(Constraint("initial_ball", g0, 1.0 / lam, ok0,
                           ("g0 < 1/lambda" if strictness == Strictness.STRICT else "g0 <= 1/lambda")))
    return cons


def certify_closed_form(bound, gamma, env, g0, strictness=Strictness.NON_STRICT):
    """Check the finitely many scalar constraints of a closed-form family.

    Returns ``(Certificate, FeasibilityReport)``. Outside the supported
    combinations (power alpha, zero beta, constant gamma with exponential
    envelope or power-law gamma with power-law envelope) the certificate is
    Inconclusive and the report is empty; use ``certify_grid`` instead.
    """
    strictness = Strictness(strictness)
    if g0 < 0:
        raise DomainError("g0 must be non-negative")
    matched = (
        isinstance(bound, NonlinearityBound) and bound.is_power and not bound.has_forcing
        and (
            (isinstance(gamma, ConstantProfile) and isinstance(env, ExponentialEnvelope))
            or (isinstance(gamma, PowerLawProfile) and isinstance(env, PowerLawEnvelope))
        )
    )
    if not matched:
        cert = Certificate(
            envelope=env, status=Status.INCONCLUSIVE, margin_min=None, strictness=strictness,
            g0=float(g0), initial_ok=_initial_ok(g0, float(env.bound(0.0)), strictness),
            note="no closed form for this combination; use grid certification",
        )
        return cert, FeasibilityReport((), {})
    cons = _closed_form_constraints(bound.alpha, gamma, env, float(g0), strictness)
    params = {"lambda": env.lam}
    if isinstance(env, ExponentialEnvelope):
        params["b"] = env.b
        params["eps"] = gamma.kappa_abs - env.b
    else:
        params["nu"] = env.nu
        params["eps"] = gamma.c1 - env.nu
    report = FeasibilityReport(tuple(cons), params)
    failing = report.failing()
    initial_ok = next(c.satisfied for c in cons if c.name == "initial_ball")
    margin = min(c.rhs - c.lhs for c in cons if c.name == "rate_budget")
    cert = Certificate(
        envelope=env,
        status=Status.REFUTED if failing else Status.CERTIFIED_CLOSED_FORM,
        margin_min=margin,
        initial_ok=initial_ok,
        strictness=strictness,
        g0=float(g0),
        failed_constraint=failing[0] if failing else None,
        note="closed-form constraint check",
    )
    return cert, report


# ---------------------------------------------------------------------------
# grid route


def log_grid(horizon, n_points):
    """Points on [0, horizon], log-spaced in ``1 + t``; both ends included."""
    t = np.expm1(np.linspace(0.0, math.log1p(horizon), n_points))
    t[0], t[-1] = 0.0, horizon
    return t


def master_residual(bound, gamma, env, t):
    """Pointwise ``(1/mu)(gamma - mu'/mu) - alpha(t, 1/mu) - beta(t)`` and a term scale."""
    t = np.asarray(t, dtype=float)
    inv_mu = np.asarray(env.bound(t), dtype=float)
    gam = np.asarray(gamma(t), dtype=float)
    logd = np.asarray(env.log_derivative(t), dtype=float)
    a = np.asarray(bound.alpha_at(t, inv_mu), dtype=float)
    b = np.asarray(bound.beta_at(t), dtype=float)
    r = inv_mu * (gam - logd) - a - b
    scale = inv_mu * (np.abs(gam) + np.abs(logd)) + np.abs(a) + np.abs(b)
    return r, scale


def certify_grid(bound, gamma, env, g0, horizon=100.0, n_points=512, refine=True,
                 strictness=Strictness.NON_STRICT):
    """Sampled check of the master inequality plus the initial condition.

    A negative residual beyond the round-off allowance refutes the envelope
    and records the witness time. With ``refine``, a near-zero minimum
    triggers two rounds of bisection around the minimizer.
    """
    strictness = Strictness(strictness)
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    if n_points < 2:
        raise DomainError("n_points must be at least 2")
    if g0 < 0:
        raise DomainError("g0 must be non-negative")
    grid = log_grid(horizon, int(n_points))
    r, scale = master_residual(bound, gamma, env, grid)
    if refine:
        for _ in range(REFINE_ROUNDS):
            i = int(np.argmin(r))
            if not 0 <= r[i] < TOL_REFINE:
                break
            lo, hi = max(i - 1, 0), min(i + 1, grid.size - 1)
            new_t = np.unique([0.5 * (grid[lo] + grid[i]), 0.5 * (grid[i] + grid[hi])])
            new_t = new_t[~np.isin(new_t, grid)]
            if new_t.size == 0:
                break
            nr, ns = master_residual(bound, gamma, env, new_t)
            grid = np.concatenate([grid, new_t])
            order = np.argsort(grid)
            grid = grid[order]
            r = np.concatenate([r, nr])[order]
            scale = np.concatenate([scale, ns])[order]
    i = int(np.argmin(r))
    margin = float(r[i])
    violated = r < -GRID_ROUNDOFF_RTOL * scale
    initial_ok = _initial_ok(g0, float(env.bound(0.0)), strictness)
    witness = None
    failed = None
    if violated.any():
        status = Status.REFUTED
        j = int(np.argmin(np.where(violated, r, np.inf)))
        witness = float(grid[j])
        failed = "master_inequality"
    elif not initial_ok:
        status = Status.REFUTED
        failed = "initial_ball"
    else:
        status = Status.CERTIFIED_GRID
    grid.setflags(write=False)
    return Certificate(
        envelope=env,
        status=status,
        margin_min=margin,
        grid=grid,
        initial_ok=initial_ok,
        strictness=strictness,
        g0=float(g0),
        witness_t=witness,
        failed_constraint=failed,
        note=SAMPLED_NOTE,
    )


# ---------------------------------------------------------------------------
# tightest rate


def optimize_rate(bound, gamma, g0, strictness=Strictness.NON_STRICT):
    """Fastest certifiable decay for initial norm ``g0``.

    Pins ``lam = 1/g0`` and saturates the rate budget, giving
    ``b = |kappa| - c0 g0**(p-1)`` (constant dissipation) or
    ``nu = c1 - c0 g0**(p-1)`` (power-law dissipation). Returns
    ``(envelope, certificate)``; raises InfeasibleError naming the binding
    constraint when no positive rate exists.
    """
    if not (isinstance(bound, NonlinearityBound) and bound.is_power and not bound.has_forcing):
        raise DomainError("optimize_rate needs a power nonlinearity without forcing")
    if not g0 > 0:
        raise DomainError("g0 must be positive")
    c0, p = bound.alpha.c0, bound.alpha.p
    spend = c0 * g0 ** (p - 1.0)
    lam = 1.0 / g0
    if isinstance(gamma, ConstantProfile):
        b = gamma.kappa_abs - spend
        if not b > 0:
            raise InfeasibleError(
                f"rate budget exhausted: c0*g0^(p-1) = {spend} >= |kappa| = {gamma.kappa_abs}",
                constraint="rate_budget",
            )
        env = ExponentialEnvelope(lam, b)
    elif isinstance(gamma, PowerLawProfile):
        nu = gamma.c1 - spend
        if not nu > 0:
            raise InfeasibleError(
                f"rate budget exhausted: c0*g0^(p-1) = {spend} >= c1 = {gamma.c1}",
                constraint="rate_budget",
            )
        if (p - 1.0) * nu < gamma.q:
            raise InfeasibleError(
                f"exponent floor violated: (p-1)*nu = {(p - 1.0) * nu} < q = {gamma.q}",
                constraint="exponent_floor",
            )
        env = PowerLawEnvelope(lam, nu)
    else:
        raise DomainError("optimize_rate supports constant or power-law dissipation only")
    cert, _ = certify_closed_form(bound, gamma, env, g0, strictness)
    if cert.status != Status.CERTIFIED_CLOSED_FORM:
        raise InfeasibleError(f"optimized envelope failed its own check ({cert.failed_constraint})",
                              constraint=cert.failed_constraint)
    return env, cert
