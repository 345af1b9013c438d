"""Scenario files: a JSON key tree describing one certification/simulation run.

Example::

    {
      "name": "heat-truncation",
      "system": {"name": "heat-truncation", "params": {"K": 3}},
      "nonlinearity": {"c0": 1.0, "p": 3.0},
      "gamma": {"kind": "powerlaw", "c1": 1.0, "q": 0.5},
      "envelope": {"mode": "auto", "eps": 0.01},
      "initial": {"g0": 0.1},
      "time": {"horizon": 100.0, "rtol": 1e-9, "atol": 1e-12, "grid_points": 512},
      "outputs": {"csv": "traj.csv", "svg": "decay.svg", "report": "report.json"}
    }

``system`` may be the string ``"scalar-only"``. ``nonlinearity`` is either
``{c0, p}`` or ``{"kind": "polynomial", "coefficients": {"2": 0.5, "3": 1}}``
(powers > 1, non-negative coefficients), optionally with a constant forcing
``"beta"``. ``envelope`` is ``{"mode": "auto"}`` (fastest certifiable rate),
``{"mode": "auto", "eps": ...}`` or ``{"mode": "explicit", "family":
"exponential"|"powerlaw", "lambda": ..., "b"|"nu": ...}``. ``initial`` holds
``g0`` or a full ``state`` vector. Output paths are relative to the scenario
file.

Validation collects every problem before raising a single ScenarioError.
"""

import inspect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .certifier import Strictness
from .comparison import DEFAULT_ATOL, DEFAULT_RTOL
from .errors import DecayCertError, ScenarioError
from .scalar_model import (
    ConstantProfile,
    ExponentialEnvelope,
    GeneralAlpha,
    NonlinearityBound,
    PowerLawEnvelope,
    PowerLawProfile,
    TabulatedProfile,
)

SCALAR_ONLY = "scalar-only"
TOP_LEVEL_KEYS = {"name", "system", "nonlinearity", "gamma", "envelope", "initial",
                  "strictness", "time", "outputs"}


@dataclass
class Scenario:
    name: str
    system_name: str
    system_params: dict
    bound: NonlinearityBound
    gamma: object
    envelope_mode: str
    eps: Optional[float]
    explicit_envelope: Optional[object]
    g0: float
    state: Optional[np.ndarray]
    strictness: Strictness
    horizon: float
    rtol: float
    atol: float
    grid_points: int
    outputs: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @property
    def scalar_only(self):
        return self.system_name == SCALAR_ONLY

    def output_path(self, key, out_dir=None):
        p = self.outputs.get(key)
        if not p:
            return None
        root = Path(out_dir) if out_dir is not None else self.base_dir
        return root / p


def _num(d, key, problems, where, positive=False, nonneg=False, required=True, default=None):
    if key not in d:
        if required:
            problems.append(f"{where}.{key}: missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        problems.append(f"{where}.{key}: expected a finite number, got {v!r}")
        return default
    if positive and not v > 0:
        problems.append(f"{where}.{key}: must be > 0, got {v}")
        return default
    if nonneg and v < 0:
        problems.append(f"{where}.{key}: must be >= 0, got {v}")
        return default
    return float(v)


def _section(raw, key, problems, required=True):
    sec = raw.get(key)
    if sec is None:
        if required:
            problems.append(f"{key}: missing section")
        return {}
    if not isinstance(sec, dict):
        problems.append(f"{key}: expected an object")
        return {}
    return sec


def _polynomial_alpha(coeffs):
    terms = sorted((float(k), float(c)) for k, c in coeffs.items())

    def alpha(t, v):
        return sum(c * v ** k for k, c in terms)
    return GeneralAlpha(alpha)


def _constant_beta(b):
    def beta(t):
        return np.full(np.shape(t), b)
    return beta


def _parse_nonlinearity(raw, problems):
    sec = _section(raw, "nonlinearity", problems)
    if not sec:
        return None
    kind = sec.get("kind", "power")
    beta = None
    b = _num(sec, "beta", problems, "nonlinearity", nonneg=True, required=False)
    if b is not None and b > 0:
        beta = _constant_beta(b)
    if kind == "power":
        c0 = _num(sec, "c0", problems, "nonlinearity", positive=True)
        p = _num(sec, "p", problems, "nonlinearity")
        if p is not None and not p > 1:
            problems.append(f"nonlinearity.p: must be > 1, got {p}")
            p = None
        if c0 is None or p is None:
            return None
        return NonlinearityBound(NonlinearityBound.power(c0, p).alpha, beta)
    if kind == "polynomial":
        coeffs = sec.get("coefficients")
        if not isinstance(coeffs, dict) or not coeffs:
            problems.append("nonlinearity.coefficients: expected a non-empty object {power: coefficient}")
            return None
        ok = True
        for k, c in coeffs.items():
            try:
                kp = float(k)
            except ValueError:
                problems.append(f"nonlinearity.coefficients: power {k!r} is not a number")
                ok = False
                continue
            if not kp > 1:
                problems.append(f"nonlinearity.coefficients: power {k} must be > 1")
                ok = False
            if isinstance(c, bool) or not isinstance(c, (int, float)) or c < 0:
                problems.append(f"nonlinearity.coefficients[{k}]: must be a number >= 0")
                ok = False
        if not ok:
            return None
        return NonlinearityBound(_polynomial_alpha(coeffs), beta)
    problems.append(f"nonlinearity.kind: unknown kind {kind!r} (power, polynomial)")
    return None


def _parse_gamma(raw, problems):
    sec = _section(raw, "gamma", problems)
    if not sec:
        return None
    kind = sec.get("kind")
    if kind == "constant":
        k = _num(sec, "kappa_abs", problems, "gamma", positive=True)
        return ConstantProfile(k) if k is not None else None
    if kind == "powerlaw":
        c1 = _num(sec, "c1", problems, "gamma", positive=True)
        q = _num(sec, "q", problems, "gamma")
        if q is not None and q > 1:
            problems.append(f"gamma.q: must be <= 1, got {q}")
            q = None
        if c1 is None or q is None:
            return None
        return PowerLawProfile(c1, q)
    if kind == "tabulated":
        grid, values = sec.get("grid"), sec.get("values")
        try:
            return TabulatedProfile(np.asarray(grid, dtype=float), np.asarray(values, dtype=float))
        except (DecayCertError, TypeError, ValueError) as exc:
            problems.append(f"gamma: invalid tabulated profile ({exc})")
            return None
    problems.append(f"gamma.kind: expected constant, powerlaw or tabulated, got {kind!r}")
    return None


def _parse_envelope(raw, problems):
    sec = _section(raw, "envelope", problems, required=False) or {"mode": "auto"}
    mode = sec.get("mode", "auto")
    if mode == "auto":
        eps = _num(sec, "eps", problems, "envelope", positive=True, required=False)
        return "auto", eps, None
    if mode == "explicit":
        family = sec.get("family")
        lam = _num(sec, "lambda", problems, "envelope", positive=True)
        if family == "exponential":
            b = _num(sec, "b", problems, "envelope", positive=True)
            env = ExponentialEnvelope(lam, b) if lam is not None and b is not None else None
        elif family == "powerlaw":
            nu = _num(sec, "nu", problems, "envelope", positive=True)
            env = PowerLawEnvelope(lam, nu) if lam is not None and nu is not None else None
        else:
            problems.append(f"envelope.family: expected exponential or powerlaw, got {family!r}")
            env = None
        return "explicit", None, env
    problems.append(f"envelope.mode: expected auto or explicit, got {mode!r}")
    return mode, None, None


def _parse_system(raw, problems):
    sys_raw = raw.get("system", SCALAR_ONLY)
    if sys_raw == SCALAR_ONLY or sys_raw is None:
        return SCALAR_ONLY, {}
    if isinstance(sys_raw, str):
        return sys_raw, {}
    if not isinstance(sys_raw, dict) or "name" not in sys_raw:
        problems.append("system: expected \"scalar-only\", a gallery name, or {name, params}")
        return SCALAR_ONLY, {}
    params = sys_raw.get("params", {})
    if not isinstance(params, dict):
        problems.append("system.params: expected an object")
        params = {}
    return str(sys_raw["name"]), dict(params)


def parse_scenario(raw, base_dir=Path("."), overrides=None):
    """Validate a decoded scenario tree; raise ScenarioError listing all problems."""
    problems = []
    if not isinstance(raw, dict):
        raise ScenarioError(["scenario root must be an object"])
    for k in sorted(set(raw) - TOP_LEVEL_KEYS):
        problems.append(f"{k}: unknown key")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    name = str(raw.get("name", "scenario"))
    system_name, system_params = _parse_system(raw, problems)
    bound = _parse_nonlinearity(raw, problems)
    gamma = _parse_gamma(raw, problems)
    mode, eps, explicit = _parse_envelope(raw, problems)

    init = _section(raw, "initial", problems)
    g0, state = None, None
    if "state" in init:
        try:
            state = np.asarray(init["state"], dtype=float)
            if state.ndim != 1 or not np.all(np.isfinite(state)):
                raise ValueError
            g0 = float(np.linalg.norm(state))
        except (TypeError, ValueError):
            problems.append("initial.state: expected a list of finite numbers")
            state = None
        if "g0" in init:
            problems.append("initial: give g0 or state, not both")
    elif init:
        g0 = _num(init, "g0", problems, "initial", nonneg=True)
    if system_name == SCALAR_ONLY and state is not None:
        problems.append("initial.state: needs a system")

    strict_raw = raw.get("strictness", Strictness.NON_STRICT.value)
    try:
        strictness = Strictness(strict_raw)
    except ValueError:
        problems.append(f"strictness: expected strict or non-strict, got {strict_raw!r}")
        strictness = Strictness.NON_STRICT

    tsec = dict(_section(raw, "time", problems))
    tsec.update(overrides)
    horizon = _num(tsec, "horizon", problems, "time", positive=True)
    rtol = _num(tsec, "rtol", problems, "time", positive=True, required=False, default=DEFAULT_RTOL)
    atol = _num(tsec, "atol", problems, "time", positive=True, required=False, default=DEFAULT_ATOL)
    gp = tsec.get("grid_points", 512)
    if isinstance(gp, bool) or not isinstance(gp, int) or gp < 2:
        problems.append(f"time.grid_points: expected an integer >= 2, got {gp!r}")
        gp = 512

    outputs = _section(raw, "outputs", problems, required=False)
    for k, v in outputs.items():
        if k not in ("csv", "svg", "report"):
            problems.append(f"outputs.{k}: unknown output")
        elif not isinstance(v, str):
            problems.append(f"outputs.{k}: expected a path string")

    if problems:
        raise ScenarioError(problems)
    return Scenario(
        name=name, system_name=system_name, system_params=system_params, bound=bound,
        gamma=gamma, envelope_mode=mode, eps=eps, explicit_envelope=explicit, g0=g0,
        state=state, strictness=strictness, horizon=horizon, rtol=rtol, atol=atol,
        grid_points=gp, outputs=dict(outputs), base_dir=Path(base_dir),
    )


def load_scenario(path, overrides=None):
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError([f"cannot read {path}: {exc.strerror}"]) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})"]) from None
    return parse_scenario(raw, base_dir=path.parent, overrides=overrides)


def build_system(scn):
    """Instantiate the scenario's gallery system, feeding it the scenario's bounds.

    Bound parameters (c0, p, c1, q, kappa_abs) are forwarded only to builders
    that accept them; parameters given under ``system.params`` win.
    """
    from .dynamics import GALLERY, gallery

    if scn.scalar_only:
        return None
    if scn.system_name not in GALLERY:
        raise ScenarioError([f"system.name: unknown gallery system {scn.system_name!r}"])
    accepted = set(inspect.signature(GALLERY[scn.system_name][0]).parameters)
    implied = {}
    if scn.bound is not None and scn.bound.is_power:
        implied.update(c0=scn.bound.alpha.c0, p=scn.bound.alpha.p)
    if isinstance(scn.gamma, PowerLawProfile):
        implied.update(c1=scn.gamma.c1, q=scn.gamma.q)
    if isinstance(scn.gamma, ConstantProfile):
        implied.update(kappa_abs=scn.gamma.kappa_abs)
    params = {k: v for k, v in implied.items() if k in accepted}
    unknown = sorted(set(scn.system_params) - accepted)
    if unknown:
        raise ScenarioError([f"system.params.{k}: not a parameter of {scn.system_name!r}" for k in unknown])
    params.update(scn.system_params)
    try:
        sys_ = gallery(scn.system_name, **params)
    except (DecayCertError, TypeError, ValueError) as exc:
        raise ScenarioError([f"system: cannot build {scn.system_name!r} ({exc})"]) from None
    problems = []
    if scn.state is not None and scn.state.shape != (sys_.dim,):
        problems.append(f"initial.state: expected {sys_.dim} entries, got {scn.state.size}")
    if sys_.declared_gamma is not None and type(sys_.declared_gamma) is type(scn.gamma):
        if sys_.declared_gamma != scn.gamma:
            problems.append(f"gamma: scenario {scn.gamma} differs from the system's {sys_.declared_gamma}")
    if problems:
        raise ScenarioError(problems)
    return sys_
