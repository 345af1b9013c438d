"""Finite-dimensional evolution systems ``u' = A(t) u + F(t, u)``.

Integration, norm trajectories, numerical and spectral abscissae, propagators
and their growth exponent, the Lyapunov equation, and a small gallery of
built-in systems.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional
import warnings

import numpy as np
import scipy.integrate
import scipy.linalg

from ._dopri import BLOWUP_CAP, STATUS_OK, dense_eval, dopri_vector
from .comparison import DEFAULT_ATOL, DEFAULT_RTOL, ScalarTrajectory
from .errors import DomainError, NumericalFailure
from .scalar_model import ConstantProfile, NonlinearityBound, PowerLawProfile

__all__ = [
    "System",
    "VectorTrajectory",
    "Propagator",
    "LyapunovSolution",
    "integrate",
    "norm_trajectory",
    "dissipativity_estimate",
    "spectral_abscissa",
    "propagator",
    "estimate_general_exponent",
    "lyapunov_solve",
    "aligned_nonlinearity",
    "gallery",
    "gallery_names",
    "GALLERY",
]

PROBE_SLACK = 1e-9


def _hermitian_part(a):
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class System:
    """A time-dependent linear part plus a nonlinearity, with declared bounds.

    ``A`` maps ``t`` to a ``dim x dim`` matrix. When the matrix is diagonal,
    ``A_diag`` (``t`` to the diagonal) is used for the right-hand side.
    ``declared_bound`` and ``declared_gamma`` are what the system promises:
    ``|F(t,u)| <= alpha(t, |u|)`` and ``Re(A(t)u, u) <= -gamma(t)|u|^2``.
    Both promises are probed at random points on construction.
    """

    dim: int
    A: Callable
    F: Optional[Callable] = None
    declared_bound: Optional[NonlinearityBound] = None
    declared_gamma: Optional[object] = None
    name: str = "custom"
    A_diag: Optional[Callable] = None
    constant_A: Optional[np.ndarray] = None
    complex_state: bool = False
    params: dict = field(default_factory=dict)
    validate: bool = True
    n_probes: int = 16
    probe_seed: int = 0
    probe_horizon: float = 100.0

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be positive")
        if self.validate:
            problems = self.check_hypotheses(self.n_probes, self.probe_seed)
            if problems:
                raise DomainError(f"system {self.name!r} violates its declared bounds: " + "; ".join(problems))

    @property
    def linear(self):
        return self.F is None

    def matrix(self, t):
        if self.constant_A is not None:
            return self.constant_A
        if self.A_diag is not None:
            return np.diag(self.A_diag(t))
        return np.asarray(self.A(t))

    def rhs(self, t, u):
        if self.A_diag is not None:
            out = self.A_diag(t) * u
        else:
            out = self.matrix(t) @ u
        if self.F is not None:
            out = out + self.F(t, u)
        return out

    def check_hypotheses(self, n_probes=16, seed=0):
        """Probe the declared bounds; return a list of violation messages."""
        rng = np.random.default_rng(seed)
        problems = []
        for _ in range(n_probes):
            t = float(rng.uniform(0.0, self.probe_horizon))
            u = rng.standard_normal(self.dim)
            if self.complex_state:
                u = u + 1j * rng.standard_normal(self.dim)
            u *= 10.0 ** rng.uniform(-3, 0) / np.linalg.norm(u)
            nu = float(np.linalg.norm(u))
            if self.declared_gamma is not None:
                quad = float(np.real(np.vdot(u, self.matrix(t) @ u)))
                limit = -float(self.declared_gamma(t)) * nu ** 2 + PROBE_SLACK * nu ** 2
                if quad > limit:
                    problems.append(f"Re(A u, u) = {quad} > {limit} at t={t}")
            if self.F is not None and self.declared_bound is not None:
                fn = float(np.linalg.norm(self.F(t, u)))
                limit = float(self.declared_bound.alpha_at(t, nu)) * (1.0 + PROBE_SLACK)
                if fn > limit + 1e-300:
                    problems.append(f"|F(t,u)| = {fn} > {limit} at t={t}")
        return problems


@dataclass(frozen=True, eq=False)
class VectorTrajectory:
    times: np.ndarray
    states: np.ndarray
    coeffs: np.ndarray
    blowup: bool = False
    blowup_time: Optional[float] = None
    n_rejected: int = 0
    n_evals: int = 0
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def t_end(self):
        return float(self.times[-1])

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.times[0]) or np.any(t_arr > self.times[-1]):
            raise DomainError("evaluation outside the trajectory span")
        if len(self.times) < 2:
            return np.broadcast_to(self.states[0], t_arr.shape + self.states[0].shape).copy()
        return dense_eval(self.times, self.coeffs, t_arr)


def integrate(sys, u0, horizon, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Solve ``u' = A(t)u + F(t,u)``, ``u(0) = u0`` on ``[0, horizon]``.

    Adaptive Dormand-Prince 5(4) with dense output. Stops early with
    ``blowup`` set once ``|u|`` exceeds ``1e12 * max(1, |u0|)``.
    """
    u0 = np.asarray(u0, dtype=complex if sys.complex_state else None)
    if u0.shape != (sys.dim,):
        raise DomainError(f"u0 must have shape ({sys.dim},)")
    if not np.all(np.isfinite(u0)):
        raise DomainError("u0 must be finite")
    if not (rtol > 0 and atol > 0):
        raise DomainError("tolerances must be positive")
    times, states, coeffs, n_rej, n_ev, status = dopri_vector(
        sys.rhs, 0.0, u0, float(horizon), rtol, atol,
        cap=BLOWUP_CAP * max(1.0, float(np.linalg.norm(u0))))
    blown = status != STATUS_OK
    return VectorTrajectory(times, states, coeffs, blowup=blown,
                            blowup_time=float(times[-1]) if blown else None,
                            n_rejected=n_rej, n_evals=n_ev, rtol=rtol, atol=atol)


def norm_trajectory(traj):
    """Euclidean (Hermitian) norm ``g(t) = |u(t)|`` of a vector trajectory.

    At zeros of ``u`` the norm is not differentiable; consumers use the
    right derivative, which equals ``|u'(t)|`` there.
    """
    norms = np.linalg.norm(traj.states, axis=-1)

    def dense(t):
        return np.linalg.norm(traj(t), axis=-1)

    return ScalarTrajectory(
        times=traj.times, values=norms, dense=dense, blowup=traj.blowup,
        blowup_time=traj.blowup_time, n_steps=traj.n_steps, n_rejected=traj.n_rejected,
        n_evals=traj.n_evals, rtol=traj.rtol, atol=traj.atol,
    )


def _power_top_eig(h, n_probes, rng, iters=2000):
    """Largest eigenvalue of a Hermitian matrix by shifted power iteration."""
    shift = float(np.linalg.norm(h, 1))
    m = h + shift * np.eye(h.shape[0])
    best = -np.inf
    for _ in range(max(n_probes, 1)):
        x = rng.standard_normal(h.shape[0]) + 0j
        x /= np.linalg.norm(x)
        for _ in range(iters):
            y = m @ x
            ny = np.linalg.norm(y)
            if ny == 0:
                break
            x = y / ny
        best = max(best, float(np.real(np.vdot(x, h @ x))))
    return best


def dissipativity_estimate(A_at, n_probes=4, seed=0):
    """Numerical abscissa: the top eigenvalue of ``(A + A*)/2``.

    A return value ``<= -gamma`` certifies ``Re(Au, u) <= -gamma |u|^2``. The
    symmetric eigensolver result is cross-checked by power iteration; a
    disagreement beyond 1e-6 (relative) emits a RuntimeWarning.
    """
    a = np.asarray(A_at)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("matrix must be square")
    h = _hermitian_part(a)
    top = float(np.linalg.eigvalsh(h)[-1])
    if n_probes:
        check = _power_top_eig(h, n_probes, np.random.default_rng(seed))
        scale = max(1.0, float(np.linalg.norm(h, 2)))
        if abs(check - top) > 1e-6 * scale:
            warnings.warn(f"power iteration disagrees with eigvalsh: {check} vs {top}", RuntimeWarning)
    return top


def spectral_abscissa(A_at):
    """Largest real part of the eigenvalues."""
    a = np.asarray(A_at)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("matrix must be square")
    return float(np.max(np.linalg.eigvals(a).real))


@dataclass(frozen=True, eq=False)
class Propagator:
    """Solution operator ``U(t, s)`` of the linear part for a fixed ``s``."""

    s: float
    dim: int
    times: np.ndarray
    coeffs: np.ndarray
    t_grid: np.ndarray
    matrices: np.ndarray
    blowup: bool = False

    def __call__(self, t):
        t = float(t)
        if t < self.s or t > self.times[-1]:
            raise DomainError(f"propagator defined on [{self.s}, {self.times[-1]}]")
        if len(self.times) < 2:
            return np.eye(self.dim)
        return dense_eval(self.times, self.coeffs, t).reshape(self.dim, self.dim)


def propagator(sys, s, t_grid, rtol=1e-10, atol=1e-12):
    """Integrate ``U' = A(t) U``, ``U(s, s) = I`` jointly over all columns.

    The nonlinearity of ``sys`` is ignored. ``matrices[i]`` is ``U(t_grid[i], s)``.
    """
    s = float(s)
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t_grid < s):
        raise DomainError("t_grid must not precede s")
    n = sys.dim
    dtype = complex if sys.complex_state else float
    if sys.A_diag is not None:
        def rhs(t, y):
            return (sys.A_diag(t)[:, None] * y.reshape(n, n)).ravel()
    else:
        def rhs(t, y):
            return (sys.matrix(t) @ y.reshape(n, n)).ravel()
    end = float(t_grid.max()) if t_grid.size else s
    times, states, coeffs, _, _, status = dopri_vector(
        rhs, s, np.eye(n, dtype=dtype).ravel(), end, rtol, atol, cap=np.inf)
    if len(times) < 2:
        mats = np.broadcast_to(np.eye(n), (t_grid.size, n, n)).copy()
    else:
        mats = dense_eval(times, coeffs, t_grid).reshape(t_grid.size, n, n)
    return Propagator(s, n, times, coeffs, t_grid, mats, blowup=status != STATUS_OK)


def estimate_general_exponent(sys, s_list, t_list, rtol=1e-10, atol=1e-30):
    """Finite-horizon estimate of the upper general exponent.

    Returns ``max over s of ln|U(s + T, s)|_2 / T`` with ``T = max(t_list)``.
    The exact exponent is a lim sup as both ``s`` and ``T`` grow; this is a
    probe of it, only as good as the chosen lists.

    ``|U|`` typically decays to far below any fixed absolute tolerance, and
    its logarithm is what matters, so the default ``atol`` is negligible and
    step control is effectively relative.
    """
    if not s_list or not t_list:
        raise DomainError("s_list and t_list must be non-empty")
    T = float(max(t_list))
    if not T > 0:
        raise DomainError("t_list must contain a positive time")
    best = -np.inf
    for s in s_list:
        prop = propagator(sys, float(s), [float(s) + T], rtol=rtol, atol=atol)
        if prop.blowup:
            return math.inf
        nrm = float(np.linalg.norm(prop.matrices[0], 2))
        best = max(best, math.log(nrm) / T)
    return best


@dataclass(frozen=True, eq=False)
class LyapunovSolution:
    W: np.ndarray
    min_eig: float
    residual: float
    n_panels: int


def lyapunov_solve(A, V, integrand_tol=1e-14, max_panels=1_000_000):
    """Solve ``A* W + W A = -2 V`` through ``W = 2 int_0^inf e^{A* t} V e^{A t} dt``.

    The half-line is cut into panels of width ``h``. With ``E = e^{A h}``,
    panel ``k`` contributes ``(E^k)* P E^k`` where ``P`` is the integral over
    ``[0, h]``, computed by adaptive quadrature. Summation stops once the
    integrand norm at the panel start drops below ``integrand_tol * max(1, |V|)``.
    """
    A = np.asarray(A)
    V = np.asarray(V)
    n = A.shape[0]
    if A.shape != (n, n) or V.shape != (n, n):
        raise DomainError("A and V must be square and of equal size")
    if not np.allclose(V, V.conj().T):
        raise DomainError("V must be Hermitian")
    if np.linalg.eigvalsh(_hermitian_part(V))[0] <= 0:
        raise DomainError("V must be positive definite")
    alpha = spectral_abscissa(A)
    if alpha >= 0:
        raise DomainError(f"spectral abscissa {alpha} is not negative")
    cplx = np.iscomplexobj(A) or np.iscomplexobj(V)
    h = 1.0 / max(1.0, float(np.linalg.norm(A, 2)))
    Ah = A.conj().T

    def f(t):
        e = scipy.linalg.expm(A * t)
        return (e.conj().T @ V @ e).ravel()

    if cplx:
        re = scipy.integrate.quad_vec(lambda t: f(t).real, 0.0, h, epsabs=0, epsrel=1e-14)[0]
        im = scipy.integrate.quad_vec(lambda t: f(t).imag, 0.0, h, epsabs=0, epsrel=1e-14)[0]
        P = (re + 1j * im).reshape(n, n)
    else:
        P = scipy.integrate.quad_vec(f, 0.0, h, epsabs=0, epsrel=1e-14)[0].reshape(n, n)
    E = scipy.linalg.expm(A * h)
    Ek = np.eye(n, dtype=E.dtype)
    W = np.zeros((n, n), dtype=complex if cplx else float)
    limit = integrand_tol * max(1.0, float(np.linalg.norm(V, 2)))
    panels = 0
    while panels < max_panels:
        W += Ek.conj().T @ P @ Ek
        panels += 1
        Ek = Ek @ E
        if float(np.linalg.norm(Ek.conj().T @ V @ Ek, 2)) < limit:
            break
    else:
        raise NumericalFailure("Lyapunov quadrature did not converge within max_panels")
    W = 2.0 * W
    W = 0.5 * (W + W.conj().T)
    res = float(np.linalg.norm(Ah @ W + W @ A + 2.0 * V, 2))
    wn = float(np.linalg.norm(W, 2))
    if res > 1e-8 * wn:
        raise NumericalFailure(f"Lyapunov residual {res} exceeds 1e-8 * |W| = {1e-8 * wn}")
    min_eig = float(np.linalg.eigvalsh(W)[0])
    if not min_eig > 0:
        raise NumericalFailure(f"W is not positive definite (min eig {min_eig})")
    return LyapunovSolution(W if cplx else W.real, min_eig, res, panels)


# ---------------------------------------------------------------------------
# gallery


def aligned_nonlinearity(c0, p, phase=0.0):
    """``F(t, u) = c0 |u|^(p-1) e^{i phase} u``; saturates ``|F| <= c0 |u|^p``."""
    rot = complex(math.cos(phase), math.sin(phase)) if phase else 1.0

    def F(t, u):
        return (c0 * np.linalg.norm(u) ** (p - 1.0) * rot) * u
    return F


def _nonlinear_parts(c0, p, phase=0.0):
    if c0 is None and p is None:
        return None, None
    if c0 is None or p is None:
        raise DomainError("give both c0 and p, or neither")
    return aligned_nonlinearity(c0, p, phase), NonlinearityBound.power(c0, p)


def _counterexample(a=1.0, b=5.0):
    mat = np.array([[0.0, b], [-a, -1.0]])
    mat.setflags(write=False)
    return System(dim=2, A=lambda t: mat, constant_A=mat, name="counterexample",
                  params={"a": a, "b": b})


def _diagonal(rates=(-1.0, -2.0), c0=None, p=None):
    r = np.asarray(rates, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise DomainError("rates must be a non-empty list")
    mat = np.diag(r)
    mat.setflags(write=False)
    F, bound = _nonlinear_parts(c0, p)
    gamma = ConstantProfile(-float(r.max())) if r.max() < 0 else None
    return System(dim=r.size, A=lambda t: mat, F=F, declared_bound=bound, declared_gamma=gamma,
                  name="diagonal", A_diag=lambda t: r, constant_A=mat,
                  params={"rates": r.tolist(), "c0": c0, "p": p})


def _damped_diagonal(rates=(-1.0, -1.0), c1=1.0, q=0.5, c0=None, p=None):
    """A(t) = gamma(t) diag(rates), gamma = c1/(1+t)^q; needs max(rates) <= -1."""
    r = np.asarray(rates, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise DomainError("rates must be a non-empty list")
    if r.max() > -1.0:
        raise DomainError("damped-diagonal needs every rate <= -1")
    gamma = PowerLawProfile(c1, q)
    F, bound = _nonlinear_parts(c0, p)

    def diag(t):
        return gamma(t) * r

    return System(dim=r.size, A=lambda t: np.diag(diag(t)), F=F, declared_bound=bound,
                  declared_gamma=gamma, name="damped-diagonal", A_diag=diag,
                  params={"rates": r.tolist(), "c1": c1, "q": q, "c0": c0, "p": p})


def fourier_symbols(K, L):
    """``|2 pi k / L|^2 + 1`` over integer modes with ``|k|_inf <= K``, ``k = 0`` first."""
    ks = np.arange(-K, K + 1)
    kx, ky, kz = np.meshgrid(ks, ks, ks, indexing="ij")
    sq = (kx ** 2 + ky ** 2 + kz ** 2).ravel().astype(float)
    order = np.argsort(sq, kind="stable")
    return (2.0 * math.pi / L) ** 2 * sq[order] + 1.0


def _heat_truncation(K=3, L=2.0 * math.pi, c0=1.0, p=3.0, c1=1.0, q=0.5, phase=0.0):
    """Fourier truncation of gamma(t)(Laplacian - I) on the periodic box [0, L]^3."""
    if K < 0 or not L > 0:
        raise DomainError("need K >= 0 and L > 0")
    sym = fourier_symbols(int(K), float(L))
    sym.setflags(write=False)
    gamma = PowerLawProfile(c1, q)
    F = aligned_nonlinearity(c0, p, phase)

    def diag(t):
        return -gamma(t) * sym

    return System(dim=sym.size, A=lambda t: np.diag(diag(t)), F=F,
                  declared_bound=NonlinearityBound.power(c0, p), declared_gamma=gamma,
                  name="heat-truncation", A_diag=diag, complex_state=bool(phase),
                  params={"K": K, "L": L, "c0": c0, "p": p, "c1": c1, "q": q, "phase": phase})


def random_dissipative_matrix(dim, kappa_abs, rng):
    """Random real matrix whose numerical abscissa equals ``-kappa_abs``."""
    m = rng.standard_normal((dim, dim))
    top = np.linalg.eigvalsh(_hermitian_part(m))[-1]
    return m - (top + kappa_abs) * np.eye(dim)


def _dissipative(dim=3, kappa_abs=1.0, c0=1.0, p=2.0, seed=0):
    mat = random_dissipative_matrix(int(dim), float(kappa_abs), np.random.default_rng(seed))
    mat.setflags(write=False)
    F, bound = _nonlinear_parts(c0, p)
    return System(dim=int(dim), A=lambda t: mat, F=F, declared_bound=bound,
                  declared_gamma=ConstantProfile(kappa_abs), name="dissipative", constant_A=mat,
                  params={"dim": dim, "kappa_abs": kappa_abs, "c0": c0, "p": p, "seed": seed})


GALLERY = {
    "counterexample": (_counterexample, "A = [[0, b], [-a, -1]], F = 0 (spectrum stable, not dissipative)"),
    "diagonal": (_diagonal, "constant diag(rates), optional aligned F with c0, p"),
    "damped-diagonal": (_damped_diagonal, "A(t) = c1/(1+t)^q * diag(rates), rates <= -1"),
    "heat-truncation": (_heat_truncation, "Fourier truncation of gamma(t)(Laplacian - I), |k|_inf <= K, box [0, L]^3"),
    "dissipative": (_dissipative, "random constant A with numerical abscissa -kappa_abs, aligned F"),
}


def gallery_names():
    return sorted(GALLERY)


def gallery(name, **params):
    """Build a named built-in system."""
    try:
        builder = GALLERY[name][0]
    except KeyError:
        raise DomainError(f"unknown gallery system {name!r}; known: {', '.join(gallery_names())}") from None
    return builder(**params)
