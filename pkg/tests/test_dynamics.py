import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from decay_cert.certifier import optimize_rate
from decay_cert.comparison import solve_extremal, verify_envelope
from decay_cert.dynamics import (
    System,
    dissipativity_estimate,
    estimate_general_exponent,
    fourier_symbols,
    gallery,
    gallery_names,
    integrate,
    lyapunov_solve,
    norm_trajectory,
    propagator,
    random_dissipative_matrix,
    spectral_abscissa,
)
from decay_cert.errors import DomainError
from decay_cert.scalar_model import ConstantProfile, PowerLawProfile, integrating_factor


def test_diagonal_linear_example():
    traj = integrate(gallery("diagonal", rates=(-1, -2)), np.array([1.0, 1.0]), 1.0)
    np.testing.assert_allclose(traj(1.0), [math.exp(-1), math.exp(-2)], rtol=1e-9)


def test_counterexample_decays_against_expm():
    sys = gallery("counterexample", a=1, b=5)
    traj = integrate(sys, np.array([1.0, 0.0]), 30.0, rtol=1e-11, atol=1e-14)
    for t in (1.0, 5.0, 12.0, 30.0):
        ref = scipy.linalg.expm(sys.constant_A * t) @ np.array([1.0, 0.0])
        np.testing.assert_allclose(traj(t), ref, rtol=1e-8, atol=1e-13)
    assert np.linalg.norm(traj(30.0)) < 1e-5
    # zero crossings of the first coordinate are spaced by pi / sqrt(4.75)
    ts = np.linspace(0, 12, 200001)
    x = traj(ts)[:, 0]
    zc = ts[1:][np.sign(x[1:]) != np.sign(x[:-1])]
    np.testing.assert_allclose(np.diff(zc), math.pi / math.sqrt(4.75), rtol=1e-4)


def test_heat_truncation_dominated():
    sys = gallery("heat-truncation")
    assert sys.dim == 343
    u0 = np.zeros(sys.dim)
    u0[0] = 0.1
    g = norm_trajectory(integrate(sys, u0, 100.0))
    env, _ = optimize_rate(sys.declared_bound, sys.declared_gamma, 0.1)
    ts = np.array([0.0, 99.0])
    np.testing.assert_allclose(env.bound(ts), [0.1, 0.1 * 100 ** -0.99], rtol=1e-14)
    assert verify_envelope(g, env).passed


def test_norm_trajectory_examples():
    sys = System(dim=2, A=lambda t: np.diag([-1.0, -3.0]), constant_A=np.diag([-1.0, -3.0]))
    g = norm_trajectory(integrate(sys, np.array([1.0, 0.0]), 3.0))
    np.testing.assert_allclose(g(np.linspace(0, 3, 7)), np.exp(-np.linspace(0, 3, 7)), rtol=1e-9)

    rot = np.array([[-1.0, -1.0], [1.0, -1.0]])
    sys = System(dim=2, A=lambda t: rot, constant_A=rot)
    traj = integrate(sys, np.array([1.0, 0.0]), 5.0)
    ts = np.linspace(0, 5, 51)
    np.testing.assert_allclose(traj(ts)[:, 1], np.sin(ts) * np.exp(-ts), atol=1e-10)
    np.testing.assert_allclose(norm_trajectory(traj)(ts), np.exp(-ts), rtol=1e-8)


def test_norm_nonnegative_through_zero_crossing():
    sys = gallery("counterexample", a=1, b=5)
    traj = integrate(sys, np.array([1.0, 0.0]), 10.0)
    fine = integrate(sys, np.array([1.0, 0.0]), 10.0, rtol=1e-12, atol=1e-15)
    g = norm_trajectory(traj)
    ts = g.sample_times()
    assert np.all(g(ts) >= 0)
    np.testing.assert_allclose(g(ts), np.linalg.norm(fine(ts), axis=-1), atol=1e-8)


def test_dissipativity_examples():
    assert dissipativity_estimate(np.diag([-1.0, -2.0])) == pytest.approx(-1.0, abs=1e-12)
    ar = np.array([[0.0, 2.0], [2.0, -1.0]])
    est = dissipativity_estimate(gallery("counterexample", a=1, b=5).constant_A)
    assert est == pytest.approx((-1 + math.sqrt(17)) / 2, abs=1e-12)
    # hand characteristic polynomial x^2 + x - 4 = 0
    assert est ** 2 + est - 4 == pytest.approx(0.0, abs=1e-12)
    assert dissipativity_estimate(ar) == pytest.approx(est, abs=1e-12)
    sys = gallery("heat-truncation")
    assert dissipativity_estimate(sys.matrix(0.0)) == pytest.approx(-1.0, abs=1e-12)


def test_spectral_abscissa_examples():
    assert spectral_abscissa(gallery("counterexample", a=1, b=5).constant_A) == pytest.approx(-0.5, abs=1e-12)
    assert spectral_abscissa(np.diag([-1.0, -2.0])) == -1.0
    # defective double eigenvalue: LAPACK accuracy is about sqrt(machine eps)
    a = gallery("counterexample", a=0.5, b=0.5).constant_A
    assert spectral_abscissa(a) == pytest.approx(-0.5, abs=1e-7)
    # characteristic polynomial x^2 + x + ab, discriminant 1 - 4ab = 0
    assert np.trace(a) == -1.0 and np.linalg.det(a) == pytest.approx(0.25)


def _charpoly_roots(m):
    if m.shape == (2, 2):
        return np.roots([1.0, -np.trace(m), np.linalg.det(m)])
    c2 = -np.trace(m)
    c1 = 0.5 * (np.trace(m) ** 2 - np.trace(m @ m))
    c0 = -np.linalg.det(m)
    return np.roots([1.0, c2, c1, c0])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2 ** 31))
def test_eigenvalues_vs_characteristic_polynomial(dim, seed):
    m = np.random.default_rng(seed).standard_normal((dim, dim))
    assert spectral_abscissa(m) == pytest.approx(float(np.max(_charpoly_roots(m).real)), abs=1e-6)
    h = 0.5 * (m + m.T)
    assert dissipativity_estimate(h) == pytest.approx(float(np.max(_charpoly_roots(h).real)), abs=1e-6)


def test_propagator_examples():
    sys = gallery("counterexample", a=1, b=5)
    ts = [0.5, 2.0, 7.0]
    prop = propagator(sys, 0.5, ts)
    np.testing.assert_allclose(prop.matrices[0], np.eye(2), atol=1e-15)
    for t, m in zip(ts, prop.matrices):
        np.testing.assert_allclose(m, scipy.linalg.expm(sys.constant_A * (t - 0.5)), atol=1e-8)

    damped = gallery("damped-diagonal", rates=(-1.0, -3.0), c1=1.0, q=0.5)
    gam = PowerLawProfile(1.0, 0.5)
    s, t = 2.0, 9.0
    m = propagator(damped, s, [t]).matrices[0]
    ratio = float(integrating_factor(gam, t)) / float(integrating_factor(gam, s))
    np.testing.assert_allclose(np.diag(m), [ratio ** -1.0, ratio ** -3.0], rtol=1e-8)
    assert abs(m[0, 1]) < 1e-15


@pytest.mark.parametrize("name,params", [
    ("counterexample", {"a": 1, "b": 5}),
    ("damped-diagonal", {"rates": (-1.0, -2.0)}),
    ("dissipative", {"dim": 4, "seed": 3}),
])
def test_propagator_cocycle(name, params):
    sys = gallery(name, **params)
    rng = np.random.default_rng(7)
    for _ in range(5):
        s, r, t = np.sort(rng.uniform(0, 10, 3))
        u_ts = propagator(sys, s, [t]).matrices[0]
        u_tr = propagator(sys, r, [t]).matrices[0]
        u_rs = propagator(sys, s, [r]).matrices[0]
        assert np.linalg.norm(u_ts - u_tr @ u_rs) <= 1e-6


def test_exponent_estimates():
    diag = gallery("diagonal", rates=(-1, -2))
    assert estimate_general_exponent(diag, [0, 10], [20]) == pytest.approx(-1.0, abs=0.05)
    ce = gallery("counterexample", a=1, b=5)
    est = estimate_general_exponent(ce, [0, 5], [40])
    ref = math.log(np.linalg.norm(scipy.linalg.expm(ce.constant_A * 40), 2)) / 40
    assert est == pytest.approx(ref, abs=1e-6)
    assert est == pytest.approx(-0.5, abs=0.05)


def test_exponent_damped_identity_slope():
    sys = gallery("damped-diagonal", rates=(-1.0, -1.0), c1=1.0, q=0.5)
    T = 200.0
    ests = [estimate_general_exponent(sys, [s], [T]) for s in (0.0, 100.0, 1000.0)]
    for s, est in zip((0.0, 100.0, 1000.0), ests):
        exact = -2.0 * (math.sqrt(1 + T + s) - math.sqrt(1 + s)) / T
        assert est == pytest.approx(exact, abs=1e-8)
    assert ests[0] < ests[1] < ests[2] < 0


def _kron_lyapunov(a, v):
    n = a.shape[0]
    eye = np.eye(n)
    k = np.kron(eye, a.conj().T) + np.kron(a.T, eye)
    return np.linalg.solve(k, (-2.0 * v).ravel(order="F")).reshape((n, n), order="F")


def test_lyapunov_examples():
    sol = lyapunov_solve(-np.eye(2), np.eye(2))
    np.testing.assert_allclose(sol.W, np.eye(2), atol=1e-12)
    sol = lyapunov_solve(np.diag([-1.0, -2.0]), np.eye(2))
    np.testing.assert_allclose(sol.W, np.diag([1.0, 0.5]), atol=1e-12)
    a = gallery("counterexample", a=1, b=5).constant_A
    sol = lyapunov_solve(a, np.eye(2))
    assert sol.min_eig > 0
    assert sol.residual <= 1e-8 * np.linalg.norm(sol.W, 2)
    np.testing.assert_allclose(sol.W, _kron_lyapunov(a, np.eye(2)), rtol=1e-7, atol=1e-12)


def test_lyapunov_rejects_unstable():
    with pytest.raises(DomainError):
        lyapunov_solve(np.diag([0.0, -1.0]), np.eye(2))
    with pytest.raises(DomainError):
        lyapunov_solve(-np.eye(2), -np.eye(2))


def test_gallery_examples():
    assert set(gallery_names()) >= {"counterexample", "diagonal", "heat-truncation"}
    r2 = gallery("heat-truncation", K=3, L=2 * math.pi, c0=1, p=3)
    assert r2.declared_gamma == PowerLawProfile(1.0, 0.5)
    diag = r2.A_diag(5.0)
    assert diag[0] == pytest.approx(-r2.declared_gamma(5.0), rel=1e-15)
    assert diag.max() == diag[0]
    sym = fourier_symbols(3, 2 * math.pi)
    assert sym.size == 343 and sym[0] == 1.0 and sym.max() == 28.0
    ce = gallery("counterexample", a=1, b=5)
    assert ce.dim == 2 and ce.F is None
    np.testing.assert_array_equal(ce.constant_A, [[0, 5], [-1, -1]])
    d = gallery("diagonal", rates=(-1, -2))
    np.testing.assert_array_equal(d.matrix(3.0), np.diag([-1.0, -2.0]))
    with pytest.raises(DomainError):
        gallery("nope")


def test_system_probe_rejects_false_declaration():
    with pytest.raises(DomainError, match="declared"):
        System(dim=2, A=lambda t: np.diag([-1.0, -2.0]), declared_gamma=ConstantProfile(1.5))


def test_linear_exactness_random():
    rng = np.random.default_rng(11)
    for _ in range(5):
        dim = int(rng.integers(2, 6))
        a = random_dissipative_matrix(dim, 0.3, rng)
        sys = System(dim=dim, A=lambda t, a=a: a, constant_A=a)
        u0 = rng.standard_normal(dim)
        traj = integrate(sys, u0, 10.0)
        for t in (1.0, 5.0, 10.0):
            ref = scipy.linalg.expm(a * t) @ u0
            assert np.linalg.norm(traj(t) - ref) <= 10 * 1e-9 * np.linalg.norm(ref) + 1e-11


@pytest.mark.parametrize("seed", range(6))
def test_scalar_majorization(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 6))
    c0, p, kappa = rng.uniform(0.1, 2), rng.uniform(1.5, 3), rng.uniform(0.5, 2)
    sys = gallery("dissipative", dim=dim, kappa_abs=kappa, c0=c0, p=p, seed=seed)
    u0 = rng.standard_normal(dim)
    u0 *= 0.5 * (kappa / c0) ** (1 / (p - 1)) / np.linalg.norm(u0)
    g = norm_trajectory(integrate(sys, u0, 30.0))
    ext = solve_extremal(sys.declared_bound, sys.declared_gamma, float(np.linalg.norm(u0)), 30.0)
    ts = g.sample_times()
    assert np.all(g(ts) <= ext(ts) + 10 * ext.atol)


def test_heat_truncation_norm_equals_extremal_when_aligned():
    sys = gallery("heat-truncation")
    u0 = np.zeros(sys.dim)
    u0[0] = 0.1
    g = norm_trajectory(integrate(sys, u0, 50.0))
    ext = solve_extremal(sys.declared_bound, sys.declared_gamma, 0.1, 50.0)
    ts = np.linspace(0, 50, 101)
    np.testing.assert_allclose(g(ts), ext(ts), rtol=1e-8, atol=1e-12)


def test_damped_diagonal_requires_tight_rates():
    with pytest.raises(DomainError):
        gallery("damped-diagonal", rates=(-0.5, -1.0))


def test_heat_truncation_spread_initial_state_dominated():
    sys = gallery("heat-truncation")
    rng = np.random.default_rng(5)
    u0 = rng.standard_normal(sys.dim)
    u0 *= 0.1 / np.linalg.norm(u0)
    env, _ = optimize_rate(sys.declared_bound, sys.declared_gamma, 0.1)
    g = norm_trajectory(integrate(sys, u0, 100.0))
    assert verify_envelope(g, env).passed
    # high modes decay fast, so the norm drops strictly inside the envelope
    ts = np.linspace(1.0, 100.0, 100)
    assert np.all(g(ts) < env.bound(ts))
