import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from decay_cert.errors import DomainError, RangeError
from decay_cert.scalar_model import (
    ConstantProfile,
    ExponentialEnvelope,
    GeneralAlpha,
    NonlinearityBound,
    PowerAlpha,
    PowerLawEnvelope,
    PowerLawProfile,
    TabulatedEnvelope,
    TabulatedProfile,
    envelope_bound,
    evaluate_gamma,
    integrating_factor,
)


def test_gamma_examples():
    assert evaluate_gamma(PowerLawProfile(1.0, 0.5), 0.0) == 1.0
    assert evaluate_gamma(ConstantProfile(2.0), 17.3) == 2.0
    assert evaluate_gamma(PowerLawProfile(1.0, 0.5), 3.0) == 0.5


def test_gamma_vectorized():
    g = evaluate_gamma(PowerLawProfile(1.0, 0.5), np.array([0.0, 3.0, 8.0]))
    np.testing.assert_allclose(g, [1.0, 0.5, 1 / 3])


@pytest.mark.parametrize("bad", [
    lambda: PowerLawProfile(1.0, 1.5),
    lambda: PowerLawProfile(0.0, 0.5),
    lambda: ConstantProfile(0.0),
    lambda: ConstantProfile(-1.0),
    lambda: PowerAlpha(1.0, 1.0),
    lambda: PowerAlpha(0.0, 2.0),
    lambda: ExponentialEnvelope(1.0, 0.0),
    lambda: PowerLawEnvelope(-1.0, 1.0),
])
def test_construction_rejects(bad):
    with pytest.raises(DomainError):
        bad()


def test_tabulated_profile_range_error():
    prof = TabulatedProfile([0.0, 1.0, 2.0], [1.0, 0.5, 0.0])
    assert prof(1.5) == pytest.approx(0.25)
    with pytest.raises(RangeError):
        prof(2.5)
    with pytest.raises(DomainError):
        TabulatedProfile([0.0, 1.0], [1.0, -0.1])


def test_integrating_factor_examples():
    assert integrating_factor(ConstantProfile(1.0), 1.0) == pytest.approx(math.e, rel=1e-15)
    assert integrating_factor(PowerLawProfile(1.0, 1.0), 3.0) == pytest.approx(4.0, rel=1e-15)
    # oracle: adaptive quadrature of the power-law profile
    val, _ = quad(lambda s: (1 + s) ** -0.5, 0.0, 3.0, epsabs=0, epsrel=1e-13)
    assert val == pytest.approx(2.0, rel=1e-12)
    assert integrating_factor(PowerLawProfile(1.0, 0.5), 3.0) == pytest.approx(math.exp(val), rel=1e-12)
    assert integrating_factor(PowerLawProfile(1.0, 0.5), 3.0) == pytest.approx(7.389056098930650, rel=1e-14)


def test_integrating_factor_tabulated_matches_quadrature():
    grid = np.array([0.0, 0.3, 1.0, 2.5, 4.0])
    vals = np.array([2.0, 1.0, 0.7, 0.1, 0.0])
    prof = TabulatedProfile(grid, vals)
    for t in [0.0, 0.2, 0.3, 1.7, 4.0]:
        ref, _ = quad(lambda s: np.interp(s, grid, vals), 0.0, t, points=grid[1:-1], epsabs=0, epsrel=1e-13,
                      limit=200)
        assert integrating_factor(prof, t) == pytest.approx(math.exp(ref), rel=1e-10)


def test_envelope_bound_examples():
    assert envelope_bound(ExponentialEnvelope(2.0, 0.5), 0.0) == 0.5
    assert envelope_bound(PowerLawEnvelope(10.0, 0.99), 0.0) == pytest.approx(0.1, rel=1e-15)
    mpmath.mp.dps = 40
    oracle = float(mpmath.mpf("0.1") * mpmath.power(100, mpmath.mpf("-0.99")))
    assert oracle == pytest.approx(1.0471285480508996e-3, rel=1e-15)
    assert envelope_bound(PowerLawEnvelope(10.0, 0.99), 99.0) == pytest.approx(oracle, rel=1e-14)


def test_power_alpha_clamps_negative():
    assert PowerAlpha(1.0, 2.0)(0.0, -1.0) == 0.0


def test_general_alpha_monotonicity_check():
    GeneralAlpha(lambda t, v: v ** 2 + v ** 3)
    with pytest.raises(DomainError, match="non-decreasing"):
        GeneralAlpha(lambda t, v: math.sin(v) ** 2)
    with pytest.raises(DomainError):
        GeneralAlpha(lambda t, v: -v)


def test_beta_default_zero_and_nonneg():
    b = NonlinearityBound.power(1.0, 2.0)
    assert b.beta_at(3.0) == 0.0
    bad = NonlinearityBound(PowerAlpha(1.0, 2.0), beta=lambda t: -1.0)
    with pytest.raises(DomainError):
        bad.beta_at(0.0)


def test_tabulated_envelope_exact_at_nodes():
    grid = np.linspace(0, 5, 11)
    g = np.exp(-grid)
    env = TabulatedEnvelope.from_bound(grid, g)
    np.testing.assert_allclose(env.bound(grid), g, rtol=1e-15)
    np.testing.assert_allclose(env.bound(0.25), math.exp(-0.25), rtol=1e-14)
    np.testing.assert_allclose(env.log_derivative(grid), 1.0, rtol=1e-12)


profiles = st.one_of(
    st.builds(ConstantProfile, st.floats(0.01, 10)),
    st.builds(PowerLawProfile, st.floats(0.01, 10), st.floats(-1.0, 1.0)),
)


@settings(max_examples=100, deadline=None)
@given(profiles, st.lists(st.floats(0, 200), min_size=2, max_size=20))
def test_integrating_factor_monotone_from_one(prof, ts):
    # compared in log form: exp overflows for fast dissipation over long spans
    ts = np.sort(ts)
    log_a = np.asarray(prof.log_integrating_factor(ts))
    assert integrating_factor(prof, 0.0) == 1.0
    assert np.all(log_a >= 0.0)
    assert np.all(np.diff(log_a) >= 0)


envelopes = st.one_of(
    st.builds(ExponentialEnvelope, st.floats(0.1, 100), st.floats(0.01, 5)),
    st.builds(PowerLawEnvelope, st.floats(0.1, 100), st.floats(0.01, 5)),
)


@settings(max_examples=100, deadline=None)
@given(envelopes, st.lists(st.floats(0, 50), min_size=1, max_size=20))
def test_log_derivative_matches_finite_difference(env, ts):
    h = 1e-5
    for t in ts:
        t = max(t, h)
        fd = (math.log(env.mu(t + h)) - math.log(env.mu(t - h))) / (2 * h)
        assert env.log_derivative(t) == pytest.approx(fd, rel=1e-6)


@settings(max_examples=100, deadline=None)
@given(envelopes, st.lists(st.floats(0, 1000), min_size=2, max_size=30))
def test_bound_non_increasing(env, ts):
    b = np.asarray(envelope_bound(env, np.sort(ts)))
    assert np.all(np.diff(b) <= 0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5), st.floats(1.01, 4), st.floats(1e-3, 10), st.floats(0.01, 100))
def test_power_alpha_homogeneity(c0, p, v, s):
    a = PowerAlpha(c0, p)
    assert a(0.0, s * v) == pytest.approx(s ** p * a(0.0, v), rel=1e-12)
