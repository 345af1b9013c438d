import numpy as np
import pytest

from decay_cert import _backend
from decay_cert._pykernels import GAMMA_CONSTANT, GAMMA_POWERLAW
from decay_cert.comparison import solve_extremal
from decay_cert.scalar_model import ConstantProfile, NonlinearityBound, PowerLawProfile

try:
    _backend.get_kernel("cython")
    HAVE_C = True
except ImportError:
    HAVE_C = False

needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled kernel not built")

CASES = [
    (GAMMA_CONSTANT, 1.0, 0.0, 1.0, 2.0, 0.4, 10.0),
    (GAMMA_CONSTANT, 1.0, 0.0, 1.0, 2.0, 2.0, 5.0),
    (GAMMA_POWERLAW, 1.0, 0.5, 1.0, 3.0, 0.1, 100.0),
    (GAMMA_POWERLAW, 2.5, -0.3, 0.7, 1.7, 0.02, 50.0),
]


def test_backend_name():
    assert _backend.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        _backend.get_kernel("fortran")


@needs_c
@pytest.mark.parametrize("case", CASES)
def test_cython_matches_python_bitwise(case):
    args = case + (1e-9, 1e-12, 1e12)
    py = _backend.get_kernel("python")(*args)
    cy = _backend.get_kernel("cython")(*args)
    for a, b in zip(py[:3], cy[:3]):
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))
    assert py[3:] == cy[3:]


@needs_c
def test_solve_extremal_backends_agree():
    bound, gamma = NonlinearityBound.power(1.0, 3.0), PowerLawProfile(1.0, 0.5)
    a = solve_extremal(bound, gamma, 0.1, 100.0, backend="python")
    b = solve_extremal(bound, gamma, 0.1, 100.0, backend="cython")
    assert a.backend == "python" and b.backend == "cython"
    ts = a.sample_times()
    np.testing.assert_array_equal(a(ts), b(ts))


def test_python_backend_always_available():
    traj = solve_extremal(NonlinearityBound.power(1.0, 2.0), ConstantProfile(1.0), 2.0, 5.0, backend="python")
    assert traj.blowup
