# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar extremal-ODE kernel.

Mirrors ``_pykernels.extremal_kernel`` step for step; the arithmetic is kept in
the same order so both backends agree to rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, sqrt, isfinite

cnp.import_array()

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920
cdef double E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double D1 = -12715105075.0 / 11282082432
cdef double D3 = 87487479700.0 / 32700410799
cdef double D4 = -10690763975.0 / 1880347072
cdef double D5 = 701980252875.0 / 199316789632
cdef double D6 = -1453857185.0 / 822651844
cdef double D7 = 69997945.0 / 29380423

cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 10.0
cdef double EPS = 2.220446049250313e-16


cdef inline double _rhs(int kind, double g1, double g2, double c0, double p,
                        double t, double g) nogil:
    cdef double gp = g if g > 0.0 else 0.0
    if kind == 0:
        return -g1 * g + c0 * pow(gp, p)
    return -g1 * pow(1.0 + t, -g2) * g + c0 * pow(gp, p)


cdef inline double _hinit(int kind, double g1, double g2, double c0, double p,
                          double t0, double y0, double f0, double t_end,
                          double rtol, double atol) nogil:
    cdef double sk = atol + rtol * fabs(y0)
    cdef double d0 = fabs(y0) / sk
    cdef double d1 = fabs(f0) / sk
    cdef double h0, y1, f1, d2, m, h1
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    y1 = y0 + h0 * f0
    f1 = _rhs(kind, g1, g2, c0, p, t0 + h0, y1)
    d2 = fabs(f1 - f0) / sk / h0
    m = max(d1, d2)
    if m <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / m, 0.2)
    return min(min(100 * h0, h1), t_end - t0)


def extremal_kernel(int gamma_kind, double g1, double g2, double c0, double p,
                    double g0, double horizon, double rtol, double atol,
                    double cap=1e12):
    """Integrate g' = -gamma(t) g + c0 g**p from g(0) = g0 on [0, horizon]."""
    if gamma_kind != 0 and gamma_kind != 1:
        raise ValueError(f"unknown gamma kind {gamma_kind}")
    cdef Py_ssize_t capacity = 1024, n = 0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] times = np.empty(capacity + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] values = np.empty(capacity + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] coeffs = np.empty((capacity, 5))
    cdef double t = 0.0, y = g0, h, t_new, y_new, err, sc, fac, ydiff, bspl
    cdef double k1, k2, k3, k4, k5, k6, k7
    cdef long n_rejected = 0, n_evals = 1
    cdef bint rejected_last = False, last
    cdef int status = 0
    times[0] = t
    values[0] = y
    k1 = _rhs(gamma_kind, g1, g2, c0, p, t, y)
    if horizon <= t:
        return times[:1].copy(), values[:1].copy(), coeffs[:0].copy(), 0, n_evals, 0
    h = _hinit(gamma_kind, g1, g2, c0, p, t, y, k1, horizon, rtol, atol)
    n_evals += 1
    while t < horizon:
        if h < 16 * EPS * max(fabs(t), 1.0):
            status = 2
            break
        last = False
        if t + h >= horizon:
            h = horizon - t
            last = True
        k2 = _rhs(gamma_kind, g1, g2, c0, p, t + C2 * h, y + h * A21 * k1)
        k3 = _rhs(gamma_kind, g1, g2, c0, p, t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = _rhs(gamma_kind, g1, g2, c0, p, t + C4 * h,
                  y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = _rhs(gamma_kind, g1, g2, c0, p, t + C5 * h,
                  y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = _rhs(gamma_kind, g1, g2, c0, p, t + h,
                  y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        t_new = horizon if last else t + h
        k7 = _rhs(gamma_kind, g1, g2, c0, p, t_new, y_new)
        n_evals += 6
        sc = atol + rtol * max(fabs(y), fabs(y_new))
        err = fabs(h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)) / sc
        if not isfinite(err):
            err = 1e10
        if err <= 1.0:
            if not isfinite(y_new):
                status = 1
                break
            if y_new < 0.0:
                y_new = 0.0
                k7 = _rhs(gamma_kind, g1, g2, c0, p, t_new, y_new)
                n_evals += 1
            if n == capacity:
                capacity *= 2
                times = np.resize(times, capacity + 1)
                values = np.resize(values, capacity + 1)
                coeffs = np.resize(coeffs, (capacity, 5))
            ydiff = y_new - y
            bspl = h * k1 - ydiff
            coeffs[n, 0] = y
            coeffs[n, 1] = ydiff
            coeffs[n, 2] = bspl
            coeffs[n, 3] = ydiff - h * k7 - bspl
            coeffs[n, 4] = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
            n += 1
            t = t_new
            y = y_new
            k1 = k7
            times[n] = t
            values[n] = y
            if fabs(y) > cap:
                status = 1
                break
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = min(FAC_MAX, max(FAC_MIN, SAFETY * pow(err, -0.2)))
            if rejected_last:
                fac = min(fac, 1.0)
            h *= fac
            rejected_last = False
        else:
            n_rejected += 1
            rejected_last = True
            h *= max(FAC_MIN, SAFETY * pow(err, -0.2))
    return (times[:n + 1].copy(), values[:n + 1].copy(), coeffs[:n].copy(),
            n_rejected, n_evals, status)
