"""Dormand-Prince 5(4) embedded Runge-Kutta stepping with dense output.

Shared by the scalar fallback kernel and the vector integrator. Dense output
follows the classical fourth-order continuous extension; each accepted step
stores five coefficient blocks ``r1..r5`` so that, with ``th = (t - t0)/h``,

    y(t) = r1 + th*(r2 + (1-th)*(r3 + th*(r4 + (1-th)*r5)))
"""

import math

import numpy as np

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9

A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84

E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
BLOWUP_CAP = 1e12

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_STEP_UNDERFLOW = 2


def dense_eval(times, coeffs, t):
    """Evaluate stored dense output at ``t`` (scalar or array).

    ``coeffs`` has shape ``(n_steps, 5)`` or ``(n_steps, 5, dim)``.
    """
    times = np.asarray(times)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    idx = np.searchsorted(times, t_arr, side="right") - 1
    idx = np.clip(idx, 0, len(times) - 2)
    h = times[idx + 1] - times[idx]
    th = (t_arr - times[idx]) / h
    c = coeffs[idx]
    if c.ndim == 3:
        th = th[:, None]
        th1 = 1.0 - th
        out = c[:, 0] + th * (c[:, 1] + th1 * (c[:, 2] + th * (c[:, 3] + th1 * c[:, 4])))
    else:
        th1 = 1.0 - th
        out = c[:, 0] + th * (c[:, 1] + th1 * (c[:, 2] + th * (c[:, 3] + th1 * c[:, 4])))
    if np.ndim(t) == 0:
        return out[0]
    return out


def _initial_step_scalar(f, t0, y0, f0, t_end, rtol, atol):
    sk = atol + rtol * abs(y0)
    d0 = abs(y0) / sk
    d1 = abs(f0) / sk
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = abs(f1 - f0) / sk / h0
    m = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if m <= 1e-15 else (0.01 / m) ** 0.2
    return min(100 * h0, h1, t_end - t0)


def dopri_scalar(f, t0, y0, t_end, rtol, atol, cap=BLOWUP_CAP, nonneg=False):
    """Integrate a scalar ODE ``y' = f(t, y)`` on plain Python floats.

    Returns ``(times, values, coeffs, n_rejected, n_evals, status)``. With
    ``nonneg`` the accepted state is clamped at zero, reproducing the
    right-derivative convention for norms that touch the origin.
    """
    t = float(t0)
    y = float(y0)
    times = [t]
    values = [y]
    coeffs = []
    k1 = f(t, y)
    n_evals = 1
    if t_end <= t:
        return np.array(times), np.array(values), np.zeros((0, 5)), 0, n_evals, STATUS_OK
    h = _initial_step_scalar(f, t, y, k1, t_end, rtol, atol)
    n_evals += 1
    n_rejected = 0
    rejected_last = False
    status = STATUS_OK
    while t < t_end:
        if h < 16 * 2.220446049250313e-16 * max(abs(t), 1.0):
            status = STATUS_STEP_UNDERFLOW
            break
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        k2 = f(t + C2 * h, y + h * A21 * k1)
        k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        t_new = t + h if not last else t_end
        k7 = f(t_new, y_new)
        n_evals += 6
        err_abs = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = atol + rtol * max(abs(y), abs(y_new))
        err = abs(err_abs) / sc
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            if not math.isfinite(y_new):
                status = STATUS_BLOWUP
                break
            if nonneg and y_new < 0.0:
                y_new = 0.0
                k7 = f(t_new, y_new)
                n_evals += 1
            ydiff = y_new - y
            bspl = h * k1 - ydiff
            coeffs.append((
                y,
                ydiff,
                bspl,
                ydiff - h * k7 - bspl,
                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ))
            t = t_new
            y = y_new
            k1 = k7
            times.append(t)
            values.append(y)
            if abs(y) > cap:
                status = STATUS_BLOWUP
                break
            fac = FAC_MAX if err == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
            if rejected_last:
                fac = min(fac, 1.0)
            h *= fac
            rejected_last = False
        else:
            n_rejected += 1
            rejected_last = True
            h *= max(FAC_MIN, SAFETY * err ** -0.2)
    return (
        np.array(times),
        np.array(values),
        np.array(coeffs, dtype=float).reshape(-1, 5),
        n_rejected,
        n_evals,
        status,
    )


def _norm(x):
    return float(np.linalg.norm(x))


def _initial_step_vector(f, t0, y0, f0, t_end, rtol, atol):
    sk = atol + rtol * _norm(y0)
    d0 = _norm(y0) / sk
    d1 = _norm(f0) / sk
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = _norm(f1 - f0) / sk / h0
    m = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if m <= 1e-15 else (0.01 / m) ** 0.2
    return min(100 * h0, h1, t_end - t0)


def dopri_vector(f, t0, y0, t_end, rtol, atol, cap=BLOWUP_CAP):
    """Integrate ``y' = f(t, y)`` for a 1-D (real or complex) state array.

    Returns ``(times, states, coeffs, n_rejected, n_evals, status)`` with
    ``states`` of shape ``(n+1, dim)`` and ``coeffs`` of shape ``(n, 5, dim)``.
    Step control measures the local error in the Euclidean norm against
    ``atol + rtol*|y|``, so a one-dimensional state reproduces the scalar
    integrator and the error bound applies directly to ``|y(t)|``. The
    blow-up test uses the same norm.
    """
    t = float(t0)
    y = np.array(y0)
    if not np.iscomplexobj(y):
        y = y.astype(float)
    times = [t]
    states = [y.copy()]
    coeffs = []
    k1 = f(t, y)
    n_evals = 1
    if t_end <= t:
        return (np.array(times), np.array(states), np.zeros((0, 5) + y.shape, dtype=y.dtype),
                0, n_evals, STATUS_OK)
    h = _initial_step_vector(f, t, y, k1, t_end, rtol, atol)
    n_evals += 1
    n_rejected = 0
    rejected_last = False
    status = STATUS_OK
    while t < t_end:
        if h < 16 * 2.220446049250313e-16 * max(abs(t), 1.0):
            status = STATUS_STEP_UNDERFLOW
            break
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        k2 = f(t + C2 * h, y + h * A21 * k1)
        k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        t_new = t + h if not last else t_end
        k7 = f(t_new, y_new)
        n_evals += 6
        err_abs = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = atol + rtol * max(_norm(y), _norm(y_new))
        err = _norm(err_abs) / sc
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            if not np.all(np.isfinite(y_new)):
                status = STATUS_BLOWUP
                break
            ydiff = y_new - y
            bspl = h * k1 - ydiff
            coeffs.append(np.stack([
                y,
                ydiff,
                bspl,
                ydiff - h * k7 - bspl,
                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ]))
            t = t_new
            y = y_new
            k1 = k7
            times.append(t)
            states.append(y)
            if np.linalg.norm(y) > cap:
                status = STATUS_BLOWUP
                break
            fac = FAC_MAX if err == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
            if rejected_last:
                fac = min(fac, 1.0)
            h *= fac
            rejected_last = False
        else:
            n_rejected += 1
            rejected_last = True
            h *= max(FAC_MIN, SAFETY * err ** -0.2)
    if coeffs:
        coeff_arr = np.array(coeffs)
    else:
        coeff_arr = np.zeros((0, 5) + y.shape, dtype=y.dtype)
    return np.array(times), np.array(states), coeff_arr, n_rejected, n_evals, status
