"""Pure-Python versions of the compiled kernels in ``_ckernels.pyx``.

Signatures and results match the compiled module so that ``_backend`` can
swap one for the other.
"""

from ._dopri import BLOWUP_CAP, dopri_scalar

GAMMA_CONSTANT = 0
GAMMA_POWERLAW = 1


def extremal_kernel(gamma_kind, g1, g2, c0, p, g0, horizon, rtol, atol, cap=BLOWUP_CAP):
    """Integrate g' = -gamma(t) g + c0 g**p from g(0) = g0 on [0, horizon].

    ``gamma_kind`` selects gamma(t) = g1 (constant) or g1/(1+t)**g2 (power law).
    """
    if gamma_kind == GAMMA_CONSTANT:
        def rhs(t, g):
            gp = g if g > 0.0 else 0.0
            return -g1 * g + c0 * gp ** p
    elif gamma_kind == GAMMA_POWERLAW:
        def rhs(t, g):
            gp = g if g > 0.0 else 0.0
            return -g1 * (1.0 + t) ** -g2 * g + c0 * gp ** p
    else:
        raise ValueError(f"unknown gamma kind {gamma_kind}")
    return dopri_scalar(rhs, 0.0, g0, horizon, rtol, atol, cap=cap, nonneg=True)

