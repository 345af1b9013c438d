"""Certified decay envelopes for dissipative evolution equations.

Scalar data (dissipation profiles, nonlinearity majorants, envelopes) live in
``scalar_model``; ``certifier`` checks envelopes against them, ``comparison``
integrates the extremal scalar ODE, ``dynamics`` handles finite-dimensional
systems, and ``cli`` wires it all to scenario files.
"""

from ._backend import BACKEND
from .certifier import (
    Certificate,
    FeasibilityReport,
    Status,
    Strictness,
    certify_closed_form,
    certify_grid,
    exponential_params,
    optimize_rate,
    powerlaw_params,
)
from .comparison import DominanceReport, ScalarTrajectory, solve_extremal, transform_v, verify_envelope
from .dynamics import (
    System,
    dissipativity_estimate,
    estimate_general_exponent,
    gallery,
    integrate,
    lyapunov_solve,
    norm_trajectory,
    propagator,
    spectral_abscissa,
)
from .errors import DecayCertError, DomainError, InfeasibleError, NumericalFailure, RangeError, ScenarioError
from .scalar_model import (
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

__version__ = "0.1.0"
