"""Solution branches of ``-Delta u = lam f(r) / (1 - u)^2`` on the unit ball.

Submodules
----------
closed_forms
    Explicit pull-in values, the extremal profile, Hardy and Moser constants.
radial
    Radial grids, the finite-volume operator, residuals and Jacobians.
newton, continuation
    Fixed-``lam`` solves, the minimal branch and pseudo-arclength tracing.
spectrum
    Sturm-bisection eigenvalues per angular sector and Morse indices.
limit
    The entire-space limit profile and its instability certificate.
mountain_pass
    Regularized energy and a path-based search for the second solution.
blowup
    Rescaled profiles near touchdown and the pointwise lower bound.
cli
    Command-line front end (``mems-branch``).
"""

from .branch import Branch, BranchPoint, Fold
from .closed_forms import (
    Q_PLUS,
    CriticalData,
    alpha_critical,
    critical_data,
    hardy_stability_check,
    lambda_star_explicit,
    singular_amplitude,
    u_star_explicit,
)
from .continuation import ContinuationParams, richardson, solve_at_sup_norm, trace_branch
from .exceptions import ConvergenceError, DomainError, SingularityError
from .newton import NewtonParams, minimal_branch, minimal_solution, solve_at_lambda
from .radial import ProblemSpec, RadialGrid, build_grid, residual, residual_norm
from .spectrum import SpectralResult, morse_data, sector_eigenvalues

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "BranchPoint",
    "Fold",
    "Q_PLUS",
    "CriticalData",
    "alpha_critical",
    "critical_data",
    "hardy_stability_check",
    "lambda_star_explicit",
    "singular_amplitude",
    "u_star_explicit",
    "ContinuationParams",
    "richardson",
    "solve_at_sup_norm",
    "trace_branch",
    "ConvergenceError",
    "DomainError",
    "SingularityError",
    "NewtonParams",
    "minimal_branch",
    "minimal_solution",
    "solve_at_lambda",
    "ProblemSpec",
    "RadialGrid",
    "build_grid",
    "residual",
    "residual_norm",
    "SpectralResult",
    "morse_data",
    "sector_eigenvalues",
]
