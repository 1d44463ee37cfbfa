"""Damped Newton solves of ``F(u, lam) = 0`` at fixed ``lam`` and the minimal
branch by natural continuation in ``lam``."""

from dataclasses import dataclass
import logging

import numpy as np
from scipy.linalg import solve_banded

from .branch import Branch, BranchPoint
from .exceptions import ConvergenceError, SingularityError
from .radial import _as_field, gap_jacobian, gap_residual, gap_residual_norm
from .spectrum import morse_data

__all__ = ["NewtonParams", "solve_at_lambda", "minimal_solution", "minimal_branch", "barrier_step", "gap_barrier_step"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonParams:
    """Newton controls.

    ``tol`` applies to the weighted residual max-norm
    (:func:`mems_branch.radial.residual_norm`); ``barrier`` is the margin
    ``delta_b`` kept between every iterate and the singular value 1.
    """

    tol: float = 1e-10
    max_iter: int = 50
    barrier: float = 1e-8
    damping: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.barrier < 1.0:
            raise ValueError("barrier margin must lie in (0, 1)")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")


def barrier_step(u, du, barrier, damping=0.5, t=1.0, t_min=1e-12):
    """Largest ``t * damping^k`` keeping ``max(u + t du) <= 1 - barrier``."""
    limit = 1.0 - barrier
    while np.max(u + t * du) > limit:
        t *= damping
        if t < t_min:
            return 0.0
    return t


def gap_barrier_step(w, dw, barrier, damping=0.5, t=1.0, t_min=1e-12):
    """:func:`barrier_step` for the gap ``w = 1 - u``: keep ``min(w + t dw) >= barrier``."""
    while np.min(w + t * dw) < barrier:
        t *= damping
        if t < t_min:
            return 0.0
    return t


def _polish(w, lam, spec, grid, params, nrm, extra=3):
    # full steps past the tolerance while the residual keeps halving: Newton
    # converges quadratically, so this buys the digits the componentwise
    # tolerance leaves on fine grids and near touchdown
    for k in range(extra):
        try:
            trial = w + _gap_step(w, lam, spec, grid)
            if not np.min(trial) > params.barrier:
                break
            new = gap_residual_norm(trial, lam, spec, grid)
        except (np.linalg.LinAlgError, ValueError, SingularityError):
            break
        if not new <= (max(nrm, params.tol) if k == 0 else 0.5 * nrm):
            break
        w, nrm = trial, new
    return w


def _gap_step(w, lam, spec, grid):
    F = gap_residual(w, lam, spec, grid)
    J = gap_jacobian(w, lam, spec, grid, 0)
    # dF/dw = -J
    return solve_banded((1, 1), J.banded(), F, check_finite=False)


def _newton_gap(lam, w, spec, grid, params):
    nrm = gap_residual_norm(w, lam, spec, grid)
    for it in range(params.max_iter):
        if nrm <= params.tol:
            return _polish(w, lam, spec, grid, params, nrm)
        try:
            dw = _gap_step(w, lam, spec, grid)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise ConvergenceError(f"singular Newton matrix: {exc}", residual=nrm, iterations=it, state=1.0 - w)
        if not np.all(np.isfinite(dw)):
            raise ConvergenceError("non-finite Newton step", residual=nrm, iterations=it, state=1.0 - w)
        t = gap_barrier_step(w, dw, params.barrier, params.damping)
        if t == 0.0:
            raise ConvergenceError("barrier blocks every Newton step", residual=nrm, iterations=it, state=1.0 - w)
        while True:
            trial = w + t * dw
            new = gap_residual_norm(trial, lam, spec, grid)
            if new < (1.0 - 1e-4 * t) * nrm or t < 1e-3:
                break
            t *= params.damping
        w, nrm = trial, new
    if nrm <= params.tol:
        return _polish(w, lam, spec, grid, params, nrm)
    raise ConvergenceError(
        f"Newton did not converge at lambda={lam:.12g}: residual {nrm:.3e} after {params.max_iter} iterations",
        residual=nrm,
        iterations=params.max_iter,
        state=1.0 - w,
    )


def solve_at_lambda(lam, init, spec, grid, params=None, gap=False):
    """Solve the discrete MEMS equation at fixed ``lam`` starting from ``init``.

    Each iterate stays below ``1 - params.barrier``; steps are first shortened
    to honour that barrier and then backtracked until the weighted residual
    decreases.  The iteration runs on the gap ``w = 1 - u``; with
    ``gap=True`` both ``init`` and the result are given as gaps too.

    Raises
    ------
    ConvergenceError
        If the residual does not reach ``params.tol`` within
        ``params.max_iter`` iterations (expected beyond the pull-in value).
    """
    params = params or NewtonParams()
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    v = _as_field(init, grid)
    w = v.copy() if gap else 1.0 - v
    if np.min(w) <= params.barrier:
        raise SingularityError("initial guess violates the barrier", node=int(np.argmin(w)))
    w = _newton_gap(lam, w, spec, grid, params)
    return w if gap else 1.0 - w


def minimal_solution(lam, spec, grid, params=None, steps=10):
    """Minimal solution at ``lam`` by ``steps`` equal natural-continuation steps from 0."""
    u = np.zeros(grid.n)
    for t in np.linspace(0.0, 1.0, steps + 1)[1:]:
        u = solve_at_lambda(t * lam, u, spec, grid, params)
    return u


def _point(lam, w, spec, grid, s, l_max=2, k_max=3):
    sr = morse_data(None, lam, spec, grid, l_max=l_max, k_max=k_max, gap=w)
    return BranchPoint(
        s=s,
        lam=float(lam),
        u=1.0 - w,
        gap=w.copy(),
        mu1=sr.mu1,
        mu2=sr.mu2,
        morse_index=sr.morse_index,
        mu2_sector=sr.mu2_sector,
        on_minimal=sr.mu1 > 0,
    )


def minimal_branch(spec, grid, lambda_step, params=None, min_step=1e-8, max_points=100000):
    """Minimal branch by natural continuation from ``(0, 0)``.

    ``lam`` increases by ``lambda_step`` (halved after each failed solve and
    regrown by 1.3 after successes, never above the initial value) until the
    step drops below ``min_step``.  A solve is only accepted if the result is
    linearly stable (``mu_1 > 0``), so the walk never leaves the minimal
    branch.  Each point's ``s`` is ``lam``.
    """
    if not lambda_step > 0:
        raise ValueError("lambda_step must be positive")
    params = params or NewtonParams()
    w = np.ones(grid.n)
    branch = Branch()
    branch.points.append(_point(0.0, w, spec, grid, 0.0))
    prev = None
    step = float(lambda_step)
    lam = 0.0
    while len(branch.points) < max_points:
        if step < min_step:
            branch.termination = "step_underflow"
            break
        lam_new = lam + step
        guess = w if prev is None else w + (w - prev[1]) * (step / (lam - prev[0]))
        if np.min(guess) <= params.barrier:
            guess = w
        try:
            w_new = _newton_gap(lam_new, guess, spec, grid, params)
            pt = _point(lam_new, w_new, spec, grid, lam_new)
        except (ConvergenceError, SingularityError):
            step *= 0.5
            continue
        if not pt.mu1 > 0.0:
            step *= 0.5
            continue
        prev = (lam, w)
        lam, w = lam_new, w_new
        branch.points.append(pt)
        if np.min(w_new) < 10.0 * params.barrier:
            branch.termination = "barrier_reached"
            break
        step = min(step * 1.3, lambda_step)
    else:
        branch.termination = "max_steps"
    branch.lambda_star_est = float(lam)
    branch.flags["lambda_star_lower_bound"] = True
    log.debug("minimal branch: %d points, last lambda %.10g", len(branch.points), lam)
    return branch
