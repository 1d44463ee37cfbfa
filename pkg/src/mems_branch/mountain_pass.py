"""Regularized energy and a numerical mountain-pass search for the second solution.

The singular source ``1/(1-u)^2`` is continued beyond ``1 - eps`` by a
``C^1`` power law of degree ``p``; its primitive ``G_eps`` (normalized by
``G_eps(-inf) = 0``) enters

    J(u) = 1/2 int |grad u|^2 - lam int f G_eps(u)

on the ball.  The search deforms a discrete path from the minimal solution
``u_lam`` to a low-energy cutoff state ``w_eps``: the highest interior node
descends along the ``H^1_0`` gradient and the nodes are redistributed at equal
arclength after every move.  Whenever a node beyond the top already lies
below ``J(u_lam)`` the path is cut there, which keeps the nodes clustered at
the pass (near the fold the pass sits close to ``u_lam``).  Once the gradient
at the top node is small, or the descent stalls at the resolution of the
path, a Newton polish finishes the convergence to the saddle.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .exceptions import ConvergenceError
from .newton import NewtonParams, minimal_solution
from .radial import _as_field, residual_norm, sector_operator
from .spectrum import morse_data

__all__ = [
    "RegularizationParams",
    "PathParams",
    "MPResult",
    "default_exponent",
    "g_eps",
    "g_eps_prime",
    "G_eps",
    "growth_constant",
    "ar_threshold",
    "energy",
    "energy_gradient",
    "make_w_eps",
    "mp_search",
]

log = logging.getLogger(__name__)


def default_exponent(N):
    """``p = 2`` for ``N <= 4``, else ``min(2, midpoint of (1, (N+2)/(N-2)))``."""
    if N <= 4:
        return 2.0
    return min(2.0, 0.5 * (1.0 + (N + 2.0) / (N - 2.0)))


@dataclass(frozen=True)
class RegularizationParams:
    """``eps`` in (0, 1) and the growth exponent ``p > 1``.

    Pass ``N`` to also check the subcritical range ``p < (N+2)/(N-2)``
    required for ``N >= 3``.
    """

    eps: float
    p: float = 2.0
    N: int | None = None

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if not self.p > 1.0:
            raise ValueError("p must be > 1")
        if self.N is not None and self.N >= 3 and not self.p < (self.N + 2.0) / (self.N - 2.0):
            raise ValueError(f"p must be below (N+2)/(N-2) = {(self.N + 2.0) / (self.N - 2.0):.6g} for N = {self.N}")

    @classmethod
    def for_dimension(cls, N, eps, p=None):
        return cls(eps, default_exponent(N) if p is None else p, N)

    @property
    def theta(self):
        return 0.5 * (self.p + 3.0)

    def _coeffs(self):
        e, p = self.eps, self.p
        a = 1.0 / e**2 - 2.0 * (1.0 - e) / (p * e**3)
        b = 2.0 / (p * e**3 * (1.0 - e) ** (p - 1.0))
        return a, b


def g_eps(u, params):
    """Regularized source: ``1/(1-u)^2`` up to ``1 - eps``, ``a + b u^p`` above."""
    u = np.asarray(u, dtype=float)
    a, b = params._coeffs()
    knot = 1.0 - params.eps
    low = np.minimum(u, knot)
    out = 1.0 / (1.0 - low) ** 2
    hi = u > knot
    return np.where(hi, a + b * np.where(hi, u, knot) ** params.p, out)


def g_eps_prime(u, params):
    u = np.asarray(u, dtype=float)
    _, b = params._coeffs()
    knot = 1.0 - params.eps
    low = np.minimum(u, knot)
    hi = u > knot
    return np.where(hi, b * params.p * np.where(hi, u, knot) ** (params.p - 1.0), 2.0 / (1.0 - low) ** 3)


def G_eps(u, params):
    """Primitive of :func:`g_eps` vanishing at ``-inf``."""
    u = np.asarray(u, dtype=float)
    a, b = params._coeffs()
    e, p = params.eps, params.p
    knot = 1.0 - e
    low = np.minimum(u, knot)
    out = 1.0 / (1.0 - low)
    hi = u > knot
    uh = np.where(hi, u, knot)
    upper = 1.0 / e + a * (uh - knot) + b / (p + 1.0) * (uh ** (p + 1.0) - knot ** (p + 1.0))
    return np.where(hi, upper, out)


def growth_constant(params):
    """``C_eps`` with ``0 <= g_eps(u) <= C_eps (1 + u^p)`` for ``u >= 0``.

    Below the knot ``g <= 1/eps^2``; above it ``g = a + b u^p <= max(|a|, b)(1 + u^p)``.
    """
    a, b = params._coeffs()
    return max(1.0 / params.eps**2, abs(a), b)


def ar_threshold(params, u_max=1e6):
    """Smallest ``M`` with ``theta G_eps(u) <= u g_eps(u)`` for all ``u >= M``.

    The defect ``u g - theta G`` grows like ``u^{p+1}``, so beyond its last
    sign change it stays positive; that change is located by a scan and
    refined with Brent's method.
    """
    th = params.theta

    def defect(u):
        return float(u * g_eps(u, params) - th * G_eps(u, params))

    grid = np.concatenate((np.linspace(0.0, 1.0, 401)[1:], np.geomspace(1.0, u_max, 400)[1:]))
    vals = np.array([defect(u) for u in grid])
    if vals[-1] <= 0:
        raise ValueError("AR inequality does not hold up to u_max")
    bad = np.flatnonzero(vals <= 0)
    if bad.size == 0:
        return 0.0
    i = int(bad[-1])
    return brentq(defect, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-14)


def _stiffness(grid):
    return sector_operator(grid, np.zeros(grid.n), 0)


def energy(u, lam, params, spec, grid):
    """Discrete ``J_{eps,lam}(u)`` on the ball (the interval for ``N = 1``)."""
    u = _as_field(u, grid)
    up = np.append(u, 0.0)
    grad2 = float(np.sum(grid.faces * np.diff(up) ** 2))
    V = grid.weights[:-1]
    pot = float(np.sum(V * spec.profile(grid.interior) * G_eps(u, params)))
    return spec.surface_area * (0.5 * grad2 - lam * pot)


def energy_gradient(u, lam, params, spec, grid):
    """Nodal derivative of :func:`energy`: ``|S| V (-Delta_h u - lam f g_eps(u))``."""
    u = _as_field(u, grid)
    op = _stiffness(grid)
    V = grid.weights[:-1]
    return spec.surface_area * V * (op.matvec(u) - lam * spec.profile(grid.interior) * g_eps(u, params))


def make_w_eps(params, spec, grid, r_cut=0.4):
    """``(1 - eps) chi`` with ``chi = 1`` on ``[0, r_cut]``, 0 beyond ``2 r_cut``.

    The transition is the cubic smoothstep, which is ``C^1`` and monotone.
    """
    if not 0.0 < r_cut < 0.5:
        raise ValueError("r_cut must lie in (0, 1/2)")
    r = grid.interior
    s = np.clip((r - r_cut) / r_cut, 0.0, 1.0)
    chi = 1.0 - s * s * (3.0 - 2.0 * s)
    return (1.0 - params.eps) * chi


@dataclass(frozen=True)
class PathParams:
    nodes: int = 21
    grad_tol: float = 1e-8
    switch_tol: float = 1e-3
    max_sweeps: int = 4000
    stall_sweeps: int = 25
    step: float = 0.5
    r_cut: float = 0.4
    newton_iter: int = 30

    def __post_init__(self):
        if self.nodes < 3:
            raise ValueError("a path needs at least three nodes")
        if not 0 < self.grad_tol <= self.switch_tol:
            raise ValueError("need 0 < grad_tol <= switch_tol")


@dataclass
class MPResult:
    """Outcome of :func:`mp_search`; unpacks as ``(u, level)``."""

    u: np.ndarray
    level: float
    accepted: bool
    grad_norm: float
    params: RegularizationParams
    u_lambda: np.ndarray
    energy_u_lambda: float
    energy_w_eps: float
    sweeps: int
    newton_steps: int
    path_energies: np.ndarray
    mu1: float = float("nan")
    mu2: float = float("nan")
    flags: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.u, self.level))


class _Sobolev:
    """``H^1_0`` Riesz map and norm on a grid."""

    def __init__(self, spec, grid):
        self.spec, self.grid = spec, grid
        self.op = _stiffness(grid)
        self.ab = self.op.banded()
        self.V = grid.weights[:-1]
        self.f = spec.profile(grid.interior)

    def gradient(self, u, lam, params):
        # solve K G = dJ/du; in nodal form (V^{-1}K) G = -Delta u - lam f g
        rhs = self.op.matvec(u) - lam * self.f * g_eps(u, params)
        return solve_banded((1, 1), self.ab, rhs, check_finite=False)

    def norm(self, v):
        return math.sqrt(max(self.spec.surface_area * float(np.sum(self.V * v * self.op.matvec(v))), 0.0))


def _redistribute(path, sob, count=None):
    # equal H^1_0-arclength resampling of the polyline with fixed endpoints
    count = len(path) if count is None else count
    seg = np.array([sob.norm(b - a) for a, b in zip(path[:-1], path[1:])])
    total = float(seg.sum())
    if total == 0.0:
        return list(path)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    m = count - 1
    out = [path[0]]
    for j in range(1, m):
        target = total * j / m
        i = min(int(np.searchsorted(cum, target, side="right")) - 1, len(path) - 2)
        t = (target - cum[i]) / seg[i] if seg[i] > 0 else 0.0
        out.append((1 - t) * path[i] + t * path[i + 1])
    out.append(path[-1])
    return out


def _polish(u, lam, params, spec, grid, sob, iters, tol):
    op = sob.op
    steps = 0
    for _ in range(iters):
        G = sob.gradient(u, lam, params)
        if sob.norm(G) <= tol:
            break
        q = -lam * sob.f * g_eps_prime(u, params)
        ab = op.banded()
        ab[1] += q
        F = op.matvec(u) - lam * sob.f * g_eps(u, params)
        u = u - solve_banded((1, 1), ab, F, check_finite=False)
        steps += 1
    return u, sob.norm(sob.gradient(u, lam, params)), steps


def mp_search(lam, params, spec, grid, path_params=None, u_lambda=None, newton=None):
    """Mountain-pass critical point of ``J_{eps,lam}`` and its level.

    Parameters
    ----------
    lam : float
        Below the pull-in value, close to it.
    params : RegularizationParams or None
        ``None`` selects ``eps = (1 - max u_lam)/4`` and the default ``p``.
        If ``J(w_eps) < J(u_lam)`` fails, ``eps`` is halved until it holds
        (recorded in ``flags['eps_reduced']``).
    u_lambda : array, optional
        Minimal solution at ``lam``; computed by natural continuation if absent.

    Returns
    -------
    MPResult
        ``accepted`` is set only when the point satisfies ``max u <= 1 - eps``
        and solves the unregularized equation to the Newton tolerance.

    Raises
    ------
    ConvergenceError
        If the descent stagnates or the pass cannot be bracketed.
    """
    pp = path_params or PathParams()
    newton = newton or NewtonParams()
    if u_lambda is None:
        u_lambda = minimal_solution(lam, spec, grid, newton)
    u_lambda = _as_field(u_lambda, grid).copy()
    flags = {}
    if params is None:
        params = RegularizationParams.for_dimension(spec.N, 0.25 * (1.0 - float(np.max(u_lambda))))
    while True:
        w = make_w_eps(params, spec, grid, pp.r_cut)
        J0 = energy(u_lambda, lam, params, spec, grid)
        J1 = energy(w, lam, params, spec, grid)
        if J1 < J0:
            break
        if params.eps < 1e-6:
            raise ConvergenceError("no eps found with J(w_eps) < J(u_lambda)")
        params = RegularizationParams(0.5 * params.eps, params.p, params.N)
        flags["eps_reduced"] = params.eps
    sob = _Sobolev(spec, grid)
    m = pp.nodes - 1

    def energies(path):
        return np.array([energy(v, lam, params, spec, grid) for v in path])

    path = [(1 - j / m) * u_lambda + (j / m) * w for j in range(m + 1)]
    E = energies(path)
    gnorm = float("inf")
    zooms = 0
    best, still = float("inf"), 0
    sweep = 0
    for sweep in range(1, pp.max_sweeps + 1):
        k = int(np.argmax(E[1:-1])) + 1
        # any node past the pass that is already below J(u_lam) is a valid
        # endpoint; cutting the path there keeps the nodes near the pass
        j = next((i for i in range(k + 1, m) if E[i] < J0), m)
        if j < m:
            path = _redistribute(path[: j + 1], sob, m + 1)
            E = energies(path)
            k = int(np.argmax(E[1:-1])) + 1
            zooms += 1
        v = path[k]
        G = sob.gradient(v, lam, params)
        gnorm = sob.norm(G)
        if gnorm <= pp.switch_tol:
            break
        # the descent stalls once the pass is resolved to the path spacing
        if E[k] < best - 1e-12 * (1.0 + abs(best)):
            best, still = E[k], 0
        else:
            still += 1
            if still >= pp.stall_sweeps:
                flags["descent_stalled"] = gnorm
                break
        tau = pp.step
        while tau > 1e-10:
            trial = v - tau * G
            Et = energy(trial, lam, params, spec, grid)
            if Et < E[k]:
                break
            tau *= 0.5
        else:
            raise ConvergenceError(f"mountain-pass descent stagnated (gradient {gnorm:.3e})")
        path[k] = trial
        path = _redistribute(path, sob)
        E = energies(path)
    else:
        raise ConvergenceError(f"mountain-pass descent did not reach {pp.switch_tol:g} (gradient {gnorm:.3e})")
    flags["endpoint_zooms"] = zooms
    k = int(np.argmax(E[1:-1])) + 1
    u, gnorm, nsteps = _polish(path[k], lam, params, spec, grid, sob, pp.newton_iter, pp.grad_tol)
    level = energy(u, lam, params, spec, grid)
    below = float(np.max(u)) <= 1.0 - params.eps
    ok = gnorm <= pp.grad_tol and below
    if not level > J0:
        # the polish fell back into the minimum instead of the pass
        flags["polish_reached_minimum"] = True
        ok = False
    if below and ok:
        ok = residual_norm(u, lam, spec, grid) <= newton.tol
    if not below:
        flags["above_knot"] = float(np.max(u))
    if gnorm > pp.grad_tol:
        flags["gradient_not_converged"] = gnorm
    log.info("mountain pass: level %.10g after %d sweeps and %d Newton steps", level, sweep, nsteps)
    mu1 = mu2 = float("nan")
    if float(np.max(u)) < 1.0:
        sr = morse_data(u, lam, spec, grid)
        mu1, mu2 = sr.mu1, sr.mu2
    return MPResult(u, level, ok, gnorm, params, u_lambda, J0, J1, sweep, nsteps, E, mu1, mu2, flags)
