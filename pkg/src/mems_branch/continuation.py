"""Pseudo-arclength continuation of ``F(u, lam) = 0`` through turning points.

The branch starts at ``(lam, u) = (0, 0)``.  The solver unknown is the gap
``w = 1 - u``, which keeps full relative precision as ``max u -> 1``; points
carry both ``u`` and the gap.  Each step predicts along the
secant of the last two points and corrects with Newton on the bordered system

    F(u, lam) = 0,    <d, (u, lam) - x_k>_W = ds,

where ``d`` is the unit secant.  The inner product weights ``u`` by the
finite-volume weights (normalized so the unit ball has measure one), adds the
centre value ``u(0)`` so the norm keeps resolving a forming spike, and scales
``lam`` by ``lam_scale``.  The bordered system is factorized with a sparse LU
of the tridiagonal core plus one dense row and column.

Turning points are located as sign changes of the ``lam`` component of the
tangent and refined by Brent's method along the chord between the bracketing
points (re-solving the corrector at every trial arclength); sign changes
with both tangent components below ``fold_noise`` are roundoff and ignored.
Zero crossings of
``mu_2`` after the first fold are refined the same way.
"""

from dataclasses import dataclass, field
import logging
import math
import warnings

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .branch import Branch, BranchPoint, Fold
from .exceptions import ConvergenceError, SingularityError
from .newton import NewtonParams, gap_barrier_step
from .radial import gap_jacobian, gap_residual, gap_residual_norm, sector_operator
from .spectrum import morse_data, sector_eigenvalues

__all__ = [
    "ContinuationParams",
    "Continuation",
    "trace_branch",
    "detect_folds",
    "lambda_star",
    "lambda_2_star",
    "solve_at_sup_norm",
    "richardson",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContinuationParams:
    ds0: float = 0.05
    ds_min: float = 1e-9
    ds_max: float = 0.1
    fold_tol: float = 1e-3
    fold_noise: float = 1e-9
    lam_scale: float = 1.0
    max_steps: int = 5000
    max_corrector_iter: int = 12
    grow: float = 1.3
    min_cos: float = 0.8
    l_max: int = 2
    k_max: int = 3
    stop_at_lambda2: bool = True
    refine_tol: float = 1e-13
    newton: NewtonParams = field(default_factory=NewtonParams)

    def __post_init__(self):
        if not 0 < self.ds_min <= self.ds0 <= self.ds_max:
            raise ValueError("need 0 < ds_min <= ds0 <= ds_max")
        if self.fold_tol <= 0 or self.lam_scale <= 0:
            raise ValueError("fold_tol and lam_scale must be positive")
        if self.l_max < 1 or self.k_max < 1:
            raise ValueError("l_max and k_max must be >= 1")


class Continuation:
    """Solver context: problem, grid, weighted inner product and correctors."""

    def __init__(self, spec, grid, params=None):
        self.spec = spec
        self.grid = grid
        self.params = params or ContinuationParams()
        n = grid.n
        W = np.empty(n + 1)
        W[:n] = spec.N * grid.weights[:-1]
        W[0] += 1.0
        W[n] = self.params.lam_scale**2
        self.W = W
        self.f = spec.profile(grid.interior)

    # state vectors x = (w_0, ..., w_{n-1}, lam) with w = 1 - u
    def inner(self, x, y):
        return float(np.sum(self.W * x * y))

    def norm(self, x):
        return math.sqrt(self.inner(x, x))

    def _bordered(self, x, row, corner):
        """LU of ``[[J, F_lam], [row, corner]]`` at state ``x``."""
        n = self.grid.n
        w, lam = x[:n], x[n]
        J = gap_jacobian(w, lam, self.spec, self.grid, 0)
        F_lam = -self.f / w**2
        idx = np.arange(n)
        rows = np.concatenate([idx, idx[:-1], idx[1:], idx, np.full(n + 1, n)])
        cols = np.concatenate([idx, idx[1:], idx[:-1], np.full(n, n), np.arange(n + 1)])
        rowvals = np.append(row[:n], corner)
        # dF/dw = -dF/du
        vals = np.concatenate([-J.diag, -J.upper, -J.lower, F_lam, rowvals])
        A = sp.csc_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
        return splu(A, permc_spec="COLAMD")

    def residual_norm(self, x):
        n = self.grid.n
        return gap_residual_norm(x[:n], x[n], self.spec, self.grid)

    def corrector(self, anchor, d, ds, guess=None):
        """Solve ``F = 0`` on the hyperplane ``<d, x - anchor>_W = ds``.

        Returns ``(x, iterations)``; raises :class:`ConvergenceError`.
        """
        p = self.params
        nt = p.newton
        n = self.grid.n
        Wd = self.W * d
        x = anchor + ds * d if guess is None else guess.copy()
        if np.min(x[:n]) <= nt.barrier:
            raise ConvergenceError("predictor violates the barrier")
        for it in range(p.max_corrector_iter + 1):
            if x[n] < -1e-12:
                raise ConvergenceError("corrector left lam >= 0")
            try:
                nrm = self.residual_norm(x)
            except SingularityError as exc:
                raise ConvergenceError(str(exc))
            g = float(np.dot(Wd, x - anchor) - ds)
            done = nrm <= nt.tol and abs(g) <= 1e-10 * max(abs(ds), 1e-12) + 1e-15
            if it == p.max_corrector_iter and not done:
                break
            F = gap_residual(x[:n], x[n], self.spec, self.grid)
            try:
                lu = self._bordered(x, Wd, Wd[n])
                dx = lu.solve(-np.append(F, g))
            except RuntimeError as exc:
                if done:
                    return x, it
                raise ConvergenceError(f"singular bordered system: {exc}")
            if done:
                return self._polish(x, dx, Wd, anchor, ds, nrm), it
            if not np.all(np.isfinite(dx)):
                raise ConvergenceError("non-finite corrector step")
            t = gap_barrier_step(x[:n], dx[:n], nt.barrier, nt.damping)
            if t == 0.0:
                raise ConvergenceError("barrier blocks corrector")
            x = x + t * dx
        raise ConvergenceError(f"corrector did not converge (residual {nrm:.3e})", residual=nrm)

    def _polish(self, x, dx, Wd, anchor, ds, nrm, extra=3):
        # Newton steps beyond the tolerance while the residual keeps halving:
        # on fine grids the tolerance sits far above the roundoff floor of
        # the componentwise norm, and the remaining error shows up in lam
        nt = self.params.newton
        n = self.grid.n
        for k in range(extra):
            trial = x + dx
            if not np.all(np.isfinite(trial)) or np.min(trial[:n]) <= nt.barrier:
                break
            try:
                new = self.residual_norm(trial)
            except SingularityError:
                break
            if not new <= (max(nrm, nt.tol) if k == 0 else 0.5 * nrm):
                break
            x, nrm = trial, new
            F = gap_residual(x[:n], x[n], self.spec, self.grid)
            g = float(np.dot(Wd, x - anchor) - ds)
            try:
                dx = self._bordered(x, Wd, Wd[n]).solve(-np.append(F, g))
            except RuntimeError:
                break
        return x

    def tangent(self, x, d_ref):
        """Unit tangent at ``x`` oriented along ``d_ref``."""
        n = self.grid.n
        Wd = self.W * d_ref
        lu = self._bordered(x, Wd, Wd[n])
        rhs = np.zeros(n + 1)
        rhs[n] = 1.0
        t = lu.solve(rhs)
        t /= self.norm(t)
        if self.inner(t, d_ref) < 0:
            t = -t
        return t

    def initial_tangent(self):
        n = self.grid.n
        op = sector_operator(self.grid, np.zeros(n), 0)
        from scipy.linalg import solve_banded

        z = solve_banded((1, 1), op.banded(), self.f)
        t = np.append(-z, 1.0)
        return t / self.norm(t)

    def spectral(self, x):
        n = self.grid.n
        return morse_data(None, x[n], self.spec, self.grid, self.params.l_max, self.params.k_max, gap=x[:n])

    def make_point(self, x, s, t_lam=float("nan"), sr=None):
        n = self.grid.n
        sr = sr or self.spectral(x)
        return BranchPoint(
            s=float(s),
            lam=float(x[n]),
            u=1.0 - x[:n],
            gap=x[:n].copy(),
            mu1=sr.mu1,
            mu2=sr.mu2,
            morse_index=sr.morse_index,
            mu2_sector=sr.mu2_sector,
            on_minimal=sr.mu1 > 0,
            tangent_lam=float(t_lam),
        )

    def state(self, point):
        return np.append(point.w, point.lam)

    # refinement along the chord between two accepted states
    def _chord(self, xa, xb):
        e = xb - xa
        L = self.norm(e)
        return e / L, L

    def _on_chord(self, xa, xb, sigma):
        e, L = self._chord(xa, xb)
        guess = xa + (sigma / L) * (xb - xa)
        x, _ = self.corrector(xa, e, sigma, guess=guess)
        return x

    def refine_fold(self, pa, pb):
        """Locate the turning point between branch points ``pa`` and ``pb``."""
        xa, xb = self.state(pa), self.state(pb)
        e, L = self._chord(xa, xb)
        n = self.grid.n

        def t_lam(sigma):
            x = self._on_chord(xa, xb, sigma)
            return self.tangent(x, e)[n]

        ga, gb = t_lam(0.0), t_lam(L)
        if ga * gb > 0:
            # tangent sign change already resolved at the endpoints; fall back to lam max
            sigma = L if abs(gb) < abs(ga) else 0.0
        else:
            sigma = brentq(t_lam, 0.0, L, xtol=self.params.refine_tol * max(L, 1e-300), rtol=1e-15, maxiter=200)
        x = self._on_chord(xa, xb, sigma)
        ev = sector_eigenvalues(None, x[n], self.spec, self.grid, 0, self.params.k_max, gap=x[:n])
        mu = float(ev[np.argmin(np.abs(ev))])
        return x, sigma, mu

    def refine_mu2(self, pa, pb):
        """Locate the zero of ``mu_2`` between ``pa`` and ``pb``."""
        xa, xb = self.state(pa), self.state(pb)
        e, L = self._chord(xa, xb)

        def mu2(sigma):
            return self.spectral(self._on_chord(xa, xb, sigma)).mu2

        sigma = brentq(mu2, 0.0, L, xtol=self.params.refine_tol * max(L, 1e-300), rtol=1e-15, maxiter=200)
        x = self._on_chord(xa, xb, sigma)
        return x, sigma, self.spectral(x).mu2


def trace_branch(spec, grid, params=None):
    """Trace the solution curve from ``(0, 0)`` through its turning points.

    Termination is one of ``barrier_reached`` (sup norm above
    ``1 - 10 delta_b``), ``second_fold`` / ``mu2_crossed_zero`` (the event
    defining ``lambda_2*``, when ``params.stop_at_lambda2``),
    ``step_underflow`` or ``max_steps``.
    """
    ctx = Continuation(spec, grid, params)
    p = ctx.params
    n = grid.n
    branch = Branch(context=ctx)
    x = np.append(np.ones(n), 0.0)
    d = ctx.initial_tangent()
    pt = ctx.make_point(x, 0.0, t_lam=d[n])
    branch.points.append(pt)
    ds = p.ds0
    s = 0.0
    barrier_level = 10.0 * p.newton.barrier
    lam2_found = False
    steps = 0
    while True:
        if steps >= p.max_steps:
            branch.termination = "max_steps"
            break
        if ds < p.ds_min:
            branch.termination = "step_underflow"
            branch.flags["underflow_at"] = {"lambda": float(x[n]), "u0": float(1.0 - x[0]), "ds": ds}
            break
        try:
            x_new, iters = ctx.corrector(x, d, ds)
        except ConvergenceError:
            ds *= 0.5
            continue
        step = x_new - x
        dist = ctx.norm(step)
        if dist == 0.0:
            ds *= 0.5
            continue
        d_new = step / dist
        if steps > 0 and ctx.inner(d_new, d) < p.min_cos:
            ds *= 0.5
            continue
        try:
            t = ctx.tangent(x_new, d_new)
            sr = ctx.spectral(x_new)
        except (RuntimeError, SingularityError):
            ds *= 0.5
            continue
        steps += 1
        s += dist
        prev = branch.points[-1]
        pt = ctx.make_point(x_new, s, t_lam=t[n], sr=sr)
        pt.post_fold_count = len(branch.folds)
        branch.points.append(pt)

        events = []
        flipped = np.sign(pt.tangent_lam) != np.sign(prev.tangent_lam) and prev.tangent_lam != 0
        if flipped and max(abs(pt.tangent_lam), abs(prev.tangent_lam)) < p.fold_noise:
            branch.flags["ignored_tangent_flips"] = branch.flags.get("ignored_tangent_flips", 0) + 1
            flipped = False
        if flipped:
            xf, sigma, mu = ctx.refine_fold(prev, pt)
            fold = Fold(s=prev.s + sigma, lam=float(xf[n]), u0=float(1.0 - xf[0]), mu=mu, index=len(branch.points) - 1)
            branch.folds.append(fold)
            pt.post_fold_count = len(branch.folds)
            events.append(("fold", fold))
            log.info("fold %d at lambda=%.12g (mu=%.3e)", len(branch.folds), fold.lam, mu)
            if abs(mu) > p.fold_tol:
                warnings.warn(f"sector-0 eigenvalue {mu:.3e} at fold exceeds fold_tol {p.fold_tol:g}")
        if branch.folds and not lam2_found:
            if prev.post_fold_count >= 1 and prev.mu2 >= 0.0 > pt.mu2:
                xm, sigma, mu2 = ctx.refine_mu2(prev, pt)
                events.append(("mu2", (prev.s + sigma, float(xm[n]), mu2)))
        if not lam2_found and branch.folds:
            second = [e for e in events if e[0] == "fold" and len(branch.folds) >= 2]
            mu2ev = [e for e in events if e[0] == "mu2"]
            if second or mu2ev:
                lam2_found = True
                if second and mu2ev:
                    branch.flags["lambda2_ambiguous"] = True
                    branch.flags["lambda2_event_gap"] = abs(second[0][1].s - mu2ev[0][1][0])
                if second:
                    f2 = second[0][1]
                    branch.lambda_2_star_est = f2.lam
                    branch.flags["lambda2_event"] = "second_fold"
                    branch.events.append({"event": "second_fold", "s": f2.s, "lambda": f2.lam, "mu": f2.mu})
                    kind = "second_fold"
                else:
                    s2, lam2, mu2 = mu2ev[0][1]
                    branch.lambda_2_star_est = lam2
                    branch.flags["lambda2_event"] = "mu2_crossed_zero"
                    branch.events.append({"event": "mu2_crossed_zero", "s": s2, "lambda": lam2, "mu": mu2})
                    kind = "mu2_crossed_zero"
                if p.stop_at_lambda2:
                    branch.termination = kind
                    x = x_new
                    break
        x, d = x_new, d_new
        if np.min(pt.w) < barrier_level:
            branch.termination = "barrier_reached"
            break
        if iters <= 3:
            ds = min(ds * p.grow, p.ds_max)
    _finalize(branch)
    return branch


def _finalize(branch):
    if branch.folds:
        branch.lambda_star_est = branch.folds[0].lam
        branch.flags["lambda_star_lower_bound"] = False
    elif branch.termination == "barrier_reached":
        branch.lambda_star_est = float(np.max(branch.lam))
        branch.flags["lambda_star_lower_bound"] = False
    else:
        branch.lambda_star_est = float(np.max(branch.lam)) if branch.points else float("nan")
        branch.flags["lambda_star_lower_bound"] = True


def _parabola_vertex(s3, l3):
    c = np.polyfit(s3, l3, 2)
    if c[0] == 0:
        i = int(np.argmax(np.abs(l3)))
        return s3[i], l3[i]
    sv = -c[1] / (2 * c[0])
    return float(sv), float(np.polyval(c, sv))


def detect_folds(branch, refine=True):
    """Turning points of ``lam(s)`` on a traced branch.

    Sign changes of consecutive ``lam`` increments are located.  When the
    branch carries its solver context (as returned by :func:`trace_branch`)
    and ``refine`` is set, each one is refined by re-solving the corrector;
    otherwise the vertex of the parabola through the three points around the
    sign change is returned.  Returns a list of ``(s, lam)``.
    """
    pts = branch.points
    if len(pts) < 3:
        raise ValueError("fold detection needs at least three branch points")
    s = np.array([p.s for p in pts])
    lam = np.array([p.lam for p in pts])
    dl = np.diff(lam)
    out = []
    ctx = branch.context if refine else None
    i = 0
    while i < dl.size - 1:
        if dl[i] == 0.0:
            i += 1
            continue
        j = i + 1
        while j < dl.size and dl[j] == 0.0:
            j += 1
        if j < dl.size and np.sign(dl[j]) != np.sign(dl[i]):
            k = i + 1  # candidate extremum at point k
            if ctx is not None:
                lo, hi = (k - 1, k) if k - 1 >= 0 else (k, k + 1)
                # the tangent sign flips either on (k-1, k) or (k, k+1)
                if np.sign(pts[k].tangent_lam) == np.sign(pts[k - 1].tangent_lam):
                    lo, hi = k, k + 1
                xf, sigma, _ = ctx.refine_fold(pts[lo], pts[hi])
                out.append((pts[lo].s + sigma, float(xf[-1])))
            else:
                out.append(_parabola_vertex(s[k - 1 : k + 2], lam[k - 1 : k + 2]))
            i = j
        else:
            i = j
    return out


def lambda_star(branch):
    """Pull-in estimate: first fold, else ``sup lam`` if the barrier was reached.

    If the trace stopped before either event the supremum is returned with a
    warning and ``branch.flags['lambda_star_lower_bound']`` set.
    """
    if branch.folds:
        return branch.folds[0].lam
    lam = float(np.max(branch.lam))
    if branch.termination != "barrier_reached":
        branch.flags["lambda_star_lower_bound"] = True
        warnings.warn("branch ended before a fold or the barrier; lambda* estimate is a lower bound")
    return lam


def lambda_2_star(branch):
    """Second bifurcation value, or ``None`` when the trace stopped before it."""
    if branch.lambda_2_star_est is None:
        branch.flags.setdefault(
            "lambda2_diagnostics",
            {"termination": branch.termination, "folds": len(branch.folds)},
        )
    return branch.lambda_2_star_est


def solve_at_sup_norm(target, spec, grid, u_init, lam_init, params=None):
    """Solve for ``(u, lam)`` with prescribed centre value ``u(0) = target``.

    Newton on the system ``F(u, lam) = 0, u_0 = target`` started from a
    nearby branch point; useful for sampling a monotone branch at given
    sup-norm levels.  Returns ``(u, lam)``.
    """
    ctx = Continuation(spec, grid, params)
    nt = ctx.params.newton
    n = grid.n
    if not 0.0 <= target < 1.0 - nt.barrier:
        raise ValueError("target must lie in [0, 1 - barrier)")
    x = np.append(1.0 - np.asarray(u_init, dtype=float)[:n], float(lam_init))
    goal = 1.0 - target
    row = np.zeros(n + 1)
    row[0] = 1.0
    nrm = float("nan")
    for it in range(nt.max_iter):
        F = gap_residual(x[:n], x[n], spec, grid)
        g = x[0] - goal
        nrm = ctx.residual_norm(x)
        if nrm <= nt.tol and abs(g) <= 1e-14 * goal:
            return 1.0 - x[:n], float(x[n])
        lu = ctx._bordered(x, row, 0.0)
        dx = lu.solve(-np.append(F, g))
        t = gap_barrier_step(x[:n], dx[:n], nt.barrier, nt.damping)
        if t == 0.0:
            break
        x = x + t * dx
    raise ConvergenceError(f"could not reach u(0) = {target}", residual=nrm)


def richardson(values, ns, order=None):
    """Extrapolate grid-dependent values to ``n -> infinity``.

    With three successively doubled grids the observed order is estimated
    from the ratio of differences (falling back to 2 if it is not finite and
    positive); with two grids ``order`` (default 2) is used.  Returns
    ``(extrapolated, order)``.
    """
    v = np.asarray(values, dtype=float)
    ns = np.asarray(ns, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two grids")
    ratio = ns[-1] / ns[-2]
    if order is None and v.size >= 3:
        d1, d2 = v[-2] - v[-3], v[-1] - v[-2]
        p = math.log(abs(d1 / d2)) / math.log(ratio) if d2 != 0 and d1 != 0 and d1 * d2 > 0 else float("nan")
        order = p if math.isfinite(p) and 0.5 < p < 6 else 2.0
    elif order is None:
        order = 2.0
    return float(v[-1] + (v[-1] - v[-2]) / (ratio**order - 1.0)), float(order)
