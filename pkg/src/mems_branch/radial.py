"""Finite-volume radial Laplacian, the residual of the MEMS equation and its
linearization on the unit ball.

Unknowns live on the nodes ``r_0 = 0 < r_1 < ... < r_{n-1}``; the Dirichlet
node ``r_n = R`` (``R = 1`` for the ball) carries ``u = 0`` implicitly.  The
operator is written in flux form

    (Delta u)_i = [a_{i+1/2} (u_{i+1} - u_i) - a_{i-1/2} (u_i - u_{i-1})] / V_i

with face coefficients ``a_{i+1/2} = r_{i+1/2}^{N-1} / (r_{i+1} - r_i)`` and
control volumes ``V_i = (r_{i+1/2}^N - r_{i-1/2}^N) / N``.  The stiffness
part is therefore symmetric and the generalized eigenproblem
``K phi = mu V phi`` has real spectrum.  At the origin the control volume is
``[0, r_{1/2}]``, which on a uniform grid reproduces ``Delta u(0) = N u''(0)``
with the ghost-node value ``u_{-1} = u_1``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq

from .exceptions import SingularityError

__all__ = [
    "SINGULAR_GUARD",
    "ProblemSpec",
    "RadialGrid",
    "SectorOperator",
    "build_grid",
    "sector_constant",
    "apply_sector_laplacian",
    "sector_operator",
    "source",
    "residual",
    "residual_scale",
    "residual_norm",
    "jacobian",
    "check_state",
    "check_gap",
    "gap_residual",
    "gap_residual_norm",
    "gap_jacobian",
]

#: evaluations with max u above 1 - SINGULAR_GUARD are rejected
SINGULAR_GUARD = 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    """Dimension ``N``, profile ``f(r) = g0 r^alpha`` on the unit ball.

    ``N = 1`` means the interval ``(-1, 1)`` reduced to ``[0, 1]`` by
    symmetry.
    """

    N: int
    alpha: float = 0.0
    g0: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"dimension N must be an integer >= 1, got {self.N!r}")
        if not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"profile exponent alpha must be >= 0, got {self.alpha!r}")
        if not (self.g0 > 0.0 and math.isfinite(self.g0)):
            raise ValueError(f"profile amplitude g0 must be > 0, got {self.g0!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "g0", float(self.g0))

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        if self.alpha == 0.0:
            return np.full_like(r, self.g0)
        return self.g0 * r**self.alpha

    @property
    def surface_area(self):
        """Measure of the unit sphere ``S^{N-1}`` (2 for ``N = 1``)."""
        return 2.0 * math.pi ** (self.N / 2.0) / math.gamma(self.N / 2.0)


class RadialGrid:
    """Radial nodes ``r_0 = 0 < ... < r_n = R`` with finite-volume weights.

    Attributes
    ----------
    r : ndarray, shape (n+1,)
        All nodes including the Dirichlet node.
    weights : ndarray, shape (n+1,)
        Control volumes ``int r^{N-1} dr`` over each cell, including the half
        cell at ``r = R``; they sum to ``R^N / N`` exactly.
    faces : ndarray, shape (n,)
        Flux coefficients ``a_{i+1/2}``.
    """

    def __init__(self, r, N, kind="custom", stretch=None):
        r = np.asarray(r, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise ValueError("a radial grid needs at least three nodes")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0.0):
            raise ValueError("radial nodes must start at 0 and increase strictly")
        self.r = r
        self.N = int(N)
        self.kind = kind
        self.stretch = stretch
        self.n = r.size - 1
        self.R = float(r[-1])
        mid = 0.5 * (r[1:] + r[:-1])
        self.mid = mid
        N = self.N
        edges = np.concatenate(([0.0], mid, [self.R]))
        self.weights = (edges[1:] ** N - edges[:-1] ** N) / N
        self.faces = mid ** (N - 1) / np.diff(r)
        self.h = np.diff(r)

    @property
    def interior(self):
        """Nodes carrying unknowns (origin included, Dirichlet node excluded)."""
        return self.r[:-1]

    @property
    def h_min(self):
        return float(self.h[0])

    def __repr__(self):
        return f"RadialGrid(n={self.n}, N={self.N}, kind={self.kind!r}, R={self.R:g})"


def _graded_nodes(n, stretch, R=1.0):
    x = np.arange(n + 1, dtype=float) / n
    r = R * np.sinh(stretch * x) / math.sinh(stretch)
    r[0] = 0.0
    r[-1] = R
    return r


def stretch_for_hmin(n, h_min):
    """Stretch factor of the ``sinh`` map giving first cell ``h_min``."""
    if not 0.0 < h_min < 1.0 / n:
        raise ValueError("h_min must lie in (0, 1/n)")
    return brentq(lambda b: math.log(math.sinh(b / n)) - math.log(math.sinh(b)) - math.log(h_min),
                  1e-8, 700.0)


def build_grid(n, spec, kind="uniform", stretch=None, R=1.0):
    """Grid on ``[0, R]`` with ``n + 1`` nodes.

    ``kind="uniform"`` gives ``r_i = i R / n``.  ``kind="graded"`` uses
    ``r = R sinh(stretch x) / sinh(stretch)``, which is geometric away from the
    origin and resolves boundary-layer structure near ``r = 0`` down to a first
    cell of about ``stretch / (n sinh(stretch))``; ``stretch`` defaults to 28
    (first cell ~1e-13 at n = 2000).
    """
    n = int(n)
    if n < 16:
        raise ValueError(f"grid needs n >= 16 cells, got {n}")
    N = spec.N if isinstance(spec, ProblemSpec) else int(spec)
    if kind == "uniform":
        r = np.linspace(0.0, R, n + 1)
    elif kind == "graded":
        stretch = 28.0 if stretch is None else float(stretch)
        if stretch <= 0:
            raise ValueError("stretch must be positive")
        r = _graded_nodes(n, stretch, R)
    else:
        raise ValueError(f"unknown grid kind {kind!r}")
    return RadialGrid(r, N, kind=kind, stretch=stretch)


def sector_constant(l, N):
    """Centrifugal constant ``l (l + N - 2)`` of spherical harmonics of degree ``l``."""
    return l * (l + N - 2)


def _as_field(u, grid):
    u = np.asarray(u, dtype=float)
    if u.shape == (grid.n + 1,):
        u = u[:-1]
    if u.shape != (grid.n,):
        raise ValueError(f"field must have {grid.n} (or {grid.n + 1}) entries, got {u.shape}")
    return u


def _flux_laplacian(u, grid, boundary=0.0):
    """Flux-form Laplacian of ``u`` (values on nodes 0..n-1, ``u_n = boundary``)."""
    up = np.append(u, boundary)
    flux = grid.faces * (up[1:] - up[:-1])
    out = flux.copy()
    out[1:] -= flux[:-1]
    return out / grid.weights[:-1]


def _stencil_magnitude(u, grid, boundary=0.0):
    # (|a_{i+1/2}| (|u_i| + |u_{i+1}|) + |a_{i-1/2}| (|u_i| + |u_{i-1}|)) / V_i
    up = np.append(np.abs(u), abs(boundary))
    right = grid.faces * (up[:-1] + up[1:])
    out = right.copy()
    out[1:] += right[:-1]
    return out / grid.weights[:-1]


def apply_sector_laplacian(u, grid, l=0):
    """Action of ``u'' + (N-1)/r u' - l(l+N-2)/r^2 u`` in sector ``l``.

    For ``l = 0`` the origin row uses regularity ``u'(0) = 0``; for ``l >= 1``
    the field must vanish at the origin and the returned origin entry is 0.
    """
    u = _as_field(u, grid)
    if l < 0:
        raise ValueError("sector index l must be >= 0")
    if l == 0:
        return _flux_laplacian(u, grid)
    if u[0] != 0.0:
        raise ValueError("sector l >= 1 requires u(0) = 0 (Dirichlet at the origin)")
    out = _flux_laplacian(u, grid)
    c = sector_constant(l, grid.N)
    out[1:] -= c * u[1:] / grid.r[1:-1] ** 2
    out[0] = 0.0
    return out


def check_state(u, guard=SINGULAR_GUARD):
    """Raise :class:`SingularityError` if any value reaches ``1 - guard``."""
    bad = np.flatnonzero(~(u < 1.0 - guard))
    if bad.size:
        i = int(bad[0])
        raise SingularityError(
            f"u[{i}] = {u[i]!r} reaches the singular value 1 (guard {guard:g})", node=i, value=float(u[i])
        )


def source(u, lam, spec, grid):
    """Right-hand side ``lam f(r) / (1 - u)^2`` at the unknown nodes."""
    u = _as_field(u, grid)
    check_state(u)
    return lam * spec.profile(grid.interior) / (1.0 - u) ** 2


def residual(u, lam, spec, grid):
    """``F(u, lam) = -Delta_h u - lam f / (1-u)^2`` at nodes ``0..n-1``."""
    u = _as_field(u, grid)
    return -_flux_laplacian(u, grid) - source(u, lam, spec, grid)


def residual_scale(u, lam, spec, grid):
    """Componentwise magnitude of the terms entering ``F``.

    ``|K| |u| / V + |source| + 1``: the residual divided by this is a
    componentwise backward error, whose roundoff floor is a few ulps on any
    grid.
    """
    u = _as_field(u, grid)
    return _stencil_magnitude(u, grid) + np.abs(source(u, lam, spec, grid)) + 1.0


def residual_norm(u, lam, spec, grid):
    """Weighted max-norm ``max_i |F_i| / scale_i`` of the residual."""
    F = residual(u, lam, spec, grid)
    return float(np.max(np.abs(F) / residual_scale(u, lam, spec, grid)))


# The same quantities written in the gap w = 1 - u.  Close to touchdown the
# gap keeps full relative precision where u itself cannot (u = 1 - 1e-7 has
# only nine significant digits left in its distance to 1), so the solvers work
# with w internally.

def check_gap(w, guard=SINGULAR_GUARD):
    """Raise :class:`SingularityError` if the gap ``w = 1 - u`` drops to ``guard``."""
    bad = np.flatnonzero(~(w > guard))
    if bad.size:
        i = int(bad[0])
        raise SingularityError(
            f"gap 1-u[{i}] = {w[i]!r} reaches the singular value (guard {guard:g})", node=i, value=float(1.0 - w[i])
        )


def gap_residual(w, lam, spec, grid):
    """``F`` evaluated from the gap: ``Delta_h w - lam f / w^2`` with ``w_n = 1``."""
    w = _as_field(w, grid)
    check_gap(w)
    return _flux_laplacian(w, grid, 1.0) - lam * spec.profile(grid.interior) / w**2


def gap_residual_norm(w, lam, spec, grid):
    w = _as_field(w, grid)
    check_gap(w)
    src = lam * spec.profile(grid.interior) / w**2
    F = _flux_laplacian(w, grid, 1.0) - src
    scale = _stencil_magnitude(w, grid, 1.0) + np.abs(src) + 1.0
    return float(np.max(np.abs(F) / scale))


@dataclass
class SectorOperator:
    """Sector-``l`` discretization of ``-Delta + q`` on a radial grid.

    The operator acts on nodes ``first..n-1`` (``first = 0`` for ``l = 0``,
    ``first = 1`` otherwise).  ``lower/diag/upper`` hold the unsymmetrized
    rows ``V^{-1} K + diag(q)``; :meth:`symmetric` returns the similar
    symmetric tridiagonal matrix ``V^{-1/2} (K + V q) V^{-1/2}``.
    """

    l: int
    first: int
    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return self.diag.size

    def symmetric(self):
        """Return ``(d, e)``: diagonal and off-diagonal of the symmetric form."""
        sw = np.sqrt(self.weights)
        # lower[i] * V[i+1] == upper[i] * V[i] == -a_{i+1/2}
        e = self.upper * sw[:-1] / sw[1:]
        return self.diag.copy(), e

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[:-1] += self.upper * v[1:]
        out[1:] += self.lower * v[:-1]
        return out

    def banded(self):
        """``(1, 1)`` banded storage for :func:`scipy.linalg.solve_banded`."""
        ab = np.zeros((3, self.size))
        ab[0, 1:] = self.upper
        ab[1] = self.diag
        ab[2, :-1] = self.lower
        return ab

    def dense(self):
        A = np.diag(self.diag)
        A += np.diag(self.upper, 1) + np.diag(self.lower, -1)
        return A


def sector_operator(grid, potential, l=0):
    """Build ``-Delta_l + potential`` on ``grid`` for sector ``l``.

    ``potential`` is given at the unknown nodes ``0..n-1``.
    """
    if l < 0:
        raise ValueError("sector index l must be >= 0")
    q = np.asarray(potential, dtype=float)
    if q.shape != (grid.n,):
        raise ValueError("potential must be given at the n unknown nodes")
    a = grid.faces
    V = grid.weights[:-1]
    diag = np.empty(grid.n)
    diag[:] = a
    diag[1:] += a[:-1]
    diag = diag / V + q
    upper = -a[:-1] / V[:-1]
    lower = -a[:-1] / V[1:]
    if l == 0:
        return SectorOperator(0, 0, diag, lower, upper, V.copy())
    c = sector_constant(l, grid.N)
    d = diag[1:] + c / grid.r[1:-1] ** 2
    return SectorOperator(l, 1, d, lower[1:], upper[1:], V[1:].copy())


def jacobian(u, lam, spec, grid, l=0):
    """Sector-``l`` discretization of ``L = -Delta - 2 lam f / (1-u)^3``.

    For ``l = 0`` the returned operator is exactly ``dF/du``.
    """
    u = _as_field(u, grid)
    check_state(u)
    return gap_jacobian(1.0 - u, lam, spec, grid, l)


def gap_jacobian(w, lam, spec, grid, l=0):
    """:func:`jacobian` at ``u = 1 - w``; ``dF/du`` (so ``dF/dw`` is its negative)."""
    w = _as_field(w, grid)
    check_gap(w)
    q = -2.0 * lam * spec.profile(grid.interior) / w**3
    return sector_operator(grid, q, l)
