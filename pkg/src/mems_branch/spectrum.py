"""Eigenvalues of the linearized operator across angular sectors.

Each sector ``l`` reduces to a symmetric tridiagonal matrix whose smallest
eigenvalues are computed by bisection on Sturm counts (the number of
negative pivots of ``T - x I``).  Sector eigenvalues are then repeated with the
dimension of degree-``l`` spherical harmonics and merged into the global list
``mu_1 <= mu_2 <= ...``.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np
from numba import njit
from scipy.linalg import solve_banded

from .radial import _as_field, check_gap, check_state, gap_jacobian, sector_operator

__all__ = [
    "SpectralResult",
    "harmonic_multiplicity",
    "sturm_count",
    "tridiagonal_eigenvalues",
    "tridiagonal_eigenvector",
    "sector_eigenvalues",
    "first_eigenfunction",
    "morse_data",
]

_EPS = np.finfo(float).eps


def harmonic_multiplicity(l, N):
    """Dimension of degree-``l`` spherical harmonics in ``R^N``.

    ``C(N+l-1, l) - C(N+l-3, l-2)``; for ``N = 1`` this is 1 for the even
    (``l = 0``) and odd (``l = 1``) classes and 0 beyond.
    """
    if l < 0:
        raise ValueError("l must be >= 0")
    total = comb(N + l - 1, l)
    if l >= 2 and N + l - 3 >= 0:
        total -= comb(N + l - 3, l - 2)
    return total


@njit(cache=True)
def _count(d, e2, x, pivmin):
    n = d.size
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    c = 1 if q < 0.0 else 0
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            c += 1
    return c


@njit(cache=True)
def _bisect(d, e2, k, lo, hi, pivmin, atol, rtol, maxit):
    # returns the (k+1)-th smallest eigenvalue, 0-based k
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        if hi - lo <= max(atol, rtol * max(abs(lo), abs(hi))):
            break
        if mid == lo or mid == hi:
            break
        if _count(d, e2, mid, pivmin) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def _smallest(d, e2, kmax, lo, hi, pivmin, atol, rtol, maxit):
    out = np.empty(kmax)
    left = lo
    for k in range(kmax):
        out[k] = _bisect(d, e2, k, left, hi, pivmin, atol, rtol, maxit)
        left = out[k] - max(atol, rtol * abs(out[k]))
        if left < lo:
            left = lo
    return out


def _prepare(d, e):
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    if e.size != max(d.size - 1, 0):
        raise ValueError("off-diagonal must have n-1 entries")
    e2 = e * e
    scale = max(float(np.max(np.abs(d))), float(np.max(np.abs(e))) if e.size else 0.0, 1e-300)
    pivmin = max(np.finfo(float).tiny, float(np.max(e2)) * np.finfo(float).tiny if e.size else 0.0)
    pivmin = max(pivmin, 1e-300 * scale)
    radius = np.zeros_like(d)
    if e.size:
        ae = np.abs(e)
        radius[:-1] += ae
        radius[1:] += ae
    lo = float(np.min(d - radius))
    hi = float(np.max(d + radius))
    pad = 2.0 * _EPS * max(abs(lo), abs(hi)) + pivmin
    return d, e2, lo - pad, hi + pad, pivmin


def sturm_count(d, e, x):
    """Number of eigenvalues of the symmetric tridiagonal ``(d, e)`` below ``x``."""
    d, e2, _, _, pivmin = _prepare(d, e)
    return int(_count(d, e2, float(x), pivmin))


def tridiagonal_eigenvalues(d, e, k_max=None, atol=1e-13, rtol=4 * _EPS):
    """Smallest ``k_max`` eigenvalues of a symmetric tridiagonal matrix.

    Parameters
    ----------
    d, e : array_like
        Diagonal (n) and off-diagonal (n-1).
    k_max : int, optional
        Number of eigenvalues (all of them by default).
    """
    d, e2, lo, hi, pivmin = _prepare(d, e)
    n = d.size
    k_max = n if k_max is None else min(int(k_max), n)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    return _smallest(d, e2, k_max, lo, hi, pivmin, atol, rtol, 400)


def tridiagonal_eigenvector(d, e, mu, iterations=3):
    """Unit eigenvector for the eigenvalue ``mu`` by inverse iteration."""
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    n = d.size
    scale = max(np.max(np.abs(d)), 1.0)
    shift = mu - 1e-10 * max(abs(mu), 1e-6 * scale) - 1e-300
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[1] = d - shift
    ab[2, :-1] = e
    v = np.ones(n) / np.sqrt(n)
    for _ in range(iterations):
        w = solve_banded((1, 1), ab, v, check_finite=False)
        v = w / np.linalg.norm(w)
    return v


def _gap(u, grid, gap):
    if gap is not None:
        return _as_field(gap, grid)
    u = _as_field(u, grid)
    check_state(u)
    return 1.0 - u


def sector_eigenvalues(u, lam, spec, grid, l=0, k_max=3, gap=None):
    """The ``k_max`` smallest eigenvalues of the sector-``l`` linearization."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    d, e = gap_jacobian(_gap(u, grid, gap), lam, spec, grid, l).symmetric()
    return tridiagonal_eigenvalues(d, e, k_max)


def first_eigenfunction(u, lam, spec, grid, gap=None):
    """First (radial, positive) eigenpair ``(mu_1, phi)``, phi on nodes 0..n-1.

    ``phi`` is normalized in the weighted L2 norm ``sum V_i phi_i^2 = 1``.
    ``gap = 1 - u``, when given, is used instead of ``u``.
    """
    op = gap_jacobian(_gap(u, grid, gap), lam, spec, grid, 0)
    d, e = op.symmetric()
    mu = tridiagonal_eigenvalues(d, e, 1)[0]
    y = tridiagonal_eigenvector(d, e, mu)
    phi = y / np.sqrt(op.weights)
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    return float(mu), phi


@dataclass
class SpectralResult:
    """Per-sector eigenvalues merged into the global list with multiplicities.

    Attributes
    ----------
    sectors : dict
        ``l -> ndarray`` of the smallest sector eigenvalues.
    multiplicities : dict
        ``l -> m_l``.
    mu : ndarray
        Merged sorted list, sector values repeated ``m_l`` times.
    origin : list of int
        Sector realizing each entry of ``mu``.
    negative_counts : dict
        ``l -> number of negative sector eigenvalues`` (from Sturm counts,
        independent of ``k_max``).
    morse_index : int
        ``sum_l m_l * negative_counts[l]``.
    """

    sectors: dict
    multiplicities: dict
    mu: np.ndarray
    origin: list
    negative_counts: dict = field(default_factory=dict)
    morse_index: int = 0

    @property
    def mu1(self):
        return float(self.mu[0])

    @property
    def mu2(self):
        return float(self.mu[1])

    @property
    def mu2_sector(self):
        """Sector realizing ``mu_2``."""
        return self.origin[1]

    def as_dict(self):
        return {
            "mu": [float(x) for x in self.mu],
            "origin_sector": list(self.origin),
            "sectors": {str(l): [float(x) for x in v] for l, v in self.sectors.items()},
            "multiplicities": {str(l): m for l, m in self.multiplicities.items()},
            "negative_counts": {str(l): c for l, c in self.negative_counts.items()},
            "morse_index": self.morse_index,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "mu2_sector": self.mu2_sector,
        }


def _sector_list(N, l_max):
    if N == 1:
        # only the even (l=0) and odd (l=1) classes exist on an interval
        return [l for l in range(min(l_max, 1) + 1)]
    return list(range(l_max + 1))


def spectral_data_from_potential(grid, potential, l_max=2, k_max=3):
    """Sector/merged spectrum of ``-Delta + potential`` (potential at nodes 0..n-1)."""
    N = grid.N
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    sectors, mult, neg = {}, {}, {}
    for l in _sector_list(N, l_max):
        d, e = sector_operator(grid, potential, l).symmetric()
        sectors[l] = tridiagonal_eigenvalues(d, e, k_max)
        mult[l] = harmonic_multiplicity(l, N)
        neg[l] = sturm_count(d, e, 0.0)
    # negatives in higher sectors are excluded by centrifugal monotonicity once a
    # sector has none; keep going otherwise so the Morse index stays exact
    l = max(sectors)
    while neg[l] > 0 and N > 1:
        l += 1
        d, e = sector_operator(grid, potential, l).symmetric()
        neg[l] = sturm_count(d, e, 0.0)
        mult[l] = harmonic_multiplicity(l, N)
    values, origin = [], []
    for l, ev in sectors.items():
        for x in ev:
            values.extend([x] * mult[l])
            origin.extend([l] * mult[l])
    order = np.argsort(values, kind="stable")
    mu = np.asarray(values)[order]
    origin = [origin[i] for i in order]
    morse = int(sum(mult[l] * c for l, c in neg.items()))
    return SpectralResult(sectors, {l: mult[l] for l in sectors}, mu, origin, neg, morse)


def linearized_potential(u, lam, spec, grid, gap=None):
    """``-2 lam f / (1-u)^3`` at the unknown nodes."""
    w = _gap(u, grid, gap)
    check_gap(w)
    return -2.0 * lam * spec.profile(grid.interior) / w**3


def morse_data(u, lam, spec, grid, l_max=2, k_max=3, gap=None):
    """Merged spectrum and Morse index of ``L = -Delta - 2 lam f/(1-u)^3``."""
    return spectral_data_from_potential(grid, linearized_potential(u, lam, spec, grid, gap), l_max, k_max)
