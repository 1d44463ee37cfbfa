"""Blow-up rescalings of near-singular solutions.

Around the maximum point ``x_n`` of ``u`` with ``eps = 1 - max u`` the profile

    U(y) = (1 - u(x_n + s y)) / eps

solves ``Delta U = g0 |y|^alpha / U^2`` when the scale is
``s = eps^{3/(2+alpha)} lam^{-1/(2+alpha)}`` and the maximum sits on the zero
of ``f``.  Away from that zero (``alpha = 0``) the exponent is ``3/2``.  The
radial solver always peaks at ``r = 0``, so the off-centre ("slow") case is
only available as a formula-level rescaler for manufactured data.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .branch import BranchPoint
from .exceptions import DomainError
from .radial import RadialGrid, _as_field, _flux_laplacian, _stencil_magnitude

__all__ = [
    "CASE_TAGS",
    "RescaledProfile",
    "classify_and_rescale",
    "rescale_slow",
    "rescaled_residual",
    "compare_to_limit",
    "pointwise_bound_constant",
]

CASE_TAGS = ("case1_away_from_zero_set", "case2_slow", "case3_fast")

#: blow-up regime threshold on ``max u``
BLOWUP_LEVEL = 0.9


@dataclass
class RescaledProfile:
    """Rescaled solution ``U_n`` on the ``y`` grid, with ``U_n(0) = 1``.

    ``y`` covers ``[0, y_max]`` for centred profiles (``y_max = 1/scale``) and
    may be signed for the off-centre rescaler.
    """

    case_tag: str
    eps: float
    scale: float
    lam: float
    N: int
    alpha: float
    g0: float
    y: np.ndarray
    U: np.ndarray

    @property
    def y_max(self):
        return float(np.max(np.abs(self.y)))

    def interpolant(self):
        return PchipInterpolator(self.y, self.U)


def _gap_values(u, grid, gap):
    if isinstance(u, BranchPoint):
        gap = u.w if gap is None else gap
        u = u.u
    if gap is not None:
        w = _as_field(gap, grid)
    else:
        w = 1.0 - _as_field(u, grid)
    return np.append(w, 1.0)


def _fast_scale(eps, lam, alpha):
    return (eps**3 / lam) ** (1.0 / (2.0 + alpha))


def classify_and_rescale(u, lam, spec, grid, gap=None):
    """Blow-up case and rescaled profile of a radial solution.

    Parameters
    ----------
    u : ndarray or BranchPoint
        Nodal values; a branch point contributes its stored gap ``1 - u``,
        which keeps ``eps`` accurate near touchdown.
    gap : ndarray, optional
        ``1 - u`` given directly.

    Raises
    ------
    DomainError
        If ``max u < 0.9``, ``lam <= 0`` or the maximum is off the origin.
    """
    if not lam > 0:
        raise DomainError("rescaling needs lambda > 0", reason="lambda_nonpositive")
    w = _gap_values(u, grid, gap)
    i = int(np.argmin(w))
    eps = float(w[i])
    if 1.0 - eps < BLOWUP_LEVEL:
        raise DomainError(f"max u = {1.0 - eps:.6g} is below {BLOWUP_LEVEL}: not in the blow-up regime",
                          reason="not_in_blowup_regime")
    if i != 0:
        raise DomainError(f"maximum at r = {grid.r[i]:.6g}, expected the origin", reason="off_centre_maximum")
    if not eps > 0:
        raise DomainError("touchdown: 1 - max u is not positive", reason="touchdown")
    if spec.alpha == 0.0:
        tag = CASE_TAGS[0]
    else:
        # x_n coincides with the zero of f, so eps^-3 lam |x_n - p|^(2+alpha) = 0
        tag = CASE_TAGS[2]
    scale = _fast_scale(eps, lam, spec.alpha)
    return RescaledProfile(tag, eps, scale, float(lam), spec.N, spec.alpha, spec.g0,
                           grid.r / scale, w / eps)


def rescale_slow(x, u, center, zero_point, lam, alpha, N=1, g0=1.0):
    """Off-centre rescaling around a maximum at distance ``d`` from a zero of ``f``.

    ``x`` are sample positions along a line through ``center``; the scale is
    ``eps^{3/2} lam^{-1/2} d^{-alpha/2}``, so ``g0 |x|^alpha`` is frozen at
    its value ``g0 d^alpha`` near the centre.  Returns a
    :class:`RescaledProfile` tagged ``case2_slow`` with signed ``y``.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != u.shape or x.ndim != 1:
        raise ValueError("x and u must be 1-d arrays of equal length")
    if not lam > 0:
        raise DomainError("rescaling needs lambda > 0", reason="lambda_nonpositive")
    d = abs(center - zero_point)
    if d == 0.0:
        raise DomainError("slow blow-up needs a maximum away from the zero of f", reason="centred")
    eps = 1.0 - float(np.max(u))
    if 1.0 - eps < BLOWUP_LEVEL:
        raise DomainError("not in the blow-up regime", reason="not_in_blowup_regime")
    scale = eps**1.5 * lam**-0.5 * d ** (-alpha / 2.0)
    order = np.argsort(x)
    return RescaledProfile(CASE_TAGS[1], eps, scale, float(lam), N, float(alpha), g0,
                           (x[order] - center) / scale, (1.0 - u[order]) / eps)


def rescaled_residual(profile):
    """Relative discrete residual of ``Delta U = g0 |y|^alpha / U^2`` on the profile's nodes.

    Each entry is divided by the stencil magnitude plus ``|rhs|``, as in
    :func:`mems_branch.radial.residual_norm`.  Only meaningful for centred
    profiles; the last node acts as a Dirichlet node.
    """
    if profile.case_tag == CASE_TAGS[1]:
        raise ValueError("the residual is defined for centred profiles only")
    g = RadialGrid(profile.y, profile.N)
    lap = _flux_laplacian(profile.U[:-1], g, profile.U[-1])
    y = g.interior
    rhs = profile.g0 * (y**profile.alpha if profile.alpha else 1.0) / profile.U[:-1] ** 2
    scale = _stencil_magnitude(profile.U[:-1], g, profile.U[-1]) + np.abs(rhs)
    return (lap - rhs) / scale


def compare_to_limit(rescaled, limit, R=5.0, samples=2001):
    """``sup_{0<=y<=R} |U_n(y) - U(y)|`` with monotone cubic interpolation of ``U_n``.

    A profile amplitude ``g0 != 1`` is absorbed by evaluating the limit at
    ``g0^{1/(2+alpha)} y``.

    Raises
    ------
    ValueError
        If ``R`` exceeds the range covered by either profile; the message
        states the attainable ``R``.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    c = rescaled.g0 ** (1.0 / (2.0 + rescaled.alpha))
    attainable = min(float(np.max(rescaled.y)), limit.R_max / c)
    if R > attainable * (1 + 1e-12):
        raise ValueError(f"y-range too short: attainable R = {attainable:.6g}")
    y = np.linspace(0.0, R, samples)
    Un = rescaled.interpolant()(y)
    U = limit.evaluate(np.minimum(c * y, limit.R_max))
    return float(np.max(np.abs(Un - U)))


def pointwise_bound_constant(u, lam, spec, grid, gap=None):
    """Smallest ``(1-u(x)) lam^{-1/3} d(x)^{-alpha/3} |x - x_n|^{-2/3}`` over nodes ``x != x_n``.

    ``x_n`` is the node of ``max u`` and ``d(x) = |x|`` (``d = 1`` when
    ``alpha = 0``).  Nodes with ``d(x) = 0`` are skipped; the boundary node
    is included.
    """
    if not lam > 0:
        raise DomainError("the bound constant is undefined for lambda <= 0", reason="lambda_nonpositive")
    w = _gap_values(u, grid, gap)
    r = grid.r
    i = int(np.argmin(w))
    keep = np.arange(r.size) != i
    if spec.alpha > 0:
        keep &= r > 0
    dist = np.abs(r - r[i])
    d = r if spec.alpha > 0 else np.ones_like(r)
    keep &= dist > 0
    vals = w[keep] * lam ** (-1.0 / 3.0) * d[keep] ** (-spec.alpha / 3.0) * dist[keep] ** (-2.0 / 3.0)
    return float(np.min(vals))

