"""Exact closed-form quantities for power-law profiles on the unit ball.

These are the values the numerical routines are checked against: the
critical exponent ``alpha_N``, the explicit pull-in value and singular
extremal profile in the regime ``N >= 8, alpha <= alpha_N``, the Hardy
comparison and the amplitude of the singular entire solution of the limit
equation ``Delta U = |y|^alpha / U^2``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import DomainError

__all__ = [
    "SQRT6",
    "Q_PLUS",
    "CriticalData",
    "alpha_critical",
    "lambda_star_explicit",
    "lambda_star_formula",
    "u_star_explicit",
    "hardy_stability_check",
    "singular_amplitude",
    "critical_data",
]

SQRT6 = math.sqrt(6.0)
#: critical Moser iteration exponent; root of 8q + 8 - q^2 = 0
Q_PLUS = 4.0 + 2.0 * SQRT6


def alpha_critical(N):
    """Critical profile exponent ``(3N - 14 - 4 sqrt 6) / (4 + 2 sqrt 6)``.

    Only meaningful for ``N >= 8``; smaller dimensions raise
    :class:`DomainError` because the expression is negative there.
    """
    N = int(N)
    if N < 8:
        raise DomainError(
            f"alpha_N is only defined for N >= 8 (got N={N})",
            reason="alpha_N only used for N>=8",
        )
    return (3.0 * N - 14.0 - 4.0 * SQRT6) / (4.0 + 2.0 * SQRT6)


def lambda_star_formula(N, alpha):
    """``(2 + alpha)(3N + alpha - 4) / 9`` without any validity check."""
    return (2.0 + alpha) * (3.0 * N + alpha - 4.0) / 9.0


def lambda_star_explicit(N, alpha):
    """Pull-in value ``(2+alpha)(3N+alpha-4)/9`` in its proven window.

    Raises
    ------
    DomainError
        Unless ``N >= 8`` and ``0 <= alpha <= alpha_N``.
    """
    N = int(N)
    reason = "formula only proven for N>=8, alpha<=alpha_N"
    if N < 8 or alpha < 0:
        raise DomainError(f"explicit lambda* not available for N={N}, alpha={alpha}", reason=reason)
    a_n = alpha_critical(N)
    if alpha > a_n:
        raise DomainError(
            f"explicit lambda* not available for alpha={alpha} > alpha_N={a_n:.6g}",
            reason=reason,
        )
    return lambda_star_formula(N, alpha)


def u_star_explicit(r, alpha):
    """Singular extremal profile ``1 - r^((2+alpha)/3)`` on ``0 <= r <= 1``.

    Accepts scalars or arrays.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0) or np.any(r_arr > 1.0) or np.any(~np.isfinite(r_arr)):
        raise DomainError("u_star_explicit requires 0 <= r <= 1")
    out = 1.0 - r_arr ** ((2.0 + alpha) / 3.0)
    return float(out) if out.ndim == 0 else out


def hardy_stability_check(N, alpha):
    """Whether ``2 lambda* <= (N-2)^2 / 4`` with lambda* from the explicit formula.

    True exactly when ``N >= 8`` and ``0 <= alpha <= alpha_N``.
    """
    N = int(N)
    if N < 2 or alpha < 0:
        raise DomainError("hardy_stability_check requires N >= 2 and alpha >= 0")
    return bool(2.0 * lambda_star_formula(N, alpha) <= (N - 2.0) ** 2 / 4.0)


def singular_amplitude(N, alpha):
    """Amplitude ``K`` of the singular solution ``K |y|^((2+alpha)/3)`` of
    ``Delta U = |y|^alpha / U^2``.

    ``K = (9 / ((2+alpha)(3N+alpha-4)))^(1/3)``, so that ``2/K^3`` equals
    twice the explicit pull-in value.
    """
    denom = (2.0 + alpha) * (3.0 * N + alpha - 4.0)
    if not denom > 0.0:
        raise DomainError(
            f"no singular power-law solution for N={N}, alpha={alpha}: (2+a)(3N+a-4) <= 0"
        )
    return (9.0 / denom) ** (1.0 / 3.0)


@dataclass(frozen=True)
class CriticalData:
    N: int
    alpha: float
    alpha_N: float | None
    lambda_star_explicit: float | None
    K_singular: float | None
    q_plus: float = Q_PLUS

    def as_dict(self):
        return {
            "N": self.N,
            "alpha": self.alpha,
            "alpha_N": self.alpha_N,
            "lambda_star_explicit": self.lambda_star_explicit,
            "lambda_star_formula": lambda_star_formula(self.N, self.alpha),
            "K_singular": self.K_singular,
            "hardy_stable": hardy_stability_check(self.N, self.alpha) if self.N >= 2 else None,
            "q_plus": self.q_plus,
        }


def critical_data(N, alpha):
    """Collect every closed-form quantity available for ``(N, alpha)``."""
    a_n = alpha_critical(N) if N >= 8 else None
    try:
        lam = lambda_star_explicit(N, alpha)
    except DomainError:
        lam = None
    try:
        K = singular_amplitude(N, alpha)
    except DomainError:
        K = None
    return CriticalData(int(N), float(alpha), a_n, lam, K)
