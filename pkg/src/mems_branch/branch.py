"""Branch data model shared by the natural and pseudo-arclength continuations."""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["TERMINATIONS", "BranchPoint", "Fold", "Branch"]

TERMINATIONS = (
    "barrier_reached",
    "mu2_crossed_zero",
    "second_fold",
    "step_underflow",
    "max_steps",
)


@dataclass
class BranchPoint:
    """One solution ``(lam, u)`` on a branch with its spectral data.

    ``gap`` holds ``1 - u`` as computed by the solver; near touchdown it is
    the accurate representation and ``u`` is derived from it.
    """

    s: float
    lam: float
    u: np.ndarray
    mu1: float
    mu2: float
    morse_index: int
    mu2_sector: int = 0
    on_minimal: bool = True
    post_fold_count: int = 0
    tangent_lam: float = float("nan")
    gap: np.ndarray | None = None

    @property
    def w(self):
        """Gap ``1 - u`` at nodes 0..n-1."""
        return self.gap if self.gap is not None else 1.0 - self.u

    @property
    def u0(self):
        return float(self.u[0])

    @property
    def gap0(self):
        """``1 - u(0)`` to full relative precision."""
        return float(self.w[0])

    @property
    def sup_norm(self):
        return float(np.max(self.u))


@dataclass
class Fold:
    """Turning point of ``lam(s)``; ``mu`` is the sector-0 eigenvalue crossing zero there."""

    s: float
    lam: float
    u0: float
    mu: float
    index: int  # branch point index right after the fold
    refined: bool = True

    def as_tuple(self):
        return (self.s, self.lam)


@dataclass
class Branch:
    """Arclength-ordered solution curve.

    ``lambda_star_est`` is the first fold, or the supremum of ``lam`` when the
    branch runs into the barrier without folding.  ``lambda_2_star_est`` is the
    first of (second fold, zero crossing of ``mu_2`` after the first fold).
    """

    points: list = field(default_factory=list)
    folds: list = field(default_factory=list)
    lambda_star_est: float = float("nan")
    lambda_2_star_est: float | None = None
    termination: str = "step_underflow"
    flags: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    context: object = None

    def __len__(self):
        return len(self.points)

    def column(self, name):
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    @property
    def s(self):
        return self.column("s")

    @property
    def lam(self):
        return self.column("lam")

    @property
    def u0(self):
        return self.column("u0")

    @property
    def sup_norm(self):
        return self.column("sup_norm")

    @property
    def mu1(self):
        return self.column("mu1")

    @property
    def mu2(self):
        return self.column("mu2")

    @property
    def morse_index(self):
        return np.array([p.morse_index for p in self.points], dtype=int)

    def summary(self):
        return {
            "lambda_star": self.lambda_star_est,
            "lambda_2_star": self.lambda_2_star_est,
            "folds": [[f.s, f.lam] for f in self.folds],
            "termination": self.termination,
        }
