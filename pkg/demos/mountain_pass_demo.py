"""Find the unstable solution at lambda just below the fold as a mountain
pass of the regularized energy, then compare it with the branch."""

import numpy as np

from mems_branch import ProblemSpec, build_grid, solve_at_lambda, trace_branch
from mems_branch.mountain_pass import mp_search

spec = ProblemSpec(N=2)
grid = build_grid(400, spec)
branch = trace_branch(spec, grid)
lam = 0.98 * branch.lambda_star_est

res = mp_search(lam, None, spec, grid)
print(f"lambda = {lam:.6f}, eps = {res.params.eps:.4g}, accepted: {res.accepted}")
print(f"J(u_lambda) = {res.energy_u_lambda:.6f}, pass level = {res.level:.6f}, J(w_eps) = {res.energy_w_eps:.6f}")
print(f"mu1 = {res.mu1:.4f} < 0 <= mu2 = {res.mu2:.4f}")

# the same solution from the continuation, by interpolating past the first fold
pts = branch.points[branch.folds[0].index:]
for a, c in zip(pts, pts[1:]):
    if (a.lam - lam) * (c.lam - lam) <= 0:
        t = (lam - a.lam) / (c.lam - a.lam)
        second = solve_at_lambda(lam, (1 - t) * a.u + t * c.u, spec, grid)
        break
print(f"max |u_mp - U_lambda| = {np.max(np.abs(res.u - second)):.2e}")
