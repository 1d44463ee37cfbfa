"""Rescale near-touchdown solutions in dimension 8 and compare them with the
limit profile; also report the pointwise lower-bound constant."""

import numpy as np

from mems_branch import ProblemSpec, build_grid, solve_at_sup_norm, trace_branch
from mems_branch.blowup import classify_and_rescale, compare_to_limit, pointwise_bound_constant
from mems_branch.limit import shoot

spec = ProblemSpec(N=8)
grid = build_grid(2000, spec, kind="graded")
branch = trace_branch(spec, grid)
limit = shoot(8, 0.0)

for level in (0.99, 0.999, 0.9999):
    i = int(np.argmax(branch.sup_norm >= level))
    p = branch.points[max(i - 1, 0)]
    u, lam = solve_at_sup_norm(level, spec, grid, p.u, p.lam)
    prof = classify_and_rescale(u, lam, spec, grid)
    print(f"max u = {level}: {prof.case_tag}, scale {prof.scale:.3e}, y_max {prof.y_max:.3g}, "
          f"sup |U_n - U| on [0, 5] = {compare_to_limit(prof, limit):.4e}")

consts = [pointwise_bound_constant(p, p.lam, spec, grid) for p in branch.points[-10:]]
print("bound constant over the last 10 points:", np.round(consts, 4))
