"""In dimension 8 the branch never turns: u(0) creeps to 1 while lambda
approaches the explicit value 40/9.  Three grids and a Richardson step make
the convergence visible."""

from mems_branch import ProblemSpec, build_grid, lambda_star_explicit, richardson, trace_branch

spec = ProblemSpec(N=8)
target = lambda_star_explicit(8, 0.0)

sups, ns = [], [1000, 2000, 4000]
for n in ns:
    grid = build_grid(n, spec, kind="graded")
    b = trace_branch(spec, grid)
    sups.append(b.lambda_star_est)
    print(f"n = {n:5d}: {b.termination}, sup lambda = {b.lambda_star_est:.10f}, "
          f"1 - u(0) = {b.points[-1].gap0:.2e}, folds: {len(b.folds)}")

ext, order = richardson(sups, ns)
print(f"extrapolated {ext:.10f} (observed order {order:.3f}) vs 40/9 = {target:.10f}")
