"""Eigenvalues of the linearization, sector by sector.

At lambda = 0 they are squared Bessel zeros; along the minimal branch the
first one decreases towards zero at the pull-in value.
"""

import numpy as np
from scipy.special import jn_zeros

from mems_branch import ProblemSpec, build_grid, minimal_solution, morse_data

spec = ProblemSpec(N=2)
grid = build_grid(2000, spec)

res = morse_data(np.zeros(grid.n), 0.0, spec, grid)
for l, vals in res.sectors.items():
    exact = jn_zeros(l, 3) ** 2
    print(f"l = {l} (multiplicity {res.multiplicities[l]}):", np.round(vals, 5), "Bessel:", np.round(exact, 5))

print("\nmerged list:", np.round(res.mu[:6], 4), "from sectors", res.origin[:6])

for lam in (0.2, 0.5, 0.7, 0.78):
    u = minimal_solution(lam, spec, grid)
    r = morse_data(u, lam, spec, grid)
    print(f"lambda = {lam:4.2f}: u(0) = {u[0]:.4f}, mu1 = {r.mu1:8.4f}, mu2 = {r.mu2:8.4f}, Morse index {r.morse_index}")
