"""Trace the disk branch through both folds and write a bifurcation diagram.

Run ``python3 demos/bifurcation_diagram.py``; the SVG lands next to the script.
"""

from pathlib import Path

from mems_branch import ProblemSpec, build_grid, trace_branch
from mems_branch.cli import branch_svg


def main():
    spec = ProblemSpec(N=2, alpha=0.0)
    grid = build_grid(1000, spec)
    branch = trace_branch(spec, grid)

    # stable points come first, then the branch turns back with one unstable direction
    print(f"{len(branch)} points, termination: {branch.termination}")
    for k, fold in enumerate(branch.folds, 1):
        print(f"fold {k}: lambda = {fold.lam:.10f}, u(0) = {fold.u0:.6f}, sector-0 eigenvalue {fold.mu:.1e}")
    print("lambda*   =", branch.lambda_star_est)
    print("lambda_2* =", branch.lambda_2_star_est)

    for p in branch.points[:: max(1, len(branch) // 12)]:
        print(f"  lambda {p.lam:8.5f}  u(0) {p.u0:8.5f}  mu1 {p.mu1:9.4f}  Morse index {p.morse_index}")

    out = Path(__file__).with_name("disk_branch.svg")
    out.write_text(branch_svg(branch, title="N = 2, alpha = 0"))
    print("wrote", out)


if __name__ == "__main__":
    main()
