import numpy as np
import pytest

from mems_branch.branch import TERMINATIONS, Branch, BranchPoint
from mems_branch.continuation import (
    ContinuationParams,
    detect_folds,
    lambda_2_star,
    lambda_star,
    richardson,
    solve_at_sup_norm,
    trace_branch,
)
from mems_branch.newton import NewtonParams
from mems_branch.radial import ProblemSpec, build_grid, residual_norm
from oracles import reference_continuation, report

# folds of the disk branch, uniform grids (frozen from reference runs, see test_oracles)
DISK_FOLDS_N1000 = (0.7892289895, 0.4153401184)
DISK_LAMBDA_STAR_REF = 0.7892292635  # n = 8000


@pytest.fixture(scope="module")
def disk():
    spec = ProblemSpec(2)
    g = build_grid(1000, spec)
    return trace_branch(spec, g)


def test_disk_folds_and_termination(disk):
    assert len(disk.folds) >= 2
    assert disk.termination in ("second_fold", "mu2_crossed_zero")
    assert disk.termination in TERMINATIONS
    assert lambda_star(disk) == pytest.approx(DISK_FOLDS_N1000[0], abs=1e-8)
    assert lambda_2_star(disk) == pytest.approx(DISK_FOLDS_N1000[1], abs=1e-8)
    assert 0 < disk.lambda_2_star_est < disk.lambda_star_est
    assert abs(disk.folds[0].mu) <= 1e-3


def test_disk_against_reference(disk):
    rep = report("disk_lambda_star_n1000_vs_n8000", DISK_LAMBDA_STAR_REF, disk.lambda_star_est, 1e-6, relative=True)
    assert rep.passed


def test_morse_structure(disk):
    first = disk.folds[0].index
    pts = disk.points
    assert all(p.morse_index == 0 for p in pts[1:first])
    assert all(p.mu1 > 0 for p in pts[1:first])
    second = disk.folds[1].index if len(disk.folds) > 1 else len(pts)
    for p in pts[first:second - 1]:
        assert p.mu1 < 0
        assert p.morse_index == 1


def test_branch_points_are_solutions(disk):
    g = build_grid(1000, 2)
    for p in disk.points[::10]:
        assert residual_norm(p.u, p.lam, ProblemSpec(2), g) <= 1e-10
    s = disk.s
    assert np.all(np.diff(s) > 0)


def test_detect_folds_refined_matches_trace(disk):
    # the trace stops one point past the second fold, so only the first
    # has increments on both sides
    found = detect_folds(disk)
    assert len(found) >= 1
    assert found[0][1] == pytest.approx(disk.folds[0].lam, abs=1e-8)


def test_detect_folds_on_parabola():
    b = Branch()
    for s in np.linspace(0, 2, 21):
        b.points.append(BranchPoint(s=s, lam=1.0 - (s - 1.03) ** 2, u=np.zeros(2), mu1=0, mu2=0, morse_index=0))
    (sv, lv), = detect_folds(b, refine=False)
    assert sv == pytest.approx(1.03, abs=1e-12)
    assert lv == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        detect_folds(Branch(points=b.points[:2]))


def test_step_cap_termination():
    spec = ProblemSpec(2)
    g = build_grid(100, spec)
    b = trace_branch(spec, g, ContinuationParams(max_steps=3))
    assert b.termination == "max_steps"
    assert b.flags["lambda_star_lower_bound"]
    with pytest.warns(UserWarning):
        lambda_star(b)


def test_continue_past_lambda2():
    spec = ProblemSpec(2)
    g = build_grid(200, spec)
    b = trace_branch(spec, g, ContinuationParams(stop_at_lambda2=False, max_steps=400))
    assert len(b.folds) >= 3


def test_params_validation():
    with pytest.raises(ValueError):
        ContinuationParams(ds0=1.0, ds_max=0.1)
    with pytest.raises(ValueError):
        ContinuationParams(l_max=0)


def test_solve_at_sup_norm(disk):
    g = build_grid(1000, 2)
    p = disk.points[len(disk.points) // 2]
    target = p.u0 + 1e-3
    u, lam = solve_at_sup_norm(target, ProblemSpec(2), g, p.u, p.lam)
    assert u[0] == pytest.approx(target, abs=1e-14)
    assert residual_norm(u, lam, ProblemSpec(2), g) <= 1e-10
    with pytest.raises(ValueError):
        solve_at_sup_norm(1.0, ProblemSpec(2), g, p.u, p.lam)


def test_richardson_exact_for_power_law():
    ns = np.array([100, 200, 400])
    vals = 3.0 + 5.0 / ns**2
    ext, order = richardson(vals, ns)
    assert ext == pytest.approx(3.0, abs=1e-12)
    assert order == pytest.approx(2.0, abs=1e-9)
    ext2, _ = richardson(vals[:2], ns[:2])
    assert ext2 == pytest.approx(3.0, abs=1e-12)


def test_extremal_regime_n8():
    spec = ProblemSpec(8)
    g = build_grid(1000, spec, kind="graded")
    b = trace_branch(spec, g)
    assert b.termination == "barrier_reached"
    assert not b.folds
    assert abs(b.lambda_star_est / (40 / 9) - 1) < 5e-3
    assert np.all(b.morse_index == 0)


@pytest.mark.slow
def test_reference_continuation_disk_self_convergence():
    lams = [reference_continuation(ProblemSpec(2), n).lambda_star_est for n in (4000, 8000)]
    rep = report("disk_lambda_star_ref_doubling", lams[1], lams[0], 5e-5, relative=True)
    assert rep.passed
    assert f"{lams[0]:.4g}" == f"{lams[1]:.4g}"
