from hypothesis import given, strategies as st
import numpy as np
import pytest

from mems_branch.continuation import trace_branch
from mems_branch.newton import minimal_solution, solve_at_lambda
from mems_branch.mountain_pass import (
    G_eps,
    PathParams,
    RegularizationParams,
    ar_threshold,
    default_exponent,
    energy,
    energy_gradient,
    g_eps,
    g_eps_prime,
    growth_constant,
    make_w_eps,
    mp_search,
)
from mems_branch.radial import ProblemSpec, build_grid
from oracles import fd_directional

eps_st = st.floats(0.01, 0.5)
p_st = st.floats(1.1, 3.0)


@given(eps_st, p_st)
def test_junction_identities(eps, p):
    prm = RegularizationParams(eps, p)
    k = 1.0 - eps
    a, b = prm._coeffs()
    assert a + b * k**p == pytest.approx(eps**-2, rel=1e-12)
    assert b * p * k ** (p - 1) == pytest.approx(2 * eps**-3, rel=1e-12)
    left, right = np.nextafter(k, 0), np.nextafter(k, 2)
    assert g_eps(right, prm) == pytest.approx(g_eps(left, prm), rel=1e-12)
    assert g_eps_prime(right, prm) == pytest.approx(g_eps_prime(left, prm), rel=1e-12)
    assert G_eps(right, prm) == pytest.approx(1.0 / eps, rel=1e-12)


@given(eps_st, p_st, st.floats(-5, 50))
def test_primitive_derivative(eps, p, u):
    prm = RegularizationParams(eps, p)
    h = 1e-6 * max(1.0, abs(u))
    fd = (G_eps(u + h, prm) - G_eps(u - h, prm)) / (2 * h)
    assert fd == pytest.approx(g_eps(u, prm), rel=1e-5)


@given(eps_st, p_st, st.floats(0, 1e4))
def test_growth_bound(eps, p, u):
    prm = RegularizationParams(eps, p)
    assert 0 <= g_eps(u, prm) <= growth_constant(prm) * (1 + u**p) * (1 + 1e-12)


@given(eps_st, p_st)
def test_ambrosetti_rabinowitz_by_sampling(eps, p):
    prm = RegularizationParams(eps, p)
    M = ar_threshold(prm)
    u = M + np.geomspace(1e-9, 1e6, 2000)
    assert np.all(prm.theta * G_eps(u, prm) <= u * g_eps(u, prm) * (1 + 1e-12))
    assert prm.theta > 2


def test_exponent_choice():
    assert default_exponent(2) == 2.0
    for N in range(5, 15):
        p = default_exponent(N)
        assert 1 < p < (N + 2) / (N - 2)
        RegularizationParams.for_dimension(N, 0.1)
    with pytest.raises(ValueError):
        RegularizationParams(0.1, 3.0, N=6)
    with pytest.raises(ValueError):
        RegularizationParams(1.5)


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_energy_gradient_matches_finite_difference(seed, N):
    rng = np.random.default_rng(seed)
    spec = ProblemSpec(N)
    g = build_grid(50, spec)
    prm = RegularizationParams(0.2)
    r = g.interior
    u = rng.uniform(-0.5, 1.5) * (1 - r**2)
    v = rng.normal(size=g.n)
    fd = fd_directional(lambda x: energy(x, 0.7, prm, spec, g), u, v)
    an = float(energy_gradient(u, 0.7, prm, spec, g) @ v)
    assert fd == pytest.approx(an, rel=1e-6, abs=1e-8)


@pytest.fixture(scope="module")
def disk_setup():
    spec = ProblemSpec(2)
    g = build_grid(400, spec)
    b = trace_branch(spec, g)
    lam = 0.98 * b.lambda_star_est
    return spec, g, b, lam


def test_w_eps_and_energy_ordering(disk_setup):
    spec, g, _, lam = disk_setup
    u_lam = minimal_solution(lam, spec, g)
    Js = []
    for eps in (0.2, 0.1, 0.05):
        prm = RegularizationParams(eps)
        w = make_w_eps(prm, spec, g)
        assert w[0] == pytest.approx(1 - eps)
        assert np.all(w[g.interior >= 0.8] == 0)
        Js.append(energy(w, lam, prm, spec, g))
    assert Js[0] > Js[1] > Js[2]
    # u_lam is a strict local minimum of the energy
    prm = RegularizationParams(0.05)
    J0 = energy(u_lam, lam, prm, spec, g)
    rng = np.random.default_rng(0)
    for _ in range(10):
        v = rng.normal(size=g.n) * (1 - g.interior)
        v *= 1e-3 / np.max(np.abs(v))
        assert energy(u_lam + v, lam, prm, spec, g) > J0


def _second_branch_at(b, lam, spec, g):
    pts = b.points[b.folds[0].index:]
    for a, c in zip(pts, pts[1:]):
        if (a.lam - lam) * (c.lam - lam) <= 0:
            t = (lam - a.lam) / (c.lam - a.lam)
            return solve_at_lambda(lam, (1 - t) * a.u + t * c.u, spec, g)
    raise AssertionError("lambda not on the second branch")


def test_mountain_pass_matches_second_branch(disk_setup):
    spec, g, b, lam = disk_setup
    res = mp_search(lam, None, spec, g)
    assert res.accepted
    ref = _second_branch_at(b, lam, spec, g)
    assert np.max(np.abs(res.u - ref)) < 1e-3
    assert res.mu1 < 0 <= res.mu2
    assert res.level > res.energy_u_lambda
    u, level = res
    assert level == res.level


def test_path_params_validation():
    with pytest.raises(ValueError):
        PathParams(nodes=2)
    with pytest.raises(ValueError):
        PathParams(grad_tol=1e-2, switch_tol=1e-3)
