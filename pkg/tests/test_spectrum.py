import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from mems_branch.radial import ProblemSpec, build_grid
from mems_branch.spectrum import (
    harmonic_multiplicity,
    morse_data,
    sector_eigenvalues,
    spectral_data_from_potential,
    sturm_count,
    tridiagonal_eigenvalues,
    tridiagonal_eigenvector,
)
from oracles import dense_spectrum_oracle, dirichlet_ball_eigenvalue, discrete_laplacian_1d, report


def test_two_by_two():
    vals = tridiagonal_eigenvalues([2.0, 2.0], [1.0])
    assert np.allclose(vals, [1.0, 3.0], atol=1e-13)
    assert np.allclose(dense_spectrum_oracle([2.0, 2.0], [1.0]), [1.0, 3.0], atol=1e-13)


def test_discrete_laplacian():
    n = 50
    h = 1.0 / (n + 1)
    d = np.full(n, 2.0 / h**2)
    e = np.full(n - 1, -1.0 / h**2)
    exact = discrete_laplacian_1d(n)
    assert np.allclose(tridiagonal_eigenvalues(d, e), exact, rtol=1e-12)
    assert np.allclose(dense_spectrum_oracle(d, e), exact, rtol=1e-12)


@pytest.mark.parametrize("seed", range(50))
def test_random_matrices_against_ql_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 401))
    d = rng.normal(size=n) * 10 ** rng.uniform(-2, 3)
    e = rng.normal(size=n - 1) * 10 ** rng.uniform(-2, 3)
    ref = dense_spectrum_oracle(d, e)
    k = min(n, 10)
    got = tridiagonal_eigenvalues(d, e, k)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(got - ref[:k])) <= 1e-11 * scale


@given(st.integers(0, 10**6), st.floats(-5, 5))
def test_sturm_count_matches_eigenvalues(seed, x):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 60))
    d = rng.normal(size=n)
    e = rng.normal(size=n - 1)
    ref = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    if np.min(np.abs(ref - x)) < 1e-9:
        return
    assert sturm_count(d, e, x) == int(np.sum(ref < x))


def test_eigenvector_residual():
    rng = np.random.default_rng(3)
    d, e = rng.normal(size=80), rng.normal(size=79)
    mu = tridiagonal_eigenvalues(d, e, 1)[0]
    v = tridiagonal_eigenvector(d, e, mu)
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.linalg.norm(T @ v - mu * v) < 1e-10


@pytest.mark.parametrize("N,l,m", [(2, 0, 1), (2, 1, 2), (2, 3, 2), (3, 0, 1), (3, 1, 3), (3, 2, 5),
                                   (4, 2, 9), (8, 1, 8), (8, 2, 35), (1, 0, 1), (1, 1, 1), (1, 2, 0)])
def test_multiplicities(N, l, m):
    assert harmonic_multiplicity(l, N) == m


@given(st.integers(2, 12), st.integers(0, 8))
def test_multiplicity_generating_identity(N, L):
    # harmonics of degree <= L span the polynomials of degree L modulo |x|^2
    total = sum(harmonic_multiplicity(l, N) for l in range(L % 2, L + 1, 2))
    assert total == math.comb(N + L - 1, L)


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("l", [0, 1, 2])
def test_dirichlet_ball_against_bessel_zeros(N, l):
    spec = ProblemSpec(N)
    g = build_grid(2000, spec)
    vals = sector_eigenvalues(np.zeros(g.n), 0.0, spec, g, l=l, k_max=3)
    for k in range(3):
        exact = dirichlet_ball_eigenvalue(N, l, k + 1)
        rep = report(f"dirichlet_ball_N{N}_l{l}_k{k + 1}", exact, vals[k], 1e-5, relative=True)
        assert rep.passed, rep


def test_three_ball_radial_is_pi_squared():
    spec = ProblemSpec(3)
    g = build_grid(2000, spec)
    vals = sector_eigenvalues(np.zeros(g.n), 0.0, spec, g, 0, 3)
    assert np.allclose(vals, np.pi**2 * np.array([1, 4, 9]), rtol=2e-6)


def test_merged_list_and_multiplicities_disk():
    spec = ProblemSpec(2)
    g = build_grid(1000, spec)
    res = morse_data(np.zeros(g.n), 0.0, spec, g)
    assert res.mu1 == pytest.approx(5.7832, abs=1e-3)
    assert res.mu2 == pytest.approx(14.682, abs=1e-2)
    assert res.mu2_sector == 1
    assert res.mu[1] == res.mu[2]
    assert res.morse_index == 0


def test_second_order_convergence():
    exact = dirichlet_ball_eigenvalue(3, 1, 1)
    errs = []
    for n in (250, 500, 1000):
        g = build_grid(n, 3)
        errs.append(abs(sector_eigenvalues(np.zeros(g.n), 0.0, ProblemSpec(3), g, 1, 1)[0] - exact))
    for a, b in zip(errs, errs[1:]):
        assert 1.8 < math.log2(a / b) < 2.2


@pytest.mark.parametrize("N", [2, 3, 5])
def test_morse_index_counts_shifted_laplacian(N):
    # -Delta - c has exactly the Dirichlet eigenvalues below c negative
    g = build_grid(800, N)
    c = 60.0
    res = spectral_data_from_potential(g, np.full(g.n, -c), l_max=2, k_max=3)
    expected = 0
    for l in range(8):
        k = 1
        while dirichlet_ball_eigenvalue(N, l, k) < c:
            k += 1
        expected += harmonic_multiplicity(l, N) * (k - 1)
    assert res.morse_index == expected


def test_invalid_arguments():
    g = build_grid(40, 2)
    with pytest.raises(ValueError):
        spectral_data_from_potential(g, np.zeros(g.n), l_max=0)
    with pytest.raises(ValueError):
        sector_eigenvalues(np.zeros(g.n), 0.0, ProblemSpec(2), g, k_max=0)
    with pytest.raises(ValueError):
        harmonic_multiplicity(-1, 3)
