import time

from hypothesis import given, strategies as st
import numpy as np
import pytest

from mems_branch.closed_forms import singular_amplitude
from mems_branch.exceptions import DomainError
from mems_branch.limit import (
    LimitProfile,
    asymptotic_amplitude,
    hardy_stability_certificate,
    instability_certificate,
    shoot,
    singular_profile_residual,
)
from oracles import mp_singular_amplitude, report


@pytest.fixture(scope="module")
def profile3():
    return shoot(3, 0.0)


def test_origin_series(profile3):
    r = np.array([1e-4, 1e-3, 1e-2])
    assert np.allclose(profile3.evaluate(r), 1 + r**2 / 6, rtol=1e-10)
    assert profile3.evaluate(np.array([0.0]))[0] == 1.0


def test_profile_is_increasing(profile3):
    assert "nonmonotone" not in profile3.flags
    assert np.all(profile3.dU[1:] > 0)


@pytest.mark.parametrize("N,alpha", [(2, 0.0), (3, 0.0), (5, 0.0), (7, 0.0), (8, 1.0), (9, 3.0)])
def test_amplitude_ratio_near_one(N, alpha):
    p = shoot(N, alpha)
    rep = report(f"limit_K_ratio_N{N}_a{alpha:g}", 1.0, p.amplitude_ratio, 0.05)
    assert rep.passed
    assert singular_amplitude(N, alpha) == pytest.approx(mp_singular_amplitude(N, alpha), rel=1e-14)


def test_exact_power_law_fit():
    r = np.concatenate(([0.0], np.geomspace(1e-3, 1e4, 500)))
    K, p = 0.83, 2.0 / 3.0
    prof = LimitProfile(4, 0.0, 1e4, r, np.where(r > 0, K * r**p, 1.0))
    assert asymptotic_amplitude(prof) == pytest.approx(K, rel=1e-10)
    assert prof.fit_residual < 1e-10


def test_fit_flags_bad_profiles():
    r = np.concatenate(([0.0], np.geomspace(1e-3, 1e4, 500)))
    prof = LimitProfile(4, 0.0, 1e4, r, 1.0 + r**1.5)
    asymptotic_amplitude(prof)
    assert prof.flags.get("fit_inconclusive")


@pytest.mark.parametrize("N,alpha", [(N, 0.0) for N in range(2, 8)] + [(8, 1.0), (9, 3.0)])
def test_instability_certificates(N, alpha):
    t0 = time.perf_counter()
    p = shoot(N, alpha)
    mus = [instability_certificate(p, R)[0] for R in (10.0, 30.0, 100.0)]
    assert time.perf_counter() - t0 < 10.0
    assert mus[-1] < -1e-4
    assert mus[0] >= mus[1] >= mus[2]
    assert p.certificate == "unstable"
    phi = p.phi
    assert np.all(phi[:-1] > 0)


def test_small_ball_is_not_certified(profile3):
    # on B_1 the Dirichlet eigenvalue dominates the bounded potential
    mu, _ = instability_certificate(profile3, 1.0)
    assert mu > 0
    assert profile3.certificate == "inconclusive"
    with pytest.raises(ValueError):
        instability_certificate(profile3, 2 * profile3.R_max)


@given(st.integers(2, 14), st.integers(0, 300))
def test_hardy_certificate_agrees_with_window(N, a100):
    alpha = a100 / 100
    from mems_branch.closed_forms import hardy_stability_check
    assert hardy_stability_certificate(N, alpha) == hardy_stability_check(N, alpha)


@given(st.integers(2, 14), st.floats(0, 3), st.floats(0.01, 1e3))
def test_singular_solution_residual(N, alpha, r):
    assert abs(singular_profile_residual(N, alpha, r)) < 1e-13


def test_shoot_validation():
    with pytest.raises(ValueError):
        shoot(0)
    with pytest.raises(ValueError):
        shoot(3, -1.0)
    with pytest.raises(ValueError):
        shoot(3, R_max=10.0)
    with pytest.raises(DomainError):
        singular_amplitude(1, 0.0)
