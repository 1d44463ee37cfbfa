import numpy as np
import pytest

from mems_branch.blowup import (
    CASE_TAGS,
    classify_and_rescale,
    compare_to_limit,
    pointwise_bound_constant,
    rescale_slow,
    rescaled_residual,
)
from mems_branch.continuation import trace_branch
from mems_branch.exceptions import DomainError
from mems_branch.limit import shoot
from mems_branch.radial import ProblemSpec, build_grid


@pytest.fixture(scope="module")
def extremal8():
    spec = ProblemSpec(8)
    g = build_grid(1000, spec, kind="graded")
    b = trace_branch(spec, g)
    return spec, g, b


@pytest.fixture(scope="module")
def limit8():
    return shoot(8, 0.0)


def test_centred_rescaling(extremal8):
    spec, g, b = extremal8
    p = b.points[-1]
    prof = classify_and_rescale(p, p.lam, spec, g)
    assert prof.case_tag == CASE_TAGS[0]
    assert prof.U[0] == 1.0
    assert prof.eps == p.gap0
    assert prof.scale == pytest.approx(prof.eps**1.5 / p.lam**0.5, rel=1e-14)
    assert prof.y_max == pytest.approx(1 / prof.scale)
    assert prof.U[-1] == pytest.approx(1 / prof.eps)


def test_rescaled_profile_solves_limit_equation(extremal8):
    spec, g, b = extremal8
    p = b.points[-1]
    res = rescaled_residual(classify_and_rescale(p, p.lam, spec, g))
    assert np.max(np.abs(res)) < 1e-9


def test_distance_to_limit(extremal8, limit8):
    spec, g, b = extremal8
    p = b.points[-1]
    prof = classify_and_rescale(p, p.lam, spec, g)
    assert compare_to_limit(prof, limit8, R=5.0) < 1e-3
    with pytest.raises(ValueError, match="attainable R"):
        compare_to_limit(prof, limit8, R=10 * prof.y_max)


def test_compare_identical_profiles_is_zero(limit8):
    from mems_branch.blowup import RescaledProfile
    # nodes coincide with the comparison samples, so no interpolation error
    y = np.linspace(0, 5, 2001)
    prof = RescaledProfile(CASE_TAGS[0], 1e-3, 1.0, 1.0, 8, 0.0, 1.0, y, limit8.evaluate(y))
    assert compare_to_limit(prof, limit8, R=5.0) <= 1e-15


def test_fast_case_scale():
    spec = ProblemSpec(3, alpha=1.0)
    g = build_grid(200, spec)
    u = 0.95 * (1 - g.interior**2)
    prof = classify_and_rescale(u, 2.0, spec, g)
    assert prof.case_tag == CASE_TAGS[2]
    eps = 1 - 0.95
    assert prof.scale == pytest.approx(eps * 2.0 ** (-1 / 3), rel=1e-12)


def test_rescaling_errors():
    spec = ProblemSpec(3)
    g = build_grid(100, spec)
    r = g.interior
    with pytest.raises(DomainError):
        classify_and_rescale(0.5 * (1 - r**2), 1.0, spec, g)
    with pytest.raises(DomainError):
        classify_and_rescale(0.95 * (1 - r**2), 0.0, spec, g)
    off = 0.95 * np.exp(-((r - 0.5) ** 2) * 50)
    with pytest.raises(DomainError) as info:
        classify_and_rescale(off, 1.0, spec, g)
    assert info.value.reason == "off_centre_maximum"


def test_slow_rescaling_manufactured():
    eps, lam, d, alpha = 1e-3, 2.0, 0.5, 2.0
    s = eps**1.5 * lam**-0.5 * d ** (-alpha / 2)
    x = 0.5 + s * np.linspace(-5, 5, 101)
    u = 1 - eps * (1 + ((x - 0.5) / s) ** 2)
    prof = rescale_slow(x, u, 0.5, 0.0, lam, alpha)
    assert prof.case_tag == CASE_TAGS[1]
    assert prof.scale == pytest.approx(s, rel=1e-12)
    assert np.allclose(prof.U, 1 + prof.y**2, rtol=1e-9)
    with pytest.raises(ValueError):
        rescaled_residual(prof)
    with pytest.raises(DomainError):
        rescale_slow(x, u, 0.0, 0.0, lam, alpha)


def test_bound_constant_scaling():
    spec = ProblemSpec(3)
    g = build_grid(100, spec)
    u = 0.5 * (1 - g.interior**2)
    c1 = pointwise_bound_constant(u, 1.0, spec, g)
    c4 = pointwise_bound_constant(u, 4.0, spec, g)
    assert c4 == pytest.approx(c1 / 4 ** (1 / 3), rel=1e-14)
    # for u = 0 the constant is min |x|^{-2/3} >= 1 on the unit ball
    assert pointwise_bound_constant(np.zeros(g.n), 1.0, spec, g) >= 1.0
    with pytest.raises(DomainError):
        pointwise_bound_constant(u, 0.0, spec, g)


def test_bound_constant_along_branch(extremal8):
    spec, g, b = extremal8
    vals = [pointwise_bound_constant(p, p.lam, spec, g) for p in b.points[-10:]]
    assert min(vals) > 0.01
