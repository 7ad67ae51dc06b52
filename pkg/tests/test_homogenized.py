import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from altwave.errors import DomainError, ResolutionError
from altwave.homogenized import (HomogenizedMode, Lambda_n, Lambda_n_taylor, SampledFunction1D,
                                 apply_Qmu_inverse, eigen_residual, eigenfunction,
                                 eigenfunction_derivative, green_kernel, sqrt_Lambda_n, value_at_zero)


def _mp_root(mu, n):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    f = lambda s: s * mpmath.cos(s * mpmath.pi) + mu * mpmath.sin(s * mpmath.pi)
    lo, hi = n - 0.5, n - 1e-30
    return float(mpmath.findroot(f, (mpmath.mpf(lo), mpmath.mpf(hi)), solver="bisect") ** 2)


@pytest.mark.parametrize("mu,n", [(0.1, 1), (0.27143405118953234, 1), (1.0, 2), (10.0, 3), (100.0, 1)])
def test_lambda_against_mpmath(mu, n):
    assert Lambda_n(mu, n) == pytest.approx(_mp_root(mu, n), rel=1e-13)


def test_known_values():
    assert Lambda_n(0.0, 1) == 0.25
    assert Lambda_n(0.0, 3) == 6.25
    assert Lambda_n(math.inf, 2) == 4.0
    assert Lambda_n(0.1, 1) == pytest.approx(0.3097879657, abs=1e-10)
    assert Lambda_n(0.1, 1) - Lambda_n_taylor(0.1, 1) == pytest.approx(-3.874e-3, abs=2e-6)


@given(st.floats(0.0, 50.0), st.integers(1, 6))
def test_root_in_bracket_and_residual(mu, n):
    s = sqrt_Lambda_n(mu, n)
    assert n - 0.5 <= s < n
    assert abs(eigen_residual(mu, s * s)) <= 1e-12 * max(1.0, mu)


@given(st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_monotone_in_mu(a, b):
    lo, hi = sorted((a, b))
    assert Lambda_n(lo, 1) <= Lambda_n(hi, 1) + 1e-15


def test_negative_mu_branch():
    s = sqrt_Lambda_n(-0.1, 1)
    assert 0 < s < 0.5
    assert abs(eigen_residual(-0.1, s * s)) < 1e-14
    with pytest.raises(DomainError):
        sqrt_Lambda_n(-0.5, 1)
    with pytest.raises(DomainError):
        sqrt_Lambda_n(0.3, 0)


def test_eigenfunction_boundary_conditions():
    mu = 0.7
    assert eigenfunction(1, mu, math.pi) == pytest.approx(0.0, abs=1e-15)
    # u'(0) = mu u(0)
    assert eigenfunction_derivative(1, mu, 0.0) == pytest.approx(mu * eigenfunction(1, mu, 0.0), rel=1e-12)
    m = HomogenizedMode(1, mu)
    x = np.linspace(0, math.pi, 20001)
    from scipy.integrate import trapezoid
    assert m.normalization**2 == pytest.approx(trapezoid(m(x) ** 2, x), rel=1e-7)


@given(st.floats(0.0, 10.0), st.floats(0.05, math.pi - 0.05))
def test_green_kernel_defining_properties(mu, t):
    h = 1e-6
    assert green_kernel(math.pi, t, mu) == pytest.approx(0.0, abs=1e-15)
    assert green_kernel(t, 0.3, mu) == pytest.approx(green_kernel(0.3, t, mu))
    d0 = (green_kernel(h, t, mu) - green_kernel(0.0, t, mu)) / h
    assert d0 == pytest.approx(mu * green_kernel(0.0, t, mu), rel=1e-6, abs=1e-9)
    jump = ((green_kernel(t + h, t, mu) - green_kernel(t, t, mu))
            - (green_kernel(t, t, mu) - green_kernel(t - h, t, mu))) / h
    assert jump == pytest.approx(-1.0, rel=1e-6)


def test_Qmu_inverse_solves_bvp():
    mu = 0.3
    F = SampledFunction1D.from_callable(lambda g: np.ones_like(g), 4097)
    u = apply_Qmu_inverse(F, mu)
    x = F.grid
    # -u'' = 1, u'(0) = mu u(0), u(pi) = 0  =>  u = -x^2/2 + a x + a/mu
    a = mu * (math.pi**2 / 2) / (1 + math.pi * mu)
    ref = -x**2 / 2 + a * x + a / mu
    assert np.max(np.abs(u.values - ref)) < 1e-6
    assert value_at_zero(F, mu) == pytest.approx(a / mu, rel=1e-6)


def test_Qmu_inverse_of_eigenfunction():
    mu = 0.31
    L = Lambda_n(mu, 1)
    F = SampledFunction1D.from_callable(lambda g: eigenfunction(1, mu, g), 4097)
    u = apply_Qmu_inverse(F, mu)
    assert np.max(np.abs(u.values - F.values / L)) < 1e-6


def test_value_at_zero_bound():
    rng = np.random.default_rng(3)
    g = np.linspace(0, math.pi, 513)
    for _ in range(50):
        F = SampledFunction1D(g, rng.normal(size=g.size))
        assert abs(value_at_zero(F, rng.uniform(0, 5))) <= 5 * F.l2_norm()


def test_sampled_function_validation():
    with pytest.raises(DomainError):
        SampledFunction1D(np.array([0.0, 1.0]), np.array([1.0]))
    with pytest.raises(DomainError):
        SampledFunction1D(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    F = SampledFunction1D(np.linspace(0, math.pi, 5), np.zeros(5))
    with pytest.raises(ResolutionError):
        apply_Qmu_inverse(F, 0.1)
