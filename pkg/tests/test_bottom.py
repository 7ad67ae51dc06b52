import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from altwave.bottom import (K_closed, T_dLambda, T_eval, approx_eigenfunction, band_value,
                            expand_Lambda_series, solve_Lambda)
from altwave.errors import DomainError
from altwave.homogenized import Lambda_n
from altwave.params import eta_log_from

mpmath = pytest.importorskip("mpmath")


def mp_T(eps, mu, lam):
    mpmath.mp.dps = 30
    eps, mu, lam = mpmath.mpf(eps), mpmath.mpf(mu), mpmath.mpf(lam)
    beta = eps**2 * lam
    th = -mpmath.nsum(lambda j: 1 / (j * mpmath.sqrt(4 * j**2 - beta) * (2 * j + mpmath.sqrt(4 * j**2 - beta))),
                      [1, mpmath.inf])
    s = mpmath.sqrt(lam)
    c = mpmath.cos(s * mpmath.pi)
    return s * c + mu * mpmath.sin(s * mpmath.pi) - eps**3 * mu * lam * s * th * c


def test_T_against_mpmath():
    L1 = Lambda_n(0.1, 1)
    assert T_eval(0.3, 0.1, L1) == pytest.approx(float(mp_T(0.3, 0.1, L1)), abs=1e-15)
    assert T_eval(0.3, 0.1, L1) == pytest.approx(-1.2426e-5, abs=1e-9)


def test_T_derivative():
    h = 1e-6
    for eps, mu, lam in [(0.3, 0.1, 0.31), (0.5, 1.0, 0.7)]:
        fd = (T_eval(eps, mu, lam + h) - T_eval(eps, mu, lam - h)) / (2 * h)
        assert T_dLambda(eps, mu, lam) == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("eps,mu", [(0.3, 0.1), (0.2, 0.27143405118953234), (0.4, 0.5)])
def test_solve_Lambda_against_mpmath(eps, mu):
    lam = solve_Lambda(eps, mu)
    mpmath.mp.dps = 30
    ref = mpmath.findroot(lambda x: mp_T(eps, mu, x), Lambda_n(mu, 1))
    assert lam == pytest.approx(float(ref), abs=1e-14)


def test_solve_Lambda_limits():
    assert solve_Lambda(0.3, 0.0) == 0.25
    assert solve_Lambda(0.3, 0.1) - Lambda_n(0.1) == pytest.approx(-7.08e-6, abs=1e-8)


@pytest.mark.parametrize("mu", [0.05, 0.1, 0.2, 0.5])
def test_series_coefficients_match_closed_forms(mu):
    ex = expand_Lambda_series(mu, 8)
    for j in range(3, 9):
        kc = K_closed(j, mu)
        if kc == 0:
            assert abs(ex.K[j]) <= 1e-10
        else:
            assert ex.K[j] == pytest.approx(kc, rel=1e-8)
    assert max(ex.structural_zeros) <= 1e-10


def test_K3_value():
    mpmath.mp.dps = 30
    mu = mpmath.mpf("0.1")
    s = mpmath.findroot(lambda x: x * mpmath.cos(x * mpmath.pi) + mu * mpmath.sin(x * mpmath.pi), 0.55)
    L = s * s
    ref = -(mpmath.zeta(3) / 4) * L**2 / (mpmath.pi * L + mu + mpmath.pi * mu**2)
    assert K_closed(3, 0.1) == pytest.approx(float(ref), rel=1e-13)
    assert K_closed(3, 0.1) == pytest.approx(-0.026108, abs=1e-6)
    with pytest.raises(DomainError):
        K_closed(9, 0.1)


@given(st.floats(0.05, 1.0), st.floats(0.02, 0.2))
def test_partial_sum_close_to_root(mu, eps):
    ex = expand_Lambda_series(mu, 8)
    assert abs(ex.partial_sum(eps) - solve_Lambda(eps, mu)) <= 50 * eps**9 + 1e-14


def test_partial_sum_order():
    E = [0.1, 0.05, 0.025]
    ex = expand_Lambda_series(1.0, 8)
    err = [abs(ex.partial_sum(e, 3) - solve_Lambda(e, 1.0)) for e in E]
    slope = np.polyfit(np.log(E), np.log(err), 1)[0]
    assert slope >= 3.8


def test_derivative_in_mu_at_zero():
    h = 1e-5
    d = (solve_Lambda(0.2, h) - solve_Lambda(0.2, -h)) / (2 * h)
    assert d == pytest.approx(2 / math.pi, abs=1e-6)


def test_expansion_mu_zero():
    ex = expand_Lambda_series(0.0, 6)
    assert ex.K == {} and ex.partial_sum(0.3) == 0.25
    with pytest.raises(DomainError):
        expand_Lambda_series(0.1, 50)


def test_band_value():
    bv = band_value(1, 0.0, 0.2, 0.3, refined=True)
    assert bv.value == pytest.approx(Lambda_n(0.3))
    assert bv.refined == pytest.approx(solve_Lambda(0.2, 0.3))
    assert bv.envelope == pytest.approx(math.sqrt(0.2) * 0.3 / math.sqrt(0.5))
    assert band_value(2, 0.5, 0.1, 0.3).value == pytest.approx(25 + Lambda_n(0.3, 2))
    with pytest.raises(DomainError):
        band_value(1, 0.6, 0.1, 0.3, kappa=0.5)


def test_approx_eigenfunction_pieces():
    eps, mu = 0.2, 0.3
    eta_ln = eta_log_from(eps, mu)
    L = solve_Lambda(eps, mu)
    # far from the boundary the composite reduces to the homogenized mode
    assert approx_eigenfunction(0.1, 2.0, eps, mu, eta_ln, L) == pytest.approx(math.sin(math.sqrt(L) * (2.0 - math.pi)))
    # vanishes on the Dirichlet window and the top
    assert approx_eigenfunction(0.0, 0.0, eps, mu, eta_ln, L) == pytest.approx(0.0, abs=1e-14)
    assert approx_eigenfunction(0.05, math.pi, eps, mu, eta_ln, L) == pytest.approx(0.0, abs=1e-12)
    # periodic in x1 with period eps pi
    a = approx_eigenfunction(0.07, 0.1, eps, mu, eta_ln, L)
    b = approx_eigenfunction(0.07 + eps * math.pi, 0.1, eps, mu, eta_ln, L)
    assert a == pytest.approx(b, abs=1e-12)
