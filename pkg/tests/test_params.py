import math

import pytest
from hypothesis import given, strategies as st

from altwave.errors import DomainError
from altwave.params import (ModelParams, Regime, classify_regime, eta_from, eta_log_from, mu_from,
                            mu_from_log, zeta_odd)


def test_mu_from_value():
    # -1 / (0.2 ln 1e-8) computed by hand: ln 1e-8 = -18.420680743952367
    assert mu_from(0.2, 1e-8) == pytest.approx(1.0 / (0.2 * 18.420680743952367), rel=1e-15)
    assert mu_from(0.2, 1e-8) == pytest.approx(0.27143405, abs=1e-8)


def test_mu_from_log_below_underflow():
    mu = mu_from_log(0.01, -2000.0)
    assert mu == pytest.approx(0.05, rel=1e-15)
    p = ModelParams.from_log_eta(0.01, -2000.0)
    assert p.eta == 0.0 and p.mu == pytest.approx(0.05)


@given(st.floats(1e-3, 1.0), st.floats(1e-3, 10.0))
def test_mu_eta_roundtrip(eps, mu):
    assert mu_from_log(eps, eta_log_from(eps, mu)) == pytest.approx(mu, rel=1e-12)
    eta = eta_from(eps, mu)
    if 0 < eta < 1:
        assert mu_from(eps, eta) == pytest.approx(mu, rel=1e-9)


@pytest.mark.parametrize("bad", [(0.0, 0.5), (-1.0, 0.5), (0.1, 0.0), (0.1, 1.0), (0.1, 2.0)])
def test_mu_from_domain(bad):
    with pytest.raises(DomainError):
        mu_from(*bad)


def test_model_params_validation():
    with pytest.raises(DomainError):
        ModelParams.from_eta(0.1, 1e-3, tau=0.6, kappa=0.5)
    with pytest.raises(DomainError):
        ModelParams.from_eta(0.1, 1e-3, alpha=0.5)
    with pytest.raises(DomainError):
        ModelParams.from_eta(0.1, 2.0)
    p = ModelParams.from_mu(0.2, 0.3, tau=0.5)
    assert p.mu == pytest.approx(0.3)
    assert p.eta == pytest.approx(math.exp(-1 / 0.06))


def test_regimes():
    assert classify_regime(ModelParams.from_log_eta(0.1, -100.0)).tag is Regime.NEUMANN_HOMOGENIZED
    assert classify_regime(ModelParams.from_log_eta(0.01, -1.0)).tag is Regime.DIRICHLET_HOMOGENIZED
    assert classify_regime(ModelParams.from_log_eta(0.1, -10.0)).tag is Regime.INDETERMINATE
    t = classify_regime(ModelParams.from_log_eta(0.1, -100.0))
    assert t.indicator == pytest.approx(-10.0)


def test_zeta_against_mpmath():
    mpmath = pytest.importorskip("mpmath")
    for j in (1, 2, 3, 5, 8, 20, 40, 64, 70):
        assert zeta_odd(j) == pytest.approx(float(mpmath.zeta(2 * j + 1)), rel=2e-15, abs=0)


def test_zeta_domain():
    with pytest.raises(DomainError):
        zeta_odd(0)
    with pytest.raises(DomainError):
        zeta_odd(1.5)
