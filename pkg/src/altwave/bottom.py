"""Bottom of the spectrum: the perturbed eigenvalue equation, its eps-series and
the composite approximate ground state."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SolverError
from .homogenized import Lambda_n
from .layers import (THETA_BETA_MAX, SeriesTruncation, X_closed, Y_closed, Z_series, chi1,
                     theta, theta_taylor_coeffs)
from .params import zeta_odd
from .series import EpsSeries

_THETA_TRUNC = SeriesTruncation(tol=1e-15)


def _theta_val(beta: float) -> float:
    return theta(beta, _THETA_TRUNC).value


def _theta_prime(beta: float) -> float:
    # d/dbeta of the summand 1/(j s (2j+s)) with s = sqrt(4j^2 - beta) is
    # (2j + 2s) / (2 j s^3 (2j+s)^2); the tail beyond 2000 is O(N^-4)
    j = np.arange(2000, 0, -1, dtype=float)
    s = np.sqrt(4 * j * j - beta)
    return -float(np.sum((2 * j + 2 * s) / (2 * j * s**3 * (2 * j + s) ** 2)))


def T_eval(epsilon: float, mu: float, Lam: float) -> float:
    """``sqrt(L) cos(sqrt(L) pi) + mu sin(sqrt(L) pi) - eps^3 mu L^{3/2} theta(eps^2 L) cos(sqrt(L) pi)``."""
    if not Lam > 0:
        raise DomainError("Lambda must be positive")
    s = math.sqrt(Lam)
    c, sn = math.cos(s * math.pi), math.sin(s * math.pi)
    out = s * c + mu * sn
    if epsilon != 0 and mu != 0:
        beta = epsilon * epsilon * Lam
        if beta > THETA_BETA_MAX:
            raise DomainError("eps^2 Lambda outside the theta domain")
        out -= epsilon**3 * mu * Lam * s * _theta_val(beta) * c
    return out


def T_dLambda(epsilon: float, mu: float, Lam: float) -> float:
    s = math.sqrt(Lam)
    c, sn = math.cos(s * math.pi), math.sin(s * math.pi)
    d = (c - math.pi * s * sn + mu * math.pi * c) / (2 * s)
    if epsilon != 0 and mu != 0:
        u = epsilon * epsilon * Lam
        th = _theta_val(u)
        thp = _theta_prime(u)
        L32 = Lam * s
        d -= epsilon**3 * mu * (1.5 * s * th * c + L32 * epsilon**2 * thp * c
                                - L32 * th * math.pi * sn / (2 * s))
    return d


def solve_Lambda(epsilon: float, mu: float, tol: float = 1e-14) -> float:
    """Root of the perturbed equation near ``Lambda_1(mu)``.

    Newton from ``Lambda_1(mu)`` with a bracketing fallback restricted to
    ``|Lambda - Lambda_1| < 0.1``.
    """
    L1 = Lambda_n(mu, 1)
    if mu == 0:
        return L1
    lam = L1
    for _ in range(50):
        f = T_eval(epsilon, mu, lam)
        step = f / T_dLambda(epsilon, mu, lam)
        lam_new = lam - step
        if not abs(lam_new - L1) < 0.1:
            break
        lam = lam_new
        if abs(step) <= tol * max(1.0, abs(lam)):
            return lam
    lo, hi = max(L1 - 0.1, 1e-12), L1 + 0.1
    try:
        return brentq(lambda x: T_eval(epsilon, mu, x), lo, hi, xtol=1e-16, rtol=4e-16)
    except ValueError as exc:
        raise SolverError(f"no root near Lambda_1 for eps={epsilon}, mu={mu}") from exc


# --- eps-series of the root -------------------------------------------------

def _T_series(lam: EpsSeries, mu: float, th_c: np.ndarray, want_derivative: bool):
    s = lam.sqrt()
    sn, c = (s * math.pi).sincos()
    L32 = lam * s
    u = lam.shift(2)  # eps^2 Lambda
    th = u.compose(th_c)  # u has no constant term: plain Taylor substitution
    T = s * c + sn * mu - (L32 * th * c).shift(3) * mu
    if not want_derivative:
        return T, None
    thp_c = np.polynomial.polynomial.polyder(th_c) if th_c.size > 1 else np.zeros(1)
    thp = u.compose(thp_c)
    inv2s = (s * 2.0).reciprocal()
    dT = (c - s * sn * math.pi + c * (mu * math.pi)) * inv2s
    corr = s * th * c * 1.5 + (L32 * thp * c).shift(2) - L32 * th * sn * math.pi * inv2s
    dT = dT - corr.shift(3) * mu
    return T, dT


@dataclass(frozen=True)
class LambdaExpansion:
    mu: float
    Lambda1: float
    K: dict = field(default_factory=dict)
    series: EpsSeries | None = None
    iterations: int = 0

    def partial_sum(self, epsilon: float, J: int | None = None) -> float:
        if self.series is None:
            return self.Lambda1
        return self.series.partial_sum(epsilon, self.series.order if J is None else J)

    @property
    def structural_zeros(self) -> tuple[float, float, float]:
        a = self.series.coeffs
        pick = lambda j: float(abs(a[j])) if j < a.size else 0.0
        return pick(1), pick(2), pick(4)


def expand_Lambda_series(mu: float, J: int, max_iter: int = 30) -> LambdaExpansion:
    """Newton iteration on truncated eps-series for the root of the perturbed equation."""
    if J < 0 or J > 40:
        raise DomainError("J must lie in [0, 40]")
    L1 = Lambda_n(mu, 1)
    if mu == 0:
        return LambdaExpansion(mu, L1, {}, EpsSeries.constant(L1, J), 0)
    th_c = theta_taylor_coeffs(max(1, J // 2 + 1))
    lam = EpsSeries.constant(L1, J)
    # the correct order at least doubles per step, starting from 3
    needed = 2 + max(0, math.ceil(math.log2(max(J, 1) / 3.0)))
    it = 0
    for it in range(1, max_iter + 1):
        T, dT = _T_series(lam, mu, th_c, True)
        new = lam - T * dT.reciprocal()
        change = np.max(np.abs(new.coeffs - lam.coeffs))
        lam = new
        scale = max(1.0, np.max(np.abs(lam.coeffs)))
        if change <= 1e-16 * scale or (it >= needed and change <= 1e-12 * scale):
            break
    else:
        raise SolverError("series Newton iteration did not stabilize")
    a = lam.coeffs
    K = {}
    for j in range(3, J + 1):
        K[j] = a[j] / (mu * mu) if j % 2 else a[j] / mu**3
    return LambdaExpansion(mu, L1, K, lam, it)


def K_closed(j: int, mu: float) -> float:
    """Explicit coefficients ``K_3..K_8`` of the eps-expansion."""
    L = Lambda_n(mu, 1)
    D = math.pi * L + mu + math.pi * mu * mu
    z3, z5, z7 = zeta_odd(1), zeta_odd(2), zeta_odd(3)
    pi = math.pi
    if j == 3:
        return -(z3 / 4) * L**2 / D
    if j == 4:
        return 0.0
    if j == 5:
        return -(3 * z5 / 64) * L**3 / D
    if j == 6:
        p = 2 * pi**2 * L**2 + 7 * pi * mu * L + 2 * pi**2 * mu**2 * L + 7 * mu**2 + 7 * pi * mu**3
        return z3**2 * L**3 * p / (64 * D**3)
    if j == 7:
        return -(5 * z7 / 512) * L**4 / D
    if j == 8:
        p = 2 * pi**2 * L**2 + 9 * pi * mu * L + 2 * pi**2 * mu**2 * L + 9 * mu**2 + 9 * mu**3 * pi
        return 3 * z3 * z5 * L**4 * p / (512 * D**3)
    raise DomainError("closed forms exist for j = 3..8 only")


class BandValue(NamedTuple):
    value: float
    refined: float | None
    envelope: float


def band_value(n: int, tau: float, epsilon: float, mu: float, kappa: float = 0.5,
               refined: bool = False) -> BandValue:
    """Leading band approximation ``tau^2/eps^2 + Lambda_n(mu)`` and its error envelope form."""
    if not -1.0 <= tau < 1.0 or abs(tau) > 1.0 - kappa + 1e-15:
        raise DomainError(f"tau={tau} violates |tau| <= 1 - kappa")
    shift = tau * tau / (epsilon * epsilon)
    val = shift + Lambda_n(mu, n)
    ref = None
    if refined:
        if n != 1 or tau != 0:
            raise DomainError("refined value is available only for n = 1, tau = 0")
        ref = shift + solve_Lambda(epsilon, mu)
    env = n**4 * math.sqrt(epsilon) * mu / math.sqrt(kappa)
    return BandValue(val, ref, env)


# --- composite approximate ground state --------------------------------------

def _Z_grouped(xi1, xi2, beta, tol=1e-12):
    """Z series evaluated in groups of similar xi2 so that the truncation
    length is driven by each group's smallest xi2."""
    out = np.empty(xi1.shape)
    if xi1.size == 0:
        return out
    trunc = SeriesTruncation(tol=tol, n_max=10**7)
    zero = xi2 <= 0
    if np.any(zero):
        out[zero] = Z_series(xi1[zero], xi2[zero], beta, trunc).value
    pos = ~zero
    if np.any(pos):
        key = np.floor(np.log2(xi2[pos]) * 2)
        idx = np.flatnonzero(pos)
        for k in np.unique(key):
            sel = idx[key == k]
            out[sel] = Z_series(xi1[sel], xi2[sel], beta, trunc).value
    return out


def approx_eigenfunction(x1, x2, epsilon: float, mu: float, eta_ln: float, Lam: float | None = None):
    """Composite ground-state approximation assembled from the exterior
    mode, the boundary layer ``X + Z`` and the window profile ``Y``.

    ``x1`` is reduced to the central period; ``eta_ln = ln eta`` must be
    consistent with ``mu = -1 / (eps ln eta)`` for the pieces to match.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x1, x2 = np.broadcast_arrays(x1, x2)
    shape = x1.shape
    x1 = x1.ravel()
    x2 = x2.ravel()
    if Lam is None:
        Lam = solve_Lambda(epsilon, mu)
    sL = math.sqrt(Lam)
    amp = epsilon * sL * math.cos(sL * math.pi)
    per = epsilon * math.pi
    y1 = x1 - per * np.round(x1 / per)
    xi1 = y1 / epsilon
    xi2 = x2 / epsilon
    rad = np.hypot(xi1, xi2)
    inner_w = chi1(rad * math.exp(-0.5 * eta_ln))
    inner_w = np.atleast_1d(inner_w)
    psi = np.sin(sL * (x2 - math.pi))
    bl_w = np.atleast_1d(chi1(x2)) * (1.0 - inner_w)
    outer_w = 1.0 - inner_w
    psi = psi * outer_w
    need_bl = bl_w > 0
    if np.any(need_bl):
        xa, xb = xi1[need_bl], xi2[need_bl]
        bl = np.asarray(X_closed(xa, xb)) + _Z_grouped(xa, xb, epsilon * sL)
        psi[need_bl] += bl_w[need_bl] * amp * bl
    need_in = inner_w > 0
    if np.any(need_in):
        scale = math.exp(-eta_ln)
        yin = np.asarray(Y_closed(xi1[need_in] * scale, xi2[need_in] * scale))
        psi[need_in] += inner_w[need_in] * amp * yin
    return psi.reshape(shape) if shape else float(psi[0])
