"""The 1-D homogenized operator: ``-u''`` on (0, pi) with ``u'(0) = mu u(0)`` and ``u(pi) = 0``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, ResolutionError, SolverError


def _eig_fn(s: float, mu: float) -> float:
    return s * math.cos(s * math.pi) + mu * math.sin(s * math.pi)


def _eig_dfn(s: float, mu: float) -> float:
    return (math.cos(s * math.pi) - math.pi * s * math.sin(s * math.pi)
            + mu * math.pi * math.cos(s * math.pi))


def sqrt_Lambda_n(mu: float, n: int = 1) -> float:
    """Root ``s`` of ``s cos(s pi) + mu sin(s pi) = 0`` on ``[n - 1/2, n)``.

    Small negative ``mu`` (``mu > -1/pi`` for ``n = 1``) is accepted so that
    centred differences in ``mu`` around 0 are possible; the root then lies in
    ``(n - 1, n - 1/2]``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    mu = float(mu)
    if math.isnan(mu):
        raise DomainError("mu is NaN")
    if mu == 0:
        return n - 0.5
    if math.isinf(mu) and mu > 0:
        return float(n)
    if mu > 0:
        lo, hi = n - 0.5, float(n)
    else:
        if n == 1 and mu <= -1.0 / math.pi:
            raise DomainError("first Robin root leaves the real axis for mu <= -1/pi")
        lo, hi = (n - 1.0, n - 0.5) if n > 1 else (0.0, 0.5)
    flo = _eig_fn(lo, mu) if lo > 0 else 1.0  # s(1 + pi mu) > 0 near s = 0
    fhi = _eig_fn(hi, mu)
    if flo * fhi > 0:
        raise SolverError(f"root not bracketed for mu={mu}, n={n}")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = _eig_fn(mid, mu)
        if fm == 0:
            lo = hi = mid
            break
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    for _ in range(3):
        d = _eig_dfn(s, mu)
        if d == 0:
            break
        step = _eig_fn(s, mu) / d
        if abs(step) > hi - lo + 1e-15:
            break
        s -= step
    return s


def Lambda_n(mu: float, n: int = 1) -> float:
    """Eigenvalue ``Lambda_n(mu)`` of the homogenized operator."""
    s = sqrt_Lambda_n(mu, n)
    return s * s


def eigen_residual(mu: float, Lam: float) -> float:
    s = math.sqrt(Lam)
    return _eig_fn(s, mu)


def Lambda_n_taylor(mu: float, n: int = 1) -> float:
    """First-order law ``(n - 1/2)^2 + mu / (pi (n - 1/2))``."""
    h = n - 0.5
    return h * h + mu / (math.pi * h)


@dataclass(frozen=True)
class HomogenizedMode:
    n: int
    mu: float
    Lambda: float = field(init=False)
    normalization: float = field(init=False)

    def __post_init__(self):
        lam = Lambda_n(self.mu, self.n)
        s = math.sqrt(lam)
        # int_0^pi sin^2(s (x - pi)) dx
        nrm2 = 0.5 * math.pi - math.sin(2 * s * math.pi) / (4 * s)
        object.__setattr__(self, "Lambda", lam)
        object.__setattr__(self, "normalization", math.sqrt(nrm2))

    def __call__(self, x2):
        return eigenfunction(self.n, self.mu, x2)


def eigenfunction(n: int, mu: float, x2):
    """``sin(sqrt(Lambda_n) (x2 - pi))``, unnormalized."""
    s = sqrt_Lambda_n(mu, n)
    return np.sin(s * (np.asarray(x2, dtype=float) - math.pi))


def eigenfunction_derivative(n: int, mu: float, x2):
    s = sqrt_Lambda_n(mu, n)
    return s * np.cos(s * (np.asarray(x2, dtype=float) - math.pi))


def green_kernel(x2, t, mu: float):
    """``G(x2, t) = (1 + mu min) (pi - max) / (1 + pi mu)``."""
    x2 = np.asarray(x2, dtype=float)
    t = np.asarray(t, dtype=float)
    lo = np.minimum(x2, t)
    hi = np.maximum(x2, t)
    out = (1.0 + mu * lo) * (math.pi - hi) / (1.0 + math.pi * mu)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class SampledFunction1D:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values)
        if g.ndim != 1 or v.shape != g.shape:
            raise DomainError("grid and values must be 1-D of equal size")
        if np.any(np.diff(g) <= 0):
            raise DomainError("grid must be strictly increasing")
        if abs(g[0]) > 1e-12 or abs(g[-1] - math.pi) > 1e-12:
            raise DomainError("grid must span [0, pi]")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, f, n: int = 1025):
        g = np.linspace(0.0, math.pi, n)
        return cls(g, np.asarray(f(g)))

    def l2_norm(self) -> float:
        return float(np.sqrt(trapezoid(np.abs(self.values) ** 2, self.grid)))

    def __call__(self, x):
        v = self.values
        if np.iscomplexobj(v):
            return np.interp(x, self.grid, v.real) + 1j * np.interp(x, self.grid, v.imag)
        return np.interp(x, self.grid, v)


def apply_Qmu_inverse(F: SampledFunction1D, mu: float) -> SampledFunction1D:
    """Trapezoid quadrature of ``int G(x2, t) F(t) dt`` at every grid node."""
    g = F.grid
    if g.size < 8:
        raise ResolutionError("need at least 8 grid nodes")
    K = green_kernel(g[:, None], g[None, :], mu)
    w = np.empty_like(g)
    dg = np.diff(g)
    w[0] = 0.5 * dg[0]
    w[-1] = 0.5 * dg[-1]
    w[1:-1] = 0.5 * (dg[:-1] + dg[1:])
    return SampledFunction1D(g, K @ (w * F.values))


def value_at_zero(F: SampledFunction1D, mu: float) -> float:
    g = F.grid
    if g.size < 8:
        raise ResolutionError("need at least 8 grid nodes")
    row = green_kernel(0.0, g, mu)
    return trapezoid(row * F.values, g).item()
