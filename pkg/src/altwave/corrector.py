"""Boundary corrector ``W`` absorbing the mismatch between the alternating and
the homogenized boundary conditions.

Only the window centred at ``x1 = 0`` is evaluated; ``x1`` is first reduced
to the central period ``|x1| <= eps pi / 2``.  Inside the period

    W = eps mu X(xi) + chi1(t) W_mat,   W_mat = -1 + eps mu (Y(sigma) - X(xi) - xi2),

with ``t = |xi| eta^(alpha - 1)``, which is the same function as the sum of
the exterior, boundary-layer and window pieces since ``eps mu xi2 = mu x2``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError, FitError, SingularityError
from .layers import X_closed, X_grad, Y_closed, Y_grad, chi1
from .params import mu_from_log


@dataclass(frozen=True)
class CorrectorParams:
    epsilon: float
    eta_ln: float
    alpha: float = 0.75
    mu: float = field(init=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not self.eta_ln < 0:
            raise DomainError("the corrector needs eta < 1")
        if not 0.5 < self.alpha < 1:
            raise DomainError("alpha must lie in (1/2, 1)")
        if self.eta_ln < -650:
            raise DomainError("eta below ~1e-282 leaves the physical window unresolvable in double precision")
        if 1.5 * math.exp((1 - self.alpha) * self.eta_ln) >= math.pi / 2:
            raise ConfigurationError("transition annuli of neighbouring windows overlap")
        object.__setattr__(self, "mu", mu_from_log(self.epsilon, self.eta_ln))

    @classmethod
    def from_eta(cls, epsilon, eta, alpha=0.75):
        return cls(epsilon, math.log(eta), alpha)

    @property
    def eta(self) -> float:
        return math.exp(self.eta_ln)

    @property
    def cut_scale(self) -> float:
        """``eta^(alpha - 1)``: converts ``|xi|`` into the cut-off argument."""
        return math.exp((self.alpha - 1.0) * self.eta_ln)


class Region(enum.Enum):
    External = "External"
    Internal = "Internal"
    Transition = "Transition"


class RegionTag(NamedTuple):
    tag: Region
    j: int | None


def _reduce(x1, x2, p: CorrectorParams):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    per = p.epsilon * math.pi
    j = np.round(x1 / per)
    y1 = x1 - per * j
    return y1 / p.epsilon, x2 / p.epsilon, j


def _cut_arg(xi1, xi2, p):
    return np.hypot(xi1, xi2) * p.cut_scale


def classify_point(x1: float, x2: float, params: CorrectorParams) -> RegionTag:
    if not 0 <= x2 <= math.pi:
        raise DomainError("x2 must lie in [0, pi]")
    xi1, xi2, j = _reduce(x1, x2, params)
    t = float(_cut_arg(xi1, xi2, params))
    if t < 1:
        return RegionTag(Region.Internal, int(j))
    if t <= 1.5:
        return RegionTag(Region.Transition, int(j))
    return RegionTag(Region.External, None)


def _pieces(xi1, xi2, p):
    """Return t, X on the points that need it (NaN elsewhere), Y likewise."""
    t = _cut_arg(xi1, xi2, p)
    inv_eta = math.exp(-p.eta_ln)
    need_x = t >= 1
    need_y = t <= 1.5
    X = np.full(t.shape, np.nan)
    Y = np.full(t.shape, np.nan)
    if np.any(need_x):
        X[need_x] = X_closed(xi1[need_x], xi2[need_x])
    if np.any(need_y):
        Y[need_y] = Y_closed(xi1[need_y] * inv_eta, xi2[need_y] * inv_eta)
    return t, X, Y


def W_eval(x1, x2, params: CorrectorParams):
    p = params
    xi1, xi2, _ = _reduce(x1, x2, p)
    xi1, xi2 = np.broadcast_arrays(np.atleast_1d(xi1), np.atleast_1d(xi2))
    x2a = xi2 * p.epsilon
    em = p.epsilon * p.mu
    t, X, Y = _pieces(xi1, xi2, p)
    ext = t > 1.5
    inn = t < 1
    tr = ~(ext | inn)
    out = np.empty(t.shape)
    out[ext] = em * X[ext]
    out[inn] = -p.mu * x2a[inn] - 1.0 + em * Y[inn]
    if np.any(tr):
        c = chi1(t[tr])
        wmat = -1.0 + em * (Y[tr] - X[tr] - xi2[tr])
        out[tr] = em * X[tr] + c * wmat
    return out.item() if np.ndim(x1) == 0 and np.ndim(x2) == 0 else out


def _grads(xi1, xi2, p, sel_x, sel_y):
    inv_eta = math.exp(-p.eta_ln)
    gx = (np.full(xi1.shape, np.nan), np.full(xi1.shape, np.nan))
    gy = (np.full(xi1.shape, np.nan), np.full(xi1.shape, np.nan))
    if np.any(sel_x):
        a, b = X_grad(xi1[sel_x], xi2[sel_x])
        gx[0][sel_x], gx[1][sel_x] = a, b
    if np.any(sel_y):
        a, b = Y_grad(xi1[sel_y] * inv_eta, xi2[sel_y] * inv_eta)
        gy[0][sel_y], gy[1][sel_y] = a, b
    return gx, gy


def W_grad(x1, x2, params: CorrectorParams):
    """Analytic ``(dW/dx1, dW/dx2)``."""
    p = params
    xi1, xi2, _ = _reduce(x1, x2, p)
    xi1, xi2 = np.broadcast_arrays(np.atleast_1d(xi1), np.atleast_1d(xi2))
    mu = p.mu
    inv_eta = math.exp(-p.eta_ln)
    t, X, Y = _pieces(xi1, xi2, p)
    ext = t > 1.5
    inn = t < 1
    tr = ~(ext | inn)
    gx, gy = _grads(xi1, xi2, p, ~inn, ~ext)
    g1 = np.empty(t.shape)
    g2 = np.empty(t.shape)
    # eps mu d/dx X(xi) = mu grad_xi X ; eps mu d/dx Y(sigma) = (mu/eta) grad_sigma Y
    g1[ext] = mu * gx[0][ext]
    g2[ext] = mu * gx[1][ext]
    g1[inn] = mu * inv_eta * gy[0][inn]
    g2[inn] = -mu + mu * inv_eta * gy[1][inn]
    if np.any(tr):
        r = np.hypot(xi1[tr], xi2[tr])
        c = chi1(t[tr])
        dc = chi1(t[tr], 1) * p.cut_scale / p.epsilon
        em = p.epsilon * mu
        wmat = -1.0 + em * (Y[tr] - X[tr] - xi2[tr])
        m1 = mu * (inv_eta * gy[0][tr] - gx[0][tr])
        m2 = mu * (inv_eta * gy[1][tr] - gx[1][tr] - 1.0)
        g1[tr] = mu * gx[0][tr] + dc * xi1[tr] / r * wmat + c * m1
        g2[tr] = mu * gx[1][tr] + dc * xi2[tr] / r * wmat + c * m2
    scalar = np.ndim(x1) == 0 and np.ndim(x2) == 0
    return (g1.item(), g2.item()) if scalar else (g1, g2)


def W_laplacian(x1, x2, params: CorrectorParams):
    """``Delta W``: zero off the transition annulus, the cut-off commutator inside it."""
    p = params
    xi1, xi2, _ = _reduce(x1, x2, p)
    xi1, xi2 = np.broadcast_arrays(np.atleast_1d(xi1), np.atleast_1d(xi2))
    mu = p.mu
    inv_eta = math.exp(-p.eta_ln)
    t = _cut_arg(xi1, xi2, p)
    tr = (t >= 1) & (t <= 1.5)
    out = np.zeros(t.shape)
    if np.any(tr):
        a, b = xi1[tr], xi2[tr]
        r = np.hypot(a, b)
        X = np.asarray(X_closed(a, b))
        Y = np.asarray(Y_closed(a * inv_eta, b * inv_eta))
        gx = X_grad(a, b)
        gy = Y_grad(a * inv_eta, b * inv_eta)
        em = p.epsilon * mu
        wmat = -1.0 + em * (Y - X - b)
        m1 = mu * (inv_eta * gy[0] - gx[0])
        m2 = mu * (inv_eta * gy[1] - gx[1] - 1.0)
        k = p.cut_scale / p.epsilon  # d t / d |x|
        d1 = chi1(t[tr], 1)
        d2 = chi1(t[tr], 2)
        rx = r * p.epsilon
        grad_dot = d1 * k * (a * m1 + b * m2) / r
        lap_chi = d2 * k * k + d1 * k / rx
        out[tr] = 2.0 * grad_dot + wmat * lap_chi
    scalar = np.ndim(x1) == 0 and np.ndim(x2) == 0
    return out.item() if scalar else out


def laplacian_envelope(params: CorrectorParams) -> float:
    """``mu / eps * (1 + eta^(4 alpha - 2))``."""
    p = params
    return p.mu / p.epsilon * (1.0 + math.exp((4 * p.alpha - 2) * p.eta_ln))


# --- verification ------------------------------------------------------------

@dataclass(frozen=True)
class SampleSpec:
    n_boundary: int = 200
    n_interior: int = 64
    n_transition: int = 400
    stencil_h: float = 1e-3
    seed: int = 0


@dataclass
class CorrectorReport:
    epsilon: float
    eta_ln: float
    alpha: float
    mu: float
    dirichlet_residual: float
    neumann_residual: float
    external_identity: float
    harmonic_external: float
    harmonic_internal: float
    junction_exponent: float
    laplacian_max: float
    envelope_constant: float
    laplacian_fd_mismatch: float

    def as_dict(self):
        return dict(self.__dict__)


def _stencil(f, c1, c2, h):
    return (f(c1 + h, c2) + f(c1 - h, c2) + f(c1, c2 + h) + f(c1, c2 - h) - 4 * f(c1, c2)) / (h * h)


def junction_exponent(params: CorrectorParams, rho_min=1e-8, rho_max=1e-4, n=25) -> float:
    """Fit ``|W - W(junction)| ~ rho^p`` along the vertical through the right
    window endpoint, ``rho`` in window units."""
    p = params
    scale = p.epsilon * p.eta
    rho = np.geomspace(rho_min, rho_max, n)
    x1 = np.full(n, scale)
    w0 = W_eval(scale, 0.0, p)
    w = W_eval(x1, rho * scale, p)
    dev = np.abs(w - w0)
    if np.any(dev <= 0):
        raise FitError("degenerate junction samples")
    slope = np.polyfit(np.log(rho), np.log(dev), 1)[0]
    return float(slope)


def verify_corrector(params: CorrectorParams, spec: SampleSpec = SampleSpec()) -> CorrectorReport:
    p = params
    rng = np.random.default_rng(spec.seed)
    eps, eta, mu = p.epsilon, p.eta, p.mu
    per = eps * math.pi
    # Dirichlet window
    s = rng.uniform(-1, 1, spec.n_boundary) * (1 - 1e-9)
    k = rng.integers(-3, 4, spec.n_boundary)
    w = W_eval(s * eps * eta + k * per, np.zeros_like(s), p)
    dir_res = float(np.max(np.abs(w + 1.0)))
    # Neumann part; sample both near (in sigma units) and far from the window
    far = rng.uniform(1.0, 1.0 / eta * math.pi / 2, spec.n_boundary // 2)
    near_w = np.geomspace(1.0 + 1e-6, min(1.0 / eta, 1e12), spec.n_boundary - far.size)
    sig = np.concatenate([far, near_w]) * rng.choice([-1.0, 1.0], spec.n_boundary)
    xb = np.clip(sig * eps * eta, -per / 2, per / 2)
    xb = xb[np.abs(xb) > eps * eta * (1 + 1e-7)]
    _, g2 = W_grad(xb, np.zeros_like(xb), p)
    neu_res = float(np.max(np.abs(g2 + mu)))
    # exterior identity and harmonicity (stencil in xi units)
    cs = p.cut_scale
    xi_ext1 = rng.uniform(-math.pi / 2, math.pi / 2, spec.n_interior)
    xi_ext2 = rng.uniform(0.05, 3.0, spec.n_interior)
    rad = np.hypot(xi_ext1, xi_ext2)
    keep = rad * cs > 1.5 + 0.1 * cs + 1e-9
    xi_ext1, xi_ext2 = xi_ext1[keep], xi_ext2[keep]
    we = W_eval(xi_ext1 * eps, xi_ext2 * eps, p)
    ext_id = float(np.max(np.abs(we - eps * mu * np.asarray(X_closed(xi_ext1, xi_ext2))))) if we.size else 0.0
    h = spec.stencil_h
    fx = lambda a, b: W_eval(a * eps, b * eps, p)
    h_ext = float(np.max(np.abs(_stencil(fx, xi_ext1, xi_ext2, h)))) if we.size else 0.0
    # interior of the window zone, in sigma units, at distance >= 0.5 from the endpoints
    # the internal zone is |sigma| < eta^(-alpha)
    sig_r = np.geomspace(0.6, max(0.61, 0.5 * math.exp(-p.alpha * p.eta_ln)), spec.n_interior)
    ang = rng.uniform(0.3, math.pi - 0.3, spec.n_interior)
    s1 = sig_r * np.cos(ang)
    s2 = np.maximum(sig_r * np.sin(ang), 0.5)
    fs = lambda a, b: W_eval(a * eps * eta, b * eps * eta, p)
    h_int = float(np.max(np.abs(_stencil(fs, s1, s2, h))))
    # junction exponent
    jexp = junction_exponent(p)
    # transition annulus: Laplacian samples and envelope constant
    tt = np.linspace(1.0, 1.5, spec.n_transition // 20 + 2)[1:-1]
    th = np.linspace(0.0, math.pi, 20)
    T, TH = np.meshgrid(tt, th)
    rr = T.ravel() / cs
    a1 = rr * np.cos(TH.ravel()) * eps
    a2 = np.abs(rr * np.sin(TH.ravel()) * eps)
    lap = W_laplacian(a1, a2, p)
    lap_max = float(np.max(np.abs(lap)))
    env_c = lap_max / laplacian_envelope(p)
    # finite-difference cross-check of the analytic Laplacian at a few annulus points
    pick = np.linspace(0, a1.size - 1, 7).astype(int)
    # the cut-off has steep high derivatives, so the O(h^2) stencil error is
    # removed by combining h and 2h; h is kept large enough to stay clear of
    # roundoff in the O(1) values of W
    hx = 4e-3 * eps / cs
    pick = pick[a2[pick] > 4 * hx]
    fw = lambda a, b: W_eval(a, b, p)
    fd = (4 * _stencil(fw, a1[pick], a2[pick], hx) - _stencil(fw, a1[pick], a2[pick], 2 * hx)) / 3
    mism = float(np.max(np.abs(fd - lap[pick])) / max(lap_max, 1e-300)) if pick.size else 0.0
    return CorrectorReport(eps, p.eta_ln, p.alpha, mu, dir_res, neu_res, ext_id, h_ext, h_int,
                           jexp, lap_max, env_c, mism)
