"""Boundary-layer functions X, Y, Z, the theta function and the cut-off chi1.

Coordinates: X and Z live in the fast variables ``xi = x / epsilon`` on the
half-strip above the lower boundary, Y in the window variables
``sigma = xi / eta`` around one Dirichlet window.  All functions accept numpy
arrays and broadcast.

Series evaluators return a :class:`SeriesResult` carrying the partial sum and
a bound on the neglected tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, SingularityError, TruncationError
from .params import zeta_odd

LN2 = math.log(2.0)
THETA_BETA_MAX = 3.9
_BLOCK = 4096


@dataclass(frozen=True)
class SeriesTruncation:
    tol: float = 1e-12
    n_max: int = 10**6

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.n_max < 1:
            raise DomainError("n_max must be >= 1")


DEFAULT_TRUNC = SeriesTruncation()


class SeriesResult(NamedTuple):
    value: np.ndarray | float
    error_bound: float
    n_terms: int


def _scalarize(a):
    a = np.asarray(a)
    return a.item() if a.ndim == 0 else a


def _reduce_period(xi1):
    return xi1 - math.pi * np.round(xi1 / math.pi)


def _one_minus_q(xi1, xi2):
    """Return ``1 - exp(2i(xi1 + i xi2))`` without cancellation near q = 1."""
    a = -2.0 * xi2
    b = 2.0 * _reduce_period(xi1)
    re = -(np.expm1(a) * np.cos(b) - 2.0 * np.sin(0.5 * b) ** 2)
    im = -np.exp(a) * np.sin(b)
    return re, im


def _check_x_singular(xi1, xi2):
    bad = (xi2 == 0) & (np.abs(_reduce_period(xi1)) <= 1e-300)
    if np.any(bad):
        raise SingularityError("X is logarithmically singular at (pi j, 0)")


def X_closed(xi1, xi2):
    """``Re ln sin(xi1 + i xi2) + ln 2 - xi2``, evaluated as ``ln|1 - e^{2i(xi1+i xi2)}|``.

    The rearrangement is exact and avoids the overflow of ``sin`` for large ``xi2``.
    """
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    if np.any(xi2 < 0):
        raise DomainError("X is defined on xi2 >= 0")
    _check_x_singular(xi1, xi2)
    re, im = _one_minus_q(xi1, xi2)
    mod2 = re * re + im * im
    a = np.exp(-2.0 * xi2)
    b = 2.0 * _reduce_period(xi1)
    far = np.log1p(a * a - 2.0 * a * np.cos(b))
    near = np.log(np.where(mod2 > 0, mod2, 1.0))
    out = 0.5 * np.where(mod2 > 0.5, far, near)
    return _scalarize(out)


def X_grad(xi1, xi2):
    """Analytic gradient of X in the xi variables.

    Near the boundary the form ``sinh(2 xi2)/D - 1`` is used, which returns
    exactly ``-1`` for ``d X / d xi2`` on ``xi2 = 0``.
    """
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    _check_x_singular(xi1, xi2)
    x1r = _reduce_period(xi1)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        y = np.minimum(xi2, 1.0)
        d = 2.0 * (np.sinh(y) ** 2 + np.sin(x1r) ** 2)
        g1_near = np.sin(2 * x1r) / d
        g2_near = np.sinh(2 * y) / d - 1.0
        re, im = _one_minus_q(xi1, xi2)
        qa = np.exp(-2.0 * xi2)
        q = qa * (np.cos(2 * x1r) + 1j * np.sin(2 * x1r))
        g = -2j * q / (re + 1j * im)
    near = xi2 <= 1.0
    g1 = np.where(near, g1_near, g.real)
    g2 = np.where(near, g2_near, -g.imag)
    return _scalarize(g1), _scalarize(g2)


def X_series(xi1, xi2, trunc: SeriesTruncation = DEFAULT_TRUNC) -> SeriesResult:
    """Fourier series ``-sum_n e^{-2n xi2} cos(2n xi1) / n`` (requires ``xi2 > 0``)."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    if np.any(xi2 <= 0):
        raise DomainError("X series converges only for xi2 > 0")
    y = float(np.min(xi2))
    r = math.exp(-2.0 * y)

    def bound(n):  # tail after n terms
        return r ** (n + 1) / ((n + 1) * (1 - r))

    n = 1
    while bound(n) > trunc.tol:
        if 2 * n > trunc.n_max:
            raise TruncationError(f"X series needs more than {trunc.n_max} terms at xi2={y}")
        n *= 2
    lo, hi = 1, n
    while lo < hi:
        mid = (lo + hi) // 2
        if bound(mid) <= trunc.tol:
            hi = mid
        else:
            lo = mid + 1
    n = lo
    k = np.arange(1, n + 1, dtype=float)
    x1 = xi1[..., None]
    x2 = xi2[..., None]
    terms = -np.exp(-2.0 * k * x2) * np.cos(2.0 * k * x1) / k
    val = terms[..., ::-1].sum(axis=-1)
    return SeriesResult(_scalarize(val), bound(n), n)


def _check_beta(beta):
    if not abs(beta) < 2:
        raise DomainError(f"|beta| must be below 2, got {beta!r}")


def _z_tail_bound(n_next, beta, y):
    s = math.sqrt(4.0 * n_next * n_next - beta * beta)
    b = ((2.0 * n_next / s - 1.0) + (2.0 * n_next - s) * y) * math.exp(-s * y) / n_next
    if y > 0:
        factor = min(1.0 / -math.expm1(-2.0 * y), n_next + 1.0)
    else:
        factor = 0.5 * (n_next + 2.0)
    return b * factor


def _blocked_sum(term_fn, xi1, xi2, tail_bound, trunc, what):
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    xi1, xi2 = np.broadcast_arrays(xi1, xi2)
    acc = np.zeros(xi1.shape)
    comp = np.zeros(xi1.shape)
    n0 = 1
    while True:
        bnd = tail_bound(n0)
        if bnd <= trunc.tol:
            break
        if n0 > trunc.n_max:
            raise TruncationError(f"{what} needs more than {trunc.n_max} terms (bound {bnd:.3g})")
        k = np.arange(n0, n0 + _BLOCK, dtype=float)
        block = term_fn(k, xi1[..., None], xi2[..., None])
        # Kahan across blocks, pairwise inside each block
        s = block[..., ::-1].sum(axis=-1)
        yk = s - comp
        t = acc + yk
        comp = (t - acc) - yk
        acc = t
        n0 += _BLOCK
    return SeriesResult(_scalarize(acc), tail_bound(n0), n0 - 1)


def Z_series(xi1, xi2, beta: float, trunc: SeriesTruncation = DEFAULT_TRUNC) -> SeriesResult:
    """Separable solution of the shifted Helmholtz layer problem.

    ``Z = sum_n (1/n)(e^{-2n xi2} - (2n/s_n) e^{-s_n xi2}) cos(2n xi1)``
    with ``s_n = sqrt(4n^2 - beta^2)``; converges on the closed half-strip.
    """
    _check_beta(beta)
    xi2a = np.asarray(xi2, dtype=float)
    if np.any(xi2a < 0):
        raise DomainError("Z is defined on xi2 >= 0")
    if beta == 0:
        shape = np.broadcast(np.asarray(xi1), xi2a).shape
        return SeriesResult(_scalarize(np.zeros(shape)), 0.0, 0)
    y = float(np.min(xi2a))
    b2 = beta * beta

    def terms(k, x1, x2):
        s = np.sqrt(4.0 * k * k - b2)
        # e^{-2k y} - (2k/s) e^{-s y} = -e^{-s y} (d + (2k/s - 1)), no cancellation
        gap = b2 / (2.0 * k + s)  # 2k - s
        d = -np.expm1(-gap * x2)
        br = -np.exp(-s * x2) * (d + gap / s)
        return br * np.cos(2.0 * k * x1) / k

    return _blocked_sum(terms, xi1, xi2, lambda n: _z_tail_bound(n, beta, y), trunc, "Z series")


def XplusZ_series(xi1, xi2, beta: float, trunc: SeriesTruncation = DEFAULT_TRUNC) -> SeriesResult:
    """``X + Z = -sum_n (2/s_n) e^{-s_n xi2} cos(2n xi1)`` (requires ``xi2 > 0``)."""
    _check_beta(beta)
    xi2a = np.asarray(xi2, dtype=float)
    if np.any(xi2a <= 0):
        raise DomainError("X + Z series converges only for xi2 > 0")
    y = float(np.min(xi2a))
    b2 = beta * beta

    def terms(k, x1, x2):
        s = np.sqrt(4.0 * k * k - b2)
        return -2.0 / s * np.exp(-s * x2) * np.cos(2.0 * k * x1)

    def tail(n):
        s = math.sqrt(4.0 * n * n - b2)
        return 2.0 / s * math.exp(-s * y) / -math.expm1(-2.0 * y)

    return _blocked_sum(terms, xi1, xi2, tail, trunc, "X + Z series")


def _theta_tail_integral(m: float, beta: float) -> float:
    s = math.sqrt(4.0 * m * m - beta)
    t = 1.0 / (4.0 * m * (s + 2.0 * m))
    if beta == 0:
        return t
    return -math.log1p(-beta * t) / beta


def theta(beta: float, trunc: SeriesTruncation = DEFAULT_TRUNC) -> SeriesResult:
    """``theta(beta) = -sum_j 1 / (j s_j (2j + s_j))``, ``s_j = sqrt(4j^2 - beta)``.

    Head summed directly; the tail is the exact integral of the summand from
    ``N + 1/2`` (midpoint rule), whose error is below ``(1+|beta|)/(32 N^4)``.
    """
    beta = float(beta)
    if not abs(beta) <= THETA_BETA_MAX:
        raise DomainError(f"theta is evaluated for |beta| <= {THETA_BETA_MAX}, got {beta}")
    n = int(math.ceil((2.0 * (1.0 + abs(beta)) / (64.0 * trunc.tol)) ** 0.25))
    n = max(n, 64)
    if n > trunc.n_max:
        raise TruncationError("theta tolerance unreachable within n_max")
    j = np.arange(n, 0, -1, dtype=float)
    s = np.sqrt(4.0 * j * j - beta)
    head = float(np.sum(1.0 / (j * s * (2.0 * j + s))))
    tail = _theta_tail_integral(n + 0.5, beta)
    bound = (1.0 + abs(beta)) / (32.0 * n**4)
    return SeriesResult(-(head + tail), bound, n)


def theta_taylor_coeffs(J: int) -> np.ndarray:
    """Coefficients ``c_0..c_{J-1}`` of ``theta(beta) = sum_k c_k beta^k``.

    ``c_{j-1} = -(2j-1)!! zeta(2j+1) / (8^j j!)``.
    """
    if J < 1:
        raise DomainError("J must be >= 1")
    out = np.empty(J)
    r = 1.0 / 8.0
    for j in range(1, J + 1):
        if j > 1:
            r *= (2 * j - 1) / (8.0 * j)
        out[j - 1] = -r * zeta_odd(j)
    return out


def theta_taylor(beta: float, J: int) -> float:
    if not abs(beta) < 4:
        raise DomainError("Taylor series of theta converges only for |beta| < 4")
    c = theta_taylor_coeffs(J)
    return float(np.polynomial.polynomial.polyval(beta, c))


def Z_at_origin(beta: float, trunc: SeriesTruncation = DEFAULT_TRUNC) -> SeriesResult:
    """Value of the Z series at ``xi = 0``, summed term by term."""
    return Z_series(0.0, 0.0, beta, trunc)


def Y_closed(s1, s2):
    """``Re ln(z + sqrt(z^2 - 1))`` on the closed upper half-plane, ``z = s1 + i s2``.

    Equals ``Re arccosh z`` for the branch with ``sqrt(1) = 1``; on the real
    axis it is evaluated in real arithmetic so the window value is exactly 0.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if np.any(s2 < 0):
        raise DomainError("Y is defined on s2 >= 0")
    s1, s2 = np.broadcast_arrays(s1, s2)
    on_axis = s2 == 0
    a = np.abs(s1)
    axis_val = np.where(a > 1, np.arccosh(np.maximum(a, 1.0)), 0.0)
    z = s1 + 1j * np.where(on_axis, 1.0, s2)
    off_val = np.arccosh(z).real
    return _scalarize(np.where(on_axis, axis_val, off_val))


def Y_grad(s1, s2):
    """Analytic gradient of Y in the window variables (singular at ``(+-1, 0)``)."""
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    s1, s2 = np.broadcast_arrays(s1, s2)
    if np.any((s2 == 0) & (np.abs(s1) == 1)):
        raise SingularityError("Y has square-root junction singularities at (+-1, 0)")
    z = s1 + 1j * s2 + 0j
    h = 1.0 / (np.sqrt(z - 1.0) * np.sqrt(z + 1.0))
    g1 = h.real
    g2 = np.where((s2 == 0) & (np.abs(s1) > 1), 0.0, -h.imag)
    return _scalarize(g1), _scalarize(g2)


def _smooth_f(s):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        inv = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    f1 = f * inv**2
    f2 = f * (inv**4 - 2.0 * inv**3)
    return f, f1, f2


def chi1(t, deriv: int = 0):
    """Smooth cut-off: 1 for ``t <= 1``, 0 for ``t >= 3/2``, monotone in between.

    ``deriv`` in {0, 1, 2} selects the function or its exact derivatives.
    """
    t = np.asarray(t, dtype=float)
    s = np.clip((t - 1.0) * 2.0, 0.0, 1.0)
    f, f1, f2 = _smooth_f(s)
    g, g1, g2 = _smooth_f(1.0 - s)
    g1 = -g1  # chain rule for s -> 1 - s
    den = f + g
    step = f / den
    if deriv == 0:
        return _scalarize(1.0 - step)
    num = f1 * g - f * g1
    d1 = num / den**2
    inside = (t > 1.0) & (t < 1.5)
    if deriv == 1:
        return _scalarize(np.where(inside, -2.0 * d1, 0.0))
    if deriv == 2:
        dnum = f2 * g - f * g2
        dden = 2.0 * den * (f1 + g1)
        d2 = (dnum * den**2 - num * dden) / den**4
        return _scalarize(np.where(inside, -4.0 * d2, 0.0))
    raise DomainError("deriv must be 0, 1 or 2")
