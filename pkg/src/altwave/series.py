"""Truncated power series in epsilon with real coefficients."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DomainError


class EpsSeries:
    """``sum_{j=0}^{J} a_j eps^j`` truncated at a fixed order ``J``.

    Immutable; arithmetic between series of different order truncates to the
    smaller one.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Sequence[float]):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise DomainError("coefficients must be a nonempty 1-D sequence")
        c.setflags(write=False)
        self._c = c

    @classmethod
    def constant(cls, a0: float, order: int) -> "EpsSeries":
        c = np.zeros(order + 1)
        c[0] = a0
        return cls(c)

    @classmethod
    def monomial(cls, k: int, order: int, coef: float = 1.0) -> "EpsSeries":
        c = np.zeros(order + 1)
        if k <= order:
            c[k] = coef
        return cls(c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return self._c.size - 1

    def __repr__(self):
        return f"EpsSeries({self._c.tolist()!r})"

    def __getitem__(self, j):
        return self._c[j]

    def __call__(self, eps: float) -> float:
        return float(np.polynomial.polynomial.polyval(eps, self._c))

    def partial_sum(self, eps: float, J: int) -> float:
        return float(np.polynomial.polynomial.polyval(eps, self._c[: J + 1]))

    def truncate(self, order: int) -> "EpsSeries":
        if order > self.order:
            c = np.zeros(order + 1)
            c[: self._c.size] = self._c
            return EpsSeries(c)
        return EpsSeries(self._c[: order + 1])

    def _coerce(self, other):
        if isinstance(other, EpsSeries):
            J = min(self.order, other.order)
            return self._c[: J + 1], other._c[: J + 1]
        b = np.zeros_like(self._c)
        b[0] = float(other)
        return self._c, b

    def __add__(self, other):
        a, b = self._coerce(other)
        return EpsSeries(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return EpsSeries(a - b)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return EpsSeries(b - a)

    def __neg__(self):
        return EpsSeries(-self._c)

    def __mul__(self, other):
        if isinstance(other, EpsSeries):
            a, b = self._coerce(other)
            return EpsSeries(np.convolve(a, b)[: a.size])
        return EpsSeries(self._c * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, EpsSeries):
            return self * other.reciprocal()
        return EpsSeries(self._c / float(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def shift(self, k: int) -> "EpsSeries":
        """Multiply by ``eps^k`` and truncate."""
        c = np.zeros_like(self._c)
        if k < c.size:
            c[k:] = self._c[: c.size - k]
        return EpsSeries(c)

    def reciprocal(self) -> "EpsSeries":
        a = self._c
        if a[0] == 0:
            raise DomainError("reciprocal needs a nonzero constant term")
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for n in range(1, a.size):
            b[n] = -np.dot(a[1 : n + 1], b[n - 1 :: -1][:n]) / a[0]
        return EpsSeries(b)

    def sqrt(self) -> "EpsSeries":
        a = self._c
        if not a[0] > 0:
            raise DomainError("sqrt needs a positive constant term")
        b = np.zeros_like(a)
        b[0] = math.sqrt(a[0])
        for n in range(1, a.size):
            # a_n = sum_{k=0}^{n} b_k b_{n-k}
            acc = np.dot(b[1:n], b[n - 1 : 0 : -1]) if n > 1 else 0.0
            b[n] = (a[n] - acc) / (2.0 * b[0])
        return EpsSeries(b)

    def compose(self, taylor: Sequence[float]) -> "EpsSeries":
        """Evaluate ``f(self)`` given ``taylor[k] = f^{(k)}(a_0) / k!``."""
        d = self - self._c[0]
        J = self.order
        t = np.zeros(J + 1)
        t[: min(len(taylor), J + 1)] = np.asarray(taylor, dtype=float)[: J + 1]
        # Horner in d; d has no constant term so order k needs only t[:k+1]
        out = EpsSeries.constant(t[J], J)
        for k in range(J - 1, -1, -1):
            out = out * d + t[k]
        return out

    def compose_series(self, inner: "EpsSeries") -> "EpsSeries":
        """``self(inner(eps))`` for ``inner`` with zero constant term."""
        if inner[0] != 0:
            raise DomainError("inner series must vanish at eps = 0")
        return inner.compose(self._c)

    def sincos(self):
        a0 = self._c[0]
        J = self.order
        s = np.empty(J + 1)
        c = np.empty(J + 1)
        sa, ca = math.sin(a0), math.cos(a0)
        cyc_s = (sa, ca, -sa, -ca)
        cyc_c = (ca, -sa, -ca, sa)
        fact = 1.0
        for k in range(J + 1):
            if k:
                fact *= k
            s[k] = cyc_s[k % 4] / fact
            c[k] = cyc_c[k % 4] / fact
        return self.compose(s), self.compose(c)

    def sin(self):
        return self.sincos()[0]

    def cos(self):
        return self.sincos()[1]

    def derivative_coeffs(self) -> np.ndarray:
        c = self._c
        return c[1:] * np.arange(1, c.size)


def series_mul(a: EpsSeries, b: EpsSeries) -> EpsSeries:
    return a * b


def series_sqrt(a: EpsSeries) -> EpsSeries:
    return a.sqrt()


def series_sincos(a: EpsSeries):
    return a.sincos()


def series_compose(a: EpsSeries, taylor: Sequence[float]) -> EpsSeries:
    return a.compose(taylor)
