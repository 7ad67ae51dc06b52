"""Parameter bookkeeping: the Robin coefficient mu, regime tags and odd zeta values.

The small window half-width eta is typically exponentially small, so every
object here keeps ``ln eta`` as the primary quantity and derives ``eta`` from it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import DomainError

HALF_PI = 0.5 * math.pi


def mu_from(epsilon: float, eta: float) -> float:
    """Robin coefficient ``-1/(epsilon ln eta)`` for a window half-width ``eta < 1``."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    if not 0 < eta < 1:
        raise DomainError(f"eta must lie in (0, 1), got {eta!r}")
    return -1.0 / (epsilon * math.log(eta))


def mu_from_log(epsilon: float, eta_ln: float) -> float:
    """Same as :func:`mu_from` but takes ``ln eta`` (usable below underflow)."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    if not eta_ln < 0:
        raise DomainError(f"ln eta must be negative, got {eta_ln!r}")
    return -1.0 / (epsilon * eta_ln)


def eta_log_from(epsilon: float, mu: float) -> float:
    if not (epsilon > 0 and mu > 0):
        raise DomainError("epsilon and mu must be positive")
    return -1.0 / (epsilon * mu)


def eta_from(epsilon: float, mu: float) -> float:
    """Inverse of :func:`mu_from`: ``exp(-1/(epsilon mu))``."""
    return math.exp(eta_log_from(epsilon, mu))


class Regime(enum.Enum):
    NEUMANN_HOMOGENIZED = "NeumannHomogenized"
    DIRICHLET_HOMOGENIZED = "DirichletHomogenized"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class RegimeTag:
    tag: Regime
    indicator: float


@dataclass(frozen=True)
class ModelParams:
    """Joint parameter state of the waveguide.

    Build with :meth:`from_eta`, :meth:`from_log_eta` or :meth:`from_mu`;
    the constructor keeps ``eta``, ``eta_ln`` and ``mu`` consistent.
    """

    epsilon: float
    eta_ln: float
    tau: float = 0.0
    kappa: float = 0.5
    alpha: float = 0.75
    mu: float = field(init=False)
    eta: float = field(init=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")
        if not (self.eta_ln < math.log(HALF_PI)):
            raise DomainError("eta must be below pi/2")
        if not 0.5 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (1/2, 1), got {self.alpha!r}")
        if not 0 < self.kappa < 1:
            raise DomainError(f"kappa must lie in (0, 1), got {self.kappa!r}")
        if not -1 <= self.tau < 1:
            raise DomainError(f"tau must lie in [-1, 1), got {self.tau!r}")
        if abs(self.tau) > 1 - self.kappa + 1e-15:
            raise DomainError(f"|tau| = {abs(self.tau)} exceeds 1 - kappa = {1 - self.kappa}")
        object.__setattr__(self, "eta", math.exp(self.eta_ln))
        # eta in [1, pi/2) is geometrically legal but gives no positive mu
        mu = -1.0 / (self.epsilon * self.eta_ln) if self.eta_ln < 0 else math.nan
        object.__setattr__(self, "mu", mu)

    @classmethod
    def from_eta(cls, epsilon: float, eta: float, **kw) -> "ModelParams":
        if not 0 < eta < HALF_PI:
            raise DomainError(f"eta must lie in (0, pi/2), got {eta!r}")
        return cls(epsilon=epsilon, eta_ln=math.log(eta), **kw)

    @classmethod
    def from_log_eta(cls, epsilon: float, eta_ln: float, **kw) -> "ModelParams":
        return cls(epsilon=epsilon, eta_ln=eta_ln, **kw)

    @classmethod
    def from_mu(cls, epsilon: float, mu: float, **kw) -> "ModelParams":
        return cls(epsilon=epsilon, eta_ln=eta_log_from(epsilon, mu), **kw)

    @property
    def regime_indicator(self) -> float:
        return self.epsilon * self.eta_ln


def classify_regime(params: ModelParams, threshold: float = 5.0) -> RegimeTag:
    """Pointwise regime classification from the indicator ``epsilon ln eta``.

    The thresholds are a convention of this package: the limits that define
    the two regimes say nothing about finite epsilon.
    """
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    ind = params.regime_indicator
    if ind <= -threshold:
        tag = Regime.NEUMANN_HOMOGENIZED
    elif -1.0 / threshold < ind < 0:
        tag = Regime.DIRICHLET_HOMOGENIZED
    else:
        tag = Regime.INDETERMINATE
    return RegimeTag(tag, ind)


_ZETA_CACHE_MAX = 64


@lru_cache(maxsize=None)
def _zeta_direct(s: int) -> float:
    # head summed smallest-first, tail from the midpoint rule; the
    # neglected curvature term is below s(s+1)/(24 (s+1)) N^{-s-1}
    n_head = 4000 if s <= 5 else 400 if s <= 15 else 40
    n = n_head
    head = 0.0
    for k in range(n, 0, -1):
        head += k ** (-float(s))
    tail = (n + 0.5) ** (1.0 - s) / (s - 1)
    return head + tail


def zeta_odd(j: int) -> float:
    """Riemann zeta at the odd integer ``2j + 1``."""
    if int(j) != j or j < 1:
        raise DomainError(f"j must be an integer >= 1, got {j!r}")
    j = int(j)
    s = 2 * j + 1
    if j <= _ZETA_CACHE_MAX:
        return _zeta_direct(s)
    # 2^{-s} already sits below double resolution relative to 1 here
    return 1.0 + 2.0 ** (-s) * (1.0 + 1.5 ** (-s))
