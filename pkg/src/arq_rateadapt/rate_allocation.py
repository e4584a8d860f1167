"""Data-rate allocation under imperfect SNR knowledge.

The naive allocator picks the largest rate whose error at the estimate
``gamma_hat`` meets the target ``exp(-alpha)``.  When the estimate carries
error variance ``sigma2`` the expected-error constraint forces a back-off,
bounded from above here using a Gaussian approximation of the estimation
error.  The gap between the two is reported both as a rate penalty (bits
per symbol) and as a power penalty (SNR scale factor).

Rates are continuous values; :func:`floor_to_member` projects onto a finite
rate set when one is needed.  Infeasible inputs return ``None`` rather than
raising, so sweeps can cross infeasible regions.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._optimize import DEFAULT_GRID_SIZE, grid_golden_maximize
from .error_models import QAM, SignalModel

__all__ = [
    "LOW",
    "HIGH",
    "PosteriorSummary",
    "LinkParams",
    "PenaltyReport",
    "qam_threshold",
    "gaussian_low_threshold",
    "naive_rate_qam",
    "qam_feasible",
    "rate_bound_qam",
    "naive_rate_gaussian",
    "gaussian_feasible",
    "rate_bound_gaussian",
    "naive_rate",
    "rate_bound",
    "power_penalty",
    "penalties",
    "floor_to_member",
]

LOW = "low"
HIGH = "high"

LN2 = math.log(2.0)
MU_MAX = 1e6


@dataclass(frozen=True)
class PosteriorSummary:
    """SNR estimate and the conditional variance of its error."""

    gamma_hat: float
    sigma2: float = 0.0

    def __post_init__(self):
        if self.gamma_hat < 0:
            raise ValueError("gamma_hat must be nonnegative")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    @classmethod
    def from_effective_snr(cls, gamma_hat, eff_snr):
        """Build from ``gamma_hat`` and ``gamma_hat**2 / sigma2``."""
        if math.isinf(eff_snr):
            return cls(gamma_hat, 0.0)
        return cls(gamma_hat, gamma_hat * gamma_hat / eff_snr)

    @property
    def effective_snr(self):
        if self.sigma2 == 0.0:
            return math.inf
        return self.gamma_hat ** 2 / self.sigma2


@dataclass(frozen=True)
class LinkParams:
    """QoS exponent ``alpha`` (target error ``exp(-alpha)``), packet size,
    admissible rates and block length."""

    alpha: float
    n: int = 500
    rate_set: Sequence[float] = field(default=tuple(range(1, 11)))
    block_length: int = 50

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if len(self.rate_set) == 0:
            raise ValueError("rate_set must be non-empty")
        object.__setattr__(self, "rate_set",
                           tuple(sorted(float(r) for r in self.rate_set)))

    @classmethod
    def from_target_error(cls, target_error, **kwargs):
        if not 0.0 < target_error < 1.0:
            raise ValueError("target_error must lie in (0, 1)")
        return cls(-math.log(target_error), **kwargs)

    @property
    def target_error(self):
        return math.exp(-self.alpha)


@dataclass(frozen=True)
class PenaltyReport:
    naive_rate: float
    backoff_rate: Optional[float]
    rate_penalty_delta: Optional[float]
    power_penalty_mu: Optional[float]

    @property
    def feasible(self):
        return self.backoff_rate is not None

    @property
    def power_penalty_db(self):
        if self.power_penalty_mu is None:
            return None
        return 10.0 * math.log10(self.power_penalty_mu)


# -- uncoded QAM -------------------------------------------------------------

def _qam_const(lp):
    c = lp.alpha + math.log(0.1 * lp.n)
    if c <= 0:
        raise ValueError("alpha + ln(0.1 n) must be positive")
    return c


def qam_threshold(lp):
    """Minimum effective SNR ``2 (alpha + ln 0.1n)`` for QAM feasibility."""
    return 2.0 * _qam_const(lp)


def naive_rate_qam(p, lp):
    """``log2(1 + 1.5 gamma_hat / (alpha + ln 0.1n))``."""
    return math.log2(1.0 + 1.5 * p.gamma_hat / _qam_const(lp))


def qam_feasible(p, lp):
    return p.effective_snr >= qam_threshold(lp)


def rate_bound_qam(p, lp):
    """Upper bound on the back-off rate for QAM, or ``None`` if infeasible."""
    if not qam_feasible(p, lp):
        return None
    c = _qam_const(lp)
    if p.sigma2 == 0.0:
        return naive_rate_qam(p, lp)
    x = p.sigma2 / p.gamma_hat ** 2
    d = 2.0 * c * x
    # 1 - sqrt(1 - d) == d / (1 + sqrt(1 - d)), without the cancellation
    one_minus_root = d / (1.0 + math.sqrt(max(1.0 - d, 0.0)))
    return math.log2(1.0 + p.gamma_hat * 1.5 * x / one_minus_root)


# -- Gaussian codebook -------------------------------------------------------

def _check_regime(regime):
    if regime not in (LOW, HIGH):
        raise ValueError(f"regime must be {LOW!r} or {HIGH!r}")


def _gaussian_objective(gamma_hat, inv_eff, lp, regime):
    a, n = lp.alpha, lp.n

    def f(rho):
        if regime == LOW:
            gain = gamma_hat / (2.0 * (1.0 + rho))
            var = n * rho * (gamma_hat * gamma_hat * inv_eff) / (8.0 * (1.0 + rho) ** 2)
        else:
            gain = 0.5 * np.log(gamma_hat / (1.0 + rho))
            var = n * rho * inv_eff / 8.0
        return (-a / (n * rho) + gain - var) / LN2

    return f


def _max_over_rho(f, grid_size):
    _, val = grid_golden_maximize(f, 1, grid_size=grid_size)
    return float(val[0])


def gaussian_low_threshold(lp):
    """Necessary effective SNR ``2 alpha`` in the low-SNR regime."""
    return 2.0 * lp.alpha


def naive_rate_gaussian(p, lp, regime, grid_size=DEFAULT_GRID_SIZE):
    """Naive rate for the Gaussian codebook; negative maxima become 0."""
    _check_regime(regime)
    if p.gamma_hat == 0.0 and regime == HIGH:
        return 0.0
    v = _max_over_rho(_gaussian_objective(p.gamma_hat, 0.0, lp, regime),
                      grid_size)
    return max(v, 0.0)


def gaussian_feasible(p, lp, regime):
    _check_regime(regime)
    if regime == LOW:
        return p.effective_snr >= gaussian_low_threshold(lp)
    return True


def rate_bound_gaussian(p, lp, regime, grid_size=DEFAULT_GRID_SIZE):
    """Back-off rate bound for the Gaussian codebook, or ``None``."""
    if not gaussian_feasible(p, lp, regime):
        return None
    if p.gamma_hat == 0.0:
        return None
    inv_eff = p.sigma2 / p.gamma_hat ** 2
    v = _max_over_rho(_gaussian_objective(p.gamma_hat, inv_eff, lp, regime),
                      grid_size)
    if v <= 0.0:
        return None
    return v


# -- dispatch and penalties --------------------------------------------------

def _kind(model):
    return model.kind if isinstance(model, SignalModel) else model


def naive_rate(p, lp, model, regime=None):
    if _kind(model) == QAM:
        return naive_rate_qam(p, lp)
    return naive_rate_gaussian(p, lp, regime)


def rate_bound(p, lp, model, regime=None):
    if _kind(model) == QAM:
        return rate_bound_qam(p, lp)
    return rate_bound_gaussian(p, lp, regime)


def power_penalty(p, lp, model, regime=None, backoff=None, tol=1e-10,
                  max_iter=400):
    """Smallest ``mu`` with ``naive(gamma_hat / mu) == backoff``.

    Bisection in ``log(mu)`` over ``[1, 1e6]``; ``None`` when the back-off
    rate is infeasible or lies below ``naive(gamma_hat / 1e6)``.
    """
    if backoff is None:
        backoff = rate_bound(p, lp, model, regime)
    if backoff is None:
        return None

    def gap(mu):
        q = PosteriorSummary(p.gamma_hat / mu, 0.0)
        return naive_rate(q, lp, model, regime) - backoff

    if gap(1.0) <= tol:
        return 1.0
    if gap(MU_MAX) > 0.0:
        return None
    lo, hi = 0.0, math.log(MU_MAX)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g = gap(math.exp(mid))
        if abs(g) < tol:
            return math.exp(mid)
        if g > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return math.exp(0.5 * (lo + hi))


def penalties(p, lp, model, regime=None):
    """Naive rate, back-off bound, and the rate and power penalties."""
    naive = naive_rate(p, lp, model, regime)
    backoff = rate_bound(p, lp, model, regime)
    if backoff is None:
        return PenaltyReport(naive, None, None, None)
    delta = max(naive - backoff, 0.0)
    mu = power_penalty(p, lp, model, regime, backoff=backoff)
    return PenaltyReport(naive, backoff, delta, mu)


def floor_to_member(rate, rate_set):
    """Largest member of ``rate_set`` not above ``rate``, or ``None``."""
    if rate is None:
        return None
    members = [r for r in sorted(rate_set) if r <= rate]
    return members[-1] if members else None
