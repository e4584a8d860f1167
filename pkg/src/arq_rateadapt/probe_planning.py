"""Probing-duration lower bounds and sum-rate upper bounds.

The minimum probe length follows from requiring the Cramer-Rao bound at a
fixed probe rate to reach the effective-SNR threshold of the data model.
The sum-rate bound scans every split of a block of ``T`` packets into
probe and data parts.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from .error_models import (
    gaussian_packet_error_opt,
)
from .estimation_theory import min_variance_bound
from .rate_allocation import (
    PosteriorSummary,
    qam_threshold,
    rate_bound,
)

__all__ = [
    "ProbePlan",
    "SumRateBound",
    "tp_min_qam",
    "tp_min_gaussian",
    "qam_rate_for_error",
    "gaussian_rate_for_error",
    "sumrate_max",
]


@dataclass(frozen=True)
class ProbePlan:
    t_p: int
    probe_rate: float
    probe_error: float


@dataclass(frozen=True)
class SumRateBound:
    t_p_star: int
    rate_per_data_packet: float
    total: float
    block_length: int

    @property
    def normalized(self):
        return self.total / self.block_length


def tp_min_qam(gamma, gamma_hat, probe_error, lp):
    """Minimum number of QAM probe packets at probe error ``probe_error``.

    Real-valued; round up to get a packet count.
    """
    eps = float(probe_error)
    if not 0.0 < eps < 1.0:
        raise ValueError("probe_error must lie in (0, 1)")
    n = lp.n
    log_surv = math.log1p(-eps) / n
    grow = math.expm1(-log_surv)            # (1-eps)^(-1/n) - 1
    lg = math.log(-5.0 * math.expm1(log_surv))  # ln(5 (1 - (1-eps)^(1/n)))
    denom = (1.0 - eps) * grow ** 2 * lg ** 2 * (n * gamma_hat / gamma) ** 2
    return qam_threshold(lp) * eps / denom


def tp_min_gaussian(gamma, gamma_hat, probe_rate, lp, grid_size=None):
    """Minimum number of Gaussian-codebook probe packets (low-SNR regime).

    Returns ``None`` when the optimal union-bound parameter is 0, where the
    error bound is vacuous and carries no information.
    """
    kwargs = {} if grid_size is None else {"grid_size": grid_size}
    eps, rho = gaussian_packet_error_opt(gamma, probe_rate, lp.n, **kwargs)
    if rho <= 0.0 or eps >= 1.0:
        return None
    return (8.0 * lp.alpha * (1.0 - eps) * (1.0 + rho + gamma) ** 2
            / (eps * (lp.n * rho * gamma_hat) ** 2))


def qam_rate_for_error(gamma, probe_error, n):
    """Continuous QAM rate whose packet error at ``gamma`` is ``probe_error``."""
    ek = -math.expm1(math.log1p(-probe_error) / n)
    if not 0.0 < ek < 0.2:
        raise ValueError("probe_error not reachable by the QAM error law")
    c = -math.log(5.0 * ek) / gamma   # 1.5 / (2^R - 1)
    return math.log2(1.0 + 1.5 / c)


def gaussian_rate_for_error(gamma, probe_error, n, grid_size=None):
    """Rate whose minimized Gaussian bound at ``gamma`` equals ``probe_error``."""
    kwargs = {} if grid_size is None else {"grid_size": grid_size}
    target = math.log(probe_error)
    cap = 0.5 * math.log2(1.0 + gamma)

    def g(r):
        eps, _ = gaussian_packet_error_opt(gamma, r, n, **kwargs)
        return math.log(eps) - target

    # bound is 1 at capacity and decreases towards R = 0
    return brentq(g, 1e-12, cap, xtol=1e-15, rtol=1e-14)


def _sumrate_term(gamma, gamma_hat, t_p, lp, model, regime):
    sigma2 = min_variance_bound(gamma, t_p, lp.rate_set, model)
    if math.isinf(sigma2):
        return None
    rate = rate_bound(PosteriorSummary(gamma_hat, sigma2), lp, model, regime)
    return rate


def sumrate_max(gamma, lp, model, regime=None, block_length=None,
                gamma_hat=None, workers=1):
    """Best split of a block into probe and data packets.

    For each probe length ``T_p`` in ``1..T-1`` the genie-rate variance
    bound feeds the back-off rate bound (with ``gamma_hat = gamma`` unless
    given); the returned split maximizes ``(T - T_p) * rate`` with ties
    resolved to the smallest ``T_p``.  ``total`` is 0 when no split yields a
    feasible rate.
    """
    T = lp.block_length if block_length is None else block_length
    if T < 2:
        raise ValueError("block length must be at least 2")
    gh = gamma if gamma_hat is None else gamma_hat
    tps = range(1, T)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rates = list(pool.map(
                lambda tp: _sumrate_term(gamma, gh, tp, lp, model, regime), tps))
    else:
        rates = [_sumrate_term(gamma, gh, tp, lp, model, regime) for tp in tps]
    best: Optional[SumRateBound] = None
    for tp, rate in zip(tps, rates):
        if rate is None:
            continue
        total = (T - tp) * rate
        if best is None or total > best.total:
            best = SumRateBound(tp, rate, total, T)
    if best is None:
        return SumRateBound(0, 0.0, 0.0, T)
    return best
