"""Packet-error laws and their SNR derivatives.

Two signalling models are supported:

* uncoded QAM, where each of the ``n`` symbols of a packet is decided
  independently with the exponential symbol-error approximation
  ``0.2 * exp(-1.5 * gamma / (2**R - 1))``;
* a random Gaussian codebook, whose packet error is the random-coding union
  bound minimized over the parameter ``rho`` in ``[0, 1]``.  The minimized
  bound is used as the true error law of the model.

SNR values are linear power ratios throughout; dB conversion happens only at
the I/O boundary via :func:`db_to_linear` and :func:`linear_to_db`.
Functions accept scalars or numpy arrays and broadcast.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._optimize import DEFAULT_GRID_SIZE, grid_golden_minimize

__all__ = [
    "QAM",
    "GAUSSIAN",
    "EPS_FLOOR",
    "SignalModel",
    "ErrorTerms",
    "db_to_linear",
    "linear_to_db",
    "qam_symbol_error",
    "qam_packet_error",
    "qam_packet_success",
    "qam_packet_error_dgamma",
    "qam_dgamma_from_error",
    "gaussian_exponent",
    "gaussian_packet_error_bound",
    "gaussian_packet_error_opt",
    "gaussian_error_dgamma",
    "error_terms",
    "packet_error",
    "packet_error_dgamma",
]

QAM = "qam"
GAUSSIAN = "gaussian"

LN2 = np.log(2.0)

# Smallest error probability allowed where a division by eps*(1-eps) follows.
EPS_FLOOR = 1e-300


def db_to_linear(db):
    """Convert dB to a linear power ratio."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a linear power ratio to dB."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SignalModel:
    """Which packet-error law applies.

    Attributes
    ----------
    kind : str
        ``"qam"`` or ``"gaussian"``.
    n : int
        Symbols per packet.
    rho_grid_size : int
        Grid points for the union-bound parameter search (Gaussian only).
    """

    kind: str
    n: int = 500
    rho_grid_size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if self.kind not in (QAM, GAUSSIAN):
            raise ValueError(f"unknown signal model {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.rho_grid_size < 2:
            raise ValueError("rho_grid_size must be at least 2")

    @classmethod
    def qam(cls, n=500):
        return cls(QAM, n)

    @classmethod
    def gaussian(cls, n=500, rho_grid_size=DEFAULT_GRID_SIZE):
        return cls(GAUSSIAN, n, rho_grid_size)


# -- uncoded QAM -------------------------------------------------------------

def _check_qam_rate(rate):
    rate = np.asarray(rate, dtype=float)
    if np.any(rate < 1.0):
        raise ValueError("QAM error law requires rate >= 1 bit/symbol")
    return rate


def _qam_slope(rate):
    return 1.5 / np.expm1(rate * LN2)


def qam_symbol_error(gamma, rate):
    """Symbol error probability ``0.2 exp(-1.5 gamma / (2^R - 1))``."""
    rate = _check_qam_rate(rate)
    return 0.2 * np.exp(-_qam_slope(rate) * np.asarray(gamma, dtype=float))


def qam_packet_success(gamma, rate, n):
    """Probability ``(1 - eps_k)^n`` that all ``n`` symbols are correct."""
    return np.exp(n * np.log1p(-qam_symbol_error(gamma, rate)))


def qam_packet_error(gamma, rate, n):
    """Packet error probability ``1 - (1 - eps_k)^n``."""
    return -np.expm1(n * np.log1p(-qam_symbol_error(gamma, rate)))


def qam_packet_error_dgamma(gamma, rate, n):
    """Chain-rule derivative of :func:`qam_packet_error` w.r.t. ``gamma``.

    ``-n c eps_k (1 - eps_k)^(n-1)`` with ``c = 1.5 / (2^R - 1)``.
    """
    rate = _check_qam_rate(rate)
    c = _qam_slope(rate)
    ek = qam_symbol_error(gamma, rate)
    return -n * c * ek * np.exp((n - 1) * np.log1p(-ek))


def qam_dgamma_from_error(eps, gamma, n):
    """Derivative expressed through the packet error itself.

    ``(1-eps) ((1-eps)^(-1/n) - 1) ln(5 (1 - (1-eps)^(1/n))) n / gamma``;
    undefined at ``gamma = 0``, where :func:`qam_packet_error_dgamma` applies.
    """
    eps = np.asarray(eps, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("factored derivative needs gamma > 0")
    log_surv = np.log1p(-eps) / n
    return (
        (1.0 - eps)
        * np.expm1(-log_surv)
        * np.log(-5.0 * np.expm1(log_surv))
        * n / gamma
    )


# -- random Gaussian codebook ------------------------------------------------

def gaussian_exponent(gamma, rate, n, rho):
    """Exponent ``n rho [R ln2 - 0.5 ln(1 + gamma/(1+rho))]`` of the bound."""
    gamma = np.asarray(gamma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    return n * rho * (rate * LN2 - 0.5 * np.log1p(gamma / (1.0 + rho)))


def gaussian_packet_error_bound(gamma, rate, n, rho):
    """Union bound on the packet error, clipped to 1."""
    rho = np.asarray(rho, dtype=float)
    if np.any((rho < 0) | (rho > 1)):
        raise ValueError("rho must lie in [0, 1]")
    return np.exp(np.minimum(gaussian_exponent(gamma, rate, n, rho), 0.0))


def gaussian_error_dgamma(gamma, rate, n, rho):
    """Derivative of the bound in ``gamma`` at fixed ``rho``.

    ``eps * (-n rho) / (2 (1 + rho + gamma))``; zero where the bound is
    clipped at 1.
    """
    gamma = np.asarray(gamma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    e = gaussian_exponent(gamma, rate, n, rho)
    d = np.exp(np.minimum(e, 0.0)) * (-n * rho) / (2.0 * (1.0 + rho + gamma))
    return np.where(e > 0, 0.0, d)


def _optimal_rho(gamma, rate, n, grid_size):
    g, r = np.broadcast_arrays(np.asarray(gamma, dtype=float),
                               np.asarray(rate, dtype=float))
    shape = g.shape
    g = g.ravel()
    r = r.ravel()
    rho, expo = grid_golden_minimize(
        lambda x: gaussian_exponent(g, r, n, x), g.size, grid_size=grid_size
    )
    return rho.reshape(shape), expo.reshape(shape)


def gaussian_packet_error_opt(gamma, rate, n, grid_size=DEFAULT_GRID_SIZE):
    """Tightest union bound over ``rho``.

    Returns
    -------
    bound, rho_star : ndarray or float
        The minimized bound and its minimizer (``rho_star = 0`` and
        ``bound = 1`` when the bound is vacuous for every ``rho``).
    """
    rho, expo = _optimal_rho(gamma, rate, n, grid_size)
    bound = np.exp(np.minimum(expo, 0.0))
    if rho.ndim == 0:
        return float(bound), float(rho)
    return bound, rho


# -- model dispatch ----------------------------------------------------------

class ErrorTerms(NamedTuple):
    """Error probability, its complement and derivative at one (gamma, R).

    ``survival`` is ``1 - eps`` computed without cancellation. ``clamped``
    marks entries where ``eps`` or ``survival`` hit :data:`EPS_FLOOR`.
    ``rho`` is the union-bound parameter in use (NaN for QAM).
    """

    eps: np.ndarray
    survival: np.ndarray
    deriv: np.ndarray
    rho: np.ndarray
    clamped: np.ndarray


def error_terms(gamma, rate, model, clamp=True):
    """Evaluate ``eps``, ``1 - eps`` and ``d eps / d gamma`` for a model.

    For the Gaussian model the derivative is taken with ``rho`` frozen at
    its per-(gamma, R) optimum.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SNR must be nonnegative")
    if model.kind == QAM:
        rate = _check_qam_rate(rate)
        ek = qam_symbol_error(gamma, rate)
        log_surv = model.n * np.log1p(-ek)
        eps = -np.expm1(log_surv)
        surv = np.exp(log_surv)
        deriv = qam_packet_error_dgamma(gamma, rate, model.n)
        rho = np.full(np.broadcast(gamma, rate).shape, np.nan)
    else:
        rate = np.asarray(rate, dtype=float)
        rho, expo = _optimal_rho(gamma, rate, model.n, model.rho_grid_size)
        expo = np.minimum(expo, 0.0)
        eps = np.exp(expo)
        surv = -np.expm1(expo)
        deriv = eps * (-model.n * rho) / (2.0 * (1.0 + rho + gamma))
    clamped = (eps < EPS_FLOOR) | (surv < EPS_FLOOR)
    if clamp:
        eps = np.clip(eps, EPS_FLOOR, None)
        surv = np.clip(surv, EPS_FLOOR, None)
    return ErrorTerms(eps, surv, deriv, rho, clamped)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def packet_error(gamma, rate, model):
    """Packet error probability under ``model`` (no clamping)."""
    if model.kind == QAM:
        return _scalar(qam_packet_error(gamma, rate, model.n))
    bound, _ = gaussian_packet_error_opt(gamma, rate, model.n,
                                         model.rho_grid_size)
    return _scalar(bound)


def packet_error_dgamma(gamma, rate, model):
    """Signed SNR derivative of :func:`packet_error`."""
    return _scalar(error_terms(gamma, rate, model, clamp=False).deriv)
