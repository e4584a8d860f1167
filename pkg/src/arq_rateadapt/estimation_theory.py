"""Score, Fisher information and Cramer-Rao bounds for ACK/NACK feedback.

A single feedback bit ``F`` is Bernoulli with NACK probability
``eps(gamma, R)``.  Its score with respect to ``gamma`` is

    V = eps' / (1 - eps) * (F / eps - 1)

and its Fisher information is ``eps'^2 / (eps (1 - eps))``.  The bound on
the variance of any unbiased estimator built from a sequence of feedbacks
is the reciprocal of the summed information.
"""

import math

import numpy as np

from .error_models import error_terms

__all__ = [
    "ACK",
    "NACK",
    "INFINITE_BOUND",
    "score",
    "score_from_terms",
    "fisher_info",
    "fisher_from_terms",
    "crlb",
    "crlb_fixed_rate",
    "genie_probe_rate",
    "min_variance_bound",
]

ACK = 0
NACK = 1

# Returned instead of raising when the summed information is zero.
INFINITE_BOUND = math.inf


def score_from_terms(eps, survival, deriv, f):
    """Score given the error probability terms directly."""
    return deriv / survival * (f / eps - 1.0)


def fisher_from_terms(eps, survival, deriv):
    """Information ``deriv^2 / (eps * survival)``, zero where ``deriv`` is."""
    eps = np.asarray(eps, dtype=float)
    deriv = np.asarray(deriv, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # ratios first: deriv**2 underflows long before phi does
        phi = (deriv / eps) * (deriv / survival)
    return np.where(deriv == 0.0, 0.0, phi)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def score(gamma, rate, f, model, clamp=True):
    """Derivative of the log-likelihood of feedback ``f`` at ``gamma``.

    Raises
    ------
    ValueError
        If ``f`` is not 0/1, or if the feedback distribution is degenerate
        and ``clamp`` is disabled.
    """
    f = np.asarray(f)
    if not np.all((f == 0) | (f == 1)):
        raise ValueError("feedback must be 0 (ACK) or 1 (NACK)")
    terms = error_terms(gamma, rate, model, clamp=clamp)
    if not clamp and np.any((terms.eps <= 0) | (terms.survival <= 0)):
        raise ValueError("degenerate feedback distribution (eps in {0, 1})")
    return _out(score_from_terms(terms.eps, terms.survival, terms.deriv, f))


def fisher_info(gamma, rate, model):
    """Per-feedback Fisher information ``Phi(gamma, R)``."""
    t = error_terms(gamma, rate, model)
    return _out(fisher_from_terms(t.eps, t.survival, t.deriv))


def crlb(gamma, rates, model):
    """Variance bound from feedback collected at the given rate sequence.

    Returns :data:`INFINITE_BOUND` when no rate carries information.
    """
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    if rates.size == 0:
        raise ValueError("need at least one rate")
    # exactly rounded, so appending a rate can never raise the bound
    total = math.fsum(np.atleast_1d(fisher_info(gamma, rates, model)))
    if not total > 0.0:
        return INFINITE_BOUND
    return 1.0 / total


def crlb_fixed_rate(gamma, rate, t_p, model):
    """Bound ``eps (1 - eps) / (T_p eps'^2)`` for a constant probe rate."""
    if int(t_p) != t_p or t_p < 1:
        raise ValueError("t_p must be a positive integer")
    phi = fisher_info(gamma, rate, model)
    if not phi > 0.0:
        return INFINITE_BOUND
    return 1.0 / (t_p * phi)


def genie_probe_rate(gamma, rate_set, model):
    """Member of ``rate_set`` maximizing the Fisher information at ``gamma``.

    Ties resolve to the smallest maximizing rate.
    """
    rates = np.sort(np.asarray(rate_set, dtype=float))
    if rates.size == 0:
        raise ValueError("rate_set is empty")
    phi = np.atleast_1d(fisher_info(gamma, rates, model))
    return float(rates[int(np.argmax(phi))])


def min_variance_bound(gamma, t_p, rate_set, model):
    """Smallest bound over all rate sequences of length ``t_p``.

    Achieved by probing at the genie rate throughout.
    """
    rate = genie_probe_rate(gamma, rate_set, model)
    return crlb_fixed_rate(gamma, rate, t_p, model)
