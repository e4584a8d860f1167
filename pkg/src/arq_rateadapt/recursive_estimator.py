"""Recursive SNR estimation from ACK/NACK feedback during probing.

At each packet ``t >= 2`` the estimate moves by a stochastic-approximation
step driven by the latest feedback,

    g_t = g_{t-1} + (F_{t-1} - eps(g_{t-1}, R_{t-1}))
                    / ((t-1)**beta * eps'(g_{t-1}, R_{t-1})),

and the next probe rate is the member of the rate set carrying the most
Fisher information at the new estimate.  ``beta = 1`` is the asymptotically
efficient form; smaller values trade steady-state variance for speed.

The update is implemented once, vectorized over a batch of independent
trajectories (:func:`run_batch`); the single-trajectory API runs the same
code with a batch of one.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .error_models import SignalModel, error_terms
from .estimation_theory import fisher_from_terms

__all__ = [
    "GAMMA_MIN",
    "GAMMA_MAX",
    "DERIV_FLOOR",
    "EstimatorState",
    "TrajectoryRecord",
    "Trajectory",
    "BatchResult",
    "init",
    "update",
    "step",
    "best_rates",
    "run_probe",
    "run_batch",
]

GAMMA_MIN = 1e-3
GAMMA_MAX = 1e4
DERIV_FLOOR = 1e-12


@dataclass(frozen=True)
class EstimatorState:
    t: int
    gamma_hat: float
    current_rate: float
    beta: float
    rate_set: Sequence[float]
    model: SignalModel


class TrajectoryRecord(NamedTuple):
    t: int
    rate: float
    feedback: int
    gamma_hat: float
    skipped: bool = False


class Trajectory(list):
    """Records ``(t, rate, feedback, gamma_hat, skipped)`` for one probe run.

    ``gamma_hat`` in record ``t`` is the estimate that selected ``rate``.
    """

    @property
    def rates(self):
        return np.array([r.rate for r in self])

    @property
    def estimates(self):
        return np.array([r.gamma_hat for r in self])

    @property
    def feedback(self):
        return np.array([r.feedback for r in self], dtype=np.int8)


def init(rate0, gamma_hat0, beta, rate_set, model):
    """Estimator state at ``t = 1``."""
    rates = tuple(sorted(float(r) for r in rate_set))
    if not rates:
        raise ValueError("rate_set is empty")
    if float(rate0) not in rates:
        raise ValueError(f"initial rate {rate0} is not in the rate set")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if not GAMMA_MIN <= gamma_hat0 <= GAMMA_MAX:
        raise ValueError("initial estimate outside the clamp range")
    return EstimatorState(1, float(gamma_hat0), float(rate0), float(beta),
                          rates, model)


def best_rates(gamma_hat, rate_set, model):
    """Fisher-information argmax over ``rate_set`` for each estimate.

    ``rate_set`` must be sorted so that ties go to the smallest rate.
    """
    g = np.asarray(gamma_hat, dtype=float)[..., None]
    rates = np.asarray(rate_set, dtype=float)
    terms = error_terms(g, rates, model)
    phi = fisher_from_terms(terms.eps, terms.survival, terms.deriv)
    return rates[np.argmax(phi, axis=-1)]


def _advance(gamma_hat, rate, feedback, t, beta, model):
    """Estimate update for packet index ``t`` (the new index)."""
    terms = error_terms(gamma_hat, rate, model, clamp=False)
    skipped = np.abs(terms.deriv) < DERIV_FLOOR
    gain = float(t - 1) ** beta
    with np.errstate(divide="ignore", invalid="ignore"):
        stepped = gamma_hat + (feedback - terms.eps) / (gain * terms.deriv)
    new = np.where(skipped, gamma_hat, np.clip(stepped, GAMMA_MIN, GAMMA_MAX))
    return new, skipped


def step(state, feedback):
    """One update; returns ``(new_state, skipped)``.

    ``skipped`` is true when ``|eps'|`` fell below :data:`DERIV_FLOOR` and
    the estimate was left unchanged.
    """
    if feedback not in (0, 1):
        raise ValueError("feedback must be 0 (ACK) or 1 (NACK)")
    t = state.t + 1
    g, skipped = _advance(np.array([state.gamma_hat]),
                          np.array([state.current_rate]),
                          np.array([feedback]), t, state.beta, state.model)
    rate = best_rates(g, state.rate_set, state.model)
    new = replace(state, t=t, gamma_hat=float(g[0]), current_rate=float(rate[0]))
    return new, bool(skipped[0])


def update(state, feedback):
    """Apply feedback for packet ``t`` and move to packet ``t + 1``."""
    return step(state, feedback)[0]


def run_probe(state, channel, t_p):
    """Probe for ``t_p`` packets, drawing feedback from ``channel``.

    Returns the final state (at ``t = state.t + t_p - 1``) and the trajectory.
    """
    if int(t_p) != t_p or t_p < 1:
        raise ValueError("t_p must be a positive integer")
    traj = Trajectory()
    skipped = False
    for i in range(t_p):
        f = channel.draw_feedback(state.current_rate)
        traj.append(TrajectoryRecord(state.t, state.current_rate, f,
                                     state.gamma_hat, skipped))
        if i < t_p - 1:
            state, skipped = step(state, f)
    return state, traj


class BatchResult(NamedTuple):
    final_estimate: np.ndarray          # (trials,)
    final_rate: np.ndarray              # (trials,)
    rates: np.ndarray                   # (trials, t_p), rate used at packet t
    estimates: np.ndarray               # (trials, t_p) or empty
    feedback: np.ndarray                # (trials, t_p)
    skipped: np.ndarray                 # (trials, t_p)


def run_batch(gamma, model, rate_set, beta, uniforms, gamma_hat0, rate0,
              keep_estimates=True):
    """Run independent probe trajectories in lockstep.

    Parameters
    ----------
    gamma : float
        True SNR (constant over the block).
    uniforms : ndarray, shape (trials, t_p)
        Uniform draws; packet ``t`` of trial ``i`` is a NACK iff
        ``uniforms[i, t-1] < eps(gamma, R_t)``.
    """
    u = np.atleast_2d(np.asarray(uniforms, dtype=float))
    trials, t_p = u.shape
    rates = np.asarray(sorted(float(r) for r in rate_set))
    # true error per rate; feedback only ever needs these |R| values
    true_eps = np.asarray(error_terms(np.full(rates.shape, float(gamma)), rates,
                                      model, clamp=False).eps)

    g = np.full(trials, float(gamma_hat0))
    r_idx = np.full(trials, int(np.flatnonzero(rates == float(rate0))[0]))
    rate_hist = np.empty((trials, t_p))
    fb_hist = np.empty((trials, t_p), dtype=np.int8)
    skip_hist = np.zeros((trials, t_p), dtype=bool)
    est_hist = np.empty((trials, t_p)) if keep_estimates else np.empty((0, 0))

    for k in range(t_p):
        r = rates[r_idx]
        f = (u[:, k] < true_eps[r_idx]).astype(np.int8)
        rate_hist[:, k] = r
        fb_hist[:, k] = f
        if keep_estimates:
            est_hist[:, k] = g
        if k == t_p - 1:
            break
        g, skipped = _advance(g, r, f, k + 2, beta, model)
        skip_hist[:, k + 1] = skipped
        r_idx = np.searchsorted(rates, best_rates(g, rates, model))

    return BatchResult(g, rates[r_idx], rate_hist, est_hist, fb_hist, skip_hist)
