"""Seeded ACK/NACK channel simulation and Monte Carlo experiment runners.

Randomness is counter based: trial ``i`` of an experiment with master seed
``s`` owns a Philox stream keyed by ``(s, i)``, and its ``t``-th uniform
decides the feedback of packet ``t``.  Any split of trials across workers
therefore reproduces the same numbers bit for bit.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import recursive_estimator as estimator
from .error_models import SignalModel, db_to_linear, packet_error
from .estimation_theory import fisher_info, genie_probe_rate

__all__ = [
    "substream",
    "trial_uniforms",
    "ChannelSim",
    "McConfig",
    "McReport",
    "TrajectoryConfig",
    "QAM_RATES",
    "GAUSSIAN_RATES",
    "qam_trajectory_config",
    "gaussian_trajectory_config",
    "run_trials",
    "run_efficiency_experiment",
    "run_trajectory_experiment",
    "lock_time",
]

QAM_RATES = tuple(float(r) for r in range(1, 11))
GAUSSIAN_RATES = tuple(round(0.05 * k, 10) for k in range(1, 101))


def substream(seed, trial):
    """Generator for one trial, fully determined by ``(seed, trial)``."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def trial_uniforms(seed, trials, t_p):
    """Stack the first ``t_p`` uniforms of each trial's stream."""
    trials = list(trials)
    out = np.empty((len(trials), t_p))
    for row, i in enumerate(trials):
        out[row] = substream(seed, i).random(t_p)
    return out


@dataclass
class ChannelSim:
    """Block-fading channel returning ACK (0) / NACK (1) feedback."""

    true_gamma: float
    model: SignalModel
    seed: int = 0
    trial: int = 0

    def __post_init__(self):
        if self.true_gamma < 0:
            raise ValueError("true_gamma must be nonnegative")
        self._rng = substream(self.seed, self.trial)
        self._cache = {}

    def error_probability(self, rate):
        if rate not in self._cache:
            self._cache[rate] = packet_error(self.true_gamma, rate, self.model)
        return self._cache[rate]

    def draw_feedback(self, rate):
        """NACK with probability ``eps(true_gamma, rate)``."""
        return int(self._rng.random() < self.error_probability(rate))


@dataclass
class McConfig:
    gamma_db: float = 10.0
    model: SignalModel = field(default_factory=SignalModel.qam)
    rate_set: Sequence[float] = QAM_RATES
    beta: float = 1.0
    t_p: int = 5000
    trials: int = 500
    seed: int = 0
    gamma_hat0_db: float = 3.0
    rate0: float = 1.0
    workers: int = 1

    @property
    def gamma(self):
        return float(db_to_linear(self.gamma_db))


@dataclass
class McReport:
    trials: int
    t_p: int
    gamma: float
    genie_rate: float
    fisher_at_genie: float
    estimate_mean: float
    estimate_variance: float
    normalized_variance: float
    ks_statistic: float
    ks_pvalue: float
    final_rate_is_genie: float
    degenerate: bool

    def to_dict(self):
        return asdict(self)


def run_trials(cfg, keep_estimates=False):
    """Run ``cfg.trials`` trajectories; returns per-trial arrays in trial order.

    Trials are split into contiguous chunks across ``cfg.workers`` threads;
    each chunk reads its own substreams, so the result does not depend on
    the worker count.
    """
    rates = tuple(sorted(float(r) for r in cfg.rate_set))
    g0 = float(db_to_linear(cfg.gamma_hat0_db))
    chunks = np.array_split(np.arange(cfg.trials), max(1, cfg.workers))
    chunks = [c for c in chunks if c.size]

    def work(idx):
        u = trial_uniforms(cfg.seed, idx, cfg.t_p)
        return estimator.run_batch(cfg.gamma, cfg.model, rates, cfg.beta, u,
                                   g0, cfg.rate0, keep_estimates=keep_estimates)

    if len(chunks) > 1:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return estimator.BatchResult(*(np.concatenate(a) for a in zip(*parts)))


def run_efficiency_experiment(cfg):
    """Variance of the final estimate against the genie-rate Fisher bound."""
    res = run_trials(cfg)
    gamma = cfg.gamma
    genie = genie_probe_rate(gamma, cfg.rate_set, cfg.model)
    phi = fisher_info(gamma, genie, cfg.model)
    est = res.final_estimate
    mean = float(np.mean(est))
    degenerate = cfg.trials < 2
    var = 0.0 if degenerate else float(np.var(est, ddof=1))
    # error about the true SNR, scaled to unit variance under efficiency
    z = (est - gamma) * math.sqrt(cfg.t_p * phi)
    if degenerate:
        ks, p = math.nan, math.nan
    else:
        ks, p = stats.kstest(z, "norm")
    return McReport(
        trials=cfg.trials,
        t_p=cfg.t_p,
        gamma=gamma,
        genie_rate=genie,
        fisher_at_genie=float(phi),
        estimate_mean=mean,
        estimate_variance=var,
        normalized_variance=cfg.t_p * var * float(phi),
        ks_statistic=float(ks),
        ks_pvalue=float(p),
        final_rate_is_genie=float(np.mean(res.final_rate == genie)),
        degenerate=degenerate,
    )


@dataclass
class TrajectoryConfig:
    gamma_db: float
    model: SignalModel
    rate_set: Sequence[float]
    gamma_hat0_db: float
    rate0: float
    beta: float = 0.5
    t_p: int = 500
    seed: int = 0
    trial: int = 0


def qam_trajectory_config(gamma_db, beta=0.5, t_p=500, seed=0, trial=0, n=500):
    return TrajectoryConfig(gamma_db, SignalModel.qam(n), QAM_RATES, 3.0, 1.0,
                            beta, t_p, seed, trial)


def gaussian_trajectory_config(gamma_db, beta=0.5, t_p=500, seed=0, trial=0,
                               n=500, rho_grid_size=129):
    return TrajectoryConfig(gamma_db, SignalModel.gaussian(n, rho_grid_size),
                            GAUSSIAN_RATES, 0.0, 0.5, beta, t_p, seed, trial)


def run_trajectory_experiment(configs):
    """One trajectory per config, each on its own ``(seed, trial)`` stream."""
    out = []
    for cfg in configs:
        state = estimator.init(cfg.rate0, float(db_to_linear(cfg.gamma_hat0_db)),
                               cfg.beta, cfg.rate_set, cfg.model)
        chan = ChannelSim(float(db_to_linear(cfg.gamma_db)), cfg.model,
                          cfg.seed, cfg.trial)
        _, traj = estimator.run_probe(state, chan, cfg.t_p)
        out.append(traj)
    return out


def lock_time(rates, target):
    """First packet index (1-based) whose rate equals ``target``; ``None``
    if never reached.  Accepts a 1-D or 2-D (trials, t_p) array."""
    rates = np.asarray(rates)
    hit = rates == target
    first = np.argmax(hit, axis=-1) + 1
    reached = hit.any(axis=-1)
    if rates.ndim == 1:
        return int(first) if reached else None
    return np.where(reached, first, -1)
