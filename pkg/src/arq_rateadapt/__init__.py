"""ACK/NACK-feedback SNR estimation and rate adaptation.

Modules
-------
error_models         packet-error laws for uncoded QAM and Gaussian codebooks
estimation_theory    score, Fisher information, Cramer-Rao bounds
rate_allocation      naive and back-off rates, rate and power penalties
probe_planning       minimum probe length, sum-rate bounds
recursive_estimator  recursive stochastic-approximation SNR estimator
mc_sim               seeded channel simulation and Monte Carlo runners
cli                  ``arq-rateadapt`` command line
"""

__version__ = "0.1.0"

from .error_models import SignalModel, db_to_linear, linear_to_db  # noqa: E402
from .rate_allocation import LinkParams, PosteriorSummary  # noqa: E402

__all__ = ["SignalModel", "LinkParams", "PosteriorSummary",
           "db_to_linear", "linear_to_db", "__version__"]
