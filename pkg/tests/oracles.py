"""High-precision reference evaluations shared by several test modules."""

import mpmath as mp
import numpy as np

from arq_rateadapt.error_models import (
    SignalModel,
    gaussian_error_dgamma,
    gaussian_packet_error_opt,
    packet_error_dgamma,
)


def mp_log_diff(logf, x, h):
    x, h = mp.mpf(x), mp.mpf(h)
    return (logf(x + h) - logf(x - h)) / (2 * h)


def derivative_fd_errors(points=1000, seed=2024, n=500):
    """Relative errors of analytic derivatives against 50-digit central differences.

    Differences are taken of log(eps) or log(1 - eps), whichever is far
    from zero, so neither eps near 0 nor eps near 1 cancels.  Points where
    the Gaussian bound is clipped at 1, or where the derivative lies below
    the double range, are skipped.
    """
    mp.mp.dps = 50
    rng = np.random.default_rng(seed)
    qam = SignalModel.qam(n)
    errors = []
    for _ in range(points):
        g = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e4))))
        if rng.random() < 0.5:
            r = float(rng.uniform(1, 10))
            c = mp.mpf(1.5) / (2 ** mp.mpf(r) - 1)
            log_s = lambda x: n * mp.log1p(-mp.mpf("0.2") * mp.exp(-c * x))
            log_e = lambda x: mp.log(-mp.expm1(log_s(x)))
            d = packet_error_dgamma(g, r, qam)
        else:
            rho = float(rng.uniform(0.01, 1))
            r = float(rng.uniform(0.01, 5))
            expo = lambda x: n * rho * (r * mp.log(2) - mp.log(1 + x / (1 + rho)) / 2)
            if expo(mp.mpf(g)) > 0:
                continue
            log_s = lambda x: mp.log(-mp.expm1(expo(x)))
            log_e = expo
            d = float(gaussian_error_dgamma(g, r, n, rho))
        eps = mp.exp(log_e(mp.mpf(g)))
        h = g * 1e-6
        if eps < 0.5:
            fd = eps * mp_log_diff(log_e, g, h)
        else:
            fd = -mp.exp(log_s(mp.mpf(g))) * mp_log_diff(log_s, g, h)
        fd = float(fd)
        if abs(fd) < 1e-290:
            continue
        errors.append(abs(d - fd) / abs(fd))
    return np.array(errors)


def qam_composition_oracle(gamma, gamma_hat, eps, lp):
    """Smallest real T_p with crlb_fixed_rate <= gamma_hat^2 / threshold.

    The rate hitting ``eps`` and the chain-rule derivative are evaluated
    at 40 digits, independent of the closed form under test.
    """
    mp.mp.dps = 40
    n = lp.n
    g, gh, e = mp.mpf(gamma), mp.mpf(gamma_hat), mp.mpf(eps)
    ek = 1 - (1 - e) ** (mp.mpf(1) / n)
    c = -mp.log(5 * ek) / g                  # 1.5 / (2^R - 1)
    deriv = -n * c * ek * (1 - ek) ** (n - 1)
    threshold = 2 * (mp.mpf(lp.alpha) + mp.log(mp.mpf(n) / 10))
    return float(threshold * e * (1 - e) / (deriv ** 2 * gh ** 2))


def gaussian_composition_oracle(gamma, gamma_hat, rate, lp):
    eps, rho = gaussian_packet_error_opt(gamma, rate, lp.n)
    deriv = eps * (-lp.n * rho) / (2 * (1 + rho + gamma))
    return 2 * lp.alpha * eps * (1 - eps) / (deriv ** 2 * gamma_hat ** 2)
