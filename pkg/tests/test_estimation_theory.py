import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arq_rateadapt.error_models import SignalModel, db_to_linear, error_terms
from arq_rateadapt.estimation_theory import (
    INFINITE_BOUND,
    crlb,
    crlb_fixed_rate,
    fisher_from_terms,
    fisher_info,
    genie_probe_rate,
    min_variance_bound,
    score,
    score_from_terms,
)

QAM = SignalModel.qam(500)
GAUSS = SignalModel.gaussian(500)
QAM_RATES = tuple(float(r) for r in range(1, 11))


def two_point_moments(eps, surv, deriv):
    """Mean and variance of the score by enumerating f in {0, 1}."""
    v1 = score_from_terms(eps, surv, deriv, 1)
    v0 = score_from_terms(eps, surv, deriv, 0)
    mean = eps * v1 + surv * v0
    var = eps * v1 ** 2 + surv * v0 ** 2 - mean ** 2
    return mean, var, v0, v1


def test_score_worked_example():
    assert score_from_terms(0.5, 0.5, -0.1, 1) == pytest.approx(-0.2)
    assert score_from_terms(0.5, 0.5, -0.1, 0) == pytest.approx(0.2)
    mean, var, _, _ = two_point_moments(0.5, 0.5, -0.1)
    assert mean == pytest.approx(0.0, abs=1e-15)
    assert var == pytest.approx(0.04, rel=1e-12, abs=0)
    assert float(fisher_from_terms(0.5, 0.5, -0.1)) == pytest.approx(0.04, rel=1e-12, abs=0)


def test_crlb_worked_examples():
    phi = float(fisher_from_terms(0.5, 0.5, -0.1))
    assert 1.0 / (10 * phi) == pytest.approx(2.5)
    assert 1.0 / (1 * phi) == pytest.approx(25.0)


def test_score_rejects_bad_feedback():
    with pytest.raises(ValueError):
        score(10.0, 2.0, 2, QAM)


def test_score_degenerate_without_clamp():
    # eps underflows to exactly 0 at very high SNR
    with pytest.raises(ValueError):
        score(1e4, 1.0, 0, QAM, clamp=False)
    assert math.isfinite(score(1e4, 1.0, 0, QAM))


def grid_points():
    gammas = db_to_linear(np.linspace(-5, 30, 15))
    out = []
    for g in gammas:
        for r in QAM_RATES:
            out.append((QAM, g, r))
        for r in np.linspace(0.05, 3.0, 12):
            out.append((GAUSS, g, r))
    return out


@pytest.mark.parametrize("model", [QAM, GAUSS], ids=["qam", "gaussian"])
def test_zero_mean_score_and_information_identity(model):
    for m, g, r in grid_points():
        if m is not model:
            continue
        t = error_terms(g, r, model)
        if not (1e-250 < t.eps < 1.0 and t.deriv != 0.0):
            continue
        mean, var, v0, v1 = two_point_moments(t.eps, t.survival, t.deriv)
        scale = max(abs(v0), abs(v1))
        assert abs(mean) <= 1e-12 * scale
        phi = fisher_info(g, r, model)
        assert var == pytest.approx(phi, rel=1e-12, abs=0)


def test_score_monte_carlo_variance():
    rng = np.random.default_rng(20240101)
    g, r = 10.0, 2.0
    eps = error_terms(g, r, QAM).eps
    f = (rng.random(100_000) < eps).astype(int)
    v = score(g, r, f, QAM)
    phi = fisher_info(g, r, QAM)
    assert np.var(v) == pytest.approx(phi, rel=0.05, abs=0)


def test_fisher_vanishes_at_high_snr():
    assert fisher_info(1e4, 1.0, QAM) < 1e-100
    assert fisher_info(db_to_linear(30), 1.0, QAM) < fisher_info(db_to_linear(20), 1.0, QAM)


def assert_unimodal(values):
    v = np.asarray(values)
    # rising then falling; plateaus of exact zeros allowed at the edges
    peak = int(np.argmax(v))
    assert np.all(np.diff(v[: peak + 1]) >= 0)
    assert np.all(np.diff(v[peak:]) <= 0)


@pytest.mark.parametrize("gamma_db", [0.0, 10.0, 20.0, 30.0])
def test_fisher_unimodal_in_rate_qam(gamma_db):
    rates = np.linspace(1.0, 12.0, 400)
    assert_unimodal(fisher_info(db_to_linear(gamma_db), rates, QAM))


@pytest.mark.parametrize("gamma_db", [-5.0, 0.0, 10.0])
def test_fisher_unimodal_in_rate_gaussian(gamma_db):
    g = db_to_linear(gamma_db)
    rates = np.linspace(0.01, 0.5 * math.log2(1 + g), 200)
    assert_unimodal(fisher_info(g, rates, GAUSS))


def test_crlb_matches_fixed_rate():
    g = db_to_linear(10)
    for r in (1.0, 2.0, 4.0):
        assert crlb(g, [r] * 7, QAM) == pytest.approx(crlb_fixed_rate(g, r, 7, QAM), rel=1e-12, abs=0)
    assert crlb_fixed_rate(g, 2.0, 20, QAM) == pytest.approx(
        0.5 * crlb_fixed_rate(g, 2.0, 10, QAM), rel=1e-12)


def test_crlb_infinite_when_uninformative():
    assert crlb(1e4, [1.0, 1.0], QAM) == INFINITE_BOUND
    assert crlb_fixed_rate(1e4, 1.0, 3, QAM) == INFINITE_BOUND
    with pytest.raises(ValueError):
        crlb(10.0, [], QAM)
    with pytest.raises(ValueError):
        crlb_fixed_rate(10.0, 2.0, 0, QAM)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(QAM_RATES), min_size=1, max_size=8),
       st.sampled_from(QAM_RATES), st.floats(min_value=0.0, max_value=25.0))
def test_crlb_weakly_decreases_when_rates_appended(rates, extra, gamma_db):
    g = db_to_linear(gamma_db)
    before = crlb(g, rates, QAM)
    after = crlb(g, rates + [extra], QAM)
    assert after <= before


def test_genie_rate_matches_exhaustive_scan():
    g = db_to_linear(10)
    phis = [fisher_info(g, r, QAM) for r in QAM_RATES]
    best = QAM_RATES[max(range(len(phis)), key=lambda i: (phis[i], -i))]
    assert genie_probe_rate(g, QAM_RATES, QAM) == best == 2.0
    assert genie_probe_rate(db_to_linear(20), QAM_RATES, QAM) == 5.0


def test_genie_singleton_and_order_invariance():
    assert genie_probe_rate(10.0, [7.0], QAM) == 7.0
    g = db_to_linear(15)
    assert genie_probe_rate(g, QAM_RATES[::-1], QAM) == genie_probe_rate(g, QAM_RATES, QAM)
    with pytest.raises(ValueError):
        genie_probe_rate(g, [], QAM)


def test_genie_tie_goes_to_smallest_rate():
    # every rate is uninformative here, so the argmax is a tie
    assert genie_probe_rate(1e4, [3.0, 1.0, 2.0], QAM) == 1.0


@pytest.mark.parametrize("gamma_db", [5.0, 10.0, 20.0])
def test_min_variance_bound_optimality(gamma_db):
    g = db_to_linear(gamma_db)
    genie = genie_probe_rate(g, QAM_RATES, QAM)
    mvb = min_variance_bound(g, 10, QAM_RATES, QAM)
    assert mvb == crlb_fixed_rate(g, genie, 10, QAM)
    for r in QAM_RATES:
        assert mvb <= crlb_fixed_rate(g, r, 10, QAM)


@pytest.mark.parametrize("model,rates,gamma_db", [
    (QAM, (1.0, 2.0, 3.0, 4.0), 10.0),
    (QAM, (2.0, 4.0, 6.0, 8.0), 20.0),
    (GAUSS, (0.2, 0.5, 1.0, 1.5), 5.0),
])
def test_brute_force_sequences_confirm_genie(model, rates, gamma_db):
    g = db_to_linear(gamma_db)
    for t_p in (1, 2, 3):
        best = min(crlb(g, list(seq), model)
                   for seq in itertools.product(rates, repeat=t_p))
        assert min_variance_bound(g, t_p, rates, model) == pytest.approx(best, rel=1e-12, abs=0)
