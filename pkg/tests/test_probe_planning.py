import numpy as np
import pytest

from oracles import gaussian_composition_oracle, qam_composition_oracle

from arq_rateadapt.error_models import (
    SignalModel,
    db_to_linear,
    gaussian_packet_error_opt,
    qam_packet_error,
)
from arq_rateadapt.probe_planning import (
    gaussian_rate_for_error,
    qam_rate_for_error,
    sumrate_max,
    tp_min_gaussian,
    tp_min_qam,
)
from arq_rateadapt.rate_allocation import (
    LOW,
    LinkParams,
    PosteriorSummary,
    naive_rate_qam,
)

LP = LinkParams.from_target_error(1e-3, n=500)
QAM = SignalModel.qam(500)


def test_tp_min_qam_composition_grid():
    gammas = db_to_linear(np.linspace(0.0, 30.0, 20))
    errors = np.geomspace(1e-4, 0.3, 20)
    for g in gammas:
        for e in errors:
            gh = 0.8 * g
            assert tp_min_qam(g, gh, e, LP) == pytest.approx(
                qam_composition_oracle(g, gh, e, LP), rel=1e-9)


def test_tp_min_gaussian_composition_grid():
    gammas = db_to_linear(np.linspace(-10.0, 0.0, 20))
    errors = np.geomspace(1e-4, 0.3, 20)
    for g in gammas:
        for e in errors:
            r = gaussian_rate_for_error(g, e, LP.n)
            gh = 1.1 * g
            assert tp_min_gaussian(g, gh, r, LP) == pytest.approx(
                gaussian_composition_oracle(g, gh, r, LP), rel=1e-9)


def test_tp_min_qam_regression_value():
    # 40-digit evaluation at eps = 0.1, gamma_hat = gamma
    assert tp_min_qam(10.0, 10.0, 0.1, LP) == pytest.approx(4.607466477417638, rel=1e-12, abs=0)
    assert round(tp_min_qam(10.0, 10.0, 0.1, LP), 1) == 4.6


def test_tp_min_qam_domain():
    for e in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            tp_min_qam(10.0, 10.0, e, LP)


@pytest.mark.parametrize("eps", np.geomspace(1e-3, 0.2, 12))
def test_tp_min_qam_roughly_inverse_in_error(eps):
    ratio = tp_min_qam(10.0, 10.0, eps / 10, LP) / tp_min_qam(10.0, 10.0, eps, LP)
    assert 5.0 <= ratio <= 20.0


def loglog_slope(eps, tp):
    return float(np.polyfit(np.log(eps), np.log(tp), 1)[0])


def test_tp_min_slopes():
    eps = np.geomspace(1e-3, 0.1, 30)
    s_qam = loglog_slope(eps, [tp_min_qam(10.0, 10.0, e, LP) for e in eps])
    assert -1.3 <= s_qam <= -0.7
    for g_db in (-3.0, -7.0, -10.0):
        g = db_to_linear(g_db)
        tp = [tp_min_gaussian(g, g, gaussian_rate_for_error(g, e, LP.n), LP) for e in eps]
        assert np.all(np.diff(tp) < 0)
        assert -1.3 <= loglog_slope(eps, tp) <= -0.7


def test_tp_min_qam_independent_of_gamma_at_fixed_ratio():
    # only eps and gamma_hat / gamma enter
    assert tp_min_qam(5.0, 5.0, 0.01, LP) == pytest.approx(tp_min_qam(500.0, 500.0, 0.01, LP))


def test_tp_min_gaussian_scaling_in_gamma_hat():
    g = db_to_linear(-3.0)
    r = 0.1
    assert tp_min_gaussian(g, g / 2, r, LP) == pytest.approx(4 * tp_min_gaussian(g, g, r, LP), rel=1e-12, abs=0)


def test_tp_min_gaussian_vacuous_bound():
    # above the cutoff rate the optimal rho is 0 and no information is carried
    assert tp_min_gaussian(0.5, 0.5, 2.0, LP) is None


def test_rate_for_error_round_trips():
    g = db_to_linear(12.0)
    r = qam_rate_for_error(g, 0.05, 500)
    assert qam_packet_error(g, r, 500) == pytest.approx(0.05, rel=1e-10, abs=0)
    g = db_to_linear(-3.0)
    r = gaussian_rate_for_error(g, 0.05, 500)
    assert gaussian_packet_error_opt(g, r, 500)[0] == pytest.approx(0.05, rel=1e-9, abs=0)


# -- sum rate ----------------------------------------------------------------

def test_sumrate_matches_exhaustive_scan():
    from arq_rateadapt.estimation_theory import min_variance_bound
    from arq_rateadapt.rate_allocation import rate_bound_qam

    g = db_to_linear(15.0)
    T = 30
    best = (0, 0.0)
    for tp in range(1, T):
        s2 = min_variance_bound(g, tp, LP.rate_set, QAM)
        r = rate_bound_qam(PosteriorSummary(g, s2), LP)
        if r is not None and (T - tp) * r > best[1]:
            best = (tp, (T - tp) * r)
    got = sumrate_max(g, LP, QAM, block_length=T)
    assert (got.t_p_star, got.total) == (best[0], pytest.approx(best[1], rel=1e-12, abs=0))
    assert got.total == pytest.approx((T - got.t_p_star) * got.rate_per_data_packet)


def test_sumrate_two_packet_block():
    from arq_rateadapt.estimation_theory import min_variance_bound
    from arq_rateadapt.rate_allocation import rate_bound_qam

    lp = LinkParams.from_target_error(0.3, n=500)
    g = db_to_linear(10.0)
    res = sumrate_max(g, lp, QAM, block_length=2)
    one = rate_bound_qam(PosteriorSummary(g, min_variance_bound(g, 1, lp.rate_set, QAM)), lp)
    assert res.t_p_star == 1
    assert res.total == one
    # one probe packet is too little at the stricter target
    assert sumrate_max(g, LP, QAM, block_length=2).total == 0.0
    with pytest.raises(ValueError):
        sumrate_max(g, LP, QAM, block_length=1)


def test_sumrate_infeasible_reports_zero():
    res = sumrate_max(db_to_linear(15.0), LP, QAM, block_length=5)
    assert res.total == 0.0 and res.t_p_star == 0


def test_sumrate_gap_shrinks_with_block_length():
    # normalized bound sits further below the naive rate for short blocks
    g = db_to_linear(15.0)
    naive = naive_rate_qam(PosteriorSummary(g), LP)
    gap5 = naive - sumrate_max(g, LP, QAM, block_length=5).normalized
    gap50 = naive - sumrate_max(g, LP, QAM, block_length=50).normalized
    assert gap5 > gap50
    assert gap50 == pytest.approx(0.553, abs=1e-3)


@pytest.mark.parametrize("g_db", [10.0, 15.0, 25.0])
def test_sumrate_monotone_in_T_and_below_naive(g_db):
    g = db_to_linear(g_db)
    naive = naive_rate_qam(PosteriorSummary(g), LP)
    totals = []
    for T in range(2, 41, 3):
        res = sumrate_max(g, LP, QAM, block_length=T)
        assert res.total <= T * naive + 1e-12
        totals.append(res.total)
    assert np.all(np.diff(totals) >= 0)


def test_sumrate_gaussian_low_regime():
    g = db_to_linear(-3.0)
    lp = LinkParams.from_target_error(1e-3, rate_set=[0.05 * k for k in range(1, 21)])
    model = SignalModel.gaussian(500, 129)
    res = sumrate_max(g, lp, model, regime=LOW, block_length=20)
    assert 1 <= res.t_p_star < 20
    assert res.total > 0


def test_sumrate_worker_count_invariant():
    g = db_to_linear(15.0)
    a = sumrate_max(g, LP, QAM, block_length=40, workers=1)
    b = sumrate_max(g, LP, QAM, block_length=40, workers=4)
    assert a == b


def test_sumrate_gamma_hat_override():
    g = db_to_linear(15.0)
    lower = sumrate_max(g, LP, QAM, block_length=50, gamma_hat=g / 2)
    default = sumrate_max(g, LP, QAM, block_length=50)
    assert lower.rate_per_data_packet < default.rate_per_data_packet
