import math

import numpy as np
import pytest

from conftest import line_network, rider
from crossride.analysis import (
    InsufficientData,
    compute_metrics,
    degree_threshold,
    densification_report,
    fit_linear,
    fit_log_linear,
    fit_power_law,
    fit_quadratic,
    interval_series,
    timing_report,
)
from crossride.engine import SimConfig, SimulationResult, run
from crossride.economics import PricingParams
from crossride.requests import RiderState

NET = line_network(10)


def test_exact_log_linear():
    x = np.array([25, 50, 100, 200, 400.0])
    fit = fit_log_linear(x, 2 * np.log(x) + 1)
    assert fit.slope == pytest.approx(2, abs=1e-9) and fit.intercept == pytest.approx(1, abs=1e-9)
    assert fit.r_squared == pytest.approx(1, abs=1e-9) and fit.n_points == 5
    assert fit.p_value < 1e-6


def test_constant_response():
    fit = fit_log_linear([1, 2, 3, 4], [0.3] * 4)
    assert fit.slope == 0 and fit.r_squared == 0 and fit.p_value == 1.0


def test_noisy_recovery():
    rng = np.random.default_rng(0)
    x = np.linspace(10, 500, 60)
    fit = fit_log_linear(x, 0.2 * np.log(x) + 0.1 + rng.normal(0, 1e-6, x.size))
    assert abs(fit.slope - 0.2) < 1e-3


def test_p_value_against_scipy():
    from scipy import stats

    rng = np.random.default_rng(1)
    x = rng.uniform(1, 10, 30)
    y = 0.3 * x + rng.normal(0, 1, 30)
    ours = fit_linear(x, y)
    ref = stats.linregress(x, y)
    assert ours.slope == pytest.approx(ref.slope) and ours.intercept == pytest.approx(ref.intercept)
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)
    assert ours.r_squared == pytest.approx(ref.rvalue**2)


def test_log_linear_errors():
    with pytest.raises(ValueError):
        fit_log_linear([0, 1, 2], [1, 2, 3])
    with pytest.raises(InsufficientData):
        fit_log_linear([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_log_linear([3, 3, 3], [1, 2, 3])


def test_power_law():
    v = np.array([10, 20, 40, 80.0])
    sq = fit_power_law(v, v**2)
    assert sq.slope == pytest.approx(2, abs=1e-9) and sq.r_squared == pytest.approx(1)
    assert fit_power_law(v, v).slope == pytest.approx(1, abs=1e-9)
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3], [0, 1, 2])


def test_prediction_band_contains_fit():
    x = np.arange(1, 20.0)
    y = 3 * x + np.sin(x)
    fit = fit_linear(x, y)
    lo, hi = fit.prediction_band([5.0, 25.0])
    assert np.all(lo < fit.predict([5.0, 25.0])) and np.all(fit.predict([5.0, 25.0]) < hi)
    assert hi[1] - lo[1] > hi[0] - lo[0]  # wider away from the data


def test_quadratic_recovery():
    x = np.array([10, 20, 30, 40, 60.0])
    q = fit_quadratic(x, 3 * x**2)
    assert q.beta2 == pytest.approx(3, abs=1e-9) and abs(q.beta1) < 1e-6 and abs(q.intercept) < 1e-6
    assert q.r_squared == pytest.approx(1)
    with pytest.raises(InsufficientData):
        fit_quadratic([1, 2, 3], [1, 4, 9])


def test_timing_report_planted():
    v = np.array([10, 20, 40, 80, 160])
    e = v * 2
    windows = [(int(a), int(b), 3.0 * a**2, 1e-6 * a * b * math.log(a)) for a, b in zip(v, e)]
    row = timing_report({"full": windows, "competition": windows})[0]
    assert row.creation.beta2 == pytest.approx(3, rel=1e-9) and row.creation.r_squared == pytest.approx(1)
    assert row.matching.slope == pytest.approx(1e-6, rel=1e-6)
    with pytest.raises(InsufficientData):
        timing_report({"full": windows[:3]})


def test_densification_report():
    windows = [(v, v * v // 10, 2 * (v * v // 10) / v) for v in (20, 40, 80, 160)] + [(5, 0, 0.0)]
    row = densification_report({"full": windows})[0]
    assert row.excluded_windows == 1 and row.used_windows == 4
    assert 1.9 < row.edge_growth.slope < 2.1
    assert row.degree_one_at is not None and 5 < row.degree_one_at < 40
    with pytest.raises(InsufficientData):
        densification_report({"x": [(0, 0, 0.0)] * 5})


def test_degree_threshold():
    assert degree_threshold([25, 50, 100, 200], [0.2, 0.9, 1.0, 3]) == 100
    assert degree_threshold([200, 25], [0.1, 0.3]) == math.inf


def test_metrics_on_simple_day():
    reqs = [rider(NET, 1, 0, 4, 1.0, 0), rider(NET, 2, 0, 4, 2.0, 1), rider(NET, 3, 7, 9, 2.0, 0)]
    res = run(reqs, SimConfig(horizon=30, psi=0.0, scenario="full"), NET)
    m = compute_metrics(res)
    assert m.n_requests == 3 and m.n_matched == 2 and m.share_rate == pytest.approx(2 / 3)
    assert m.vmt_total == pytest.approx(4.0 + 2.0)
    assert m.avg_detour == 0.0
    assert m.avg_wait == pytest.approx((4.0 + 3.0) / 2)
    saved = 4 * 4 * 0.1  # discount on a 4 mile trip
    assert m.avg_rider_savings == pytest.approx(2 * saved / 3)
    assert m.platform_profit[0] + m.platform_profit[1] == pytest.approx(sum(res.platform_profit().values()))
    assert not m.empty


def test_savings_average_counts_unmatched():
    # one matched rider saves 10 - 9.2, the unmatched one saves nothing
    res = run([rider(NET, 1, 0, 2, 1.0), rider(NET, 2, 0, 2, 1.5), rider(NET, 3, 8, 9, 1.0)],
              SimConfig(horizon=10, psi=0.0, scenario="full"), NET)
    by_id = {r.id: r for r in res.riders}
    assert by_id[1].state is RiderState.MATCHED and by_id[3].state is RiderState.EXPIRED_SOLO
    m = compute_metrics(SimulationResult(res.scenario, 0, res.windows, [by_id[1], by_id[3]], [], res.pricing))
    assert by_id[1].fare_single - by_id[1].fare_shared == pytest.approx(0.8)
    assert m.avg_rider_savings == pytest.approx(0.4)


def test_profit_change_against_baseline():
    reqs = [rider(NET, 1, 0, 4, 1.0, 0), rider(NET, 2, 0, 4, 2.0, 1)]
    c = SimConfig(horizon=30, psi=0.0, scenario="full")
    shared = run(reqs, c, NET)
    solo = run(reqs, c.with_overrides(scenario="competition"), NET)
    m = compute_metrics(shared, solo)
    p = PricingParams()
    for k in (0, 1):
        expected = 100 * (shared.platform_profit()[k] - solo.platform_profit()[k]) / solo.platform_profit()[k]
        assert m.profit_change_pct[k] == pytest.approx(expected)
    assert compute_metrics(solo).profit_change_pct == {0: 0.0, 1: 0.0}
    assert solo.platform_profit()[0] == pytest.approx(0.5 * (4 * p.cost_per_mile + p.base_fare))


def test_interval_series():
    reqs = [rider(NET, k, 0, 4, t, k % 2) for k, t in enumerate([1.0, 2.0, 11.0, 12.0, 13.0])]
    res = run(reqs, SimConfig(horizon=30, psi=0.0, scenario="full"), NET)
    pts = interval_series(res, 10.0)
    assert [p.requests for p in pts] == [2, 3]
    assert pts[0].share_rate == 1.0
    assert all(0 <= p.share_rate <= 1 for p in pts)
    assert sum(r.state is RiderState.MATCHED for r in res.riders) == 4
