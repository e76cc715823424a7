import numpy as np
import pytest
import statsmodels.api as sm
from statsmodels.stats.sandwich_covariance import cov_hac

from tvpeff.errors import CollinearityError, DomainError, NumericalError
from tvpeff.series import AlignedSample
from tvpeff.static import HANSEN_LC_CV, fit_static, hac_cov, hansen_lc, nw_bandwidth, ols_fit

from conftest import market


def sample(x, y):
    return AlignedSample(1, x, y, "1900-01")


def test_perfect_fit(rng):
    y = rng.normal(0, 0.1, 50)
    fit = ols_fit(sample(y, y))
    assert fit.alpha == pytest.approx(0.0, abs=1e-14)
    assert fit.beta == pytest.approx(1.0, abs=1e-13)
    assert fit.r2_adj == pytest.approx(1.0, abs=1e-12)


def test_constant_response_is_orthogonal(rng):
    y = rng.normal(0, 0.1, 40)
    fit = ols_fit(sample(np.full(40, 0.5), y))
    assert fit.beta == pytest.approx(0.0, abs=1e-14)
    assert fit.alpha == pytest.approx(0.5, abs=1e-14)


def test_closed_form_slope_and_residuals(flat_sample):
    s = flat_sample
    fit = ols_fit(s)
    slope = np.cov(s.x, s.y, ddof=1)[0, 1] / np.var(s.y, ddof=1)
    assert fit.beta == pytest.approx(slope, abs=1e-12)
    assert abs(fit.residuals.sum()) < 1e-10
    assert fit.residuals.shape == (s.n,)
    assert fit.se_alpha > 0 and fit.se_beta > 0


def test_hac_matches_statsmodels(flat_sample):
    s = flat_sample
    fit = ols_fit(s)
    res = sm.OLS(s.x, sm.add_constant(s.y)).fit()
    oracle = cov_hac(res, nlags=nw_bandwidth(s.n), use_correction=False)
    np.testing.assert_allclose(fit.cov, oracle, rtol=1e-10)
    np.testing.assert_allclose(res.params, [fit.alpha, fit.beta], rtol=1e-10)


def test_bandwidth_zero_is_white(flat_sample):
    s = flat_sample
    fit = ols_fit(s, bandwidth=0)
    white = sm.OLS(s.x, sm.add_constant(s.y)).fit(cov_type="HC0").cov_params()
    np.testing.assert_allclose(fit.cov, white, rtol=1e-10)
    X = np.column_stack([np.ones(s.n), s.y])
    np.testing.assert_allclose(hac_cov(X, fit.residuals, 0), white, rtol=1e-10)


def test_bandwidth_rule():
    assert [nw_bandwidth(n) for n in (100, 500, 620)] == [4, 5, 5]


def test_adjusted_r2(flat_sample):
    s = flat_sample
    res = sm.OLS(s.x, sm.add_constant(s.y)).fit()
    assert ols_fit(s).r2_adj == pytest.approx(res.rsquared_adj, abs=1e-12)


def lc_loop_oracle(x, y):
    n = len(x)
    X = np.column_stack([np.ones(n), y])
    b = np.linalg.lstsq(X, x, rcond=None)[0]
    u = x - X @ b
    s2 = u @ u / n
    f = [np.array([u[t], u[t] * y[t], u[t] ** 2 - s2]) for t in range(n)]
    V = sum(np.outer(ft, ft) for ft in f)
    Vi = np.linalg.inv(V)
    S = np.zeros(3)
    total = 0.0
    for ft in f:
        S = S + ft
        total += S @ Vi @ S
    return total / n


def test_lc_matches_loop_oracle(rw_sample):
    s = rw_sample
    lc = hansen_lc(ols_fit(s), s)
    assert lc.statistic == pytest.approx(lc_loop_oracle(s.x, s.y), rel=1e-10)
    assert lc.statistic >= 0
    assert lc.critical_value == 1.01


def test_lc_scale_invariant(flat_sample):
    s = flat_sample
    base = hansen_lc(ols_fit(s), s).statistic
    for c in (0.01, 3.0, 250.0):
        scaled = s.with_xy(c * s.x, c * s.y)
        assert hansen_lc(ols_fit(scaled), scaled).statistic == pytest.approx(base, abs=1e-8)


def test_lc_is_order_dependent(rw_sample, rng):
    s = rw_sample
    perm = rng.permutation(s.n)
    shuffled = s.with_xy(s.x[perm], s.y[perm])
    f1, f2 = ols_fit(s), ols_fit(shuffled)
    assert f1.beta == pytest.approx(f2.beta, abs=1e-12)
    assert f1.alpha == pytest.approx(f2.alpha, abs=1e-12)
    assert hansen_lc(f1, s).statistic != pytest.approx(hansen_lc(f2, shuffled).statistic,
                                                      rel=1e-3)


def test_lc_singular_scores(rng):
    y = rng.normal(0, 0.1, 30)
    s = sample(y, y)
    with pytest.raises(NumericalError, match="condition number"):
        hansen_lc(ols_fit(s), s)


def test_errors(rng):
    with pytest.raises(DomainError):
        ols_fit(sample(np.zeros(9), np.arange(9.0)))
    with pytest.raises(CollinearityError):
        ols_fit(sample(rng.normal(size=30), np.full(30, 0.2)))


def test_fit_static_attaches_lc():
    s = market(n=300, seed=3, beta=None).sample()
    fit = fit_static(s)
    assert fit.lc_stat == pytest.approx(hansen_lc(ols_fit(s), s).statistic)
    assert fit.lc_reject == (fit.lc_stat > 1.01)


@pytest.mark.parametrize("m", [1, 3])
def test_lc_critical_values_by_brownian_bridge(m):
    # L_c is asymptotically the integral of a squared m-dim Brownian bridge
    rng = np.random.default_rng(7)
    steps, reps = 400, 20000
    draws = []
    for _ in range(reps // 2000):
        w = np.cumsum(rng.standard_normal((2000, steps, m)), axis=1) / np.sqrt(steps)
        r = np.arange(1, steps + 1)[None, :, None] / steps
        bridge = w - r * w[:, -1:, :]
        draws.append(np.sum(bridge ** 2, axis=(1, 2)) / steps)
    q95 = np.quantile(np.concatenate(draws), 0.95)
    assert q95 == pytest.approx(HANSEN_LC_CV[m][0.05], abs=0.04)
