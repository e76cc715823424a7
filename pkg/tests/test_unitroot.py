import math

import numpy as np
import pytest

from tvpeff.errors import DomainError
from tvpeff.unitroot import adf_gls, default_kmax, gls_detrend, modified_ic


def dense_gls_detrend(y, mode):
    """Quasi-difference matrix built explicitly; normal equations by dense solve."""
    T = len(y)
    cbar = -13.5 if mode == "ct" else -7.0
    rho = 1 + cbar / T
    Q = np.eye(T) - rho * np.eye(T, k=-1)
    Z = np.column_stack([np.ones(T), np.arange(1, T + 1)]) if mode == "ct" else np.ones((T, 1))
    A = Q @ Z
    delta = np.linalg.solve(A.T @ A, A.T @ (Q @ y))
    return y - Z @ delta


def test_linear_trend_removed():
    t = np.arange(1, 121)
    resid = gls_detrend(3.0 + 0.25 * t, "ct")
    assert np.max(np.abs(resid)) < 1e-8


def test_constant_removed():
    np.testing.assert_allclose(gls_detrend(np.full(50, 7.5), "c"), 0.0, atol=1e-12)


@pytest.mark.parametrize("mode", ["c", "ct"])
def test_detrend_matches_dense_oracle(rng, mode):
    T = 300
    e = rng.standard_normal(T)
    ar = np.zeros(T)
    for t in range(1, T):
        ar[t] = 0.7 * ar[t - 1] + e[t]
    y = 2.0 + 0.01 * np.arange(T) + ar
    np.testing.assert_allclose(gls_detrend(y, mode), dense_gls_detrend(y, mode),
                               rtol=0, atol=1e-10)


def test_detrend_errors():
    with pytest.raises(DomainError):
        gls_detrend(np.arange(19.0))
    with pytest.raises(DomainError):
        gls_detrend(np.arange(30.0), "nc")


def test_default_kmax():
    assert default_kmax(100) == 12
    assert default_kmax(500) == 17
    assert default_kmax(617) == 18


def test_kmax_zero_is_plain_df(rng):
    y = np.cumsum(rng.standard_normal(200)) * 0.3
    res = adf_gls(y, "ct", k_max=0)
    yd = dense_gls_detrend(y, "ct")
    lag, dy = yd[:-1], np.diff(yd)
    phi = (lag @ dy) / (lag @ lag)
    s2 = np.sum((dy - phi * lag) ** 2) / (len(dy) - 1)
    t = phi / math.sqrt(s2 / (lag @ lag))
    assert res.lags == 0
    assert res.statistic == pytest.approx(t, abs=1e-9)
    assert res.phi_raw == pytest.approx(phi, abs=1e-12)
    assert res.phi_hat == pytest.approx(1 + phi, abs=1e-12)


def test_mic_matches_brute_force(rng):
    y = np.cumsum(rng.standard_normal(150))
    yd = gls_detrend(y, "ct")
    kmax = 6
    dy = np.diff(yd)
    got = modified_ic(yd, kmax)
    for k in range(kmax + 1):
        rows = range(kmax, len(dy))
        lhs = np.array([dy[i] for i in rows])
        rhs = np.array([[yd[i]] + [dy[i - j] for j in range(1, k + 1)] for i in rows])
        b, *_ = np.linalg.lstsq(rhs, lhs, rcond=None)
        N = len(lhs)
        s2 = np.sum((lhs - rhs @ b) ** 2) / N
        tau = b[0] ** 2 * np.sum(rhs[:, 0] ** 2) / s2
        assert got[k] == pytest.approx(math.log(s2) + math.log(N) * (tau + k) / N, abs=1e-10)


@pytest.mark.parametrize("a,b", [(5.0, 2.5), (-3.0, -0.7), (100.0, 1e-3)])
def test_affine_invariance(rng, a, b):
    y = np.cumsum(rng.standard_normal(300))
    base = adf_gls(y)
    moved = adf_gls(a + b * y)
    assert moved.lags == base.lags
    assert moved.statistic == pytest.approx(base.statistic, abs=1e-8)


def test_ar1_recovers_phi(rng):
    e = rng.standard_normal(2000)
    y = np.zeros(2000)
    for t in range(1, 2000):
        y[t] = 0.5 * y[t - 1] + e[t]
    res = adf_gls(y, "ct", k_max=0)
    assert res.phi_hat == pytest.approx(0.5, abs=0.05)
    assert res.reject_1pct


def test_selection_is_deterministic(rng):
    y = np.cumsum(rng.standard_normal(400))
    r1, r2 = adf_gls(y), adf_gls(y.copy())
    assert (r1.lags, r1.statistic) == (r2.lags, r2.statistic)
    assert r1.lags <= r1.k_max
    assert abs(r1.phi_hat) < 2


def test_adf_errors():
    with pytest.raises(DomainError):
        adf_gls(np.arange(39.0))
    with pytest.raises(DomainError):
        adf_gls(np.random.default_rng(0).standard_normal(60), k_max=30)
    with pytest.raises(DomainError):
        adf_gls(np.r_[np.zeros(50), np.nan])
