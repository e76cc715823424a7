import numpy as np
import pytest

from tvpeff.bootstrap import (BootstrapConfig, EfficiencyBand, band_from_paths,
                              bootstrap_band, bootstrap_paths, detect, nearest_rank)
from tvpeff.errors import ConfigError, DomainError
from tvpeff.series import AlignedSample, to_month
from tvpeff.synthetic import BetaPath
from tvpeff.tvp import tvp_fit

from conftest import market


@pytest.mark.parametrize("n_rep, p, rank", [
    (5000, 0.025, 125), (5000, 0.975, 4875), (5000, 0.05, 250), (5000, 0.95, 4750),
    (1000, 0.025, 25), (1000, 0.975, 975), (200, 0.001, 1), (200, 1.0, 200),
])
def test_nearest_rank(n_rep, p, rank):
    assert nearest_rank(n_rep, p) == rank


def test_band_from_paths_order_statistics():
    paths = np.tile(np.arange(1, 1001, dtype=float)[::-1], (3, 1))
    lo, hi = band_from_paths(paths, 0.95)
    np.testing.assert_array_equal(lo, 25.0)
    np.testing.assert_array_equal(hi, 975.0)


def test_zero_residuals_collapse_band():
    y = np.random.default_rng(1).normal(0, 0.1, 60)
    s = AlignedSample(1, y.copy(), y, "1950-01")
    band = bootstrap_band(s, BootstrapConfig(n_boot=200), lam=1.0)
    np.testing.assert_allclose(band.lower, 1.0, atol=1e-10)
    np.testing.assert_allclose(band.upper, 1.0, atol=1e-10)


@pytest.fixture(scope="module")
def sample():
    return market(n=150, seed=21).sample()


def test_reproducible(sample):
    cfg = BootstrapConfig(n_boot=300, seed=7)
    a, b = bootstrap_band(sample, cfg, lam=2.0), bootstrap_band(sample, cfg, lam=2.0)
    assert np.array_equal(a.lower, b.lower) and np.array_equal(a.upper, b.upper)
    c = bootstrap_band(sample, BootstrapConfig(n_boot=300, seed=8), lam=2.0)
    assert not np.array_equal(a.lower, c.lower)


@pytest.mark.parametrize("jobs, chunk", [(1, 1), (1, 37), (3, 50), (4, 300)])
def test_parallel_layout_is_invisible(sample, jobs, chunk):
    ref, _ = bootstrap_paths(sample, BootstrapConfig(n_boot=300, seed=3), 2.0)
    got, _ = bootstrap_paths(sample, BootstrapConfig(n_boot=300, seed=3, jobs=jobs,
                                                     chunk=chunk), 2.0)
    assert np.array_equal(ref, got)


def test_levels_nest(sample):
    wide = bootstrap_band(sample, BootstrapConfig(n_boot=400, level=0.95), lam=2.0)
    narrow = bootstrap_band(sample, BootstrapConfig(n_boot=400, level=0.90), lam=2.0)
    assert np.all(wide.lower <= narrow.lower) and np.all(narrow.upper <= wide.upper)
    assert np.all(wide.lower <= wide.upper)


def test_band_straddles_null(sample):
    band = bootstrap_band(sample, BootstrapConfig(n_boot=400), lam=2.0)
    mid = 0.5 * (band.lower + band.upper)
    assert abs(np.mean(mid) - 1.0) < 0.05
    assert np.mean((band.lower < 1.0) & (1.0 < band.upper)) > 0.95


def test_premium_negation_mirrors_band(sample):
    neg = AlignedSample(1, sample.x - 2 * sample.y, -sample.y, sample.start)
    # null x* = y + u* maps to -y + u*; slopes flip sign about zero then shift
    a = bootstrap_band(sample, BootstrapConfig(n_boot=400, seed=5), lam=2.0)
    b = bootstrap_band(neg, BootstrapConfig(n_boot=400, seed=5), lam=2.0)
    assert np.max(np.abs(a.lower - b.lower)) < 0.15
    assert np.max(np.abs(a.upper - b.upper)) < 0.15


def test_per_replication_policy_runs(sample):
    band = bootstrap_band(sample, BootstrapConfig(n_boot=200, lambda_policy="per-replication"))
    assert band.lambda_policy == "per-replication"
    assert np.all(np.isfinite(band.lower)) and np.all(band.lower <= band.upper)


def test_fit_lambda_reused(sample):
    fit = tvp_fit(sample, 3.5)
    assert bootstrap_band(sample, BootstrapConfig(n_boot=200), fit=fit).lam == 3.5


@pytest.mark.parametrize("cfg", [
    BootstrapConfig(n_boot=199),
    BootstrapConfig(level=1.0),
    BootstrapConfig(level=0.0),
    BootstrapConfig(lambda_policy="sometimes"),
    BootstrapConfig(jobs=0),
])
def test_config_rejected(cfg):
    with pytest.raises(ConfigError):
        cfg.validate()


def _band(lower, upper, start="1900-01"):
    lower = np.asarray(lower, dtype=float)
    return EfficiencyBand(0.95, lower, np.asarray(upper, dtype=float), 5000, 0, 1.0,
                          "fixed", to_month(start))


def test_detect_all_inside():
    tl = detect(np.full(48, 1.0), _band(np.full(48, 0.8), np.full(48, 1.2)))
    assert tl.episodes == [] and tl.inefficient_share == 0.0
    assert set(tl.status) == {"efficient"}


def test_detect_single_episode():
    beta = np.full(48, 1.0)
    beta[12:36] = 0.5
    tl = detect(beta, _band(np.full(48, 0.8), np.full(48, 1.2), "1990-01"))
    assert len(tl.episodes) == 1
    ep = tl.episodes[0]
    assert (ep.first, ep.last, ep.length) == (12, 35, 24)
    assert (ep.start, ep.end) == ("1991-01", "1992-12")
    assert ep.mean_excursion == pytest.approx(-0.3)
    assert tl.inefficient_share == pytest.approx(0.5)


def test_detect_signs_and_boundaries():
    beta = np.array([1.3, 1.2, 0.8, 0.7, 1.0, 1.25])
    tl = detect(beta, _band(np.full(6, 0.8), np.full(6, 1.2)))
    np.testing.assert_array_equal(tl.efficient, [False, True, True, False, True, False])
    np.testing.assert_allclose(tl.excursion, [0.1, 0, 0, -0.1, 0, 0.05], atol=1e-12)
    assert [e.length for e in tl.episodes] == [1, 1, 1]


def test_detect_length_mismatch():
    with pytest.raises(DomainError):
        detect(np.ones(5), _band(np.zeros(6), np.ones(6)))


def test_low_beta_window_detected():
    m = market(n=300, seed=31, beta=BetaPath.step(1.0, 0.2, 150))
    s = m.sample()
    fit = tvp_fit(s)
    band = bootstrap_band(s, BootstrapConfig(n_boot=500), fit=fit)
    tl = detect(fit, band)
    assert np.mean(~tl.efficient[170:]) > 0.9
