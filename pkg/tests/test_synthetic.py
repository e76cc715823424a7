import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvpeff.errors import DomainError
from tvpeff.series import align
from tvpeff.static import ols_fit
from tvpeff.synthetic import BetaPath, Premium, ScenarioSpec, simulate_market

from conftest import REF_PREMIUM, market

FAMILIES = [
    BetaPath.constant(1.0),
    BetaPath.step(0.3, 1.2, 40),
    BetaPath.sine(1.0, 0.5, 24),
    BetaPath.random_walk(0.05),
]


def test_noiseless_constant_gives_exact_ols():
    fit = ols_fit(market(n=120, seed=3, sigma_u=0.0).sample())
    assert fit.alpha == pytest.approx(0.0, abs=1e-12)
    assert fit.beta == pytest.approx(1.0, abs=1e-12)


def test_zero_variance_random_walk_is_constant():
    a = market(n=80, seed=4, beta=BetaPath.random_walk(0.0, 0.7))
    b = market(n=80, seed=4, beta=BetaPath.constant(0.7))
    np.testing.assert_array_equal(a.beta, b.beta)
    np.testing.assert_array_equal(a.x, b.x)


@pytest.mark.parametrize("path", FAMILIES, ids=lambda p: p.kind)
@pytest.mark.parametrize("k", [1, 3])
def test_prices_round_trip_to_model(path, k):
    m = market(n=100, seed=9, beta=path, k=k, alpha=0.01)
    s = align(m.spot, m.futures, k)
    assert s.n == 100
    np.testing.assert_allclose(s.x, m.x, atol=1e-12)
    np.testing.assert_allclose(s.y, m.y, atol=1e-12)
    np.testing.assert_allclose(s.x - 0.01 - m.beta * s.y, m.x - 0.01 - m.beta * m.y, atol=1e-12)


def test_path_shapes():
    rng = np.random.default_rng(0)
    step = BetaPath.step(0.2, 1.0, 3).realize(6, rng)
    np.testing.assert_array_equal(step, [0.2, 0.2, 0.2, 1.0, 1.0, 1.0])
    sine = BetaPath.sine(1.0, 0.5, 4).realize(5, rng)
    np.testing.assert_allclose(sine, [1.0, 1.5, 1.0, 0.5, 1.0], atol=1e-15)


def test_seeded_and_distinct():
    a, b, c = market(seed=1), market(seed=1), market(seed=2)
    np.testing.assert_array_equal(a.spot.values, b.spot.values)
    assert not np.array_equal(a.spot.values, c.spot.values)


def test_fixed_premium_path():
    vals = np.linspace(-0.1, 0.1, 50)
    m = market(n=50, seed=0, premium=Premium.from_values(vals))
    np.testing.assert_array_equal(m.y, vals)
    with pytest.raises(DomainError):
        market(n=60, premium=Premium.from_values(vals))


@pytest.mark.parametrize("spec", [
    ScenarioSpec(n=1),
    ScenarioSpec(n=10, k=0),
    ScenarioSpec(n=10, sigma_u=-1.0),
    ScenarioSpec(n=10, premium_process=Premium.ar1(1.0, 0.1)),
    ScenarioSpec(n=10, beta_path_true=BetaPath.step(0, 1, 11)),
    ScenarioSpec(n=10, beta_path_true=BetaPath.sine(1, 1, 0)),
])
def test_invalid_specs(spec):
    with pytest.raises(DomainError):
        simulate_market(spec)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 60), k=st.integers(1, 4))
def test_prices_positive_and_anchored(seed, n, k):
    m = market(n=n, seed=seed, k=k, premium=REF_PREMIUM)
    assert m.spot.values.shape == (n + k,)
    assert np.all(m.spot.values > 0) and np.all(m.futures.values > 0)
    np.testing.assert_array_equal(m.spot.values[:k], 1.0)
