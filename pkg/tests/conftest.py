import numpy as np
import pytest

from tvpeff.synthetic import BetaPath, Premium, ScenarioSpec, simulate_market

# premium sd 0.10, inside the historical futures-premium range
REF_PREMIUM = Premium.ar1(0.6, 0.08)


def market(n=200, seed=0, beta=None, sigma_u=0.05, k=1, alpha=0.0, premium=REF_PREMIUM):
    spec = ScenarioSpec(n=n, k=k, alpha_true=alpha,
                        beta_path_true=beta or BetaPath.constant(1.0), sigma_u=sigma_u,
                        premium_process=premium, seed=seed)
    return simulate_market(spec)


@pytest.fixture
def rw_sample():
    return market(n=200, seed=11, beta=BetaPath.random_walk(0.05)).sample()


@pytest.fixture
def flat_sample():
    return market(n=300, seed=5).sample()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
