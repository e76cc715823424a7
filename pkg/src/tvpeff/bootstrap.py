"""Residual bootstrap bands under the unbiasedness null and period detection.

Replication ``i`` draws from its own generator, seeded by child ``i`` of
``numpy.random.SeedSequence(seed).spawn(N)``. Draws therefore do not depend
on how replications are chunked or distributed across worker threads, and
the reduction (sorting along replications) is ordered by replication index.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NumericalError
from .series import AlignedSample, format_month, month_range
from .static import ols_fit
from .tvp import TvpFit, TvpSolver, gls_slope, select_lambda, tvp_fit

LAMBDA_POLICIES = ("fixed", "per-replication")
MIN_REPLICATIONS = 200
MAX_FAILURE_SHARE = 0.01
MAX_RETRIES = 5
NULL_ALPHA = 0.0
NULL_BETA = 1.0


def nearest_rank(n_rep: int, p: float) -> int:
    """1-based nearest-rank order statistic for probability ``p``."""
    # guard against 0.975 * 5000 = 4875.000000000001
    return int(min(max(math.ceil(n_rep * p - 1e-9), 1), n_rep))


@dataclass(frozen=True)
class EfficiencyBand:
    level: float
    lower: np.ndarray
    upper: np.ndarray
    replications: int
    seed: int
    lam: float
    lambda_policy: str
    start: np.datetime64
    failures: int = 0
    null_alpha: float = NULL_ALPHA
    null_beta: float = NULL_BETA

    @property
    def n(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class BootstrapConfig:
    n_boot: int = 5000
    level: float = 0.95
    seed: int = 0
    lambda_policy: str = "fixed"
    prior: object = "ols"
    jobs: int = 1
    chunk: int = 500

    def validate(self):
        if self.n_boot < MIN_REPLICATIONS:
            raise ConfigError(f"need at least {MIN_REPLICATIONS} bootstrap replications "
                              f"for quantile resolution, got {self.n_boot}")
        if not 0 < self.level < 1:
            raise ConfigError(f"level must lie in (0, 1), got {self.level}")
        if self.lambda_policy not in LAMBDA_POLICIES:
            raise ConfigError(f"lambda policy must be one of {LAMBDA_POLICIES}")
        if self.jobs < 1 or self.chunk < 1:
            raise ConfigError("jobs and chunk must be positive")


def _priors(prior, y, xs):
    """Prior beta_0 for every replication column of ``xs``."""
    if prior is None or prior == "ols":
        yc = y - y.mean()
        xs = np.asfortranarray(xs)
        xc = np.asfortranarray(xs - xs.mean(axis=0))
        return np.asfortranarray(yc[:, None] * xc).sum(axis=0) / (yc @ yc)
    if prior == "gls":
        return np.array([gls_slope(AlignedSample(1, xs[:, j], y, "2000-01"))
                         for j in range(xs.shape[1])])
    return np.full(xs.shape[1], float(prior))


class _Replicator:
    def __init__(self, sample, resid, cfg, lam):
        self.y = sample.y
        self.resid = resid
        self.cfg = cfg
        self.lam = lam
        self.n = sample.n
        self.solver = TvpSolver(self.y, lam) if cfg.lambda_policy == "fixed" else None

    def draw(self, rng):
        return self.y * NULL_BETA + NULL_ALPHA + self.resid[rng.integers(0, self.n, self.n)]

    def fit_columns(self, xs):
        b0 = _priors(self.cfg.prior, self.y, xs)
        if self.solver is not None:
            return self.solver.solve(xs, b0)[1]
        out = np.empty_like(xs)
        for j in range(xs.shape[1]):
            try:
                lam = select_lambda(self.y, xs[:, j], b0[j])
                out[:, j] = TvpSolver(self.y, lam).solve(xs[:, j], b0[j])[1]
            except (NumericalError, FloatingPointError):
                out[:, j] = np.nan
        return out

    def run_chunk(self, seeds):
        rngs = [np.random.default_rng(s) for s in seeds]
        xs = np.column_stack([self.draw(r) for r in rngs])
        paths = self.fit_columns(xs)
        failures = 0
        for j in range(paths.shape[1]):
            # retry with a fresh draw from the same replication stream
            for _ in range(MAX_RETRIES):
                if np.all(np.isfinite(paths[:, j])):
                    break
                failures += 1
                paths[:, j] = self.fit_columns(self.draw(rngs[j])[:, None])[:, 0]
        return paths, failures


def bootstrap_paths(sample: AlignedSample, config: BootstrapConfig, lam: float,
                    residuals: np.ndarray | None = None):
    """``(n, N)`` matrix of slope paths fit to null-imposed bootstrap data."""
    config.validate()
    if residuals is None:
        residuals = ols_fit(sample).residuals
    rep = _Replicator(sample, np.asarray(residuals, dtype=float), config, lam)
    children = np.random.SeedSequence(config.seed).spawn(config.n_boot)
    chunks = [children[i:i + config.chunk] for i in range(0, config.n_boot, config.chunk)]
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(rep.run_chunk, chunks))
    else:
        results = [rep.run_chunk(c) for c in chunks]
    paths = np.concatenate([p for p, _ in results], axis=1)
    failures = sum(f for _, f in results)
    if failures > MAX_FAILURE_SHARE * config.n_boot or not np.all(np.isfinite(paths)):
        raise NumericalError(f"{failures} of {config.n_boot} bootstrap replications failed "
                             f"(limit {MAX_FAILURE_SHARE:.0%})")
    return paths, failures


def band_from_paths(paths: np.ndarray, level: float):
    n_rep = paths.shape[1]
    ordered = np.sort(paths, axis=1)
    lo = nearest_rank(n_rep, (1.0 - level) / 2.0)
    hi = nearest_rank(n_rep, (1.0 + level) / 2.0)
    return ordered[:, lo - 1].copy(), ordered[:, hi - 1].copy()


def bootstrap_band(sample: AlignedSample, config: BootstrapConfig | None = None,
                   lam="auto", fit: TvpFit | None = None) -> EfficiencyBand:
    """Pointwise band for the slope path when ``(alpha, beta_t) = (0, 1)``.

    OLS residuals of the constant regression are resampled with replacement,
    null data ``x* = y + u*`` are formed with the observed premium held
    fixed, and each replication is refit with the time-varying estimator.
    Bounds are nearest-rank quantiles at ``(1 -/+ level) / 2``.

    Under the ``"fixed"`` lambda policy every replication uses the variance
    ratio of ``fit`` (or of ``lam``, selected on the observed data when
    ``"auto"``); ``"per-replication"`` reselects it for each draw.
    """
    config = config or BootstrapConfig()
    config.validate()
    if fit is not None:
        lam = fit.lam
    elif lam == "auto":
        lam = tvp_fit(sample, "auto", config.prior).lam
    lam = float(lam)
    paths, failures = bootstrap_paths(sample, config, lam)
    lower, upper = band_from_paths(paths, config.level)
    return EfficiencyBand(level=config.level, lower=lower, upper=upper,
                          replications=config.n_boot, seed=config.seed, lam=lam,
                          lambda_policy=config.lambda_policy, start=sample.start,
                          failures=failures)


@dataclass(frozen=True)
class Episode:
    first: int
    last: int
    start: str
    end: str
    mean_excursion: float

    @property
    def length(self) -> int:
        return self.last - self.first + 1


@dataclass(frozen=True)
class EfficiencyTimeline:
    efficient: np.ndarray
    excursion: np.ndarray
    episodes: list = field(default_factory=list)
    start: np.datetime64 | None = None

    @property
    def status(self) -> list[str]:
        return ["efficient" if e else "inefficient" for e in self.efficient]

    @property
    def inefficient_share(self) -> float:
        return float(np.mean(~self.efficient))


def detect(fit, band: EfficiencyBand, start=None) -> EfficiencyTimeline:
    """Flag months whose estimate leaves the band and group them into episodes.

    ``fit`` is a :class:`TvpFit` or a plain slope path. The excursion is
    ``beta - lower`` below the band, ``beta - upper`` above it and 0 inside.
    """
    beta = np.asarray(fit.beta_path if isinstance(fit, TvpFit) else fit, dtype=float)
    if beta.shape != band.lower.shape:
        raise DomainError(f"slope path has {beta.shape[0]} months but band has {band.n}")
    start = band.start if start is None else start
    below = beta < band.lower
    above = beta > band.upper
    efficient = ~(below | above)
    excursion = np.where(below, beta - band.lower, np.where(above, beta - band.upper, 0.0))
    dates = month_range(start, beta.shape[0])
    episodes = []
    t = 0
    while t < beta.shape[0]:
        if efficient[t]:
            t += 1
            continue
        j = t
        while j + 1 < beta.shape[0] and not efficient[j + 1]:
            j += 1
        episodes.append(Episode(t, j, format_month(dates[t]), format_month(dates[j]),
                                float(np.mean(excursion[t:j + 1]))))
        t = j + 1
    return EfficiencyTimeline(efficient, excursion, episodes, np.datetime64(start, "M"))


__all__ = ["BootstrapConfig", "EfficiencyBand", "EfficiencyTimeline", "Episode",
           "bootstrap_band", "bootstrap_paths", "band_from_paths", "detect",
           "nearest_rank"]
