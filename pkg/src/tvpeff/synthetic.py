"""Seeded spot/futures generators with a known coefficient path."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .series import AlignedSample, PriceSeries, to_month

BETA_KINDS = ("constant", "step", "sine", "random-walk")


@dataclass(frozen=True)
class BetaPath:
    kind: str
    params: tuple

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", (float(c),))

    @classmethod
    def step(cls, c1, c2, breakpoint):
        return cls("step", (float(c1), float(c2), int(breakpoint)))

    @classmethod
    def sine(cls, center, amplitude, period):
        return cls("sine", (float(center), float(amplitude), float(period)))

    @classmethod
    def random_walk(cls, sigma_v, start=1.0):
        return cls("random-walk", (float(sigma_v), float(start)))

    def validate(self, n):
        if self.kind not in BETA_KINDS:
            raise DomainError(f"unknown beta path kind {self.kind!r}")
        if self.kind == "step" and not 0 <= self.params[2] <= n:
            raise DomainError(f"step breakpoint {self.params[2]} outside 0..{n}")
        if self.kind == "sine" and self.params[2] <= 0:
            raise DomainError("sine period must be positive")
        if self.kind == "random-walk" and self.params[0] < 0:
            raise DomainError("random-walk sigma_v must be >= 0")

    def realize(self, n, rng):
        t = np.arange(n)
        if self.kind == "constant":
            return np.full(n, self.params[0])
        if self.kind == "step":
            c1, c2, brk = self.params
            return np.where(t < brk, c1, c2)
        if self.kind == "sine":
            center, amp, period = self.params
            return center + amp * np.sin(2 * np.pi * t / period)
        sigma_v, start = self.params
        steps = sigma_v * rng.standard_normal(n - 1)
        return start + np.concatenate([[0.0], np.cumsum(steps)])


@dataclass(frozen=True)
class Premium:
    """Futures premium process: stationary AR(1) or a fixed supplied path."""

    kind: str = "ar1"
    rho: float = 0.6
    sigma: float = 0.06
    mean: float = 0.0
    values: tuple = ()

    @classmethod
    def ar1(cls, rho, sigma, mean=0.0):
        return cls("ar1", float(rho), float(sigma), float(mean))

    @classmethod
    def from_values(cls, values):
        return cls("fixed", values=tuple(float(v) for v in values))

    def draw(self, m, rng):
        if self.kind == "fixed":
            vals = np.asarray(self.values, dtype=float)
            if len(vals) == 0:
                raise DomainError("empty premium path")
            if len(vals) < m:
                # the last k premiums never enter (x, y); pad them
                vals = np.concatenate([vals, np.full(m - len(vals), vals[-1])])
            return vals[:m].copy()
        eps = rng.standard_normal(m + 1) * self.sigma
        y = np.empty(m)
        prev = eps[0] / np.sqrt(1.0 - self.rho ** 2)
        for t in range(m):
            prev = self.rho * prev + eps[t + 1]
            y[t] = prev
        return y + self.mean


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    k: int = 1
    alpha_true: float = 0.0
    beta_path_true: BetaPath = field(default_factory=BetaPath.constant)
    sigma_u: float = 0.05
    premium_process: Premium = field(default_factory=Premium)
    seed: int = 0
    start: str = "1900-01"

    def validate(self):
        if self.n < 2:
            raise DomainError("scenario needs n >= 2")
        if self.k < 1:
            raise DomainError("horizon k must be >= 1")
        if self.sigma_u < 0:
            raise DomainError("sigma_u must be >= 0")
        p = self.premium_process
        if p.kind == "ar1" and not abs(p.rho) < 1:
            raise DomainError("AR(1) premium needs |rho| < 1")
        if p.kind == "fixed" and len(p.values) < self.n:
            raise DomainError(f"fixed premium path has {len(p.values)} values, need >= {self.n}")
        if p.kind not in ("ar1", "fixed"):
            raise DomainError(f"unknown premium process {p.kind!r}")
        self.beta_path_true.validate(self.n)


@dataclass(frozen=True)
class SimulatedMarket:
    spot: PriceSeries
    futures: PriceSeries
    beta: np.ndarray
    x: np.ndarray
    y: np.ndarray
    spec: ScenarioSpec

    def sample(self) -> AlignedSample:
        return AlignedSample(self.spec.k, self.x, self.y, self.spot.start, "synthetic")


def simulate_market(spec: ScenarioSpec) -> SimulatedMarket:
    """Generate prices whose aligned returns and premiums satisfy the TVP model.

    Draw order from ``default_rng(seed)``: premiums (``n + k``), observation
    noise (``n``), then random-walk increments (``n - 1``). Log spot prices
    are anchored at zero for the first ``k`` months and built forward with
    ``log S[t+k] = log S[t] + x[t]``; futures quotes are ``S * exp(y)``.
    """
    spec.validate()
    n, k = spec.n, spec.k
    rng = np.random.default_rng(spec.seed)
    y_full = spec.premium_process.draw(n + k, rng)
    u = spec.sigma_u * rng.standard_normal(n)
    beta = spec.beta_path_true.realize(n, rng)
    y = y_full[:n]
    x = spec.alpha_true + beta * y + u

    log_s = np.zeros(n + k)
    for t in range(n):
        log_s[t + k] = log_s[t] + x[t]
    log_f = log_s + y_full
    start = to_month(spec.start)
    spot = PriceSeries(start, np.exp(log_s), "spot")
    futures = PriceSeries(start, np.exp(log_f), "futures")
    return SimulatedMarket(spot, futures, beta, x, y, spec)
