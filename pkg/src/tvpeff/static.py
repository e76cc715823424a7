"""Constant-coefficient regression of spot returns on the futures premium.

``x_t = alpha + beta * y_t + u_t`` is fit by OLS with Newey-West (Bartlett)
standard errors. Parameter constancy is checked with Hansen's joint L
statistic over (alpha, beta, sigma^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CollinearityError, DomainError, NumericalError
from .series import AlignedSample

# Asymptotic critical values of Hansen's L_c by number of tested parameters.
# Source: Hansen (1992), "Testing for parameter instability in linear
# models", Journal of Policy Modeling 14(4), Table 1.
HANSEN_LC_CV = {
    1: {0.01: 0.748, 0.05: 0.470, 0.10: 0.353},
    2: {0.01: 1.07, 0.05: 0.749, 0.10: 0.610},
    3: {0.01: 1.35, 0.05: 1.01, 0.10: 0.846},
    4: {0.01: 1.60, 0.05: 1.24, 0.10: 1.07},
    5: {0.01: 1.88, 0.05: 1.47, 0.10: 1.28},
}


def nw_bandwidth(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


@dataclass(frozen=True)
class StaticFit:
    alpha: float
    beta: float
    se_alpha: float
    se_beta: float
    r2_adj: float
    residuals: np.ndarray
    hac_bandwidth: int
    cov: np.ndarray
    n: int
    lc_stat: float | None = None
    lc_reject: bool | None = None

    @property
    def sigma2(self) -> float:
        return float(self.residuals @ self.residuals / self.n)


def hac_cov(design: np.ndarray, resid: np.ndarray, bandwidth: int) -> np.ndarray:
    """Newey-West sandwich covariance with Bartlett weights ``1 - j/(L+1)``.

    No small-sample degrees-of-freedom correction is applied, so with
    ``bandwidth=0`` this is White's HC0 estimator.
    """
    scores = design * resid[:, None]
    meat = scores.T @ scores
    for lag in range(1, bandwidth + 1):
        w = 1.0 - lag / (bandwidth + 1.0)
        gamma = scores[lag:].T @ scores[:-lag]
        meat += w * (gamma + gamma.T)
    bread = np.linalg.inv(design.T @ design)
    return bread @ meat @ bread


def ols_fit(sample: AlignedSample, bandwidth: int | None = None) -> StaticFit:
    """OLS of ``x`` on ``(1, y)`` with HAC standard errors.

    ``bandwidth`` defaults to ``floor(4 * (n / 100) ** (2 / 9))``.
    """
    n = sample.n
    if n < 10:
        raise DomainError(f"static regression needs n >= 10, got {n}")
    x, y = sample.x, sample.y
    ybar = y.mean()
    syy = np.sum((y - ybar) ** 2)
    if syy <= 1e-28 * max(1.0, n * ybar * ybar):
        raise CollinearityError("futures premium is constant; slope is not identified")
    xbar = x.mean()
    beta = float(np.sum((y - ybar) * (x - xbar)) / syy)
    alpha = float(xbar - beta * ybar)
    resid = x - alpha - beta * y
    design = np.column_stack([np.ones(n), y])
    if bandwidth is None:
        bandwidth = nw_bandwidth(n)
    cov = hac_cov(design, resid, int(bandwidth))
    sst = np.sum((x - xbar) ** 2)
    ssr = resid @ resid
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - 2)
    se = np.sqrt(np.diag(cov))
    return StaticFit(alpha=alpha, beta=beta, se_alpha=float(se[0]), se_beta=float(se[1]),
                     r2_adj=float(r2_adj), residuals=resid, hac_bandwidth=int(bandwidth),
                     cov=cov, n=n)


@dataclass(frozen=True)
class HansenResult:
    statistic: float
    critical_value: float
    reject: bool
    individual: np.ndarray


def hansen_lc(fit: StaticFit, sample: AlignedSample, size: float = 0.05) -> HansenResult:
    """Hansen's joint L_c test for constancy of (alpha, beta, sigma^2).

    Scores are ``f_t = (u_t, u_t * y_t, u_t**2 - sigma2)``; with cumulative
    sums ``S_i`` and ``V = sum f_t f_t'`` the statistic is
    ``n**-1 * sum_i S_i' V^-1 S_i``.
    """
    if fit.n != sample.n:
        raise DomainError("fit and sample lengths differ")
    u = fit.residuals
    scores = np.column_stack([u, u * sample.y, u * u - fit.sigma2])
    v = scores.T @ scores
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"score covariance is singular (condition number {cond:.3g})")
    cums = np.cumsum(scores, axis=0)
    vinv = np.linalg.inv(v)
    stat = float(np.einsum("ti,ij,tj->", cums, vinv, cums) / fit.n)
    individual = np.sum(cums * cums, axis=0) / np.diag(v) / fit.n
    cv = HANSEN_LC_CV[scores.shape[1]][size]
    return HansenResult(statistic=stat, critical_value=cv, reject=stat > cv, individual=individual)


def fit_static(sample: AlignedSample, bandwidth: int | None = None) -> StaticFit:
    """OLS fit with the L_c statistic and its 5% decision attached."""
    fit = ols_fit(sample, bandwidth)
    lc = hansen_lc(fit, sample)
    return replace(fit, lc_stat=lc.statistic, lc_reject=lc.reject)
