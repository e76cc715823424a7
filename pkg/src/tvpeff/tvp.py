"""Time-varying slope regression with a random-walk coefficient.

Model::

    x_t = alpha + beta_t * y_t + u_t,      u_t ~ N(0, s2)
    beta_t = beta_{t-1} + v_t,             v_t ~ N(0, s2 / lam),  beta_0 given

All of ``(alpha, beta_1..beta_n)`` are estimated at once by weighted least
squares on a stacked system: ``n`` observation rows ``(1, y_t e_t')`` with
response ``x_t`` followed by ``n`` state rows (``beta_1 = beta_0`` and the
first differences ``beta_t - beta_{t-1} = 0``) weighted by ``sqrt(lam)``.
The solution coincides with the fixed-interval Kalman smoother.

The normal equations have an arrowhead shape: a tridiagonal block for the
betas bordered by one dense row/column for alpha. They are solved by a banded
Cholesky factorization and a scalar Schur complement, so the factorization
depends only on ``(y, lam)`` and can be shared by any number of responses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import cho_solve_banded, cholesky_banded, LinAlgError
from scipy.optimize import minimize_scalar

from .errors import DomainError, IdentificationError, NumericalError
from .series import AlignedSample
from .static import ols_fit

LAMBDA_GRID = np.logspace(-3, 6, 40)


@dataclass(frozen=True)
class StackedSystem:
    design: sparse.csr_matrix
    response: np.ndarray
    weights: np.ndarray

    def weighted(self):
        w = sparse.diags(self.weights)
        return (w @ self.design).tocsr(), self.weights * self.response


def build_stacked(sample: AlignedSample, beta0: float, lam: float) -> StackedSystem:
    """Assemble the ``2n x (n+1)`` stacked regression for ``(alpha, beta)``."""
    lam = float(lam)
    if not lam > 0 or not math.isfinite(lam):
        raise DomainError(f"variance ratio must be positive and finite, got {lam}")
    n = sample.n
    if n < 3:
        raise DomainError("stacked system needs n >= 3")
    t = np.arange(n)
    rows = np.concatenate([t, t, [n], n + t[1:], n + t[1:]])
    cols = np.concatenate([np.zeros(n, int), 1 + t, [1], t[1:], 1 + t[1:]])
    vals = np.concatenate([np.ones(n), sample.y, [1.0], -np.ones(n - 1), np.ones(n - 1)])
    # drop structural zeros where y_t == 0
    keep = vals != 0
    design = sparse.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(2 * n, n + 1))
    response = np.concatenate([sample.x, [beta0], np.zeros(n - 1)])
    weights = np.concatenate([np.ones(n), np.full(n, math.sqrt(lam))])
    return StackedSystem(design, response, weights)


class TvpSolver:
    """Factorized normal equations for a fixed premium path and ``lam``.

    ``solve`` accepts a matrix of responses (one column per replication)
    and a matching vector of priors; each column is handled independently,
    so results do not depend on how columns are batched.
    """

    def __init__(self, y, lam: float):
        y = np.asarray(y, dtype=float)
        lam = float(lam)
        if not lam > 0 or not math.isfinite(lam):
            raise DomainError(f"variance ratio must be positive and finite, got {lam}")
        n = y.shape[0]
        self.y = y
        self.lam = lam
        self.n = n
        # upper banded storage of diag(y^2) + lam * P'P
        ab = np.zeros((2, n))
        ab[1] = y * y + 2.0 * lam
        ab[1, -1] = y[-1] ** 2 + lam
        ab[0, 1:] = -lam
        try:
            self._chol = cholesky_banded(ab, lower=False)
        except LinAlgError as exc:
            raise NumericalError(f"state block not positive definite at lam={lam:g}") from exc
        self.logdet = 2.0 * float(np.sum(np.log(self._chol[1])))
        self._g = cho_solve_banded((self._chol, False), y)
        self._schur = n - float(y @ self._g)
        if not self._schur > 1e-12 * n:
            raise NumericalError("intercept not identified (Schur complement vanishes)")

    def solve(self, x, beta0):
        """Return ``(alpha, beta)`` with shapes ``(m,)`` and ``(n, m)``."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        x2 = x[:, None] if squeeze else x
        b0 = np.broadcast_to(np.asarray(beta0, dtype=float), (x2.shape[1],))
        # column-contiguous so each column reduces in the same order at any batch width
        x2 = np.asfortranarray(x2)
        rhs = np.asfortranarray(self.y[:, None] * x2)
        rhs[0] += self.lam * b0
        h = np.asfortranarray(cho_solve_banded((self._chol, False), rhs))
        yh = np.asfortranarray(self.y[:, None] * h)
        alpha = (x2.sum(axis=0) - yh.sum(axis=0)) / self._schur
        beta = h - self._g[:, None] * alpha
        if squeeze:
            return float(alpha[0]), beta[:, 0]
        return alpha, beta

    def objective(self, x, alpha, beta, beta0):
        """Weighted stacked sum of squares at ``(alpha, beta)``."""
        x2 = x[:, None] if np.ndim(x) == 1 else x
        b2 = beta[:, None] if beta.ndim == 1 else beta
        resid = x2 - alpha - self.y[:, None] * b2
        dif = np.diff(b2, axis=0)
        pen = (b2[0] - beta0) ** 2 + (dif * dif).sum(axis=0)
        out = (resid * resid).sum(axis=0) + self.lam * pen
        return out[0] if np.ndim(x) == 1 else out

    def loglik(self, x, beta0):
        """Profile Gaussian log-likelihood with ``alpha`` and ``s2`` concentrated out.

        Uses ``log|Omega| = log|H| - n log(lam)`` where ``Omega`` is the
        observation covariance scaled by ``1/s2`` and ``H`` the factorized
        state block.
        """
        alpha, beta = self.solve(x, beta0)
        rss = self.objective(x, alpha, beta, beta0)
        n = self.n
        s2 = rss / n
        return -0.5 * n * (math.log(2 * math.pi) + 1.0 + np.log(s2)) \
            - 0.5 * (self.logdet - n * math.log(self.lam))


@dataclass(frozen=True)
class TvpFit:
    alpha: float
    beta_path: np.ndarray
    lam: float
    beta0: float
    residuals_obs: np.ndarray
    loglik: float
    sigma2_u: float
    lambda_selected: bool = False

    @property
    def n(self) -> int:
        return self.beta_path.shape[0]


def gls_slope(sample: AlignedSample) -> float:
    """Prais-Winsten slope allowing AR(1) errors (one feasible-GLS step)."""
    fit = ols_fit(sample)
    u = fit.residuals
    rho = float(u[1:] @ u[:-1] / (u @ u))
    rho = max(min(rho, 0.99), -0.99)
    c = math.sqrt(1.0 - rho * rho)
    ones = np.concatenate([[c], np.full(sample.n - 1, 1.0 - rho)])
    yq = np.concatenate([[c * sample.y[0]], sample.y[1:] - rho * sample.y[:-1]])
    xq = np.concatenate([[c * sample.x[0]], sample.x[1:] - rho * sample.x[:-1]])
    coef, *_ = np.linalg.lstsq(np.column_stack([ones, yq]), xq, rcond=None)
    return float(coef[1])


def resolve_prior(sample: AlignedSample, prior) -> float:
    if prior is None or prior == "ols":
        return ols_fit(sample).beta
    if prior == "gls":
        return gls_slope(sample)
    try:
        return float(prior)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"prior must be 'ols', 'gls' or a number, got {prior!r}") from exc


def profile_loglik(y, x, beta0, lam):
    return TvpSolver(y, lam).loglik(x, beta0)


def select_lambda(y, x, beta0, grid=LAMBDA_GRID) -> float:
    """Maximize the profile likelihood over ``grid``, then refine once.

    The refinement is a golden-section search in ``log10(lam)`` bracketed by
    the grid neighbours of the best point; a best point on the edge of the
    grid is returned unrefined.
    """
    ll = np.array([TvpSolver(y, g).loglik(x, beta0) for g in grid])
    if not np.all(np.isfinite(ll)):
        raise NumericalError("non-finite likelihood on the lambda grid")
    i = int(np.argmax(ll))
    if i == 0 or i == len(grid) - 1:
        return float(grid[i])
    lo, mid, hi = np.log10(grid[i - 1]), np.log10(grid[i]), np.log10(grid[i + 1])
    if not (ll[i] > ll[i - 1] and ll[i] > ll[i + 1]):
        return float(grid[i])

    def neg(z):
        return -TvpSolver(y, 10.0 ** z).loglik(x, beta0)

    res = minimize_scalar(neg, bracket=(lo, mid, hi), method="golden",
                          options={"xtol": 1e-4})
    z = float(np.clip(res.x, lo, hi))
    if -res.fun < ll[i]:
        return float(grid[i])
    return float(10.0 ** z)


def tvp_fit(sample: AlignedSample, lam="auto", prior="ols") -> TvpFit:
    """Estimate ``alpha`` and the slope path ``beta_1..beta_n``.

    Parameters
    ----------
    sample : AlignedSample
    lam : float or "auto"
        Variance ratio ``s2_u / s2_v``. ``"auto"`` maximizes the profile
        likelihood over ``LAMBDA_GRID`` with one golden-section refinement.
    prior : {"ols", "gls"} or float
        Prior mean ``beta_0`` of the first state.
    """
    if sample.n < 3:
        raise DomainError("time-varying fit needs n >= 3")
    beta0 = resolve_prior(sample, prior)
    selected = isinstance(lam, str)
    if selected:
        if lam != "auto":
            raise DomainError(f"lambda must be 'auto' or a positive number, got {lam!r}")
        if sample.n < 30:
            raise DomainError("automatic lambda selection needs n >= 30")
        if np.all(sample.y == 0):
            raise IdentificationError("premium is identically zero; variance ratio not identified")
        lam = select_lambda(sample.y, sample.x, beta0)
    solver = TvpSolver(sample.y, lam)
    alpha, beta = solver.solve(sample.x, beta0)
    resid = sample.x - alpha - beta * sample.y
    rss = solver.objective(sample.x, alpha, beta, beta0)
    return TvpFit(alpha=alpha, beta_path=beta, lam=float(lam), beta0=beta0,
                  residuals_obs=resid, loglik=float(solver.loglik(sample.x, beta0)),
                  sigma2_u=float(rss / sample.n), lambda_selected=selected)


# -- independent recursions, used as test oracles -----------------------------

def _filter(x, y, lam, beta0, alpha):
    n = len(x)
    q = 1.0 / lam
    b_pred = np.empty(n)
    p_pred = np.empty(n)
    b_filt = np.empty(n)
    p_filt = np.empty(n)
    innov = np.empty(n)
    fvar = np.empty(n)
    b, p = beta0, q
    for t in range(n):
        b_pred[t], p_pred[t] = b, p
        e = (x[t] - alpha) - y[t] * b
        s = y[t] * y[t] * p + 1.0
        gain = p * y[t] / s
        b = b + gain * e
        p = p - gain * y[t] * p
        b_filt[t], p_filt[t] = b, p
        innov[t], fvar[t] = e, s
        p = p + q
    return b_pred, p_pred, b_filt, p_filt, innov, fvar


def kalman_smoother_oracle(sample: AlignedSample, lam: float, beta0: float, alpha: float):
    """Rauch-Tung-Striebel smoothed slope path for fixed ``alpha``.

    ``sample`` is an AlignedSample or an ``(x, y)`` pair of arrays.

    Observation variance is normalized to one, state variance is ``1/lam``
    and the first state has prior ``N(beta0, 1/lam)``.
    """
    if not lam > 0:
        raise DomainError("variance ratio must be positive")
    if isinstance(sample, AlignedSample):
        x, y = sample.x, sample.y
    else:
        x, y = (np.asarray(v, dtype=float) for v in sample)
    b_pred, p_pred, b_filt, p_filt, _, _ = _filter(x, y, lam, beta0, alpha)
    n = len(x)
    smooth = b_filt.copy()
    for t in range(n - 2, -1, -1):
        j = p_filt[t] / p_pred[t + 1]
        smooth[t] = b_filt[t] + j * (smooth[t + 1] - b_pred[t + 1])
    return smooth


def kalman_loglik(sample: AlignedSample, lam: float, beta0: float, alpha: float, s2: float):
    """Prediction-error decomposition of the Gaussian log-likelihood."""
    _, _, _, _, innov, fvar = _filter(sample.x, sample.y, lam, beta0, alpha)
    f = s2 * fvar
    return float(-0.5 * np.sum(np.log(2 * np.pi * f) + innov ** 2 / f))
