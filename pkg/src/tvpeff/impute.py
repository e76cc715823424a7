"""Gap filling with a seasonal structural state-space model.

The model is a local level plus an 11-dummy stochastic monthly seasonal,
fit by maximum likelihood on log prices. Missing months are replaced by the
exponentiated smoothed signal (level + seasonal); observed months are left
untouched.
"""
from __future__ import annotations

import warnings

import numpy as np
from statsmodels.tsa.statespace.structural import UnobservedComponents

from .errors import ImputationError
from .series import PriceSeries

MIN_PRESENT = 24
MAX_GAP_RUN = 11
SEASON = 12


def gap_runs(values) -> list[tuple[int, int]]:
    """Return ``(first, length)`` for every run of consecutive missing values."""
    miss = np.isnan(np.asarray(values, dtype=float))
    runs = []
    i = 0
    while i < len(miss):
        if miss[i]:
            j = i
            while j < len(miss) and miss[j]:
                j += 1
            runs.append((i, j - i))
            i = j
        else:
            i += 1
    return runs


def _check(series: PriceSeries):
    v = series.values
    name = series.label or "series"
    present = int(np.sum(~np.isnan(v)))
    if present < MIN_PRESENT:
        raise ImputationError(f"{name}: {present} present values, need at least {MIN_PRESENT}",
                              series.missing.tolist())
    boundary = [i for i in (0, len(v) - 1) if np.isnan(v[i])]
    if boundary:
        raise ImputationError(f"{name}: first and last values must be present", boundary)
    long_runs = [(i, n) for i, n in gap_runs(v) if n > MAX_GAP_RUN]
    if long_runs:
        bad = [p for i, n in long_runs for p in range(i, i + n)]
        raise ImputationError(f"{name}: gap runs of 12 or more months cannot be imputed", bad)


def impute_missing(series: PriceSeries) -> PriceSeries:
    """Fill missing months; a gap-free series is returned as is."""
    if not series.has_gaps():
        return series
    _check(series)
    logp = np.log(series.values)
    model = UnobservedComponents(logp, level="local level", seasonal=SEASON,
                                 stochastic_seasonal=True)
    with warnings.catch_warnings():
        # variance estimates on the boundary are expected for smooth series
        warnings.simplefilter("ignore")
        res = model.fit(disp=False)
    # state layout: [level, seasonal_t, seasonal_{t-1}, ...]
    signal = res.smoothed_state[0] + res.smoothed_state[1]
    if not np.all(np.isfinite(signal[series.missing])):
        raise ImputationError(f"{series.label or 'series'}: smoother produced non-finite values",
                              series.missing.tolist())
    filled = series.values.copy()
    filled[series.missing] = np.exp(signal[series.missing])
    return PriceSeries(series.start, filled, series.label)
