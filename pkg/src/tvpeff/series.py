"""Monthly price containers, log transforms and horizon alignment.

Months are represented as ``numpy.datetime64`` values with unit ``'M'``, so
calendar arithmetic is plain integer addition.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DomainError, ImputationError

MONTH = "datetime64[M]"


def to_month(value) -> np.datetime64:
    """Coerce ``'YYYY-MM'``, ``(year, month)`` or a datetime64 into a month."""
    if isinstance(value, tuple):
        year, month = value
        value = f"{int(year):04d}-{int(month):02d}"
    try:
        return np.datetime64(value, "M")
    except (ValueError, TypeError) as exc:
        raise DomainError(f"not a calendar month: {value!r}") from exc


def month_range(start, n: int) -> np.ndarray:
    return to_month(start) + np.arange(n)


def format_month(m) -> str:
    return str(np.datetime64(m, "M"))


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """Contiguous monthly price levels; ``nan`` marks a missing month."""

    start: np.datetime64
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "start", to_month(self.start))
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DomainError("price values must be one-dimensional")
        present = values[~np.isnan(values)]
        if not np.all(np.isfinite(present)) or np.any(present <= 0):
            bad = np.flatnonzero(~np.isnan(values) & ~(np.isfinite(values) & (values > 0)))
            raise DomainError(f"{self.label or 'series'}: prices must be positive and finite "
                              f"(bad positions {bad.tolist()})")
        object.__setattr__(self, "values", _frozen(values))

    def __len__(self):
        return len(self.values)

    @property
    def end(self) -> np.datetime64:
        return self.start + (len(self.values) - 1)

    @property
    def dates(self) -> np.ndarray:
        return month_range(self.start, len(self.values))

    @property
    def missing(self) -> np.ndarray:
        return np.flatnonzero(np.isnan(self.values))

    def has_gaps(self) -> bool:
        return bool(np.isnan(self.values).any())

    def window(self, first, last) -> "PriceSeries":
        """Sub-series covering months ``first..last`` inclusive."""
        i = int((to_month(first) - self.start).astype(int))
        j = int((to_month(last) - self.start).astype(int))
        if i < 0 or j >= len(self) or j < i:
            raise AlignmentError(f"{self.label}: window {first}..{last} outside "
                                 f"{format_month(self.start)}..{format_month(self.end)}")
        return PriceSeries(self.start + i, self.values[i:j + 1], self.label)

    def scaled(self, c: float) -> "PriceSeries":
        return PriceSeries(self.start, self.values * c, self.label)


@dataclass(frozen=True)
class AlignedSample:
    """Paired spot returns ``x`` and futures premiums ``y`` for horizon ``k``."""

    horizon_k: int
    x: np.ndarray
    y: np.ndarray
    start: np.datetime64
    label: str = ""
    n: int = field(init=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise DomainError("x and y must be 1-d sequences of equal length")
        if len(x) < 2:
            raise DomainError(f"aligned sample needs at least 2 observations, got {len(x)}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DomainError("aligned sample contains missing or non-finite values")
        if int(self.horizon_k) < 1:
            raise DomainError("horizon k must be >= 1")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "start", to_month(self.start))
        object.__setattr__(self, "n", len(x))

    @property
    def dates(self) -> np.ndarray:
        return month_range(self.start, self.n)

    def with_xy(self, x=None, y=None) -> "AlignedSample":
        return AlignedSample(self.horizon_k, self.x if x is None else x,
                             self.y if y is None else y, self.start, self.label)


def _require_complete(series: PriceSeries):
    if series.has_gaps():
        raise ImputationError(f"{series.label or 'series'} has missing values; "
                              "run impute_missing first", series.missing.tolist())


def spot_return(spot: PriceSeries, k: int) -> np.ndarray:
    """k-month log return ``log S[t+k] - log S[t]``; length ``len(spot) - k``."""
    _require_complete(spot)
    k = int(k)
    if k <= 0 or k >= len(spot):
        raise DomainError(f"horizon k={k} outside 1..{len(spot) - 1}")
    logs = np.log(spot.values)
    return logs[k:] - logs[:-k]


def futures_premium(spot: PriceSeries, futures: PriceSeries, k: int) -> np.ndarray:
    """Log premium ``log F[t] - log S[t]`` truncated to match :func:`spot_return`.

    Both series must start in the same month. The common length ``L`` is the
    shorter of the two and the output holds the first ``L - k`` premiums.
    """
    if spot.start != futures.start:
        raise AlignmentError(f"spot starts {format_month(spot.start)} but futures starts "
                             f"{format_month(futures.start)}")
    _require_complete(spot)
    _require_complete(futures)
    k = int(k)
    length = min(len(spot), len(futures))
    if k <= 0 or k >= length:
        raise DomainError(f"horizon k={k} outside 1..{length - 1}")
    prem = np.log(futures.values[:length]) - np.log(spot.values[:length])
    return prem[:length - k]


def overlap(a: PriceSeries, b: PriceSeries) -> tuple[np.datetime64, np.datetime64]:
    first = max(a.start, b.start)
    last = min(a.end, b.end)
    if last < first:
        raise AlignmentError(f"no calendar overlap between '{a.label}' "
                             f"({format_month(a.start)}..{format_month(a.end)}) and '{b.label}' "
                             f"({format_month(b.start)}..{format_month(b.end)})")
    return first, last


def align(spot: PriceSeries, futures: PriceSeries, k: int, label: str | None = None) -> AlignedSample:
    """Cut both series to their calendar overlap and form ``(x, y)``."""
    first, last = overlap(spot, futures)
    length = int((last - first).astype(int)) + 1
    if length <= int(k) + 1:
        raise AlignmentError(f"overlap of {length} months too short for k={k}")
    s = spot.window(first, last)
    f = futures.window(first, last)
    x = spot_return(s, k)
    y = futures_premium(s, f, k)
    if label is None:
        label = f"{spot.label}/{futures.label}" if spot.label or futures.label else ""
    return AlignedSample(int(k), x, y, first, label)


@dataclass(frozen=True)
class Moments:
    mean: float
    sd: float
    min: float
    max: float


@dataclass(frozen=True)
class Descriptive:
    x: Moments
    y: Moments
    n: int


def _moments(v: np.ndarray) -> Moments:
    return Moments(float(np.mean(v)), float(np.std(v, ddof=1)), float(np.min(v)), float(np.max(v)))


def describe(sample: AlignedSample) -> Descriptive:
    """Mean, standard deviation (``n-1`` denominator), min and max of x and y."""
    if sample.n < 2:
        raise DomainError("describe needs n >= 2")
    return Descriptive(_moments(sample.x), _moments(sample.y), sample.n)


# -- CSV schema: columns ``date`` (YYYY-MM) and ``price`` (empty = missing) --

def read_price_csv(path, label: str | None = None) -> PriceSeries:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"date", "price"} <= set(reader.fieldnames):
            raise DomainError(f"{path}: expected columns 'date' and 'price', got {reader.fieldnames}")
        dates, prices = [], []
        for lineno, row in enumerate(reader, start=2):
            dates.append(to_month(row["date"].strip()))
            cell = (row["price"] or "").strip()
            if cell == "":
                prices.append(math.nan)
                continue
            try:
                prices.append(float(cell))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: bad price {cell!r}") from exc
    if not dates:
        raise DomainError(f"{path}: no rows")
    expected = month_range(dates[0], len(dates))
    bad = np.flatnonzero(np.array(dates, dtype=MONTH) != expected)
    if bad.size:
        raise DomainError(f"{path}: dates must be contiguous months; first break at row "
                          f"{int(bad[0]) + 2} ({format_month(dates[bad[0]])})")
    return PriceSeries(dates[0], prices, label if label is not None else path.stem)


def fmt(v: float) -> str:
    """Serialize a number as its shortest round-trip decimal."""
    return repr(float(v))


def write_price_csv(series: PriceSeries, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "price"])
        for d, v in zip(series.dates, series.values):
            w.writerow([format_month(d), "" if np.isnan(v) else fmt(v)])
