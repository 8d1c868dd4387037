"""Linear autocorrelation and a decay-time summary."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONFIRM_WINDOW = 10


@dataclass(frozen=True)
class AcfCurve:
    lags: np.ndarray
    values: np.ndarray
    dt: float = 3600.0  # seconds per lag step; 0 for event-indexed series
    n: int = 0

    @property
    def tau_hours(self) -> np.ndarray:
        return self.lags * self.dt / 3600.0


@dataclass(frozen=True)
class CorrelationTime:
    lag: int
    threshold: float
    censored: bool


def default_max_lag(T: int) -> int:
    return max(1, min(T // 4, 2000))


def acf(series, max_lag: int | None = None, dt: float = 3600.0) -> AcfCurve:
    """Autocorrelation with global mean and variance and a 1/T normalization.

    A(k) = (1/T) sum_{i<T-k} (x_i - m)(x_{i+k} - m) / var(x). The 1/T factor
    (rather than 1/(T-k)) biases A towards zero by k/T at lag k.
    """
    x = np.asarray(getattr(series, "values", series), dtype=float)
    T = len(x)
    if max_lag is None:
        max_lag = default_max_lag(T)
    max_lag = int(max_lag)
    if not 1 <= max_lag < T:
        raise ValueError(f"need 1 <= max_lag < T, got max_lag={max_lag}, T={T}")
    d = x - x.mean()
    c0 = float(np.dot(d, d))
    if not c0 > 0:
        raise ValueError("autocorrelation of a constant series is undefined")
    vals = np.empty(max_lag + 1)
    vals[0] = 1.0
    for k in range(1, max_lag + 1):
        vals[k] = np.dot(d[:-k], d[k:]) / c0
    return AcfCurve(np.arange(max_lag + 1), vals, float(dt), T)


def correlation_time(curve: AcfCurve, threshold: float | None = None,
                     window: int = CONFIRM_WINDOW) -> CorrelationTime:
    """First lag at which A falls below ``threshold`` and stays there.

    "Stays" means the mean of A over the ``window`` lags starting at the
    crossing is below ``threshold`` as well; single-lag noise excursions of
    size ~1/sqrt(T) do not reset the clock. ``threshold`` defaults to
    2/sqrt(T). When no such lag exists the last lag is returned with
    ``censored=True``.
    """
    if threshold is None:
        threshold = 2.0 / np.sqrt(curve.n if curve.n else len(curve.values))
    v = curve.values
    for k in range(1, len(v) - window + 1):
        if v[k] < threshold and v[k:k + window].mean() < threshold:
            return CorrelationTime(int(curve.lags[k]), float(threshold), False)
    return CorrelationTime(int(curve.lags[-1]), float(threshold), True)
