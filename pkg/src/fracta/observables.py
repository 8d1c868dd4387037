"""Regular-grid observables built from trade and floor-price events."""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .marketdata import CollectionMeta, EventSeries

HOUR = 3600

OBSERVABLES = ("c_sol", "c_usd", "r_sol", "r_usd", "N", "dt", "V_sol", "V_usd")
# series whose tails and autocorrelations are studied through the modulus
SIGNED = frozenset({"c_sol", "c_usd", "r_sol", "r_usd"})


@dataclass(frozen=True)
class SampledSeries:
    """Values on the grid ``t0 + i * dt``."""

    t0: int
    dt: int
    values: np.ndarray
    unit: str = "dimensionless"

    def __len__(self):
        return len(self.values)

    @property
    def timestamps(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values), dtype=np.int64)


@dataclass(frozen=True)
class CapitalizationEvent:
    timestamp: int
    c_sol: float
    c_usd: float


@dataclass(frozen=True)
class SummaryStats:
    K: int
    T: int
    mean_delta_t: float
    mean_N: float
    mean_V_sol: float
    zero_frac_c: float | None
    zero_frac_r: float | None

    def to_dict(self) -> dict:
        return asdict(self)


class _Sum:
    """Neumaier-compensated running sum; keeps C exact to ~1 ulp over long streams."""

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float):
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t

    @property
    def value(self) -> float:
        return self.s + self.c


def capitalization_events(trades: EventSeries) -> EventSeries:
    """Collection capitalization after every trade, in SOL and USD.

    C is the sum over tokens of each token's last transaction price; a trade
    replaces its token's previous price.
    """
    last: dict[str, tuple[float, float]] = {}
    c_sol, c_usd = _Sum(), _Sum()
    out = []
    for e in trades:
        old = last.get(e.token_id)
        if old is not None:
            c_sol.add(-old[0])
            c_usd.add(-old[1])
        c_sol.add(e.price_sol)
        c_usd.add(e.price_usd)
        last[e.token_id] = (e.price_sol, e.price_usd)
        out.append(CapitalizationEvent(e.timestamp, c_sol.value, c_usd.value))
    return EventSeries(tuple(out))


def grid_origin(first_time: int, dt: int = HOUR) -> tuple[int, int]:
    """``(bin_origin, sample_origin)`` for a stream starting at ``first_time``.

    Count bins start at ``first_time`` floored to the grid; the first
    sample-and-hold instant is the next grid point after that.
    """
    g0 = (int(first_time) // dt) * dt
    return g0, g0 + dt


def n_bins(first_time: int, last_time: int, dt: int = HOUR) -> int:
    g0, _ = grid_origin(first_time, dt)
    return (int(last_time) - g0) // dt + 1


def sample_hold(times, values, t0: int, dt: int = HOUR, n: int | None = None, unit="dimensionless") -> SampledSeries:
    """Sample the step function defined by events on ``t0 + i * dt``.

    Each grid point takes the last event value at or before it. ``n``
    defaults to the number of grid points up to the last event.
    """
    times = np.asarray(times, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    if len(times) == 0:
        raise ValueError("sample_hold needs at least one event")
    if n is None:
        n = max(int(times[-1] - t0) // dt + 1, 1)
    grid = int(t0) + dt * np.arange(n, dtype=np.int64)
    idx = np.searchsorted(times, grid, side="right") - 1
    if n and idx[0] < 0:
        raise ValueError(f"grid point {grid[0]} precedes the first event at {times[0]}")
    return SampledSeries(int(t0), int(dt), values[idx], unit)


def log_returns(series: SampledSeries) -> SampledSeries:
    v = np.asarray(series.values, dtype=float)
    if np.any(v <= 0):
        raise ValueError("log returns need strictly positive values")
    logv = np.log(v)
    return SampledSeries(series.t0, series.dt, logv[1:] - logv[:-1], "dimensionless")


def _bin_index(trades: EventSeries, t0: int, dt: int, n: int | None):
    t = trades.times
    if n is None:
        n = int(t[-1] - t0) // dt + 1 if len(t) else 0
    idx = (t - int(t0)) // dt
    keep = (idx >= 0) & (idx < n)
    return idx[keep], keep, n


def transaction_counts(trades: EventSeries, t0: int, dt: int = HOUR, n: int | None = None) -> SampledSeries:
    """Number of trades in each bin ``[t0 + i dt, t0 + (i+1) dt)``."""
    idx, _, n = _bin_index(trades, t0, dt, n)
    return SampledSeries(int(t0), int(dt), np.bincount(idx, minlength=n).astype(float), "count")


def volume_value_series(trades: EventSeries, t0: int, dt: int = HOUR, n: int | None = None):
    """Summed trade prices per bin, ``(V_sol, V_usd)``. Every trade moves one token."""
    idx, keep, n = _bin_index(trades, t0, dt, n)
    out = []
    for col, unit in (("price_sol", "SOL"), ("price_usd", "USD")):
        w = trades.column(col)[keep] if len(trades) else np.zeros(0)
        out.append(SampledSeries(int(t0), int(dt), np.bincount(idx, weights=w, minlength=n), unit))
    return tuple(out)


def inter_transaction_times(trades: EventSeries) -> np.ndarray:
    """Gaps between consecutive trades in seconds; same-second trades give 0."""
    if len(trades) < 2:
        raise ValueError("inter-transaction times need at least two trades")
    return np.diff(trades.times).astype(float)


def zero_fraction(values) -> float:
    v = np.asarray(getattr(values, "values", values), dtype=float)
    if len(v) == 0:
        raise ValueError("zero fraction of an empty series")
    return float(np.count_nonzero(v == 0.0)) / len(v)


def build_observables(trades: EventSeries, quotes: EventSeries | None, dt: int = HOUR) -> dict:
    """All eight analysis series for one (already trimmed) collection.

    Keys follow :data:`OBSERVABLES`; floor-price entries are ``None`` when
    no quotes are available. ``"C"`` and ``"floor"`` hold the sampled levels.
    """
    if len(trades) == 0:
        raise ValueError("no trades to build observables from")
    times = trades.times
    g0, t0 = grid_origin(times[0], dt)
    nb = n_bins(times[0], times[-1], dt)

    cap = capitalization_events(trades)
    cap_t = cap.times
    C_sol = sample_hold(cap_t, cap.column("c_sol"), t0, dt, nb, "SOL")
    C_usd = sample_hold(cap_t, cap.column("c_usd"), t0, dt, nb, "USD")
    V_sol, V_usd = volume_value_series(trades, g0, dt, nb)
    out = {
        "C_sol": C_sol,
        "C_usd": C_usd,
        "c_sol": log_returns(C_sol),
        "c_usd": log_returns(C_usd),
        "N": transaction_counts(trades, g0, dt, nb),
        "dt": inter_transaction_times(trades) if len(trades) >= 2 else np.zeros(0),
        "V_sol": V_sol,
        "V_usd": V_usd,
        "floor_sol": None,
        "floor_usd": None,
        "r_sol": None,
        "r_usd": None,
    }
    if quotes is not None and len(quotes):
        qt = quotes.times
        _, q0 = grid_origin(qt[0], dt)
        qn = n_bins(qt[0], qt[-1], dt)
        for unit, col in (("sol", "floor_sol"), ("usd", "floor_usd")):
            level = sample_hold(qt, quotes.column(col), q0, dt, qn, unit.upper())
            out[f"floor_{unit}"] = level
            out[f"r_{unit}"] = log_returns(level)
    return out


def collection_summary(trades: EventSeries, quotes: EventSeries | None, meta: CollectionMeta,
                       dt: int = HOUR, observables: dict | None = None) -> SummaryStats:
    """Collection-level characteristics (token count, length, mean activity, zero returns)."""
    obs = observables if observables is not None else build_observables(trades, quotes, dt)
    gaps = obs["dt"]
    c = obs["c_sol"]
    r = obs["r_sol"]
    return SummaryStats(
        K=int(meta.token_count),
        T=len(obs["N"]),
        mean_delta_t=float(np.mean(gaps)) if len(gaps) else float("nan"),
        mean_N=float(np.mean(obs["N"].values)),
        mean_V_sol=float(np.mean(obs["V_sol"].values)),
        zero_frac_c=zero_fraction(c) if len(c) else None,
        zero_frac_r=zero_fraction(r) if r is not None and len(r) else None,
    )
