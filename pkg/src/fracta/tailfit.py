"""sigma-normalized CCDFs with power-law and stretched-exponential tail fits."""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

MIN_POINTS = 10
COMPARABLE_RATIO = 1.5


@dataclass(frozen=True)
class Ccdf:
    """Points ``(x, p)`` with ``x`` in units of ``sigma`` and ``p = P(X >= x)``."""

    x: np.ndarray
    p: np.ndarray
    sigma: float
    n: int

    def __len__(self):
        return len(self.x)


@dataclass(frozen=True)
class TailFit:
    model: str  # "power_law" | "stretched_exponential"
    exponent: float
    std_error: float
    region: tuple[float, float]
    goodness: float  # residual RMS in the fit coordinates
    n_points: int
    scale: float | None = None  # x0 of the stretched exponential
    conforming: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["region"] = list(self.region)
        return d


def empirical_ccdf(sample, take_abs: bool = False, min_n: int = 1) -> Ccdf:
    """Empirical complementary distribution on the distinct nonzero values.

    ``p`` at support point ``x_k`` is the fraction of the whole sample that
    is ``>= x_k``, so ``P(X > x_{k-1}) = p_k``. Zeros (and, without
    ``take_abs``, negative values) are excluded from the support but still
    count towards ``n`` and ``sigma``.
    """
    v = np.asarray(sample, dtype=float)
    v = v[np.isfinite(v)]
    if take_abs:
        v = np.abs(v)
    n = len(v)
    if n < max(min_n, 2):
        raise ValueError(f"sample too small for a CCDF: n={n}")
    sigma = float(np.std(v))
    if not sigma > 0:
        raise ValueError("degenerate sample: standard deviation is zero")
    pos = np.sort(v[v > 0])
    xs, first = np.unique(pos, return_index=True)
    # count of values >= xs[k] among positives is len(pos) - first[k]
    p = (len(pos) - first) / n
    return Ccdf(x=xs / sigma, p=p.astype(float), sigma=sigma, n=n)


def ccdf_from_points(x, p, sigma: float = 1.0, n: int | None = None) -> Ccdf:
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if x.shape != p.shape:
        raise ValueError("x and p must have the same length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("CCDF x values must be strictly increasing")
    if np.any(np.diff(p) > 0):
        raise ValueError("CCDF p values must be non-increasing")
    return Ccdf(x=x, p=p, sigma=float(sigma), n=int(n if n is not None else len(x)))


def select_tail_region(ccdf: Ccdf, policy: str = "quantile", q_lo: float = 0.9,
                       x_lo: float | None = None, x_hi: float | None = None,
                       min_points: int = MIN_POINTS) -> tuple[float, float]:
    """Fit region for a CCDF.

    ``quantile`` keeps every point at or above the ``q_lo`` sample quantile,
    i.e. with ``p <= 1 - q_lo``; ``fixed`` uses ``[x_lo, x_hi]`` directly.
    """
    x, p = ccdf.x, ccdf.p
    if len(x) == 0:
        raise ValueError("empty CCDF")
    if policy == "quantile":
        if not 0.0 <= q_lo < 1.0:
            raise ValueError(f"q_lo must lie in [0, 1), got {q_lo}")
        sel = p <= (1.0 - q_lo) + 1e-12
    elif policy == "fixed":
        if x_lo is None or x_hi is None or not x_lo < x_hi:
            raise ValueError("fixed policy needs x_lo < x_hi")
        if x_lo > x[-1]:
            raise ValueError(f"fixed region starts at {x_lo}, beyond the data maximum {x[-1]:.6g}")
        sel = (x >= x_lo) & (x <= x_hi)
    else:
        raise ValueError(f"unknown tail policy {policy!r}")
    count = int(np.count_nonzero(sel))
    if count == 0:
        raise ValueError("tail region is empty")
    if count < min_points:
        raise ValueError(f"tail region holds {count} points, need {min_points}")
    xs = x[sel]
    return float(xs[0]), float(xs[-1])


def _ols(u: np.ndarray, v: np.ndarray):
    """Slope, intercept, slope std error and residual RMS of v ~ u."""
    A = np.column_stack([u, np.ones_like(u)])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = v - A @ coef
    n = len(u)
    rms = float(np.sqrt(np.mean(resid**2)))
    sxx = float(np.sum((u - u.mean()) ** 2))
    stderr = float(np.sqrt(np.sum(resid**2) / (n - 2) / sxx)) if n > 2 and sxx > 0 else float("nan")
    return float(coef[0]), float(coef[1]), stderr, rms


def _in_region(ccdf: Ccdf, region):
    x, p = ccdf.x, ccdf.p
    if region is None:
        region = select_tail_region(ccdf)
    lo, hi = region
    sel = (x >= lo) & (x <= hi) & (x > 0) & (p > 0)
    return x[sel], p[sel], (float(lo), float(hi))


def fit_power_tail(ccdf: Ccdf, region=None, min_points: int = MIN_POINTS) -> TailFit:
    """Least-squares slope of ln p against ln x; the exponent is minus the slope."""
    x, p, region = _in_region(ccdf, region)
    if len(x) < min_points:
        raise ValueError(f"{len(x)} CCDF points in region, need {min_points}")
    slope, _, se, rms = _ols(np.log(x), np.log(p))
    gamma = -slope
    return TailFit("power_law", gamma, se, region, rms, len(x), conforming=gamma > 0)


def fit_stretched_exponential(ccdf: Ccdf, region=None, min_points: int = MIN_POINTS) -> TailFit:
    """Fit P(X > x) = exp(-(x / x0)**beta) as a line of ln(-ln p) against ln x.

    Points with p = 1 carry no information (ln(-ln 1) diverges) and are
    dropped. A beta outside (0, 1) is reported with ``conforming=False``.
    """
    x, p, region = _in_region(ccdf, region)
    keep = p < 1.0
    x, p = x[keep], p[keep]
    if len(x) < min_points:
        raise ValueError(f"{len(x)} CCDF points with p < 1 in region, need {min_points}")
    beta, icpt, se, rms = _ols(np.log(x), np.log(-np.log(p)))
    x0 = float(np.exp(-icpt / beta)) if beta != 0 else float("nan")
    return TailFit("stretched_exponential", beta, se, region, rms, len(x), scale=x0,
                   conforming=0.0 < beta < 1.0)


def models_comparable(a: TailFit, b: TailFit, ratio: float = COMPARABLE_RATIO) -> bool:
    """True when the two residual RMS values are within ``ratio`` of each other."""
    lo, hi = sorted([a.goodness, b.goodness])
    if hi == 0:
        return True
    return lo > 0 and hi / lo <= ratio


def hill_estimator(sample, k: int) -> tuple[float, float]:
    """Hill maximum-likelihood tail exponent from the ``k`` largest values.

    Cross-check for :func:`fit_power_tail`; returns ``(gamma, std_error)``.
    """
    v = np.sort(np.abs(np.asarray(sample, dtype=float)))[::-1]
    v = v[v > 0]
    if not 1 <= k < len(v):
        raise ValueError(f"k must lie in [1, {len(v) - 1}]")
    logs = np.log(v[:k]) - np.log(v[k])
    gamma = k / float(np.sum(logs))
    return gamma, gamma / np.sqrt(k)
