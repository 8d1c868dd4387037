"""Multifractal detrended fluctuation analysis.

Profile -> segment detrending from both ends -> q-order fluctuation
functions F_q(s) -> generalized Hurst exponents h(q) -> singularity
spectrum f(alpha).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

N_SCALES = 30
MIN_FIT_POINTS = 8
SLOPE_TOL = 0.05
SLOPE_POINTS = 7  # neighbourhood of each local-slope regression
# segment std below this fraction of max|profile| counts as zero variance
ZERO_VAR_RTOL = 1e-10


def default_q_grid(q_min: float = -4.0, q_max: float = 4.0, step: float = 0.25) -> np.ndarray:
    n = int(round((q_max - q_min) / step))
    q = q_min + step * np.arange(n + 1)
    if not np.any(np.isclose(q, 2.0)):
        q = np.sort(np.append(q, 2.0))
    q[np.isclose(q, 0.0)] = 0.0
    return q


def default_scales(T: int, degree: int = 2, n: int = N_SCALES) -> np.ndarray:
    """``n`` log-spaced integer scales from max(2(m+2), 16) to T/4 (duplicates dropped)."""
    lo = max(2 * (degree + 2), 16)
    hi = T // 4
    if hi < lo:
        raise ValueError(f"series of length {T} is too short for scales starting at {lo}")
    return np.unique(np.round(np.geomspace(lo, hi, n)).astype(int))


@dataclass
class MfdfaConfig:
    q: np.ndarray = field(default_factory=default_q_grid)
    degree: int = 2
    scales: np.ndarray | None = None  # None -> default_scales(T, degree)
    n_scales: int = N_SCALES
    workers: int = 1

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if not 1 <= int(self.degree) <= 4:
            raise ValueError(f"polynomial degree must be 1..4, got {self.degree}")
        if not np.any(self.q == 2.0):
            raise ValueError("q grid must contain q = 2")

    def scales_for(self, T: int) -> np.ndarray:
        s = default_scales(T, self.degree, self.n_scales) if self.scales is None else np.asarray(self.scales, int)
        if np.any(np.diff(s) <= 0):
            raise ValueError("scales must be strictly increasing")
        if s[0] < self.degree + 2 or s[-1] > T / 2:
            raise ValueError(f"scales must lie in [{self.degree + 2}, {T / 2}]")
        return s


@dataclass(frozen=True)
class FluctuationSurface:
    q: np.ndarray
    scales: np.ndarray
    F: np.ndarray  # shape (len(q), len(scales))
    segments: np.ndarray  # M_s per scale
    excluded: np.ndarray  # fraction of zero-variance segments dropped for q <= 0
    degree: int = 2


@dataclass(frozen=True)
class GeneralizedHurst:
    q: np.ndarray
    h: np.ndarray
    stderr: np.ndarray
    scale_range: tuple[int, int]


@dataclass(frozen=True)
class HurstResult:
    H: float
    stderr: float
    label: str


@dataclass(frozen=True)
class MultifractalSpectrum:
    q: np.ndarray
    h: np.ndarray
    stderr: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f: np.ndarray
    scale_range: tuple[int, int] | None = None
    H: float | None = None
    H_stderr: float | None = None

    @property
    def width(self) -> float:
        return float(self.alpha.max() - self.alpha.min()) if len(self.alpha) else 0.0


def profile_series(u, degree: int = 2) -> np.ndarray:
    """Cumulative sum of the mean-centered signal."""
    u = np.asarray(u, dtype=float)
    if len(u) < 4 * (degree + 2):
        raise ValueError(f"series of length {len(u)} is too short (need {4 * (degree + 2)})")
    return np.cumsum(u - u.mean())


def _detrend_basis(s: int, degree: int) -> np.ndarray:
    t = np.linspace(-1.0, 1.0, s)
    q, _ = np.linalg.qr(np.vander(t, degree + 1))
    return q


def segment_variances(X: np.ndarray, s: int, degree: int) -> np.ndarray:
    """Residual variance after degree-m detrending of the 2*floor(T/s) segments.

    Segments are cut from the start and, separately, from the end of the
    profile so that no data is left out when s does not divide T.
    """
    T = len(X)
    k = T // s
    segs = np.concatenate([X[:k * s].reshape(k, s), X[T - k * s:].reshape(k, s)])
    Q = _detrend_basis(s, degree)
    resid = segs - (segs @ Q) @ Q.T
    return np.mean((resid - resid.mean(axis=1, keepdims=True)) ** 2, axis=1)


def _fq(f2: np.ndarray, q: np.ndarray, zero_tol: float):
    F = np.empty(len(q))
    nonzero = f2 > zero_tol
    excluded = 1.0 - np.count_nonzero(nonzero) / len(f2)
    for i, qi in enumerate(q):
        if qi > 0:
            F[i] = np.mean(f2 ** (qi / 2.0)) ** (1.0 / qi)
            continue
        g = f2[nonzero]
        if len(g) == 0:
            F[i] = 0.0
        elif qi == 0:
            F[i] = np.exp(0.5 * np.mean(np.log(g)))
        else:
            F[i] = np.mean(g ** (qi / 2.0)) ** (1.0 / qi)
    return F, excluded


def fluctuation_function(u, config: MfdfaConfig | None = None) -> FluctuationSurface:
    """q-order fluctuation functions on every configured scale.

    For q <= 0 segments with (numerically) zero variance are left out and the
    dropped fraction is recorded in ``excluded``; q = 0 uses the logarithmic
    average exp(mean(ln f^2) / 2).
    """
    config = config or MfdfaConfig()
    X = profile_series(u, config.degree)
    scales = config.scales_for(len(X))
    zero_tol = (ZERO_VAR_RTOL * float(np.max(np.abs(X)))) ** 2

    def one(s):
        f2 = segment_variances(X, int(s), config.degree)
        F, exc = _fq(f2, config.q, zero_tol)
        return F, len(f2), exc

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(one, scales))
    else:
        parts = [one(s) for s in scales]
    F = np.column_stack([p[0] for p in parts])
    return FluctuationSurface(
        q=config.q.copy(),
        scales=np.asarray(scales),
        F=F,
        segments=np.array([p[1] for p in parts]),
        excluded=np.array([p[2] for p in parts]),
        degree=config.degree,
    )


def _log_surface(surface: FluctuationSurface) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(surface.F > 0, np.log(surface.F), np.nan)


def local_slopes(logF: np.ndarray, logs: np.ndarray, points: int = SLOPE_POINTS) -> np.ndarray:
    """Least-squares slope of each row of ``logF`` over ``points`` neighbouring scales."""
    n = len(logs)
    half = points // 2
    out = np.empty_like(logF)
    for k in range(n):
        a, b = max(0, k - half), min(n, k + half + 1)
        x = logs[a:b] - logs[a:b].mean()
        y = logF[:, a:b] - logF[:, a:b].mean(axis=1, keepdims=True)
        out[:, k] = y @ x / np.dot(x, x)
    return out


def detect_scaling_range(surface: FluctuationSurface, min_decade: float = 1.0,
                         q_subset=None, tol: float = SLOPE_TOL) -> tuple[int, int] | None:
    """Widest window of scales over which every selected q scales cleanly.

    Local slopes d ln F_q / d ln s (see :func:`local_slopes`) must stay within
    ``tol`` of their window mean for every q in ``q_subset`` (default: the
    positive q's). Returns ``(s1, s2)`` or ``None`` when the widest such
    window is shorter than ``min_decade`` decades.
    """
    q = surface.q
    sel = q > 0 if q_subset is None else np.isin(q, np.asarray(q_subset, dtype=float))
    if not np.any(sel):
        return None
    logs = np.log(surface.scales.astype(float))
    logF = _log_surface(surface)[sel]
    # F indistinguishable from round-off carries no scaling information
    if not np.all(np.isfinite(logF)) or len(logs) < 3:
        return None
    slopes = local_slopes(logF, logs)
    n = len(logs)
    best, best_width = None, -1.0
    for i in range(n):
        for j in range(i + 2, n):
            w = slopes[:, i:j + 1]
            if np.all(np.abs(w - w.mean(axis=1, keepdims=True)) < tol):
                width = (logs[j] - logs[i]) / np.log(10.0)
                if width > best_width + 1e-12:
                    best, best_width = (i, j), width
    if best is None or best_width < min_decade:
        return None
    return int(surface.scales[best[0]]), int(surface.scales[best[1]])


def _fit_slopes(logs: np.ndarray, logF: np.ndarray):
    n = len(logs)
    x = logs - logs.mean()
    sxx = float(np.dot(x, x))
    # row by row, so a q's slope does not depend on which other q's are present
    y = np.array([row - row.mean() for row in logF])
    slope = np.array([np.dot(row, x) for row in y]) / sxx
    resid = y - np.outer(slope, x)
    stderr = np.sqrt(np.sum(resid**2, axis=1) / (n - 2) / sxx) if n > 2 else np.full(len(slope), np.nan)
    return slope, stderr


def fit_generalized_hurst(surface: FluctuationSurface, scale_range: tuple[int, int] | None = None,
                          min_points: int = MIN_FIT_POINTS) -> GeneralizedHurst:
    """Least-squares slope of ln F_q(s) against ln s inside ``scale_range``.

    Rows containing zero F give ``nan`` for that q.
    """
    s = surface.scales
    lo, hi = (s[0], s[-1]) if scale_range is None else scale_range
    sel = (s >= lo) & (s <= hi)
    if np.count_nonzero(sel) < min_points:
        raise ValueError(f"scale range {lo}..{hi} holds {np.count_nonzero(sel)} scales, need {min_points}")
    logs = np.log(s[sel].astype(float))
    logF = _log_surface(surface)[:, sel]
    h, se = _fit_slopes(logs, np.nan_to_num(logF))
    bad = ~np.all(np.isfinite(logF), axis=1)
    h[bad] = np.nan
    se[bad] = np.nan
    return GeneralizedHurst(surface.q.copy(), h, se, (int(s[sel][0]), int(s[sel][-1])))


def classify_hurst(H: float, stderr: float = 0.0, nsigma: float = 2.0) -> str:
    """persistent (H > 0.5), antipersistent (H < 0.5) or uncorrelated within ``nsigma`` errors."""
    if abs(H - 0.5) <= nsigma * (stderr if np.isfinite(stderr) else 0.0):
        return "uncorrelated"
    return "persistent" if H > 0.5 else "antipersistent"


def hurst_exponent(u, config: MfdfaConfig | None = None, scale_range=None) -> HurstResult:
    """H = h(2) fitted over the full scale grid (or ``scale_range``)."""
    base = config or MfdfaConfig()
    cfg = MfdfaConfig(q=np.array([2.0]), degree=base.degree, scales=base.scales,
                      n_scales=base.n_scales, workers=base.workers)
    surface = fluctuation_function(u, cfg)
    fit = fit_generalized_hurst(surface, scale_range)
    H, se = float(fit.h[0]), float(fit.stderr[0])
    if not np.isfinite(H):
        raise ValueError("q = 2 fluctuation function vanishes; Hurst exponent undefined")
    return HurstResult(H, se, classify_hurst(H, se))


def singularity_spectrum(hq: GeneralizedHurst) -> MultifractalSpectrum:
    """Legendre transform of tau(q) = q h(q) - 1.

    alpha = d tau / d q by central differences (one-sided at the ends) and
    f = q alpha - tau. q values with non-finite h are dropped first.
    """
    ok = np.isfinite(hq.h)
    q, h, se = hq.q[ok], hq.h[ok], hq.stderr[ok]
    if len(q) < 3:
        raise ValueError(f"singularity spectrum needs at least 3 finite h(q) values, got {len(q)}")
    tau = q * h - 1.0
    alpha = np.gradient(tau, q, edge_order=1)
    f = q * alpha - tau
    keep = np.isfinite(alpha) & np.isfinite(f)
    H = H_se = None
    at2 = np.flatnonzero(q == 2.0)
    if len(at2):
        H, H_se = float(h[at2[0]]), float(se[at2[0]])
    return MultifractalSpectrum(q[keep], h[keep], se[keep], tau[keep], alpha[keep], f[keep],
                                hq.scale_range, H, H_se)


def multifractal_analysis(u, config: MfdfaConfig | None = None, q_subset=None,
                          min_decade: float = 1.0):
    """Surface, detected scaling range and (if a range exists) the spectrum.

    The spectrum uses only the q's in ``q_subset`` (default q > 0), which is
    where scaling was required to hold.
    """
    config = config or MfdfaConfig()
    surface = fluctuation_function(u, config)
    rng = detect_scaling_range(surface, min_decade=min_decade, q_subset=q_subset)
    spectrum = None
    if rng is not None:
        hq = fit_generalized_hurst(surface, rng)
        sel = hq.q > 0 if q_subset is None else np.isin(hq.q, np.asarray(q_subset, dtype=float))
        spectrum = singularity_spectrum(GeneralizedHurst(hq.q[sel], hq.h[sel], hq.stderr[sel], hq.scale_range))
    return surface, rng, spectrum
