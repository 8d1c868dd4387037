"""Configuration-driven runner: manifests in, :class:`~fracta.report.Report` out."""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .correlation import acf, correlation_time, default_max_lag
from .marketdata import (WEEK, Manifest, load_manifest, manifest_from_dict,
                         parse_floor_quotes, parse_rates, parse_trades, trim_launch_window)
from .mfdfa import (MfdfaConfig, default_q_grid, fit_generalized_hurst, hurst_exponent,
                    multifractal_analysis)
from .observables import HOUR, OBSERVABLES, SIGNED, build_observables, collection_summary
from .report import Report, plain
from .tailfit import (empirical_ccdf, fit_power_tail, fit_stretched_exponential, models_comparable,
                      select_tail_region)

ANALYSES = ("tail", "acf", "hurst", "multifractal")
DATA_DIR_ENV = "FRACTA_DATA_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class TailPolicy:
    policy: str = "quantile"
    q_lo: float = 0.9
    x_lo: float | None = None
    x_hi: float | None = None
    min_n: int = 100


@dataclass
class MfdfaSettings:
    q_min: float = -4.0
    q_max: float = 4.0
    q_step: float = 0.25
    degree: int = 2
    n_scales: int = 30
    min_decade: float = 1.0
    q_subset: str = "positive"  # "positive" | "all"

    def config(self) -> MfdfaConfig:
        return MfdfaConfig(q=default_q_grid(self.q_min, self.q_max, self.q_step),
                           degree=self.degree, n_scales=self.n_scales)


@dataclass
class PipelineConfig:
    collections: list = field(default_factory=list)  # manifest paths or inline manifest dicts
    dt: int = HOUR
    trim_window: int = WEEK
    tail: TailPolicy = field(default_factory=TailPolicy)
    mfdfa: MfdfaSettings = field(default_factory=MfdfaSettings)
    max_lag: int | None = None
    workers: int = 1
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        if int(self.dt) <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if int(self.trim_window) < 0:
            raise ConfigError("trim_window must be nonnegative")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")

    def manifests(self) -> list[Manifest]:
        out = []
        for entry in self.collections:
            try:
                if isinstance(entry, dict):
                    m = manifest_from_dict(entry, self.base_dir)
                else:
                    path = self.base_dir / entry
                    if not path.is_file():
                        raise ConfigError(f"manifest not found: {path}")
                    m = load_manifest(path)
            except (OSError, json.JSONDecodeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad manifest {entry!r}: {exc}") from exc
            for p in (m.trades, m.floor, m.rates):
                if p is not None and not p.is_file():
                    raise ConfigError(f"{m.meta.name}: input file not found: {p}")
            out.append(m)
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        # neither affects results; keeping them out makes reports comparable
        d.pop("base_dir")
        d.pop("workers")
        return d


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Read a pipeline config JSON.

    Relative paths resolve against ``$FRACTA_DATA_DIR`` when set, else the
    config file's directory.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    doc.update(overrides or {})
    env = os.environ.get(DATA_DIR_ENV)
    base = Path(env) if env else path.parent
    try:
        return PipelineConfig(
            collections=list(doc.get("collections", [])),
            dt=int(doc.get("dt", HOUR)),
            trim_window=int(doc.get("trim_window", WEEK)),
            tail=TailPolicy(**doc.get("tail", {})),
            mfdfa=MfdfaSettings(**doc.get("mfdfa", {})),
            max_lag=doc.get("max_lag"),
            workers=int(doc.get("workers", 1)),
            base_dir=base,
        )
    except TypeError as exc:
        raise ConfigError(f"invalid config field: {exc}") from exc


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _values(series) -> np.ndarray:
    return np.asarray(getattr(series, "values", series), dtype=float)


def _err(exc: Exception) -> dict:
    if isinstance(exc, ValueError):
        return {"error": f"insufficient data: {exc}"}
    return {"error": f"{type(exc).__name__}: {exc}"}


def _guard(fn):
    try:
        return fn()
    except Exception as exc:  # a failed cell must never abort the run
        return _err(exc)


def analyse_tail(x: np.ndarray, cfg: PipelineConfig) -> dict:
    pol = cfg.tail
    ccdf = empirical_ccdf(x, min_n=pol.min_n)
    region = select_tail_region(ccdf, pol.policy, pol.q_lo, pol.x_lo, pol.x_hi)
    power = _guard(lambda: fit_power_tail(ccdf, region).to_dict())
    stretched = _guard(lambda: fit_stretched_exponential(ccdf, region).to_dict())
    comparable = None
    if "exponent" in power and "exponent" in stretched:
        comparable = models_comparable(fit_power_tail(ccdf, region), fit_stretched_exponential(ccdf, region))
    return {
        "ccdf": {"x": ccdf.x, "p": ccdf.p, "sigma": ccdf.sigma, "n": ccdf.n},
        "power_law": power,
        "stretched_exponential": stretched,
        "comparable": comparable,
    }


def analyse_acf(x: np.ndarray, cfg: PipelineConfig, event_indexed: bool) -> dict:
    lag = cfg.max_lag if cfg.max_lag is not None else default_max_lag(len(x))
    lag = min(int(lag), len(x) - 1)
    curve = acf(x, lag, dt=0.0 if event_indexed else cfg.dt)
    ct = correlation_time(curve)
    return {
        "lags": curve.lags,
        "tau_hours": [None] * len(curve.lags) if event_indexed else curve.tau_hours,
        "A": curve.values,
        "correlation_time": {"lag": ct.lag, "threshold": ct.threshold, "censored": ct.censored},
    }


def analyse_hurst(x: np.ndarray, cfg: PipelineConfig) -> dict:
    mc = cfg.mfdfa.config()
    r = hurst_exponent(x, mc)
    return {"H": r.H, "stderr": r.stderr, "label": r.label}


def analyse_multifractal(x: np.ndarray, cfg: PipelineConfig) -> dict:
    st = cfg.mfdfa
    subset = None if st.q_subset == "positive" else default_q_grid(st.q_min, st.q_max, st.q_step)
    surface, rng, spectrum = multifractal_analysis(x, st.config(), q_subset=subset, min_decade=st.min_decade)
    out = {
        "q": surface.q,
        "scales": surface.scales,
        "F": surface.F,
        "segments": surface.segments,
        "excluded": surface.excluded,
        "scaling_range": list(rng) if rng else None,
        "verdict": "scaling" if rng else "no scaling",
        "hq": None,
        "spectrum": None,
    }
    if rng:
        hq = fit_generalized_hurst(surface, rng)
        out["hq"] = {"q": hq.q, "h": hq.h, "stderr": hq.stderr}
        if spectrum is not None:
            out["spectrum"] = {"q": spectrum.q, "alpha": spectrum.alpha, "f": spectrum.f,
                               "width": spectrum.width}
    return out


def _observable_cells(obs: str, series, cfg: PipelineConfig) -> dict:
    if series is None:
        msg = {"error": "insufficient data: no floor-price quotes"}
        return {a: dict(msg) for a in ANALYSES}
    raw = _values(series)
    probe = np.abs(raw) if obs in SIGNED else raw
    return {
        "tail": _guard(lambda: analyse_tail(probe, cfg)),
        "acf": _guard(lambda: analyse_acf(probe, cfg, event_indexed=(obs == "dt"))),
        "hurst": _guard(lambda: analyse_hurst(raw, cfg)),
        "multifractal": _guard(lambda: analyse_multifractal(raw, cfg)),
    }


def _load(m: Manifest, cfg: PipelineConfig):
    rates = parse_rates(m.rates) if m.rates else None
    trades = parse_trades(m.trades, m.meta, rates)
    quotes = parse_floor_quotes(m.floor, rates) if m.floor else None
    if len(trades) == 0:
        raise ValueError("trades file holds no trades")
    first = trades.items[0].timestamp
    trades = trim_launch_window(trades, cfg.trim_window)
    if quotes is not None and len(quotes):
        quotes = trim_launch_window(quotes, cfg.trim_window, start=first)
    if len(trades) == 0:
        raise ValueError(trades.warning)
    return trades, quotes


def _series_dump(obs: dict) -> dict:
    out = {}
    for key in ("C_sol", "C_usd", "floor_sol", "floor_usd", "c_sol", "c_usd", "r_sol", "r_usd", "N", "V_sol", "V_usd"):
        s = obs.get(key)
        if s is not None:
            out[key] = {"timestamp": s.timestamps, "value": s.values}
    out["dt"] = {"index": np.arange(len(obs["dt"])), "value": obs["dt"]}
    return out


def run_pipeline(config: PipelineConfig) -> Report:
    """Analyse every collection; failures are recorded per cell, never raised.

    Raises :class:`ConfigError` only for an invalid configuration.
    """
    manifests = config.manifests()
    report = Report(provenance={"tool": "fracta", "version": __version__, "config": config.to_dict(),
                                "inputs": {}})
    prepared = []
    for m in manifests:
        name = m.meta.name
        report.provenance["inputs"][name] = {
            role: {"file": p.name, "sha256": _sha256(p)}
            for role, p in (("trades", m.trades), ("floor", m.floor), ("rates", m.rates)) if p is not None
        }
        entry = {"name": name, "error": None, "summary": None, "observables": {}}
        try:
            trades, quotes = _load(m, config)
            obs = build_observables(trades, quotes, config.dt)
            entry["summary"] = collection_summary(trades, quotes, m.meta, config.dt, obs).to_dict()
            entry["n_trades"] = len(trades)
            report.series[name] = plain(_series_dump(obs))
        except Exception as exc:
            entry["error"] = _err(exc)["error"]
            obs = None
        prepared.append((entry, obs))

    jobs = []
    for entry, obs in prepared:
        for key in OBSERVABLES:
            jobs.append((entry, key, None if obs is None else obs[key]))

    def work(job):
        entry, key, series = job
        if entry["error"]:
            return {a: {"error": f"collection failed: {entry['error']}"} for a in ANALYSES}
        return plain(_observable_cells(key, series, config))

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    for (entry, key, _), cells in zip(jobs, results):
        entry["observables"][key] = cells
    report.collections = [plain(e) for e, _ in prepared]
    return report
