"""``fracta`` command line.

Exit codes: 0 success, 1 configuration or input error, 2 run finished with
failed report cells.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .mfdfa import MfdfaConfig, default_q_grid, hurst_exponent, multifractal_analysis, fit_generalized_hurst
from .pipeline import ConfigError, load_config, run_pipeline
from .report import dumps, emit_report, write_csv
from .synth import MODELS, generate
from .tailfit import (ccdf_from_points, empirical_ccdf, fit_power_tail, fit_stretched_exponential,
                      select_tail_region)

log = logging.getLogger("fracta")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _read_column(path, column: str | None = None) -> np.ndarray:
    """A numeric column from a CSV with a header; defaults to ``value`` or the last column."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if column is None:
        column = "value" if "value" in header else header[-1]
    if column not in header:
        raise ValueError(f"{path} has no column {column!r}")
    j = header.index(column)
    return np.array([float(r[j]) for r in rows[1:] if r], dtype=float)


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"parameter {item!r} is not key=value")
        out[key.strip()] = float(value)
    return out


def cmd_run(args) -> int:
    overrides = {"workers": args.workers} if args.workers else None
    cfg = load_config(args.config, overrides)
    report = run_pipeline(cfg)
    for path in emit_report(report, args.out, args.format):
        log.debug("wrote %s", path)
    failures = report.failures()
    for coll, obs, analysis, msg in failures:
        log.warning("%s/%s/%s: %s", coll, obs or "-", analysis or "-", msg)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_synth(args) -> int:
    values = generate(args.model, args.seed, **_params(args.params))
    out = Path(args.out)
    write_csv(out, ["value"], ([float(v)] for v in values))
    return EXIT_OK


def cmd_ccdf(args) -> int:
    ccdf = empirical_ccdf(_read_column(args.input, args.column), take_abs=args.abs)
    write_csv(args.out, ["x", "p"], zip(ccdf.x, ccdf.p))
    return EXIT_OK


def cmd_fit(args) -> int:
    x, p = _read_column(args.ccdf, "x"), _read_column(args.ccdf, "p")
    ccdf = ccdf_from_points(x, p)
    if args.x_lo is not None or args.x_hi is not None:
        region = select_tail_region(ccdf, "fixed", x_lo=args.x_lo, x_hi=args.x_hi if args.x_hi is not None else x[-1])
    else:
        region = select_tail_region(ccdf, "quantile", q_lo=args.q_lo)
    fit = (fit_power_tail if args.model == "power" else fit_stretched_exponential)(ccdf, region)
    sys.stdout.write(dumps(fit.to_dict()))
    return EXIT_OK


def cmd_mfdfa(args) -> int:
    u = _read_column(args.input, args.column)
    cfg = MfdfaConfig(q=default_q_grid(args.q_min, args.q_max, args.q_step), degree=args.degree)
    subset = None if args.q_subset == "positive" else cfg.q
    surface, rng, spectrum = multifractal_analysis(u, cfg, q_subset=subset, min_decade=args.min_decade)
    hurst = hurst_exponent(u, cfg)
    doc = {
        "H": hurst.H, "H_stderr": hurst.stderr, "label": hurst.label,
        "scaling_range": list(rng) if rng else None,
        "excluded": surface.excluded,
    }
    if rng:
        hq = fit_generalized_hurst(surface, rng)
        doc["hq"] = {"q": hq.q, "h": hq.h, "stderr": hq.stderr}
    if spectrum is not None:
        doc["spectrum"] = {"alpha": spectrum.alpha, "f": spectrum.f, "width": spectrum.width}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "fq.csv", ["s", "q", "F"],
                  ((s, q, surface.F[i, j]) for j, s in enumerate(surface.scales) for i, q in enumerate(surface.q)))
        if "hq" in doc:
            write_csv(out / "hq.csv", ["q", "h", "stderr"], zip(hq.q, hq.h, hq.stderr))
        if spectrum is not None:
            write_csv(out / "spectrum.csv", ["alpha", "f"], zip(spectrum.alpha, spectrum.f))
    sys.stdout.write(dumps(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracta", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fracta {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the full pipeline from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--format", choices=("json", "csv", "both"), default="both")
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("synth", help="write a synthetic series as one-column CSV")
    s.add_argument("model", choices=MODELS)
    s.add_argument("--params", nargs="*", metavar="KEY=VALUE",
                   help="fgn: H n; cascade: a levels; pareto: gamma n; weibull: beta n; ar1: phi n")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("ccdf", help="sigma-normalized CCDF of a series")
    c.add_argument("--input", required=True)
    c.add_argument("--column")
    c.add_argument("--abs", action="store_true", help="use the modulus of the values")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_ccdf)

    f = sub.add_parser("fit", help="fit a tail model to a CCDF file (x,p)")
    f.add_argument("--ccdf", required=True)
    f.add_argument("--model", choices=("power", "stretched"), required=True)
    f.add_argument("--q-lo", type=float, default=0.9)
    f.add_argument("--x-lo", type=float)
    f.add_argument("--x-hi", type=float)
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("mfdfa", help="MFDFA of a single series")
    m.add_argument("--input", required=True)
    m.add_argument("--column")
    m.add_argument("--q-min", type=float, default=-4.0)
    m.add_argument("--q-max", type=float, default=4.0)
    m.add_argument("--q-step", type=float, default=0.25)
    m.add_argument("--degree", type=int, default=2)
    m.add_argument("--min-decade", type=float, default=1.0)
    m.add_argument("--q-subset", choices=("positive", "all"), default="positive")
    m.add_argument("--out")
    m.set_defaults(func=cmd_mfdfa)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
    except (OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
