"""Report container and its JSON / CSV-bundle serializations.

Floats are always written with 17 significant digits so that output files
are byte-stable and round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FLOAT_FMT = ".17g"


@dataclass
class Report:
    collections: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    # sampled series per collection, emitted by the CSV bundle only
    series: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {"provenance": self.provenance, "collections": self.collections}

    @classmethod
    def from_dict(cls, doc: dict) -> "Report":
        return cls(collections=doc.get("collections", []), provenance=doc.get("provenance", {}))

    def failures(self) -> list[tuple]:
        """``(collection, observable, analysis, message)`` for every failed cell."""
        out = []
        for coll in self.collections:
            if coll.get("error"):
                out.append((coll["name"], None, None, coll["error"]))
            for obs, cells in coll.get("observables", {}).items():
                for analysis, cell in cells.items():
                    if isinstance(cell, dict) and "error" in cell:
                        out.append((coll["name"], obs, analysis, cell["error"]))
        return out


def plain(obj):
    """Convert numpy containers/scalars to Python; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def format_float(x: float) -> str:
    s = format(x, FLOAT_FMT)
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) or v is None for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    return _encode(plain(obj), indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_report(path) -> Report:
    with open(path, encoding="utf-8") as fh:
        return Report.from_dict(json.load(fh))


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format_float(float(v)) if math.isfinite(v) else ""
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


SUMMARY_FIELDS = ("K", "T", "mean_delta_t", "mean_N", "mean_V_sol", "zero_frac_c", "zero_frac_r")


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def emit_report(report: Report, out_dir, fmt: str = "json") -> list[Path]:
    """Write ``report`` as ``report.json`` (``json``) or one file per table/curve (``csv``).

    ``both`` writes the two. Returns the written paths.
    """
    if fmt not in ("json", "csv", "both"):
        raise ValueError(f"unknown report format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        p = out / "report.json"
        write_json(p, report.to_dict())
        written.append(p)
    if fmt in ("csv", "both"):
        written += _emit_bundle(report, out)
    return written


def _emit_bundle(report: Report, out: Path) -> list[Path]:
    written = []
    summary_rows, tail_doc, hurst_doc, tail_rows, hurst_rows, scaling_rows = [], {}, {}, [], [], []
    for coll in report.collections:
        name = coll["name"]
        summ = coll.get("summary") or {}
        summary_rows.append([name] + [summ.get(k) for k in SUMMARY_FIELDS])
        cdir = out / _safe(name)
        cdir.mkdir(exist_ok=True)
        tail_doc[name], hurst_doc[name] = {}, {}
        for obs, cells in coll.get("observables", {}).items():
            tail = cells.get("tail", {})
            tail_doc[name][obs] = {k: v for k, v in tail.items() if k != "ccdf"}
            for model in ("power_law", "stretched_exponential"):
                fit = tail.get(model) or {}
                if "exponent" in fit:
                    tail_rows.append([name, obs, model, fit["exponent"], fit["std_error"],
                                      fit["region"][0], fit["region"][1], fit["goodness"], fit["conforming"]])
            if "ccdf" in tail:
                p = cdir / f"ccdf_{obs}.csv"
                write_csv(p, ["x", "p"], zip(tail["ccdf"]["x"], tail["ccdf"]["p"]))
                written.append(p)
            hurst_doc[name][obs] = cells.get("hurst", {})
            h = cells.get("hurst", {})
            hurst_rows.append([name, obs, h.get("H"), h.get("stderr"), h.get("label"), h.get("error")])
            acf = cells.get("acf", {})
            if "A" in acf:
                p = cdir / f"acf_{obs}.csv"
                write_csv(p, ["lag", "tau_hours", "A"], zip(acf["lags"], acf["tau_hours"], acf["A"]))
                written.append(p)
            mf = cells.get("multifractal", {})
            if "F" in mf:
                p = cdir / f"fq_{obs}.csv"
                write_csv(p, ["s", "q", "F"],
                          ((s, q, mf["F"][i][j]) for j, s in enumerate(mf["scales"]) for i, q in enumerate(mf["q"])))
                written.append(p)
                rng = mf.get("scaling_range")
                scaling_rows.append([name, obs, mf.get("verdict"), rng[0] if rng else None, rng[1] if rng else None])
            if mf.get("hq"):
                p = cdir / f"hq_{obs}.csv"
                write_csv(p, ["q", "h", "stderr"], zip(mf["hq"]["q"], mf["hq"]["h"], mf["hq"]["stderr"]))
                written.append(p)
            if mf.get("spectrum"):
                p = cdir / f"spectrum_{obs}.csv"
                write_csv(p, ["alpha", "f"], zip(mf["spectrum"]["alpha"], mf["spectrum"]["f"]))
                written.append(p)
        for key, s in report.series.get(name, {}).items():
            p = cdir / f"series_{key}.csv"
            if "timestamp" in s:
                write_csv(p, ["timestamp", "value"], zip(s["timestamp"], s["value"]))
            else:
                write_csv(p, ["index", "value"], zip(s["index"], s["value"]))
            written.append(p)

    for fname, header, rows in (
        ("summary.csv", ["collection", *SUMMARY_FIELDS], summary_rows),
        ("tailfits.csv", ["collection", "observable", "model", "exponent", "std_error",
                          "x_lo", "x_hi", "goodness", "conforming"], tail_rows),
        ("hurst.csv", ["collection", "observable", "H", "stderr", "label", "error"], hurst_rows),
        ("scaling.csv", ["collection", "observable", "verdict", "s1", "s2"], scaling_rows),
        ("errors.csv", ["collection", "observable", "analysis", "message"], report.failures()),
    ):
        write_csv(out / fname, header, rows)
        written.append(out / fname)
    for fname, doc in (("tailfits.json", tail_doc), ("hurst.json", hurst_doc)):
        write_json(out / fname, doc)
        written.append(out / fname)
    write_json(out / "provenance.json", report.provenance)
    written.append(out / "provenance.json")
    return written
