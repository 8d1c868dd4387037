"""Tick-data ingestion: trade and floor-price CSV files, manifests, trimming."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

TRADE_HEADER = ("timestamp", "token_id", "price_sol", "price_usd")
FLOOR_HEADER = ("timestamp", "floor_sol", "floor_usd")
RATE_HEADER = ("timestamp", "sol_usd")

WEEK = 7 * 24 * 3600


class ParseError(ValueError):
    """Malformed input row; ``line`` is the 1-based line number in the file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class TradeEvent:
    timestamp: int
    token_id: str
    price_sol: float
    price_usd: float


@dataclass(frozen=True)
class FloorQuote:
    timestamp: int
    floor_sol: float
    floor_usd: float


@dataclass(frozen=True)
class CollectionMeta:
    name: str
    start_date: int
    token_count: int
    end_date: int | None = None

    def __post_init__(self):
        if self.token_count <= 0:
            raise ValueError(f"token_count must be positive, got {self.token_count}")


@dataclass(frozen=True)
class EventSeries:
    """Time-ordered events. ``items`` holds the payload records.

    ``origin`` is the launch instant once the series has been trimmed.
    """

    items: tuple = ()
    warning: str | None = None
    origin: int | None = None

    def __post_init__(self):
        ts = [e.timestamp for e in self.items]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("event timestamps must be non-decreasing")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def times(self) -> np.ndarray:
        return np.fromiter((e.timestamp for e in self.items), dtype=np.int64, count=len(self.items))

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.items], dtype=float)


def _text(source) -> IO[str]:
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"))
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8", newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _rows(source, header: Sequence[str]) -> Iterable[tuple[int, list[str]]]:
    fh = _text(source)
    try:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            return
        if tuple(c.strip() for c in first) != tuple(header):
            raise ParseError(f"expected header {','.join(header)!r}, got {','.join(first)!r}", 1)
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", reader.line_num)
            yield reader.line_num, [c.strip() for c in row]
    finally:
        if isinstance(source, (str, os.PathLike)):
            fh.close()


def _timestamp(text: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"timestamp {text!r} is not an integer", line) from None


def _price(text: str, what: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", line) from None
    if not math.isfinite(value) or value <= 0:
        raise ParseError(f"{what} must be positive, got {text}", line)
    return value


def parse_rates(source) -> tuple[np.ndarray, np.ndarray]:
    """SOL/USD exchange rates as sorted ``(timestamps, rates)`` arrays."""
    rows = [(_timestamp(r[0], ln), _price(r[1], "sol_usd", ln)) for ln, r in _rows(source, RATE_HEADER)]
    rows.sort(key=lambda r: r[0])
    return (np.array([r[0] for r in rows], dtype=np.int64), np.array([r[1] for r in rows], dtype=float))


def _rate_at(rates, t: int, line: int) -> float:
    ts, vals = rates
    i = np.searchsorted(ts, t, side="right") - 1
    if i < 0:
        raise ParseError(f"no SOL/USD rate at or before {t}", line)
    return float(vals[i])


def parse_trades(source, meta: CollectionMeta | None = None, rates=None) -> EventSeries:
    """Parse a trades CSV into a time-sorted series of ``TradeEvent``.

    An empty ``price_usd`` field is filled from ``rates`` (as returned by
    :func:`parse_rates`) using the latest rate at or before the trade.
    """
    events = []
    for line, (ts, token, sol, usd) in _rows(source, TRADE_HEADER):
        t = _timestamp(ts, line)
        if not token:
            raise ParseError("empty token_id", line)
        p_sol = _price(sol, "price_sol", line)
        if usd == "" and rates is not None:
            p_usd = p_sol * _rate_at(rates, t, line)
        else:
            p_usd = _price(usd, "price_usd", line)
        if meta is not None:
            if t < meta.start_date:
                raise ParseError(f"timestamp {t} precedes collection start {meta.start_date}", line)
            if meta.end_date is not None and t > meta.end_date:
                raise ParseError(f"timestamp {t} is after data end {meta.end_date}", line)
        events.append(TradeEvent(t, token, p_sol, p_usd))
    events.sort(key=lambda e: e.timestamp)  # stable: ties keep file order
    return EventSeries(tuple(events))


def parse_floor_quotes(source, rates=None) -> EventSeries:
    quotes = []
    for line, (ts, sol, usd) in _rows(source, FLOOR_HEADER):
        t = _timestamp(ts, line)
        f_sol = _price(sol, "floor_sol", line)
        if usd == "" and rates is not None:
            f_usd = f_sol * _rate_at(rates, t, line)
        else:
            f_usd = _price(usd, "floor_usd", line)
        quotes.append(FloorQuote(t, f_sol, f_usd))
    quotes.sort(key=lambda q: q.timestamp)
    return EventSeries(tuple(quotes))


def write_trades(series: EventSeries, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRADE_HEADER)
    for e in series:
        w.writerow([e.timestamp, e.token_id, repr(e.price_sol), repr(e.price_usd)])


def write_floor_quotes(series: EventSeries, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(FLOOR_HEADER)
    for q in series:
        w.writerow([q.timestamp, repr(q.floor_sol), repr(q.floor_usd)])


def trim_launch_window(events: EventSeries, window: int = WEEK, start: int | None = None) -> EventSeries:
    """Drop events earlier than ``start + window``; the boundary itself is kept.

    ``start`` defaults to the series' recorded launch instant, or its first
    event time for an untrimmed series, so trimming twice changes nothing.
    Passing the same ``start`` for several streams trims them against a
    common launch instant.
    """
    if start is not None:
        origin = int(start)
    elif events.origin is not None:
        origin = events.origin
    elif len(events):
        origin = events.items[0].timestamp
    else:
        raise ValueError("cannot trim an empty series")
    cut = origin + int(window)
    kept = tuple(e for e in events if e.timestamp >= cut)
    warning = None if kept else f"all {len(events)} events fall inside the {window} s launch window"
    return EventSeries(kept, warning=warning, origin=origin)


@dataclass
class Manifest:
    meta: CollectionMeta
    trades: Path
    floor: Path | None = None
    rates: Path | None = None
    source: Path | None = field(default=None, compare=False)


def load_manifest(path, root=None) -> Manifest:
    """Read a collection manifest JSON.

    File paths inside the manifest resolve against ``root`` when given,
    else against the manifest's own directory.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return manifest_from_dict(doc, Path(root) if root is not None else path.parent, source=path)


def manifest_from_dict(doc: dict, base: Path, source: Path | None = None) -> Manifest:
    try:
        meta = CollectionMeta(
            name=str(doc["name"]),
            start_date=int(doc["start_date"]),
            token_count=int(doc["token_count"]),
            end_date=int(doc["end_date"]) if doc.get("end_date") is not None else None,
        )
        trades = base / doc["trades"]
    except KeyError as exc:
        raise ValueError(f"manifest is missing field {exc.args[0]!r}") from None

    def opt(key):
        return base / doc[key] if doc.get(key) else None

    return Manifest(meta=meta, trades=trades, floor=opt("floor"), rates=opt("rates"), source=source)
