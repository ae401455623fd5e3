"""OHLCV candle storage, CSV ingestion and windowed queries.

All timestamps are UTC epoch seconds and mark the *open* of a bar. A series
has a fixed bar interval and no holes: gaps are either rejected at ingest or
forward-filled with zero-volume bars that are recorded in
``CandleSeries.filled``.
"""

from __future__ import annotations

import bisect
import csv
import enum
import io
import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Literal

from .errors import DataError, GapError, IngestError, UnknownInstrumentError

log = logging.getLogger(__name__)

CSV_HEADER = ("timestamp", "open", "high", "low", "close", "volume")
GapPolicy = Literal["reject", "forward_fill"]

MINUTE = 60
HOUR = 3600
DAY = 86400


class TimeUnit(str, enum.Enum):
    MINUTE = "minute"
    HOUR = "hour"
    DAY = "day"
    WEEK = "week"
    MONTH = "month"
    YEAR = "year"

    @property
    def seconds(self) -> int:
        """Nominal length; months are 30 days and years 365 days."""
        return _UNIT_SECONDS[self]

    @property
    def rank(self) -> int:
        return _UNIT_ORDER.index(self)

    @classmethod
    def parse(cls, value: "str | TimeUnit") -> "TimeUnit":
        if isinstance(value, TimeUnit):
            return value
        text = str(value).strip().lower()
        text = _UNIT_ALIASES.get(text, text)
        if text.endswith("s") and text[:-1] in _UNIT_VALUES:
            text = text[:-1]
        try:
            return cls(text)
        except ValueError:
            raise ValueError(
                f"unknown time unit {value!r}; valid units: {', '.join(_UNIT_VALUES)}"
            ) from None

    def __str__(self) -> str:
        return self.value


_UNIT_SECONDS = {
    TimeUnit.MINUTE: MINUTE,
    TimeUnit.HOUR: HOUR,
    TimeUnit.DAY: DAY,
    TimeUnit.WEEK: 7 * DAY,
    TimeUnit.MONTH: 30 * DAY,
    TimeUnit.YEAR: 365 * DAY,
}
_UNIT_ORDER = list(TimeUnit)
_UNIT_VALUES = [u.value for u in TimeUnit]
_UNIT_ALIASES = {"min": "minute", "mins": "minute", "h": "hour", "hr": "hour", "hrs": "hour",
                 "d": "day", "daily": "day", "hourly": "hour", "weekly": "week",
                 "monthly": "month", "yearly": "year", "annual": "year"}


@dataclass(frozen=True)
class Candle:
    timestamp: int
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self) -> None:
        prices = (self.open, self.high, self.low, self.close)
        if not all(math.isfinite(p) for p in prices + (self.volume,)):
            raise ValueError("non-finite value in candle")
        if min(prices) <= 0:
            raise ValueError("prices must be positive")
        if self.volume < 0:
            raise ValueError("volume must be non-negative")
        if self.low > self.high:
            raise ValueError(f"low {self.low} > high {self.high}")
        if self.low > min(self.open, self.close) or self.high < max(self.open, self.close):
            raise ValueError("open/close outside the [low, high] range")


@dataclass(frozen=True, order=True)
class InstrumentKey:
    base_token: str
    quote_token: str = "USDT"
    exchange: str = "BINANCE"

    def __post_init__(self) -> None:
        for name in ("base_token", "quote_token", "exchange"):
            value = str(getattr(self, name)).strip().upper()
            if not value:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, value)

    def __str__(self) -> str:
        return f"{self.base_token}/{self.quote_token}@{self.exchange}"


@dataclass(frozen=True)
class WindowSpec:
    """Lookback window plus the optional seasonality parameters."""

    time_interval: int = 1
    time_unit: TimeUnit = TimeUnit.DAY
    period_unit: TimeUnit | None = None
    granularity_unit: TimeUnit | None = None
    threshold_percent: float | None = None

    def __post_init__(self) -> None:
        if isinstance(self.time_interval, bool) or int(self.time_interval) != self.time_interval:
            raise ValueError(f"time_interval must be an integer, got {self.time_interval!r}")
        if self.time_interval <= 0:
            raise ValueError("time_interval must be positive")
        object.__setattr__(self, "time_interval", int(self.time_interval))
        object.__setattr__(self, "time_unit", TimeUnit.parse(self.time_unit))
        for name in ("period_unit", "granularity_unit"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, TimeUnit.parse(value))
        if self.threshold_percent is not None:
            if not math.isfinite(self.threshold_percent) or self.threshold_percent < 0:
                raise ValueError("threshold_percent must be a finite value >= 0")
            object.__setattr__(self, "threshold_percent", float(self.threshold_percent))
        if self.period_unit is not None and self.granularity_unit is not None:
            if self.granularity_unit.rank >= self.period_unit.rank:
                raise ValueError(
                    f"granularity_unit {self.granularity_unit} must be finer than "
                    f"period_unit {self.period_unit}"
                )
        if self.period_unit is not None and self.period_unit.seconds > self.lookback_seconds:
            raise ValueError(
                f"period_unit {self.period_unit} is longer than the lookback "
                f"{self.time_interval} {self.time_unit}"
            )

    @property
    def lookback_seconds(self) -> int:
        return self.time_interval * self.time_unit.seconds


@dataclass(frozen=True)
class CandleSeries:
    key: InstrumentKey
    candle_interval: int
    candles: tuple[Candle, ...]
    filled: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.candle_interval <= 0:
            raise ValueError("candle_interval must be positive")
        object.__setattr__(self, "candles", tuple(self.candles))
        prev = None
        for c in self.candles:
            if prev is not None and c.timestamp - prev != self.candle_interval:
                raise ValueError(
                    f"timestamps {prev} and {c.timestamp} are not one interval "
                    f"({self.candle_interval}s) apart"
                )
            prev = c.timestamp

    def __len__(self) -> int:
        return len(self.candles)

    def __iter__(self) -> Iterator[Candle]:
        return iter(self.candles)

    @cached_property
    def timestamps(self) -> list[int]:
        return [c.timestamp for c in self.candles]

    @property
    def highs(self) -> list[float]:
        return [c.high for c in self.candles]

    @property
    def lows(self) -> list[float]:
        return [c.low for c in self.candles]

    @property
    def closes(self) -> list[float]:
        return [c.close for c in self.candles]

    @property
    def volumes(self) -> list[float]:
        return [c.volume for c in self.candles]

    @property
    def first_timestamp(self) -> int | None:
        return self.candles[0].timestamp if self.candles else None

    @property
    def last_timestamp(self) -> int | None:
        return self.candles[-1].timestamp if self.candles else None

    def between(self, after: float, until: float) -> "CandleSeries":
        """Candles with ``after < timestamp <= until``."""
        ts = self.timestamps
        lo = bisect.bisect_right(ts, after)
        hi = bisect.bisect_right(ts, until)
        part = self.candles[lo:hi]
        filled = frozenset(c.timestamp for c in part if c.timestamp in self.filled)
        return CandleSeries(self.key, self.candle_interval, part, filled)


def parse_interval(value: str | int) -> int:
    """Parse a bar interval such as ``"1h"``, ``"15m"``, ``"1d"`` or ``3600``."""
    if isinstance(value, int):
        seconds = value
    else:
        m = re.fullmatch(r"\s*(\d+)\s*([smhdw]?)\s*", str(value).lower())
        if not m:
            raise ValueError(f"bad interval {value!r}")
        mult = {"": 1, "s": 1, "m": MINUTE, "h": HOUR, "d": DAY, "w": 7 * DAY}[m.group(2)]
        seconds = int(m.group(1)) * mult
    if seconds <= 0:
        raise ValueError(f"interval must be positive, got {value!r}")
    return seconds


def _parse_timestamp(text: str) -> int:
    value = float(text)
    if not math.isfinite(value) or value != int(value):
        raise ValueError(f"timestamp {text!r} is not an integer epoch second")
    return int(value)


def read_candles(
    lines: Iterable[str],
    key: InstrumentKey,
    candle_interval: int,
    gap_policy: GapPolicy = "reject",
) -> CandleSeries:
    """Parse CSV text into a validated series. Line numbers count the header as 1."""
    if gap_policy not in ("reject", "forward_fill"):
        raise ValueError(f"unknown gap policy {gap_policy!r}")
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty file", 1) from None
    if tuple(h.strip().lower() for h in header) != CSV_HEADER:
        raise IngestError(f"header must be {','.join(CSV_HEADER)}, got {','.join(header)}", 1)

    candles: list[Candle] = []
    filled: set[int] = set()
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise IngestError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", line)
        try:
            ts = _parse_timestamp(row[0])
            o, h, lo, c, v = (float(x) for x in row[1:])
        except ValueError as exc:
            raise IngestError(f"malformed row: {exc}", line) from None
        try:
            candle = Candle(ts, o, h, lo, c, v)
        except ValueError as exc:
            raise IngestError(f"invalid candle: {exc}", line) from None
        if candles:
            prev = candles[-1].timestamp
            if ts == prev:
                raise IngestError(f"duplicate timestamp {ts}", line)
            if ts < prev:
                raise IngestError(f"timestamp {ts} is earlier than previous {prev}", line)
            if (ts - prev) % candle_interval:
                raise IngestError(
                    f"timestamp {ts} is off the {candle_interval}s grid started at {prev}", line
                )
            if ts - prev > candle_interval:
                missing = list(range(prev + candle_interval, ts, candle_interval))
                if gap_policy == "reject":
                    raise GapError(missing, line)
                last = candles[-1]
                for t in missing:
                    p = last.close
                    candles.append(Candle(t, p, p, p, p, 0.0))
                    filled.add(t)
                log.warning("%s: forward-filled %d missing bars before line %d", key, len(missing), line)
        candles.append(candle)
    return CandleSeries(key, candle_interval, tuple(candles), frozenset(filled))


def read_candles_csv(
    path: str | os.PathLike,
    key: InstrumentKey,
    candle_interval: int,
    gap_policy: GapPolicy = "reject",
) -> CandleSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        return read_candles(fh, key, candle_interval, gap_policy)


def format_candles(series: CandleSeries) -> str:
    """Serialize to CSV. Floats use ``repr`` so parsing the output is lossless."""
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for c in series.candles:
        buf.write(f"{c.timestamp},{c.open!r},{c.high!r},{c.low!r},{c.close!r},{c.volume!r}\n")
    return buf.getvalue()


def write_candles_csv(series: CandleSeries, path: str | os.PathLike) -> None:
    Path(path).write_text(format_candles(series), encoding="utf-8")


class MarketStore:
    """In-memory registry of candle series keyed by instrument.

    The store is filled during a setup phase and then frozen; after that
    it is read-only and may be shared between threads.
    """

    def __init__(self) -> None:
        self._series: dict[InstrumentKey, CandleSeries] = {}
        self._frozen = False

    def register(self, series: CandleSeries) -> None:
        if self._frozen:
            raise DataError("store is frozen")
        if series.key in self._series:
            raise DataError(f"instrument {series.key} already registered")
        self._series[series.key] = series

    def ingest_csv(
        self,
        path: str | os.PathLike,
        key: InstrumentKey,
        candle_interval: int | str,
        gap_policy: GapPolicy = "reject",
    ) -> CandleSeries:
        series = read_candles_csv(path, key, parse_interval(candle_interval), gap_policy)
        self.register(series)
        return series

    def freeze(self) -> "MarketStore":
        self._frozen = True
        return self

    def __contains__(self, key: object) -> bool:
        return key in self._series

    def __len__(self) -> int:
        return len(self._series)

    def keys(self) -> list[InstrumentKey]:
        return sorted(self._series)

    def get(self, key: InstrumentKey) -> CandleSeries:
        try:
            return self._series[key]
        except KeyError:
            raise UnknownInstrumentError(key, [str(k) for k in self.keys()]) from None

    def query_window(self, key: InstrumentKey, lookback: WindowSpec | int, as_of: float) -> CandleSeries:
        """Candles with ``as_of - lookback < timestamp <= as_of``."""
        seconds = lookback.lookback_seconds if isinstance(lookback, WindowSpec) else int(lookback)
        return self.get(key).between(as_of - seconds, as_of)

    def list_base_tokens(self) -> list[str]:
        return sorted({k.base_token for k in self._series})

    def list_quote_tokens(self) -> list[str]:
        return sorted({k.quote_token for k in self._series})

    def list_exchanges(self) -> list[str]:
        return sorted({k.exchange for k in self._series})

    def summary(self) -> list[tuple[InstrumentKey, CandleSeries]]:
        return [(k, self._series[k]) for k in self.keys()]

    @classmethod
    def from_manifest(
        cls, manifest: str | os.PathLike, gap_policy: GapPolicy | None = None
    ) -> "MarketStore":
        """Load every series listed in a JSON manifest.

        The manifest looks like::

            {"gap_policy": "reject",
             "series": [{"file": "btc.csv", "exchange": "BINANCE",
                         "base": "BTC", "quote": "USDT", "interval": "1h"}]}

        File paths are relative to the manifest's directory.
        """
        path = Path(manifest)
        if not path.is_file():
            raise DataError(f"manifest not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            entries = doc["series"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"bad manifest {path}: {exc}") from None
        policy = gap_policy or doc.get("gap_policy", "reject")
        store = cls()
        for i, entry in enumerate(entries):
            try:
                key = InstrumentKey(entry["base"], entry.get("quote", "USDT"), entry.get("exchange", "BINANCE"))
                file = path.parent / entry["file"]
                interval = entry["interval"]
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"bad manifest entry #{i}: {exc}") from None
            try:
                store.ingest_csv(file, key, interval, entry.get("gap_policy", policy))
            except FileNotFoundError:
                raise DataError(f"{file}: file not found") from None
            except IngestError as exc:
                exc.args = (f"{file}: {exc}",)
                raise
        return store.freeze()

    @classmethod
    def from_data_dir(cls, data_dir: str | os.PathLike, gap_policy: GapPolicy | None = None) -> "MarketStore":
        return cls.from_manifest(Path(data_dir) / "manifest.json", gap_policy)
