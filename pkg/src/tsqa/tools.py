"""Grounding tools: verifiable computations over a :class:`MarketStore`.

Every tool is a pure function of the store snapshot and its arguments. The
registry fills defaults and picks ``as_of``; nothing here does.
"""

from __future__ import annotations

import calendar
import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from . import kernels
from .calls import ToolCall, ToolResult, call_key
from .errors import (
    AlignmentError,
    InsufficientDataError,
    StubError,
    UnknownItemError,
    UnknownUnitError,
    ZeroVarianceError,
)
from .market_data import DAY, CandleSeries, InstrumentKey, MarketStore, TimeUnit, WindowSpec

LN2 = math.log(2.0)
WEEKDAYS = list(calendar.day_name)  # Monday first
MONTHS = list(calendar.month_name)[1:]
# Monday 1970-01-05 00:00 UTC
WEEK_ORIGIN = 4 * DAY


# -- price & volatility ------------------------------------------------------

def price(store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int) -> float:
    """Close of the most recent bar inside the lookback window."""
    part = store.query_window(key, window, as_of)
    if not len(part):
        raise InsufficientDataError(f"no data for {key} in the {_describe(window)} window ending {as_of}")
    return part.candles[-1].close


def parkinson_volatility(series: CandleSeries) -> float:
    """Parkinson range-based volatility of a bar sequence, in percent (not annualized)."""
    n = len(series)
    if n < 2:
        raise InsufficientDataError(f"volatility needs at least 2 bars, got {n}")
    s = kernels.parkinson_sum_sq(series.highs, series.lows)
    return 100.0 * math.sqrt(s / (4.0 * n * LN2))


def volatility(store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int) -> float:
    return parkinson_volatility(store.query_window(key, window, as_of))


def extrapolate(previous: float, last: float) -> float:
    return last + (last - previous)


def predict_price(store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int) -> float:
    """Linear extrapolation of the price from the previous window to the next one."""
    last = price(store, key, window, as_of)
    try:
        prev = price(store, key, window, as_of - window.lookback_seconds)
    except InsufficientDataError:
        raise InsufficientDataError(f"insufficient history for two {_describe(window)} windows") from None
    return extrapolate(prev, last)


def predict_volatility(store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int) -> float:
    span = window.lookback_seconds
    try:
        last = volatility(store, key, window, as_of)
        prev = volatility(store, key, window, as_of - span)
    except InsufficientDataError:
        raise InsufficientDataError(f"insufficient history for two {_describe(window)} windows") from None
    return max(0.0, extrapolate(prev, last))


# -- correlation --------------------------------------------------------------

def aligned_closes(a: CandleSeries, b: CandleSeries) -> tuple[list[float], list[float]]:
    """Close prices at the timestamps both series share. No interpolation."""
    by_ts = {c.timestamp: c.close for c in b.candles}
    xs, ys = [], []
    for c in a.candles:
        other = by_ts.get(c.timestamp)
        if other is not None:
            xs.append(c.close)
            ys.append(other)
    return xs, ys


def pearson(xs: list[float], ys: list[float]) -> float:
    if len(xs) != len(ys):
        raise AlignmentError("series differ in length")
    if len(xs) < 2:
        raise AlignmentError(f"only {len(xs)} aligned points; need at least 2")
    if min(xs) == max(xs) or min(ys) == max(ys):
        raise ZeroVarianceError("price series is constant; correlation undefined")
    r = kernels.pearson_r(xs, ys)
    if math.isnan(r):
        raise ZeroVarianceError("price series has zero variance; correlation undefined")
    return r


def correlation(store: MarketStore, key_a: InstrumentKey, key_b: InstrumentKey, window: WindowSpec, as_of: int) -> float:
    a = store.query_window(key_a, window, as_of)
    b = store.query_window(key_b, window, as_of)
    xs, ys = aligned_closes(a, b)
    if len(xs) < 2:
        raise AlignmentError(
            f"{key_a} and {key_b} share {len(xs)} timestamps in the window; need at least 2"
        )
    return pearson(xs, ys)


def correlation_between_tokens(
    store: MarketStore, base_token_a: str, base_token_b: str, quote_token: str, exchange: str,
    window: WindowSpec, as_of: int,
) -> float:
    return correlation(
        store, InstrumentKey(base_token_a, quote_token, exchange),
        InstrumentKey(base_token_b, quote_token, exchange), window, as_of,
    )


def correlation_between_exchanges(
    store: MarketStore, base_token: str, quote_token: str, exchange_a: str, exchange_b: str,
    window: WindowSpec, as_of: int,
) -> float:
    return correlation(
        store, InstrumentKey(base_token, quote_token, exchange_a),
        InstrumentKey(base_token, quote_token, exchange_b), window, as_of,
    )


# -- seasonality ----------------------------------------------------------------

@dataclass(frozen=True)
class BucketLayout:
    period: TimeUnit
    granularity: TimeUnit
    n_buckets: int

    def label(self, b: int) -> str:
        p, g = self.period, self.granularity
        if p is TimeUnit.WEEK and g is TimeUnit.DAY:
            return WEEKDAYS[b]
        if p is TimeUnit.WEEK and g is TimeUnit.HOUR:
            return f"{WEEKDAYS[b // 24]} {b % 24:02d}:00 UTC"
        if p is TimeUnit.DAY and g is TimeUnit.HOUR:
            return f"{b:02d}:00 UTC"
        if p is TimeUnit.DAY and g is TimeUnit.MINUTE:
            return f"{b // 60:02d}:{b % 60:02d} UTC"
        if p is TimeUnit.HOUR and g is TimeUnit.MINUTE:
            return f"minute {b:02d}"
        if p is TimeUnit.YEAR and g is TimeUnit.MONTH:
            return MONTHS[b]
        raise AssertionError("unreachable")

    @property
    def labels(self) -> list[str]:
        return [self.label(b) for b in range(self.n_buckets)]


_LAYOUTS = {
    (TimeUnit.HOUR, TimeUnit.MINUTE): 60,
    (TimeUnit.DAY, TimeUnit.MINUTE): 1440,
    (TimeUnit.DAY, TimeUnit.HOUR): 24,
    (TimeUnit.WEEK, TimeUnit.DAY): 7,
    (TimeUnit.WEEK, TimeUnit.HOUR): 168,
    (TimeUnit.YEAR, TimeUnit.MONTH): 12,
}
SUPPORTED_LAYOUTS = list(_LAYOUTS)


def bucket_layout(period: TimeUnit, granularity: TimeUnit) -> BucketLayout:
    try:
        return BucketLayout(period, granularity, _LAYOUTS[(period, granularity)])
    except KeyError:
        valid = ", ".join(f"{p}/{g}" for p, g in _LAYOUTS)
        raise UnknownUnitError(
            f"unsupported period/granularity pair {period}/{granularity}; supported: {valid}"
        ) from None


@dataclass(frozen=True)
class VolumeGrid:
    """Traded volume per (complete period, bucket)."""

    layout: BucketLayout
    rows: list[list[float]]
    bucket_starts: list[list[int]]

    @property
    def n_periods(self) -> int:
        return len(self.rows)


def _grid_origin(period: TimeUnit) -> int:
    return WEEK_ORIGIN if period is TimeUnit.WEEK else 0


def volume_grid(series: CandleSeries, period: TimeUnit, granularity: TimeUnit) -> VolumeGrid:
    """Sum volume per bucket for every period fully covered by ``series``."""
    layout = bucket_layout(period, granularity)
    interval = series.candle_interval
    gran_s = DAY if granularity is TimeUnit.MONTH else granularity.seconds
    if gran_s % interval:
        raise UnknownUnitError(
            f"bar interval {interval}s does not divide the {granularity} granularity"
        )
    if not len(series):
        raise InsufficientDataError("no data in the window")
    first, last = series.first_timestamp, series.last_timestamp
    B = layout.n_buckets

    if period is TimeUnit.YEAR:
        y0 = _utc(first).year
        y1 = _utc(last).year
        years = [y for y in range(y0, y1 + 1)
                 if _jan1(y) >= first and _jan1(y + 1) - interval <= last]
        if not years:
            raise InsufficientDataError(f"no complete {period} in the window")
        pidx, bidx = [], []
        for t in series.timestamps:
            d = _utc(t)
            pidx.append(d.year - years[0])
            bidx.append(d.month - 1)
        flat = kernels.accumulate(pidx, bidx, series.volumes, len(years), B)
        starts = [[_month_start(y, m) for m in range(1, 13)] for y in years]
    else:
        period_s = period.seconds
        origin = _grid_origin(period)
        q_first = -((origin - first) // period_s)  # ceil((first - origin) / period_s)
        q_last = (last + interval - origin) // period_s - 1
        n_periods = q_last - q_first + 1
        if n_periods <= 0:
            raise InsufficientDataError(f"no complete {period} in the window")
        flat = kernels.grid_bucket_sums(
            series.timestamps, series.volumes, origin, period_s, gran_s, q_first, n_periods, B
        )
        starts = [[origin + (q_first + p) * period_s + b * gran_s for b in range(B)]
                  for p in range(n_periods)]
    rows = [flat[p * B:(p + 1) * B] for p in range(len(flat) // B)]
    return VolumeGrid(layout, rows, starts)


def average_shares(grid: VolumeGrid) -> list[float]:
    """Each bucket's percent share of its period's volume, averaged over periods.

    Periods with no volume at all are skipped.
    """
    B = grid.layout.n_buckets
    acc = [0.0] * B
    used = 0
    for row in grid.rows:
        total = sum(row)
        if total <= 0:
            continue
        used += 1
        for b in range(B):
            acc[b] += 100.0 * row[b] / total
    if not used:
        raise InsufficientDataError("no traded volume in any complete period")
    return [a / used for a in acc]


def share_bounds(n_buckets: int, threshold_percent: float) -> tuple[float, float]:
    """(peak floor, low ceiling): the uniform share moved up/down by ``threshold_percent`` relative."""
    uniform = 100.0 / n_buckets
    return uniform * (1.0 + threshold_percent / 100.0), uniform * (1.0 - threshold_percent / 100.0)


def _volume_shares(store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int):
    _require_seasonality(window)
    part = store.query_window(key, window, as_of)
    grid = volume_grid(part, window.period_unit, window.granularity_unit)
    return grid.layout, average_shares(grid)


def _require_seasonality(window: WindowSpec) -> None:
    if window.period_unit is None or window.granularity_unit is None or window.threshold_percent is None:
        raise UnknownUnitError("period_unit, granularity_unit and threshold_percent are required")


def _peaks(layout: BucketLayout, shares: list[float], threshold: float) -> list[str]:
    floor, _ = share_bounds(layout.n_buckets, threshold)
    hits = [b for b, s in enumerate(shares) if s >= floor]
    hits.sort(key=lambda b: (-shares[b], b))
    return [layout.label(b) for b in hits]


def _lows(layout: BucketLayout, shares: list[float], threshold: float) -> list[str]:
    _, ceiling = share_bounds(layout.n_buckets, threshold)
    hits = [b for b, s in enumerate(shares) if s <= ceiling]
    hits.sort(key=lambda b: (shares[b], b))
    return [layout.label(b) for b in hits]


def peak_traded_volume(store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int) -> list[str]:
    """Buckets whose average volume share beats the uniform share by ``threshold_percent`` (relative)."""
    layout, shares = _volume_shares(store, key, window, as_of)
    return _peaks(layout, shares, window.threshold_percent)


def lowest_traded_volume(store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int) -> list[str]:
    layout, shares = _volume_shares(store, key, window, as_of)
    return _lows(layout, shares, window.threshold_percent)


def round_the_clock_pattern(
    store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int
) -> tuple[list[str], list[str]]:
    layout, shares = _volume_shares(store, key, window, as_of)
    t = window.threshold_percent
    return _peaks(layout, shares, t), _lows(layout, shares, t)


@dataclass(frozen=True)
class Deviations:
    timestamps: list[int]
    deviation_percents: list[float]
    labels: list[str]
    excluded_buckets: list[str]


def abnormal_deviations(store: MarketStore, key: InstrumentKey, window: WindowSpec, as_of: int) -> Deviations:
    """Buckets of the latest complete period whose volume strays from the historical bucket mean.

    The historical mean of a bucket is taken over every earlier complete
    period. Buckets with a zero historical mean are reported in
    ``excluded_buckets`` instead of being scored.
    """
    _require_seasonality(window)
    part = store.query_window(key, window, as_of)
    grid = volume_grid(part, window.period_unit, window.granularity_unit)
    if grid.n_periods < 2:
        raise InsufficientDataError(
            f"need at least 2 complete {window.period_unit}s of history, got {grid.n_periods}"
        )
    layout = grid.layout
    history = grid.rows[:-1]
    recent = grid.rows[-1]
    found: list[tuple[float, int, float]] = []
    excluded = []
    for b in range(layout.n_buckets):
        mean = sum(row[b] for row in history) / len(history)
        if mean <= 0:
            excluded.append(layout.label(b))
            continue
        dev = 100.0 * (recent[b] - mean) / mean
        if abs(dev) >= window.threshold_percent:
            found.append((abs(dev), b, dev))
    found.sort(key=lambda e: (-e[0], e[1]))
    starts = grid.bucket_starts[-1]
    return Deviations(
        timestamps=[starts[b] for _, b, _ in found],
        deviation_percents=[d for _, _, d in found],
        labels=[layout.label(b) for _, b, _ in found],
        excluded_buckets=excluded,
    )


# -- helpers ------------------------------------------------------------------------

def _utc(ts: int) -> datetime:
    return datetime.fromtimestamp(ts, tz=timezone.utc)


def _jan1(year: int) -> int:
    return calendar.timegm((year, 1, 1, 0, 0, 0))


def _month_start(year: int, month: int) -> int:
    return calendar.timegm((year, month, 1, 0, 0, 0))


def _describe(window: WindowSpec) -> str:
    return f"{window.time_interval} {window.time_unit}"


# -- stubs ------------------------------------------------------------------------

@dataclass(frozen=True)
class StubEntry:
    item_id: str
    call: ToolCall | None
    result: ToolResult


class StubTable:
    """Hard-coded tool results per benchmark item.

    In stub mode the engine answers from this table instead of the market
    data, so an agent's tool use can be scored independently of live data.
    """

    def __init__(self, entries: Iterable[StubEntry] = ()) -> None:
        self._by_item: dict[str, list[StubEntry]] = {}
        for e in entries:
            self._by_item.setdefault(e.item_id, []).append(e)

    def __contains__(self, item_id: object) -> bool:
        return item_id in self._by_item

    def __len__(self) -> int:
        return len(self._by_item)

    def item_ids(self) -> list[str]:
        return list(self._by_item)

    def entries(self, item_id: str) -> list[StubEntry]:
        try:
            return self._by_item[item_id]
        except KeyError:
            raise UnknownItemError(f"no stub for benchmark item {item_id!r}") from None

    def lookup(self, item_id: str | None, call: ToolCall) -> ToolResult:
        """Stubbed result for ``call``.

        With an ``item_id`` the item's entries are searched: an entry whose
        expected call matches wins, else the first entry for the same tool.
        A call to a tool the item does not stub yields an error result (an
        agent routing mistake, not a failure of the engine). Without an
        ``item_id`` every item is searched for a matching expected call.
        """
        if item_id is None:
            key = call_key(call)
            for entries in self._by_item.values():
                for e in entries:
                    if e.call is not None and call_key(e.call) == key:
                        return e.result
            raise StubError(f"no stubbed result matches {call.tool_name}({_fmt_args(call.args)})")
        entries = self.entries(item_id)
        key = call_key(call)
        for e in entries:
            if e.call is not None and call_key(e.call) == key:
                return e.result
        for e in entries:
            if e.result.tool_name == call.tool_name:
                return e.result
        expected = ", ".join(sorted({e.result.tool_name for e in entries}))
        return ToolResult(
            call.tool_name, {},
            error=f"tool {call.tool_name} is not stubbed for this query (stubbed: {expected})",
        )

    def dumps(self) -> str:
        lines = []
        for item_id, entries in self._by_item.items():
            for e in entries:
                rec = {"item_id": item_id, "tool_name": e.result.tool_name, "payload": e.result.payload}
                if e.call is not None:
                    rec["args"] = e.call.args
                lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "StubTable":
        """Read a JSON-lines stub file (``item_id``, ``tool_name``, ``payload``[, ``args``])."""
        entries = []
        for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                call = ToolCall(rec["tool_name"], dict(rec["args"])) if "args" in rec else None
                entries.append(StubEntry(str(rec["item_id"]), call, ToolResult(rec["tool_name"], rec["payload"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise StubError(f"{path}: line {n}: {exc}") from None
        return cls(entries)


def _fmt_args(args: dict) -> str:
    return ", ".join(f"{k}={v!r}" for k, v in sorted(args.items()))
