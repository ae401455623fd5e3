import math
import random
from collections import defaultdict
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BTC, ETH, MONDAY, make_series, random_ohlc, store_of, weekly_volumes
from tsqa import tools
from tsqa.calls import ToolCall, ToolResult
from tsqa.errors import AlignmentError, InsufficientDataError, StubError, UnknownItemError, UnknownUnitError, ZeroVarianceError
from tsqa.market_data import DAY, HOUR, InstrumentKey, TimeUnit, WindowSpec


def utc(ts):
    return datetime.fromtimestamp(ts, timezone.utc)


def oracle_shares(series, group, bucket, n_buckets, bars_per_period):
    """Average percent share per bucket over periods that have every bar."""
    cells = defaultdict(lambda: [0.0] * n_buckets)
    counts = defaultdict(int)
    for c in series.candles:
        g = group(utc(c.timestamp))
        cells[g][bucket(utc(c.timestamp))] += c.volume
        counts[g] += 1
    rows = [cells[g] for g in sorted(cells) if counts[g] == bars_per_period(g)]
    rows = [r for r in rows if sum(r) > 0]
    return [sum(100 * r[b] / sum(r) for r in rows) / len(rows) for b in range(n_buckets)]


def oracle_peaks(shares, threshold, labels):
    floor = 100 / len(shares) * (1 + threshold / 100)
    return [labels[b] for b in sorted((b for b in range(len(shares)) if shares[b] >= floor),
                                      key=lambda b: (-shares[b], b))]


def oracle_lows(shares, threshold, labels):
    ceil = 100 / len(shares) * (1 - threshold / 100)
    return [labels[b] for b in sorted((b for b in range(len(shares)) if shares[b] <= ceil),
                                      key=lambda b: (shares[b], b))]


# -- price, volatility, prediction -------------------------------------------------------------

def test_price_is_latest_close_in_window():
    s = make_series([1] * 10, closes=[float(i + 1) for i in range(10)])
    store = store_of(s)
    as_of = MONDAY + 5 * DAY + 100
    assert tools.price(store, BTC, WindowSpec(1, "day"), as_of) == 6.0
    with pytest.raises(InsufficientDataError):
        tools.price(store, BTC, WindowSpec(1, "day"), MONDAY - DAY)


def test_volatility_term_by_term():
    s = random_ohlc(random.Random(5), 200)
    store = store_of(s)
    as_of = s.last_timestamp
    part = [c for c in s.candles if as_of - DAY < c.timestamp <= as_of]
    assert len(part) == 24
    expected = 100 * math.sqrt(sum(math.log(c.high / c.low) ** 2 for c in part) / (4 * 24 * math.log(2)))
    assert tools.volatility(store, BTC, WindowSpec(1, "day"), as_of) == pytest.approx(expected, rel=1e-12)


def test_volatility_needs_two_bars():
    store = store_of(make_series([1, 1, 1]))
    with pytest.raises(InsufficientDataError):
        tools.volatility(store, BTC, WindowSpec(1, "day"), MONDAY + 2 * DAY)


def test_predict_price_extrapolates():
    closes = [10.0, 12.0, 15.0, 19.0]
    store = store_of(make_series([1] * 4, closes=closes))
    as_of = MONDAY + 3 * DAY
    assert tools.predict_price(store, BTC, WindowSpec(1, "day"), as_of) == 19.0 + (19.0 - 15.0)
    with pytest.raises(InsufficientDataError):
        tools.predict_price(store, BTC, WindowSpec(1, "day"), MONDAY)


def test_predict_volatility_extrapolates_and_clamps():
    s = random_ohlc(random.Random(9), 72)
    store = store_of(s)
    as_of = s.last_timestamp
    w = WindowSpec(1, "day")

    def vol(end):
        part = [c for c in s.candles if end - DAY < c.timestamp <= end]
        return 100 * math.sqrt(sum(math.log(c.high / c.low) ** 2 for c in part) / (4 * len(part) * math.log(2)))

    last, prev = vol(as_of), vol(as_of - DAY)
    assert tools.predict_volatility(store, BTC, w, as_of) == pytest.approx(max(0.0, 2 * last - prev), rel=1e-12)

    # calm day after a wild one: the straight line goes below zero
    calm = make_series([1] * 4, interval=HOUR, spread=0.001)
    wild = make_series([1] * 4, interval=HOUR, spread=0.2, start=MONDAY - 4 * HOUR)
    joined = type(calm)(BTC, HOUR, wild.candles + calm.candles)
    store = store_of(joined)
    assert tools.predict_volatility(store, BTC, WindowSpec(4, "hour"), calm.last_timestamp) == 0.0


# -- correlation -----------------------------------------------------------------------------

def test_aligned_closes_intersects_timestamps():
    a = make_series([1] * 5, closes=[1.0, 2.0, 3.0, 4.0, 5.0])
    b = make_series([1] * 3, key=ETH, start=MONDAY + 2 * DAY, closes=[7.0, 8.0, 9.0])
    assert tools.aligned_closes(a, b) == ([3.0, 4.0, 5.0], [7.0, 8.0, 9.0])


def test_correlation_errors():
    a = make_series([1] * 5, closes=[1.0, 2.0, 3.0, 4.0, 5.0])
    flat = make_series([1] * 5, key=ETH, closes=[2.0] * 5)
    far = make_series([1] * 5, key=InstrumentKey("SOL"), start=MONDAY + 100 * DAY)
    store = store_of(a, flat, far)
    w = WindowSpec(1000, "day")
    with pytest.raises(ZeroVarianceError):
        tools.correlation(store, BTC, ETH, w, MONDAY + 200 * DAY)
    with pytest.raises(AlignmentError):
        tools.correlation(store, BTC, InstrumentKey("SOL"), w, MONDAY + 200 * DAY)


def test_correlation_between_exchanges():
    rng = random.Random(2)
    closes = [100 + rng.random() for _ in range(30)]
    a = make_series([1] * 30, closes=closes, interval=HOUR)
    b = make_series([1] * 30, key=InstrumentKey("BTC", "USDT", "KRAKEN"), closes=[2 * c + 1 for c in closes], interval=HOUR)
    store = store_of(a, b)
    r = tools.correlation_between_exchanges(store, "BTC", "USDT", "BINANCE", "KRAKEN", WindowSpec(1, "day"), a.last_timestamp)
    assert r == pytest.approx(1.0, abs=1e-12)


# -- seasonality -----------------------------------------------------------------------------

def test_layout_labels():
    assert tools.bucket_layout(TimeUnit.WEEK, TimeUnit.DAY).labels == [
        "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]
    assert tools.bucket_layout(TimeUnit.DAY, TimeUnit.HOUR).label(13) == "13:00 UTC"
    assert tools.bucket_layout(TimeUnit.WEEK, TimeUnit.HOUR).label(25) == "Tuesday 01:00 UTC"
    assert tools.bucket_layout(TimeUnit.DAY, TimeUnit.MINUTE).label(61) == "01:01 UTC"
    assert tools.bucket_layout(TimeUnit.HOUR, TimeUnit.MINUTE).label(5) == "minute 05"
    assert tools.bucket_layout(TimeUnit.YEAR, TimeUnit.MONTH).label(11) == "December"
    with pytest.raises(UnknownUnitError):
        tools.bucket_layout(TimeUnit.MONTH, TimeUnit.DAY)


def test_week_origin_is_monday():
    assert utc(tools.WEEK_ORIGIN).weekday() == 0


@pytest.mark.parametrize("weights, peaks, lows", [
    ([1.2, 1, 1, 1, 1, 1, 0.8], ["Monday"], ["Sunday"]),
    # the plain days sit at 1/8.5 = 11.8% < 13.57%, so they all count as lows
    ([2, 1, 1, 1, 1.5, 1, 1], ["Monday", "Friday"], ["Tuesday", "Wednesday", "Thursday", "Saturday", "Sunday"]),
    # and here at 1/6.1 = 16.4% >= 15%
    ([1, 1, 1, 1, 1, 1, 0.1], ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"], ["Sunday"]),
])
def test_planted_weekday_signals(weights, peaks, lows):
    store = store_of(make_series(weekly_volumes(52, weights)))
    w = WindowSpec(1, "year", "week", "day", 5.0)
    as_of = MONDAY + 364 * DAY - 1
    assert tools.peak_traded_volume(store, BTC, w, as_of) == peaks
    assert tools.lowest_traded_volume(store, BTC, w, as_of) == lows


def test_partial_periods_ignored():
    # a huge volume inside a week the data only partly covers must not count
    vols = weekly_volumes(10, [1] * 7)
    vols = [0.0] * 3 + vols  # starts on a Friday
    vols[0] = 1e9
    s = make_series(vols, start=MONDAY - 3 * DAY)
    store = store_of(s)
    w = WindowSpec(1, "year", "week", "day", 5.0)
    assert tools.peak_traded_volume(store, BTC, w, s.last_timestamp) == []


@given(st.lists(st.floats(0, 100), min_size=24 * 9, max_size=24 * 9), st.integers(0, 23),
       st.floats(0, 60))
@settings(max_examples=60, deadline=None)
def test_day_hour_matches_oracle(vols, shift, threshold):
    # hourly bars starting mid-day, so the first and last days are partial
    s = make_series(vols, interval=HOUR, start=MONDAY + shift * HOUR)
    store = store_of(s)
    w = WindowSpec(30, "day", "day", "hour", threshold)
    try:
        got_peaks, got_lows = tools.round_the_clock_pattern(store, BTC, w, s.last_timestamp)
    except InsufficientDataError:
        return
    shares = oracle_shares(s, lambda d: d.date(), lambda d: d.hour, 24, lambda g: 24)
    labels = tools.bucket_layout(TimeUnit.DAY, TimeUnit.HOUR).labels
    # ties can round differently; compare the share vectors, then membership
    got_shares = tools.average_shares(tools.volume_grid(s, TimeUnit.DAY, TimeUnit.HOUR))
    assert got_shares == pytest.approx(shares, rel=1e-9, abs=1e-9)
    floor, ceil = tools.share_bounds(24, threshold)
    if all(abs(x - floor) > 1e-6 and abs(x - ceil) > 1e-6 for x in shares):
        assert set(got_peaks) == set(oracle_peaks(shares, threshold, labels))
        assert set(got_lows) == set(oracle_lows(shares, threshold, labels))


def test_year_month_matches_oracle():
    rng = random.Random(11)
    start = int(datetime(2021, 9, 1, tzinfo=timezone.utc).timestamp())
    n = (int(datetime(2024, 3, 1, tzinfo=timezone.utc).timestamp()) - start) // DAY
    s = make_series([rng.uniform(0, 100) for _ in range(n)], start=start)
    got = tools.average_shares(tools.volume_grid(s, TimeUnit.YEAR, TimeUnit.MONTH))

    def days_in_year(y):
        return 366 if y % 4 == 0 else 365

    shares = oracle_shares(s, lambda d: d.year, lambda d: d.month - 1, 12, days_in_year)
    assert got == pytest.approx(shares, rel=1e-12)


def test_granularity_finer_than_bars_is_rejected():
    s = make_series([1] * 30)
    with pytest.raises(UnknownUnitError):
        tools.volume_grid(s, TimeUnit.DAY, TimeUnit.HOUR)


def test_abnormal_deviations_excludes_zero_mean_buckets():
    weights = [1, 1, 1, 1, 1, 1, 0]
    vols = weekly_volumes(5, weights)
    vols[-1] = 3.0  # last Sunday trades for the first time
    vols[-7] = 0.5  # last Monday halves
    store = store_of(make_series(vols))
    w = WindowSpec(1, "year", "week", "day", 10.0)
    d = tools.abnormal_deviations(store, BTC, w, MONDAY + 35 * DAY - 1)
    assert d.labels == ["Monday"]
    assert d.deviation_percents == [-50.0]
    assert d.timestamps == [MONDAY + 28 * DAY]
    assert d.excluded_buckets == ["Sunday"]


def test_abnormal_deviations_needs_history():
    store = store_of(make_series(weekly_volumes(1, [1] * 7)))
    with pytest.raises(InsufficientDataError):
        tools.abnormal_deviations(store, BTC, WindowSpec(1, "year", "week", "day", 5.0), MONDAY + 7 * DAY)


# -- stubs -----------------------------------------------------------------------------------

def _stub_table():
    vol = ToolCall("volatility", {"base_token": "BTC", "time_interval": 1})
    return tools.StubTable([
        tools.StubEntry("a", vol, ToolResult("volatility", {"volatility_percent": 5.0})),
        tools.StubEntry("b", ToolCall("price", {"base_token": "ETH"}), ToolResult("price", {"price": 3000.0})),
    ])


def test_stub_lookup():
    t = _stub_table()
    exact = ToolCall("volatility", {"base_token": "btc", "time_interval": 1.0})
    assert t.lookup("a", exact).payload == {"volatility_percent": 5.0}
    other_args = ToolCall("volatility", {"base_token": "ETH", "time_interval": 3})
    assert t.lookup("a", other_args).payload == {"volatility_percent": 5.0}
    wrong_tool = t.lookup("a", ToolCall("price", {"base_token": "BTC"}))
    assert not wrong_tool.ok and "not stubbed" in wrong_tool.error
    assert t.lookup(None, ToolCall("price", {"base_token": "ETH"})).payload == {"price": 3000.0}
    with pytest.raises(StubError):
        t.lookup(None, ToolCall("price", {"base_token": "DOGE"}))
    with pytest.raises(UnknownItemError):
        t.lookup("zzz", exact)


def test_stub_file_round_trip(tmp_path):
    t = _stub_table()
    path = tmp_path / "stubs.jsonl"
    t.save(path)
    back = tools.StubTable.load(path)
    assert back.dumps() == t.dumps()
    path.write_text("{not json\n")
    with pytest.raises(StubError):
        tools.StubTable.load(path)
