import random
from collections import defaultdict

import pytest

from tsqa.market_data import DAY, HOUR, Candle, CandleSeries, InstrumentKey, MarketStore

# Monday 2024-01-01 00:00 UTC
MONDAY = 1704067200
BTC = InstrumentKey("BTC")
ETH = InstrumentKey("ETH")


def make_series(volumes, key=BTC, start=MONDAY, interval=DAY, closes=None, spread=0.01):
    """Bars at ``start + i * interval`` with the given volumes and positive prices."""
    candles = []
    for i, v in enumerate(volumes):
        c = closes[i] if closes is not None else 100.0 + i % 7
        candles.append(Candle(start + i * interval, c, c * (1 + spread), c * (1 - spread), c, float(v)))
    return CandleSeries(key, interval, tuple(candles))


def weekly_volumes(weeks, weights):
    """Daily volumes for ``weeks`` Monday-aligned weeks; ``weights`` is indexed by weekday."""
    return [weights[d % 7] for d in range(7 * weeks)]


def store_of(*series):
    store = MarketStore()
    for s in series:
        store.register(s)
    return store.freeze()


def random_ohlc(rng: random.Random, n: int, key=BTC, start=MONDAY, interval=HOUR):
    candles = []
    price = 100.0
    for i in range(n):
        price *= 1 + rng.gauss(0, 0.01)
        low = price * (1 - rng.uniform(0, 0.03))
        high = price * (1 + rng.uniform(0, 0.03))
        o = rng.uniform(low, high)
        c = rng.uniform(low, high)
        candles.append(Candle(start + i * interval, o, high, low, c, rng.uniform(0, 1000)))
    return CandleSeries(key, interval, tuple(candles))


# -- acceptance report --------------------------------------------------------------------------

_criteria: dict[int, list[str]] = defaultdict(list)
_titles: dict[int, str] = {}


def pytest_runtest_logreport(report):
    n = getattr(report, "criterion", None)
    if n is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[n].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        rep.criterion = marker.args[0]
        _titles.setdefault(marker.args[0], marker.kwargs.get("title", ""))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        results = _criteria[n]
        if "failed" in results:
            verdict = "FAIL"
        elif all(r == "skipped" for r in results):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {_titles.get(n, '')}")
