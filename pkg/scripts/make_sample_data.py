#!/usr/bin/env python3
"""Write a small synthetic market-data directory for trying real mode.

    python scripts/make_sample_data.py sample-data [--days 400]

Hourly random-walk candles for a few tokens on two exchanges, with a
weekly volume rhythm (busy Mondays, quiet Sundays), plus manifest.json.
"""

from __future__ import annotations

import argparse
import json
import math
import random
from pathlib import Path

from tsqa.market_data import HOUR, Candle, CandleSeries, InstrumentKey, write_candles_csv

# Monday 2024-01-01 00:00 UTC
START = 1704067200
WEEKDAY_VOLUME = [1.6, 1.1, 1.0, 1.0, 1.1, 0.8, 0.5]
INSTRUMENTS = [("BTC", "BINANCE", 60000.0), ("ETH", "BINANCE", 3000.0), ("SOL", "BINANCE", 150.0),
               ("BTC", "KRAKEN", 60000.0), ("ETH", "KRAKEN", 3000.0)]


def synth(key: InstrumentKey, price: float, hours: int, market: list[float], rng: random.Random) -> CandleSeries:
    candles = []
    for i in range(hours):
        ret = market[i] + rng.gauss(0, 0.004)
        o = price
        c = price * math.exp(ret)
        hi = max(o, c) * (1 + abs(rng.gauss(0, 0.002)))
        lo = min(o, c) * (1 - abs(rng.gauss(0, 0.002)))
        ts = START + i * HOUR
        weekday = (i // 24) % 7
        vol = 1000 * WEEKDAY_VOLUME[weekday] * rng.uniform(0.7, 1.3)
        candles.append(Candle(ts, o, hi, lo, c, vol))
        price = c
    return CandleSeries(key, HOUR, tuple(candles))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--days", type=int, default=400)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    hours = args.days * 24
    market = [rng.gauss(0, 0.006) for _ in range(hours)]  # shared factor, so tokens correlate
    args.out.mkdir(parents=True, exist_ok=True)
    series = []
    for base, exchange, price in INSTRUMENTS:
        key = InstrumentKey(base, "USDT", exchange)
        name = f"{base.lower()}_{exchange.lower()}.csv"
        write_candles_csv(synth(key, price, hours, market, rng), args.out / name)
        series.append({"file": name, "base": base, "quote": "USDT", "exchange": exchange, "interval": "1h"})
    manifest = {"gap_policy": "reject", "series": series}
    (args.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(series)} series to {args.out}")


if __name__ == "__main__":
    main()
