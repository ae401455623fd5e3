#!/usr/bin/env python3
"""Regenerate src/tsqa/data/benchmark.tsv and benchmark_smoke.tsv.

The corpus is built from fixed templates and a fixed RNG seed, so running
this script again reproduces the committed files byte for byte.
"""

from __future__ import annotations

import calendar
import random
from pathlib import Path

from tsqa.harness import COLUMNS, format_benchmark_row

OUT = Path(__file__).resolve().parents[1] / "src" / "tsqa" / "data"
rng = random.Random(20250401)

TOKENS = ["BTC", "ETH", "SOL", "XRP", "ADA", "DOGE", "BNB", "LTC", "DOT", "AVAX"]
EXCHANGES = ["BINANCE", "BYBIT", "OKX", "KRAKEN", "COINBASE"]
WEEKDAYS = list(calendar.day_name)
# Monday 2025-03-24 00:00 UTC
RECENT_WEEK = 1742774400

rows: list[str] = []


def add(item_id, nlq, keywords, nlr, calls, payloads):
    results = [{"tool_name": c["tool_name"], "payload": p} for c, p in zip(calls, payloads)]
    rows.append(format_benchmark_row(item_id, nlq, keywords, nlr, calls, results))


def call(tool, **args):
    return {"tool_name": tool, "args": args}


def window_words(n, unit):
    return f"{n} {unit}" + ("s" if n != 1 else "")


def join_labels(labels):
    if not labels:
        return "no time slot"
    if len(labels) == 1:
        return labels[0]
    return ", ".join(labels[:-1]) + " and " + labels[-1]


# -- seasonality (32) -----------------------------------------------------------------

def peak_items():
    specs = [
        ("When is BTC trading volume the highest?", dict(base_token="BTC"), ["Monday", "Friday"]),
        ("Peak volume days for ETH?", dict(base_token="ETH"), ["Tuesday"]),
        ("Which days of the week had the highest SOL trading volume on BYBIT over the past 2 years?",
         dict(base_token="SOL", exchange="BYBIT", time_interval=2), ["Wednesday", "Thursday"]),
        ("On which weekdays is XRP volume more than 10% above normal?",
         dict(base_token="XRP", threshold_percent=10.0), ["Monday"]),
        ("At what hours of the day is DOGE traded the most over the past month?",
         dict(base_token="DOGE", time_interval=1, time_unit="month", period_unit="day", granularity_unit="hour"),
         ["14:00 UTC", "15:00 UTC"]),
        ("Show the busiest trading days for BNB quoted in USDC on BINANCE over the past 6 months.",
         dict(base_token="BNB", quote_token="USDC", time_interval=6, time_unit="month"), ["Friday"]),
        ("Which hours have the highest LTC volume on OKX in the past 3 months with a 20% threshold?",
         dict(base_token="LTC", exchange="OKX", time_interval=3, time_unit="month", period_unit="day",
              granularity_unit="hour", threshold_percent=20.0), ["13:00 UTC", "16:00 UTC", "17:00 UTC"]),
        ("peak volume DOT", dict(base_token="DOT"), ["Thursday"]),
        ("In which months of the year does AVAX see its highest trading volume over the past 3 years?",
         dict(base_token="AVAX", time_interval=3, period_unit="year", granularity_unit="month"),
         ["March", "November"]),
        ("What day of the week does ADA trade the most on KRAKEN?",
         dict(base_token="ADA", exchange="KRAKEN"), ["Monday", "Tuesday"]),
    ]
    for i, (nlq, args, labels) in enumerate(specs, 1):
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=1, time_unit="year"), **args)
        nlr = (f"The peak traded volume for {a['base_token']} quoted in {a['quote_token']} on {a['exchange']} "
               f"over the past {window_words(a['time_interval'], a['time_unit'])} occurs at {join_labels(labels)}.")
        add(f"season-peak-{i:02d}", nlq, [a["base_token"], *labels], nlr,
            [call("peak_traded_volume", **args)], [{"labels": labels}])


def low_items():
    specs = [
        ("When is BTC volume the lowest?", dict(base_token="BTC"), ["Sunday", "Saturday"]),
        ("Quietest trading days for ETH?", dict(base_token="ETH"), ["Sunday"]),
        ("Which hours of the day have the lowest SOL volume over the past month?",
         dict(base_token="SOL", time_unit="month", period_unit="day", granularity_unit="hour"),
         ["03:00 UTC", "04:00 UTC"]),
        ("On which weekdays is XRP volume more than 15% below normal on BYBIT?",
         dict(base_token="XRP", exchange="BYBIT", threshold_percent=15.0), ["Saturday", "Sunday"]),
        ("lowest volume days BNB", dict(base_token="BNB"), ["Saturday"]),
        ("Which days had the lowest DOGE trading volume on OKX over the past 2 years?",
         dict(base_token="DOGE", exchange="OKX", time_interval=2), ["Sunday"]),
        ("In which months is LTC trading volume the lowest over the past 2 years?",
         dict(base_token="LTC", time_interval=2, period_unit="year", granularity_unit="month"),
         ["August", "December"]),
        ("What are the least active trading days for ADA quoted in USDC?",
         dict(base_token="ADA", quote_token="USDC"), ["Saturday", "Sunday"]),
    ]
    for i, (nlq, args, labels) in enumerate(specs, 1):
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=1, time_unit="year"), **args)
        nlr = (f"The lowest traded volume for {a['base_token']} quoted in {a['quote_token']} on {a['exchange']} "
               f"over the past {window_words(a['time_interval'], a['time_unit'])} occurs at {join_labels(labels)}.")
        add(f"season-low-{i:02d}", nlq, [a["base_token"], *labels], nlr,
            [call("lowest_traded_volume", **args)], [{"labels": labels}])


def pattern_items():
    specs = [
        ("What is the weekly trading pattern of BTC?", dict(base_token="BTC"), ["Monday"], ["Sunday"]),
        ("Round the clock pattern for ETH", dict(base_token="ETH"), ["Tuesday", "Wednesday"], ["Saturday"]),
        ("Describe the daily hourly volume pattern of SOL over the past month.",
         dict(base_token="SOL", time_unit="month", period_unit="day", granularity_unit="hour"),
         ["15:00 UTC"], ["04:00 UTC"]),
        ("Give me the busiest and quietest days for XRP on BYBIT over the past 2 years.",
         dict(base_token="XRP", exchange="BYBIT", time_interval=2), ["Thursday"], ["Sunday"]),
        ("What is the volume pattern of DOGE with a 25% threshold?",
         dict(base_token="DOGE", threshold_percent=25.0), ["Monday"], ["Saturday", "Sunday"]),
        ("BNB weekly volume pattern on OKX", dict(base_token="BNB", exchange="OKX"), ["Friday"], ["Sunday"]),
        ("Summarize when AVAX quoted in USDC trades most and least during the week.",
         dict(base_token="AVAX", quote_token="USDC"), ["Wednesday"], ["Saturday"]),
    ]
    for i, (nlq, args, peaks, lows) in enumerate(specs, 1):
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=1, time_unit="year"), **args)
        nlr = (f"Over the past {window_words(a['time_interval'], a['time_unit'])}, {a['base_token']} quoted in "
               f"{a['quote_token']} on {a['exchange']} shows peak volume at {join_labels(peaks)} and the lowest "
               f"volume at {join_labels(lows)}.")
        add(f"season-pattern-{i:02d}", nlq, [a["base_token"], *peaks, *lows], nlr,
            [call("round_the_clock_pattern", **args)], [{"peaks": peaks, "lows": lows}])


def deviation_items():
    specs = [
        ("Were there any abnormal volume deviations for BTC recently?", dict(base_token="BTC"),
         [("Monday", 0, 120.5)]),
        ("Abnormal volume for ETH?", dict(base_token="ETH"), [("Wednesday", 2, -45.2), ("Friday", 4, 38.0)]),
        ("Did SOL volume deviate from its norm by more than 50% last week?",
         dict(base_token="SOL", threshold_percent=50.0), [("Tuesday", 1, 87.3)]),
        ("Find unusual XRP trading volume on BYBIT compared to the past 2 years.",
         dict(base_token="XRP", exchange="BYBIT", time_interval=2), [("Thursday", 3, 64.9)]),
        ("Any anomalies in DOGE hourly volume today compared to the past month?",
         dict(base_token="DOGE", time_unit="month", period_unit="day", granularity_unit="hour"),
         [("09:00 UTC", 9, 210.4)]),
        ("abnormal deviations LTC", dict(base_token="LTC"), [("Saturday", 5, -33.8)]),
        ("Has ADA quoted in USDC shown volume deviations above 30% recently?",
         dict(base_token="ADA", quote_token="USDC", threshold_percent=30.0), [("Sunday", 6, 41.7)]),
    ]
    for i, (nlq, args, devs) in enumerate(specs, 1):
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=1, time_unit="year",
                      period_unit="week"), **args)
        step = 3600 if a["period_unit"] == "day" else 86400
        base = RECENT_WEEK + 5 * 86400 if a["period_unit"] == "day" else RECENT_WEEK
        payload = {
            "timestamps": [base + off * step for _, off, _ in devs],
            "deviation_percents": [d for _, _, d in devs],
            "labels": [lab for lab, _, _ in devs],
            "excluded_buckets": [],
        }
        parts = [f"{lab} ({d:+.1f}%)" for lab, _, d in devs]
        nlr = (f"Compared with the past {window_words(a['time_interval'], a['time_unit'])}, {a['base_token']} "
               f"quoted in {a['quote_token']} on {a['exchange']} shows abnormal volume deviations in the most "
               f"recent {a['period_unit']} at {join_labels(parts)}.")
        kws = [a["base_token"]] + [lab for lab, _, _ in devs] + [str(d) for _, _, d in devs]
        add(f"season-dev-{i:02d}", nlq, kws, nlr, [call("abnormal_deviations", **args)], [payload])


# -- price & volatility (32) ----------------------------------------------------------------

PRICES = {"BTC": 84250.0, "ETH": 1895.4, "SOL": 131.25, "XRP": 2.14, "ADA": 0.71, "DOGE": 0.172,
          "BNB": 612.8, "LTC": 88.45, "DOT": 4.32, "AVAX": 19.6}


def price_items():
    specs = [
        ("What is the price of BTC?", dict(base_token="BTC")),
        ("ETH price", dict(base_token="ETH")),
        ("What is the latest price of SOL on BYBIT?", dict(base_token="SOL", exchange="BYBIT")),
        ("What was the last XRP price quoted in USDC over the past week?",
         dict(base_token="XRP", quote_token="USDC", time_interval=1, time_unit="week")),
        ("Current DOGE price on KRAKEN in the last 4 hours?",
         dict(base_token="DOGE", exchange="KRAKEN", time_interval=4, time_unit="hour")),
        ("How much is one BNB in USDT on OKX right now?", dict(base_token="BNB", exchange="OKX")),
        ("price of LTC", dict(base_token="LTC")),
    ]
    for i, (nlq, args) in enumerate(specs, 1):
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=1, time_unit="day"), **args)
        p = PRICES[a["base_token"]]
        if a["exchange"] != "BINANCE":
            p = round(p * (1 + rng.uniform(-0.002, 0.002)), 4)
        nlr = (f"The latest price of {a['base_token']} quoted in {a['quote_token']} on {a['exchange']} "
               f"within the past {window_words(a['time_interval'], a['time_unit'])} is {p}.")
        add(f"price-{i:02d}", nlq, [a["base_token"], str(p)], nlr, [call("price", **args)], [{"price": p}])

    multi = [
        ("What are the prices of BTC and ETH?", ["BTC", "ETH"]),
        ("Give me the current prices of SOL, ADA and DOT.", ["SOL", "ADA", "DOT"]),
    ]
    for j, (nlq, toks) in enumerate(multi, len(specs) + 1):
        calls = [call("price", base_token=t) for t in toks]
        payloads = [{"price": PRICES[t]} for t in toks]
        parts = [f"{t} is {PRICES[t]}" for t in toks]
        nlr = f"The latest prices quoted in USDT on BINANCE within the past 1 day: {join_labels(parts)}."
        kws = [x for t in toks for x in (t, str(PRICES[t]))]
        add(f"price-{j:02d}", nlq, kws, nlr, calls, payloads)


def volatility_items():
    specs = [
        ("What is the volatility of BTC?", dict(base_token="BTC"), 5.0),
        ("ETH volatility", dict(base_token="ETH")),
        ("What was the Parkinson volatility of SOL over the past 7 days?",
         dict(base_token="SOL", time_interval=7)),
        ("How volatile has XRP been on BYBIT over the last month?",
         dict(base_token="XRP", exchange="BYBIT", time_interval=1, time_unit="month")),
        ("Calculate the historical volatility of ADA quoted in USDC over the past 2 weeks.",
         dict(base_token="ADA", quote_token="USDC", time_interval=2, time_unit="week")),
        ("DOGE volatility on OKX in the past 12 hours",
         dict(base_token="DOGE", exchange="OKX", time_interval=12, time_unit="hour")),
        ("volatility BNB", dict(base_token="BNB")),
        ("What is the volatility of LTC over the past 30 days?", dict(base_token="LTC", time_interval=30)),
        ("How much did AVAX price fluctuate on KRAKEN over the past year?",
         dict(base_token="AVAX", exchange="KRAKEN", time_interval=1, time_unit="year")),
    ]
    for i, spec in enumerate(specs, 1):
        nlq, args = spec[0], spec[1]
        v = spec[2] if len(spec) > 2 else round(rng.uniform(1.0, 12.0), 2)
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=1, time_unit="day"), **args)
        nlr = (f"The volatility of {a['base_token']} quoted in {a['quote_token']} on {a['exchange']} over the past "
               f"{window_words(a['time_interval'], a['time_unit'])} is {v}%.")
        add(f"vol-{i:02d}", nlq, [a["base_token"], str(v)], nlr, [call("volatility", **args)],
            [{"volatility_percent": v}])


def prediction_items():
    price_specs = [
        ("Predict the price of BTC for tomorrow.", dict(base_token="BTC")),
        ("ETH price prediction", dict(base_token="ETH")),
        ("What will the SOL price be next week?", dict(base_token="SOL", time_interval=1, time_unit="week")),
        ("Forecast XRP price on BYBIT for the next 4 hours.",
         dict(base_token="XRP", exchange="BYBIT", time_interval=4, time_unit="hour")),
        ("Where will DOGE quoted in USDC trade in the next day?", dict(base_token="DOGE", quote_token="USDC")),
        ("Predict BNB price on OKX for the next month.",
         dict(base_token="BNB", exchange="OKX", time_interval=1, time_unit="month")),
        ("predicted price LTC", dict(base_token="LTC")),
    ]
    for i, (nlq, args) in enumerate(price_specs, 1):
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=1, time_unit="day"), **args)
        p = round(PRICES[a["base_token"]] * (1 + rng.uniform(-0.05, 0.05)), 4)
        nlr = (f"The predicted price of {a['base_token']} quoted in {a['quote_token']} on {a['exchange']} for the "
               f"next {window_words(a['time_interval'], a['time_unit'])} is {p}.")
        add(f"predict-price-{i:02d}", nlq, [a["base_token"], str(p)], nlr, [call("predict_price", **args)],
            [{"predicted_price": p}])

    vol_specs = [
        ("Predict BTC volatility for tomorrow.", dict(base_token="BTC")),
        ("ETH volatility forecast", dict(base_token="ETH")),
        ("How volatile will SOL be next week?", dict(base_token="SOL", time_interval=1, time_unit="week")),
        ("Forecast the volatility of XRP on BYBIT over the next 6 hours.",
         dict(base_token="XRP", exchange="BYBIT", time_interval=6, time_unit="hour")),
        ("What volatility do you expect for ADA quoted in USDC over the next 3 days?",
         dict(base_token="ADA", quote_token="USDC", time_interval=3)),
        ("predict volatility DOT", dict(base_token="DOT")),
        ("Predict the volatility of AVAX on KRAKEN for the next month.",
         dict(base_token="AVAX", exchange="KRAKEN", time_interval=1, time_unit="month")),
    ]
    for i, (nlq, args) in enumerate(vol_specs, 1):
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=1, time_unit="day"), **args)
        v = round(rng.uniform(1.0, 12.0), 2)
        nlr = (f"The predicted volatility of {a['base_token']} quoted in {a['quote_token']} on {a['exchange']} for "
               f"the next {window_words(a['time_interval'], a['time_unit'])} is {v}%.")
        add(f"predict-vol-{i:02d}", nlq, [a["base_token"], str(v)], nlr, [call("predict_volatility", **args)],
            [{"predicted_volatility_percent": v}])


# -- correlation (20) ------------------------------------------------------------------------

def correlation_items():
    token_specs = [
        ("What was the price correlation between BTC and ETH quoted in USDT on BINANCE exchange in the past "
         "7 days?", dict(base_token_a="BTC", base_token_b="ETH", quote_token="USDT", exchange="BINANCE",
                         time_interval=7, time_unit="day"), 1.0),
        ("Correlation between SOL and ETH?", dict(base_token_a="SOL", base_token_b="ETH")),
        ("How correlated are BTC and XRP over the past 30 days?",
         dict(base_token_a="BTC", base_token_b="XRP", time_interval=30)),
        ("Compute the correlation of DOGE and ADA prices on BYBIT over the last month.",
         dict(base_token_a="DOGE", base_token_b="ADA", exchange="BYBIT", time_interval=1, time_unit="month")),
        ("BNB vs LTC correlation", dict(base_token_a="BNB", base_token_b="LTC")),
        ("What is the price correlation between ETH and AVAX quoted in USDC over the past 2 weeks?",
         dict(base_token_a="ETH", base_token_b="AVAX", quote_token="USDC", time_interval=2, time_unit="week")),
        ("Do DOT and SOL move together on OKX over the past 24 hours?",
         dict(base_token_a="DOT", base_token_b="SOL", exchange="OKX", time_interval=24, time_unit="hour")),
        ("correlation BTC ADA past 90 days", dict(base_token_a="BTC", base_token_b="ADA", time_interval=90)),
        ("How closely did XRP track ETH on KRAKEN over the past year?",
         dict(base_token_a="XRP", base_token_b="ETH", exchange="KRAKEN", time_interval=1, time_unit="year")),
        ("Correlation between BTC and SOL over the past 3 days?",
         dict(base_token_a="BTC", base_token_b="SOL", time_interval=3)),
        ("Is LTC correlated with DOGE this week?",
         dict(base_token_a="LTC", base_token_b="DOGE", time_interval=1, time_unit="week")),
        ("What is the correlation between AVAX and DOT over the past 14 days on BYBIT?",
         dict(base_token_a="AVAX", base_token_b="DOT", exchange="BYBIT", time_interval=14)),
    ]
    for i, spec in enumerate(token_specs, 1):
        nlq, args = spec[0], spec[1]
        r = spec[2] if len(spec) > 2 else round(rng.uniform(-0.3, 0.98), 2)
        a = dict(dict(quote_token="USDT", exchange="BINANCE", time_interval=7, time_unit="day"), **args)
        nlr = (f"The price correlation between tokens {a['base_token_a']} and {a['base_token_b']} quoted in "
               f"{a['quote_token']} on {a['exchange']} exchange in the past "
               f"{window_words(a['time_interval'], a['time_unit'])} trading window is {r}.")
        add(f"corr-tokens-{i:02d}", nlq, [a["base_token_a"], a["base_token_b"], str(r)], nlr,
            [call("correlation_between_tokens", **args)], [{"correlation": r}])

    exch_specs = [
        ("What is the correlation of BTC prices between BINANCE and BYBIT?",
         dict(base_token="BTC", exchange_a="BINANCE", exchange_b="BYBIT")),
        ("ETH correlation between OKX and KRAKEN", dict(base_token="ETH", exchange_a="OKX", exchange_b="KRAKEN")),
        ("How correlated is SOL on BINANCE and COINBASE over the past 30 days?",
         dict(base_token="SOL", exchange_a="BINANCE", exchange_b="COINBASE", time_interval=30)),
        ("Compare XRP prices on BYBIT and OKX over the last 24 hours: what is their correlation?",
         dict(base_token="XRP", exchange_a="BYBIT", exchange_b="OKX", time_interval=24, time_unit="hour")),
        ("Exchange correlation for DOGE quoted in USDC between BINANCE and KRAKEN?",
         dict(base_token="DOGE", quote_token="USDC", exchange_a="BINANCE", exchange_b="KRAKEN")),
        ("Does ADA trade in sync on BINANCE and OKX over the past month?",
         dict(base_token="ADA", exchange_a="BINANCE", exchange_b="OKX", time_interval=1, time_unit="month")),
        ("BNB BINANCE vs BYBIT correlation", dict(base_token="BNB", exchange_a="BINANCE", exchange_b="BYBIT")),
        ("What was the price correlation of LTC between KRAKEN and COINBASE over the past 2 weeks?",
         dict(base_token="LTC", exchange_a="KRAKEN", exchange_b="COINBASE", time_interval=2, time_unit="week")),
    ]
    for i, (nlq, args) in enumerate(exch_specs, 1):
        r = round(rng.uniform(0.9, 0.999), 3)
        a = dict(dict(quote_token="USDT", time_interval=7, time_unit="day"), **args)
        nlr = (f"The price correlation of {a['base_token']} quoted in {a['quote_token']} between exchanges "
               f"{a['exchange_a']} and {a['exchange_b']} in the past "
               f"{window_words(a['time_interval'], a['time_unit'])} trading window is {r}.")
        add(f"corr-exchanges-{i:02d}", nlq, [a["base_token"], a["exchange_a"], a["exchange_b"], str(r)], nlr,
            [call("correlation_between_exchanges", **args)], [{"correlation": r}])


# -- metadata (16) -----------------------------------------------------------------------------

def metadata_items():
    bases = sorted(TOKENS)
    exchanges = sorted(EXCHANGES)
    quotes = ["USDC", "USDT"]
    units = ["minute", "hour", "day", "week", "month", "year"]
    groups = [
        ("get_base_tokens", "base_tokens", bases, "The available base tokens are {}.", [
            "Which tokens can I ask about?", "List base tokens", "What cryptocurrencies do you have data for?",
            "Which base tokens are supported?", "tokens available"]),
        ("get_exchanges", "exchanges", exchanges, "The available exchanges are {}.", [
            "Which exchanges are supported?", "list exchanges", "What exchanges do you have data from?",
            "Which trading venues can I query?"]),
        ("get_quote_tokens", "quote_tokens", quotes, "The available quote tokens are {}.", [
            "Which quote currencies are available?", "quote tokens", "What can prices be quoted in?"]),
        ("get_valid_time_units", "time_units", units, "The valid time units are {}.", [
            "What time units can I use?", "valid time units", "Which time units are supported for windows?",
            "Can I ask for minutes, hours or years? List the time units."]),
    ]
    n = 0
    for tool, key, values, template, questions in groups:
        for q in questions:
            n += 1
            add(f"meta-{n:02d}", q, values[:3] if len(values) > 3 else values, template.format(join_labels(values)),
                [call(tool)], [{key: values}])


def main():
    peak_items()
    low_items()
    pattern_items()
    deviation_items()
    price_items()
    volatility_items()
    prediction_items()
    correlation_items()
    metadata_items()
    assert len(rows) == 100, len(rows)
    header = "\t".join(COLUMNS)
    (OUT / "benchmark.tsv").write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    smoke_ids = {"season-peak-01", "season-low-02", "season-pattern-01", "season-dev-01", "price-01",
                 "vol-01", "predict-price-01", "corr-tokens-01", "corr-exchanges-01", "meta-01"}
    smoke = [r for r in rows if r.split("\t", 1)[0] in smoke_ids]
    assert len(smoke) == 10
    (OUT / "benchmark_smoke.tsv").write_text(header + "\n" + "\n".join(smoke) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} items and a {len(smoke)}-item smoke subset to {OUT}")


if __name__ == "__main__":
    main()
