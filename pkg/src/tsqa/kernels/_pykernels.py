"""Pure-Python versions of the numeric kernels.

Same signatures and summation order as the compiled module, so both give
results equal to within rounding of the log/sqrt calls.
"""

from __future__ import annotations

import math


def parkinson_sum_sq(highs, lows) -> float:
    n = len(highs)
    if len(lows) != n:
        raise ValueError("highs and lows differ in length")
    total = 0.0
    log = math.log
    for i in range(n):
        r = log(highs[i] / lows[i])
        total += r * r
    return total


def pearson_r(x, y) -> float:
    """Two-pass Pearson correlation. Returns nan when either side has zero variance."""
    n = len(x)
    if len(y) != n:
        raise ValueError("x and y differ in length")
    if n < 2:
        raise ValueError("need at least two points")
    sx = 0.0
    sy = 0.0
    for i in range(n):
        sx += x[i]
        sy += y[i]
    mx = sx / n
    my = sy / n
    sxx = 0.0
    syy = 0.0
    sxy = 0.0
    for i in range(n):
        dx = x[i] - mx
        dy = y[i] - my
        sxx += dx * dx
        syy += dy * dy
        sxy += dx * dy
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    r = sxy / math.sqrt(sxx * syy)
    if r > 1.0:
        return 1.0
    if r < -1.0:
        return -1.0
    return r


def grid_bucket_sums(timestamps, volumes, origin, period_s, gran_s, first_period, n_periods, n_buckets):
    """Volume per (period, bucket) on a fixed calendar grid.

    Period index is ``(t - origin) // period_s - first_period``; the bucket is
    ``((t - origin) % period_s) // gran_s``. Points outside the period range
    are ignored. Returns a flat row-major list of ``n_periods * n_buckets``.
    """
    out = [0.0] * (n_periods * n_buckets)
    for i in range(len(timestamps)):
        off = timestamps[i] - origin
        p = off // period_s - first_period
        if p < 0 or p >= n_periods:
            continue
        b = (off % period_s) // gran_s
        if b >= n_buckets:
            continue
        out[p * n_buckets + b] += volumes[i]
    return out


def accumulate(period_idx, bucket_idx, volumes, n_periods, n_buckets):
    """Volume per (period, bucket) for precomputed indices; negative indices are skipped."""
    out = [0.0] * (n_periods * n_buckets)
    for i in range(len(volumes)):
        p = period_idx[i]
        b = bucket_idx[i]
        if p < 0 or p >= n_periods or b < 0 or b >= n_buckets:
            continue
        out[p * n_buckets + b] += volumes[i]
    return out
