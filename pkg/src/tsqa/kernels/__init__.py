"""Numeric kernels with a compiled fast path.

The Cython extension ``_ckernels`` is used when it was built; otherwise, or
when ``TSQA_PURE_PYTHON=1`` is set, the pure-Python ``_pykernels`` module is
used. ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os
from array import array

from . import _pykernels

try:
    if os.environ.get("TSQA_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure Python kernels forced by TSQA_PURE_PYTHON")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def _doubles(values):
    if BACKEND == "python":
        return values
    if isinstance(values, array) and values.typecode == "d":
        return values
    return array("d", values)


def _int64s(values):
    if BACKEND == "python":
        return values
    if isinstance(values, array) and values.typecode == "q":
        return values
    return array("q", values)


def parkinson_sum_sq(highs, lows) -> float:
    """Sum of squared log high/low ratios."""
    return _impl.parkinson_sum_sq(_doubles(highs), _doubles(lows))


def pearson_r(x, y) -> float:
    """Two-pass Pearson r clamped to [-1, 1]; nan on zero variance."""
    return _impl.pearson_r(_doubles(x), _doubles(y))


def grid_bucket_sums(timestamps, volumes, origin, period_s, gran_s, first_period, n_periods, n_buckets):
    return _impl.grid_bucket_sums(
        _int64s(timestamps), _doubles(volumes), origin, period_s, gran_s,
        first_period, n_periods, n_buckets,
    )


def accumulate(period_idx, bucket_idx, volumes, n_periods, n_buckets):
    return _impl.accumulate(_int64s(period_idx), _int64s(bucket_idx), _doubles(volumes), n_periods, n_buckets)


__all__ = ["BACKEND", "parkinson_sum_sq", "pearson_r", "grid_bucket_sums", "accumulate"]
