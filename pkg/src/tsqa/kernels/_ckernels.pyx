# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels. See _pykernels for the reference semantics."""

from libc.math cimport log, sqrt, NAN


def parkinson_sum_sq(const double[::1] highs, const double[::1] lows):
    cdef Py_ssize_t i, n = highs.shape[0]
    cdef double total = 0.0, r
    if lows.shape[0] != n:
        raise ValueError("highs and lows differ in length")
    for i in range(n):
        r = log(highs[i] / lows[i])
        total += r * r
    return total


def pearson_r(const double[::1] x, const double[::1] y):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double sx = 0.0, sy = 0.0, mx, my, dx, dy
    cdef double sxx = 0.0, syy = 0.0, sxy = 0.0, r
    if y.shape[0] != n:
        raise ValueError("x and y differ in length")
    if n < 2:
        raise ValueError("need at least two points")
    for i in range(n):
        sx += x[i]
        sy += y[i]
    mx = sx / n
    my = sy / n
    for i in range(n):
        dx = x[i] - mx
        dy = y[i] - my
        sxx += dx * dx
        syy += dy * dy
        sxy += dx * dy
    if sxx == 0.0 or syy == 0.0:
        return NAN
    r = sxy / sqrt(sxx * syy)
    if r > 1.0:
        return 1.0
    if r < -1.0:
        return -1.0
    return r


cdef inline long long _floordiv(long long a, long long b) nogil:
    cdef long long q = a / b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


def grid_bucket_sums(const long long[::1] timestamps, const double[::1] volumes,
                     long long origin, long long period_s, long long gran_s,
                     long long first_period, Py_ssize_t n_periods, Py_ssize_t n_buckets):
    cdef Py_ssize_t i, n = timestamps.shape[0]
    cdef long long off, p, b, q
    cdef double[::1] out
    if volumes.shape[0] != n:
        raise ValueError("timestamps and volumes differ in length")
    import array
    buf = array.array("d", bytes(8 * n_periods * n_buckets))
    out = buf
    for i in range(n):
        off = timestamps[i] - origin
        q = _floordiv(off, period_s)
        p = q - first_period
        if p < 0 or p >= n_periods:
            continue
        b = (off - q * period_s) / gran_s
        if b >= n_buckets:
            continue
        out[p * n_buckets + b] += volumes[i]
    return buf.tolist()


def accumulate(const long long[::1] period_idx, const long long[::1] bucket_idx,
               const double[::1] volumes, Py_ssize_t n_periods, Py_ssize_t n_buckets):
    cdef Py_ssize_t i, n = volumes.shape[0]
    cdef long long p, b
    cdef double[::1] out
    if period_idx.shape[0] != n or bucket_idx.shape[0] != n:
        raise ValueError("index and volume arrays differ in length")
    import array
    buf = array.array("d", bytes(8 * n_periods * n_buckets))
    out = buf
    for i in range(n):
        p = period_idx[i]
        b = bucket_idx[i]
        if p < 0 or p >= n_periods or b < 0 or b >= n_buckets:
            continue
        out[p * n_buckets + b] += volumes[i]
    return buf.tolist()
