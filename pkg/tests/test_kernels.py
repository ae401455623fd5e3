import math
from array import array

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from tsqa import kernels
from tsqa.kernels import _pykernels

try:
    from tsqa.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")

prices = st.floats(1e-3, 1e6, allow_nan=False)
values = st.floats(-1e6, 1e6, allow_nan=False)


def d(xs):
    return array("d", xs)


def q(xs):
    return array("q", xs)


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


@needs_ext
@given(st.lists(st.tuples(prices, st.floats(1.0, 2.0)), min_size=0, max_size=200))
@settings(max_examples=200, deadline=None)
def test_parkinson_parity(pairs):
    lows = [lo for lo, _ in pairs]
    highs = [lo * f for lo, f in pairs]
    a = _pykernels.parkinson_sum_sq(highs, lows)
    b = _ckernels.parkinson_sum_sq(d(highs), d(lows))
    assert b == pytest.approx(a, rel=1e-12, abs=1e-300)


@needs_ext
@given(st.lists(st.tuples(values, values), min_size=2, max_size=200))
@settings(max_examples=200, deadline=None)
def test_pearson_parity(pairs):
    x = [p[0] for p in pairs]
    y = [p[1] for p in pairs]
    a = _pykernels.pearson_r(x, y)
    b = _ckernels.pearson_r(d(x), d(y))
    if math.isnan(a):
        assert math.isnan(b)
    else:
        assert b == pytest.approx(a, abs=1e-12)


@needs_ext
@given(st.lists(st.tuples(st.integers(0, 10_000), st.floats(0, 1e6)), max_size=300),
       st.integers(1, 50), st.integers(1, 10), st.integers(-3, 3), st.integers(1, 30))
@settings(max_examples=200, deadline=None)
def test_grid_parity(points, gran, per, first, n_periods):
    period = gran * per
    ts = sorted(t for t, _ in points)
    vols = [v for _, v in points]
    a = _pykernels.grid_bucket_sums(ts, vols, 7, period, gran, first, n_periods, per)
    b = _ckernels.grid_bucket_sums(q(ts), d(vols), 7, period, gran, first, n_periods, per)
    assert list(b) == pytest.approx(a, rel=1e-12)


@needs_ext
@given(st.lists(st.tuples(st.integers(-2, 6), st.integers(-2, 8), st.floats(0, 1e6)), max_size=200))
@settings(max_examples=200, deadline=None)
def test_accumulate_parity(rows):
    p = [r[0] for r in rows]
    bk = [r[1] for r in rows]
    v = [r[2] for r in rows]
    a = _pykernels.accumulate(p, bk, v, 5, 7)
    b = _ckernels.accumulate(q(p), q(bk), d(v), 5, 7)
    assert list(b) == pytest.approx(a, rel=1e-12)


@pytest.mark.parametrize("impl", [_pykernels] + ([_ckernels] if _ckernels else []),
                         ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_pearson_edge_cases(impl):
    conv = d if impl is _ckernels else list
    assert math.isnan(impl.pearson_r(conv([1.0, 1.0, 1.0]), conv([1.0, 2.0, 3.0])))
    assert impl.pearson_r(conv([1.0, 2.0, 3.0]), conv([3.0, 2.0, 1.0])) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(ValueError):
        impl.pearson_r(conv([1.0]), conv([1.0]))
    with pytest.raises(ValueError):
        impl.pearson_r(conv([1.0, 2.0]), conv([1.0]))


def test_grid_bucket_sums_brute_force():
    # every point lands in exactly one (period, bucket) cell of a 3 x 4 grid
    ts = list(range(0, 120, 5))
    vols = [float(t) for t in ts]
    out = kernels.grid_bucket_sums(ts, vols, 0, 40, 10, 0, 3, 4)
    expected = [0.0] * 12
    for t, v in zip(ts, vols):
        expected[(t // 40) * 4 + (t % 40) // 10] += v
    assert list(out) == expected


@given(st.lists(values, min_size=2, max_size=50), st.floats(0.1, 10), st.floats(-100, 100))
@settings(max_examples=100, deadline=None)
def test_dispatcher_affine_correlation(x, alpha, beta):
    assume(max(x) - min(x) > 1e-3)
    y = [alpha * v + beta for v in x]
    assert kernels.pearson_r(x, y) == pytest.approx(1.0, abs=1e-12)
