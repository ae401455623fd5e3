"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 525600] [--repeat 5]

The default size is one year of one-minute bars. Both implementations get
the same inputs; the Cython side receives ``array('d')``/``array('q')``
buffers the way the dispatcher passes them.
"""

from __future__ import annotations

import argparse
import random
import timeit
from array import array

from tsqa import kernels
from tsqa.kernels import _pykernels

try:
    from tsqa.kernels import _ckernels
except ImportError:
    _ckernels = None

WEEK = 7 * 86400


def inputs(n: int, seed: int = 7):
    rng = random.Random(seed)
    lows = [rng.uniform(50, 150) for _ in range(n)]
    highs = [lo * (1 + rng.uniform(0, 0.02)) for lo in lows]
    ys = [h + rng.gauss(0, 1) for h in highs]
    ts = [4 * 86400 + 60 * i for i in range(n)]
    vols = [rng.uniform(0, 1000) for _ in range(n)]
    return lows, highs, ys, ts, vols


def cases(n: int):
    lows, highs, ys, ts, vols = inputs(n)
    n_periods = (ts[-1] - ts[0]) // WEEK
    py = {
        "parkinson_sum_sq": lambda: _pykernels.parkinson_sum_sq(highs, lows),
        "pearson_r": lambda: _pykernels.pearson_r(highs, ys),
        "grid_bucket_sums": lambda: _pykernels.grid_bucket_sums(ts, vols, 4 * 86400, WEEK, 86400, 0, n_periods, 7),
    }
    if _ckernels is None:
        return py, {}
    dl, dh, dy, dv = (array("d", v) for v in (lows, highs, ys, vols))
    qt = array("q", ts)
    cy = {
        "parkinson_sum_sq": lambda: _ckernels.parkinson_sum_sq(dh, dl),
        "pearson_r": lambda: _ckernels.pearson_r(dh, dy),
        "grid_bucket_sums": lambda: _ckernels.grid_bucket_sums(qt, dv, 4 * 86400, WEEK, 86400, 0, n_periods, 7),
    }
    return py, cy


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=525_600)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    py, cy = cases(args.n)
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<18} {'python ms':>10} {'cython ms':>10} {'speed-up':>9}")
    for name, fn in py.items():
        t_py = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
        if name in cy:
            t_cy = min(timeit.repeat(cy[name], number=1, repeat=args.repeat)) * 1e3
            print(f"{name:<18} {t_py:>10.2f} {t_cy:>10.3f} {t_py / t_cy:>8.1f}x")
        else:
            print(f"{name:<18} {t_py:>10.2f} {'n/a':>10} {'':>9}")
    if not cy:
        print("compiled kernels are not built; reinstall with Cython available")
        return
    # what a tool call pays: list inputs converted to buffers on every call
    lows, highs, *_ = inputs(args.n)
    t_py = min(timeit.repeat(lambda: _pykernels.parkinson_sum_sq(highs, lows), number=1, repeat=args.repeat)) * 1e3
    t_disp = min(timeit.repeat(lambda: kernels.parkinson_sum_sq(highs, lows), number=1, repeat=args.repeat)) * 1e3
    print(f"{'parkinson, lists':<18} {t_py:>10.2f} {t_disp:>10.3f} {t_py / t_disp:>8.1f}x  (incl. list->array)")


if __name__ == "__main__":
    main()
