"""Benchmark the compiled kernels against their pure-NumPy twins.

Runs each hot kernel on a representative workload with both backends,
reports best-of-N wall times, the speedup, and the worst output
disagreement. The numba backend is JIT-compiled on a warmup call so
compile time stays out of the numbers.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--quick]
"""

import argparse
import time

import numpy as np

from hsipath.kernels import knn_numpy, neighbors_numpy, pri_numpy

try:
    from hsipath.kernels import knn_numba, neighbors_numba, pri_numba
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _pri_case(quick):
    rng = np.random.default_rng(0)
    side = 24 if quick else 40
    d = 6
    data = rng.uniform(0, 1, (side, side, d))
    padded = np.ascontiguousarray(np.pad(data, ((1, 1), (1, 1), (0, 0)),
                                         mode="symmetric"))
    out = np.empty((side, side, d))

    def run(mod):
        mod.pri_scan(padded, 3, 2.0, 0.3, 1e-4, 10, out)
        return out.copy()

    return "pri_scan %dx%dx%d n=3" % (side, side, d), run


def _knn_case(quick):
    rng = np.random.default_rng(1)
    ntr = 1500 if quick else 3000
    nq = 3000 if quick else 6000
    X = rng.normal(0, 1, (ntr, 12))
    y = (rng.uniform(size=ntr) < 0.5).astype(np.uint8)
    Q = rng.normal(0, 1, (nq, 12))
    pred = np.empty(nq, dtype=np.uint8)
    conf = np.empty(nq)

    def run(mod):
        mod.knn_scan(X, y, Q, 7, pred, conf)
        return pred.astype(np.float64) + conf

    return "knn_scan %d train / %d query k=7" % (ntr, nq), run


def _neighbor_case(quick):
    rng = np.random.default_rng(2)
    side = 64 if quick else 96
    bands = 24
    data = rng.uniform(0.1, 1, (side, side, bands))
    norms = np.linalg.norm(data, axis=2, keepdims=True)
    normed = data / norms
    out = np.empty((side * side, 8), dtype=np.int64)

    def run(mod):
        mod.neighbor_scan(normed, 2, 8, out)
        return out.astype(np.float64).copy()

    return "neighbor_scan %dx%dx%d u=2 l=8" % (side, side, bands), run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3,
                    help="timed repetitions per backend (best is kept)")
    ap.add_argument("--quick", action="store_true",
                    help="smaller workloads for a fast smoke run")
    args = ap.parse_args()

    if not HAVE_NUMBA:
        print("numba backend unavailable; timing the NumPy backend only")

    pairs = {
        "pri_scan": (pri_numpy, pri_numba if HAVE_NUMBA else None),
        "knn_scan": (knn_numpy, knn_numba if HAVE_NUMBA else None),
        "neighbor_scan": (neighbors_numpy, neighbors_numba if HAVE_NUMBA else None),
    }
    cases = [_pri_case(args.quick), _knn_case(args.quick), _neighbor_case(args.quick)]

    header = "%-36s %10s %10s %8s %10s" % ("case", "numpy", "numba",
                                           "speedup", "max diff")
    print(header)
    print("-" * len(header))
    for (label, run), key in zip(cases, pairs):
        np_mod, nb_mod = pairs[key]
        ref = run(np_mod)
        t_np = _best_of(lambda: run(np_mod), args.repeat)
        if nb_mod is None:
            print("%-36s %9.3fs %10s %8s %10s" % (label, t_np, "-", "-", "-"))
            continue
        got = run(nb_mod)  # warmup, also the agreement sample
        t_nb = _best_of(lambda: run(nb_mod), args.repeat)
        diff = float(np.max(np.abs(got - ref)))
        print("%-36s %9.3fs %9.3fs %7.1fx %10.2e"
              % (label, t_np, t_nb, t_np / t_nb, diff))


if __name__ == "__main__":
    main()
