"""Time the compiled and pure-Python training-mean kernels side by side.

    python3 benchmarks/bench_kernels.py            # full-scale matrix, M=P=500, R=5
    python3 benchmarks/bench_kernels.py --M 100 --P 100 --repeat 20
"""
import argparse
import statistics
import time

import numpy as np

from acperf import kernels
from acperf.allocation import even_allocation, replacement_allocation
from acperf.harness import compare_estimators
from acperf.scenario import PerformanceMatrix


def _time(fn, repeat):
    fn()  # warm-up
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=500)
    ap.add_argument("--P", type=int, default=500)
    ap.add_argument("--R", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--reps", type=int, default=5, help="repetitions for the end-to-end comparison")
    args = ap.parse_args(argv)

    g = np.random.default_rng(0)
    values = g.uniform(0, 50, (args.M, args.P, args.R))
    K = args.P // 2
    N = args.R * K
    inst = g.permutation(args.P)[:K]
    even = np.asarray(even_allocation(N, K, 0).counts)
    repl = np.asarray(replacement_allocation(N, K, 0).counts)
    keys = g.random((args.M, K, args.R))
    picks = g.integers(0, args.R, (args.M, N))
    matrix = PerformanceMatrix(tuple(f"c{i}" for i in range(args.M)),
                               tuple(f"z{i}" for i in range(args.P)), values)

    print(f"M={args.M} P={args.P} R={args.R} K={K} N={N}; median of {args.repeat} runs")
    rows = {}
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            rows[name] = (
                _time(lambda: kernels.train_means_without(values, inst, even, keys), args.repeat),
                _time(lambda: kernels.train_means_with(values, inst, repl, picks), args.repeat),
                _time(lambda: compare_estimators(matrix, [0.5], [1.0, 5.0], reps=args.reps, seed=0,
                                                 n_jobs=1), 1),
            )
    print(f"{'backend':<8} {'without (ms)':>13} {'with (ms)':>10} {'compare (s)':>12}")
    for name, (a, b, c) in rows.items():
        print(f"{name:<8} {a * 1e3:13.2f} {b * 1e3:10.2f} {c:12.2f}")
    if len(rows) == 2:
        (_, fast), (_, slow) = sorted(rows.items(), key=lambda kv: kv[0] != "cython")
        print("speed-up " + "  ".join(f"{s / f:.1f}x" for f, s in zip(fast, slow)))


if __name__ == "__main__":
    main()
