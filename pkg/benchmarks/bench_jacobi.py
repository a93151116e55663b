"""Compiled vs pure-Python Jacobi kernel on Gram matrices of feature blocks.

    python benchmarks/bench_jacobi.py [--sizes 8 16 32 64] [--repeats 3]

Prints one row per size with the best-of-N wall clock for each backend and
whether the two results are bitwise identical.
"""
import argparse
import time

import numpy as np

from uwloc.jacobi import available_backends, jacobi_eigh


def best_time(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64, 96])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; only the python backend is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'K':>5} " + " ".join(f"{b + ' s':>12}" for b in backends) + f" {'speedup':>8} {'bitwise':>8}")
    for k in args.sizes:
        X = rng.normal(size=(2 * k, k))
        gram = X.T @ X
        times, results = {}, {}
        for b in backends:
            times[b], results[b] = best_time(lambda b=b: jacobi_eigh(gram, backend=b), args.repeats)
        row = f"{k:>5} " + " ".join(f"{times[b]:>12.5f}" for b in backends)
        if len(backends) == 2:
            w0, v0, _ = results["compiled"]
            w1, v1, _ = results["python"]
            same = np.array_equal(w0, w1) and np.array_equal(v0, v1)
            row += f" {times['python'] / times['compiled']:>8.1f} {str(same):>8}"
        print(row)


if __name__ == "__main__":
    main()
