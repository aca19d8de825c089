"""Time the numba and numpy kernels on the same inputs.

    python benchmarks/bench_kernels.py [--nodes 110592] [--grid 48] [--repeat 5]

Each kernel runs once untimed (numba compiles on first call), then the best
of ``--repeat`` runs is reported together with the largest difference
between the two backends.
"""

import argparse
import time

import numpy as np

from knlab import kernels
from knlab._accel import HAVE_NUMBA


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=110592)
    ap.add_argument("--grid", type=int, default=48)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    pos = rng.uniform(-1, 1, (args.nodes, 3))
    wv = rng.uniform(0, 1, (args.nodes, 4))
    x = np.array([0.3, -0.2, 2.5])
    n = args.grid
    vals = rng.uniform(0, 1, (2, n, n, n))
    lo = np.array([-1.0, -1.0, -1.0])
    h = 2.0 / n
    xg = np.array([0.01, 0.02, -0.03])

    cases = {
        "retarded_sum static": lambda b: kernels.retarded_sum(x, pos, wv, backend=b),
        "retarded_sum harmonic": lambda b: kernels.retarded_sum(
            x, pos, wv, 1.3, 0.4, 0.1, False, backend=b),
        "moment_sum": lambda b: kernels.moment_sum(x, pos, wv, 1.0, backend=b),
        "grid_sum": lambda b: kernels.grid_sum(xg, lo, h, vals, 2, backend=b),
    }
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max diff':>12}")
    for name, fn in cases.items():
        t = {b: best_of(lambda: fn(b), args.repeat) for b in backends}
        row = f"{name:<24}" + "".join(f"{t[b] * 1e3:>10.2f}ms" for b in backends)
        if HAVE_NUMBA:
            diff = np.max(np.abs(fn("numpy") - fn("numba")) / np.abs(fn("numpy")))
            row += f"{t['numpy'] / t['numba']:>9.1f}x{diff:>12.1e}"
        print(row)
    if not HAVE_NUMBA:
        print("numba not installed; only the numpy backend was timed")


if __name__ == "__main__":
    main()
