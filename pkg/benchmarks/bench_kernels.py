#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure NumPy fallback.

Micro-benchmarks call both backends in-process; the end-to-end booster
fit runs in subprocesses so each sees its own backend at import time.

    python3 benchmarks/bench_kernels.py [--sizes 10000,100000,1000000]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from surveyml._kernels import _ref

try:
    from surveyml._kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(sizes):
    gen = np.random.default_rng(7)
    rows = []
    for n in sizes:
        scores = np.sort(gen.integers(0, n // 2, n).astype(float))
        y = gen.integers(0, 2, n).astype(float)
        w = gen.uniform(0.1, 5.0, n)
        g = gen.normal(0, 1, n)
        h = gen.uniform(0.01, 1.0, n)
        cases = {
            "ht_concordance": lambda mod: mod.ht_concordance(scores, y, w),
            "tie_group_sums": lambda mod: mod.tie_group_sums(scores, y, w),
            "best_split": lambda mod: mod.best_split(scores, g, h, 1.0, 1.0),
        }
        for name, call in cases.items():
            t_ref = timeit(lambda: call(_ref))
            t_core = timeit(lambda: call(_core)) if _core else float("nan")
            rows.append((name, n, t_ref, t_core))
    return rows


def bench_boost_fit():
    """Full booster fit (depth 3, 100 rounds) under each backend."""
    snippet = (
        "import time, numpy as np\n"
        "from surveyml.design import DesignFrame\n"
        "from surveyml.boost import BoostParams, fit_weighted_boost\n"
        "import surveyml\n"
        "gen = np.random.default_rng(0)\n"
        "n = 20000\n"
        "x1, x2 = gen.normal(0,1,n), gen.normal(0,1,n)\n"
        "eta = -0.5 + x1 - 0.7*x2 + 0.4*x1*x2\n"
        "y = (gen.random(n) < 1/(1+np.exp(-eta))).astype(float)\n"
        "frame = DesignFrame.from_columns({'w': gen.uniform(0.5,4,n),\n"
        "    's': np.ones(n), 'c': np.arange(n, dtype=float), 'y': y,\n"
        "    'x1': x1, 'x2': x2}, 'w','s','c', outcome_name='y')\n"
        "start = time.perf_counter()\n"
        "fit_weighted_boost(frame, ['x1','x2'], 'y', BoostParams(rounds=100))\n"
        "print(surveyml.kernel_backend(), time.perf_counter()-start)\n"
    )
    out = []
    for pure in ("0", "1"):
        env = dict(os.environ, SURVEYML_PURE=pure)
        result = subprocess.run([sys.executable, "-c", snippet], env=env,
                                capture_output=True, text=True, check=True)
        backend, seconds = result.stdout.split()
        out.append((backend, float(seconds)))
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10000,100000,1000000")
    parser.add_argument("--skip-boost", action="store_true")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'kernel':<16} {'n':>9} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}")
    for name, n, t_ref, t_core in bench_kernels(sizes):
        speed = t_ref / t_core if t_core == t_core and t_core > 0 else float("nan")
        print(f"{name:<16} {n:>9} {1e3 * t_ref:>12.3f} {1e3 * t_core:>14.3f} {speed:>7.1f}x")

    if not args.skip_boost:
        print()
        print("booster fit, n=20000, depth 3, 100 rounds:")
        for backend, seconds in bench_boost_fit():
            print(f"  {backend:<9} {seconds:.2f} s")


if __name__ == "__main__":
    main()
