"""Time the compiled kernel route against the pure-numpy fallback.

Both routes are selected through the CAPFUSE_KERNELS environment flag, the
same switch users have, so this measures exactly what dispatch delivers.
JIT compilation is excluded by a warmup call per kernel.

Usage:
    python3 benchmarks/bench_kernels.py [--n 4000] [--dim 256] [--repeats 7]
"""

from __future__ import annotations

import argparse
import os
import statistics
import time

import numpy as np

from capfuse import kernels


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    rows = rng.standard_normal((n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def build_cases(n: int, dim: int):
    rng = np.random.default_rng(1234)
    a = unit_rows(rng, n, dim)
    b = unit_rows(rng, max(n // 2, 2), dim)
    scores = rng.uniform(-0.2, 1.0, size=n)
    labels = rng.integers(0, 2, size=n).astype(np.int64)
    thresholds = np.round(np.arange(-0.2, 1.0 + 0.0025, 0.005), 9)
    nq = min(n, 512)
    sim = rng.standard_normal((nq, nq))
    indptr = np.arange(nq + 1, dtype=np.int64)
    indices = rng.integers(0, nq, size=nq).astype(np.int64)
    return {
        "mean_pair_cos_within": lambda: kernels.mean_pair_cos_within(a),
        "mean_cos_between": lambda: kernels.mean_cos_between(a, b),
        "threshold_sweep": lambda: kernels.threshold_sweep(scores, labels, thresholds),
        "topk_hits": lambda: kernels.topk_hits(sim, 10, indptr, indices),
    }


def best_of(fn, repeats: int) -> float:
    fn()  # warmup; first numba call includes compilation
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=4000, help="rows / samples per case")
    parser.add_argument("--dim", type=int, default=256, help="embedding width")
    parser.add_argument("--repeats", type=int, default=7, help="timed runs per kernel")
    args = parser.parse_args()

    routes = ["numpy"]
    if kernels.HAVE_NUMBA:
        routes.append("numba")
    else:
        print("numba not importable; timing the numpy route only")

    results: dict[str, dict[str, float]] = {}
    for route in routes:
        os.environ[kernels.ENV_FLAG] = route
        for name, fn in build_cases(args.n, args.dim).items():
            results.setdefault(name, {})[route] = best_of(fn, args.repeats)
    os.environ.pop(kernels.ENV_FLAG, None)

    width = max(len(name) for name in results)
    header = f"{'kernel':<{width}} {'numpy':>12} {'numba':>12} {'speedup':>9}"
    print(f"n={args.n} dim={args.dim} repeats={args.repeats} (median, seconds)")
    print(header)
    print("-" * len(header))
    for name, timing in results.items():
        np_t = timing["numpy"]
        if "numba" in timing:
            nb_t = timing["numba"]
            print(f"{name:<{width}} {np_t:>12.6f} {nb_t:>12.6f} {np_t / nb_t:>8.2f}x")
        else:
            print(f"{name:<{width}} {np_t:>12.6f} {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
