#!/usr/bin/env python3
"""Benchmark the JIT kernels against the pure-numpy fallback.

Runs each hot kernel on a realistic workload with both backends in one
process (the env flag only affects which backend the package binds to;
here both are imported explicitly). JIT warmup is excluded from timings.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from geoshift.kernels import _numpy as np_impl

try:
    from geoshift.kernels import _numba as nb_impl
except ImportError:
    nb_impl = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def workloads(rng):
    samples = rng.normal(3000.0, 800.0, size=200_000)
    grid = np.linspace(samples.min(), samples.max(), 256)
    points = rng.uniform(0, 10000, size=(180_000, 10))
    centroids = rng.uniform(0, 10000, size=(16, 10))
    labels = rng.integers(0, 16, size=points.shape[0])
    image = rng.uniform(0, 10000, size=(10, 256, 256)).astype(np.float32)
    x = rng.uniform(size=(262_144, 10))
    y = rng.integers(0, 8, size=x.shape[0])
    w = rng.normal(size=(8, 10))
    b = rng.normal(size=8)
    masks = rng.integers(0, 8, size=(2, 1_000_000))
    return [
        ("kde_evaluate (200k x 256)", lambda m: m.kde_evaluate(samples, 55.0, grid)),
        ("nearest_centroids (180k x 16)", lambda m: m.nearest_centroids(points, centroids)),
        ("centroid_sums (180k x 16)", lambda m: m.centroid_sums(points, labels, 16)),
        ("band_means (10 x 256 x 256)", lambda m: m.band_means(image)),
        ("band_moments (650k)", lambda m: m.band_moments(samples)),
        ("softmax_loss_grad (262k x 10)", lambda m: m.softmax_loss_grad(x, y, w, b)),
        ("softmax_probabilities (262k)", lambda m: m.softmax_probabilities(x, w, b)),
        ("count_equal (1M)", lambda m: m.count_equal(masks[0], masks[1])),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = []
    for name, call in workloads(rng):
        t_np = timeit(lambda: call(np_impl), args.repeats)
        if nb_impl is not None:
            call(nb_impl)  # warmup / JIT compile
            t_nb = timeit(lambda: call(nb_impl), args.repeats)
            rows.append((name, t_np, t_nb, t_np / t_nb))
        else:
            rows.append((name, t_np, None, None))

    header = f"{'kernel':<34} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, t_np, t_nb, speedup in rows:
        if t_nb is None:
            print(f"{name:<34} {t_np * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
        else:
            print(
                f"{name:<34} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms "
                f"{speedup:>7.2f}x"
            )


if __name__ == "__main__":
    main()
