#!/usr/bin/env python3
"""Benchmark the only-increase scan: compiled kernel vs numpy fallback.

The scan is the one sequential, data-dependent loop in the package; this
script times both implementations over a sweep of suite sizes and batch
sizes and checks that they agree. Run from a checkout with the extension
built:

    python benchmarks/bench_scan.py
"""

import time

import numpy as np

from nncov._kernels import _pure

try:
    from nncov._kernels import _native
except ImportError:
    _native = None


def make_case(n, widths, seed=0):
    rng = np.random.default_rng(seed)
    layers = [rng.normal(size=(n, m)) for m in widths]
    return layers, rng.permutation(n).astype(np.int64)


def time_scan(impl, layers, order, batch_size, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = impl.incremental_scan(layers, order, batch_size)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    if _native is None:
        print("compiled kernel not built; showing the numpy fallback only")
    cases = [
        (2_000, (32,), 1),
        (2_000, (32,), 8),
        (10_000, (64, 32), 1),
        (10_000, (64, 32), 16),
        (50_000, (16,), 1),
    ]
    header = f"{'inputs':>8} {'widths':>10} {'batch':>6} {'numpy':>10} {'native':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, widths, batch_size in cases:
        layers, order = make_case(n, widths)
        pure_time, pure_result = time_scan(_pure, layers, order, batch_size)
        if _native is None:
            print(f"{n:>8} {str(widths):>10} {batch_size:>6} {pure_time:>9.3f}s {'-':>10} {'-':>8}")
            continue
        native_time, native_result = time_scan(_native, layers, order, batch_size)
        assert pure_result[1] == native_result[1], "backends disagree on accepted inputs"
        assert np.isclose(pure_result[0], native_result[0], rtol=1e-9), "backends disagree"
        print(
            f"{n:>8} {str(widths):>10} {batch_size:>6} {pure_time:>9.3f}s "
            f"{native_time:>9.3f}s {pure_time / native_time:>7.1f}x"
        )


if __name__ == "__main__":
    main()
