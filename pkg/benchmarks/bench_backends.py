"""Compare the compiled and reference backends on the two hot kernels.

Usage: python benchmarks/bench_backends.py [--n 64] [--length 256]

Prints a timing table plus an agreement check. The compiled backend is
expected to win by a wide margin on the counting kernel; both must agree
exactly on integer outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np


def _load_backends():
    from tsblend.backends import HAVE_COMPILED, reference
    impls = {"reference": reference}
    if HAVE_COMPILED:
        from tsblend.backends import _core
        impls["compiled"] = _core
    return impls


def _time(fn, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_hydra(impls, n, length):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, 1, length))
    g, k, klen = 64, 8, 9
    weights = rng.standard_normal((g, k, 1, klen))
    weights -= weights.mean(axis=(2, 3), keepdims=True)
    sel = np.zeros((g, 1), dtype=np.int64)

    results = {}
    for name, impl in impls.items():
        secs, out = _time(lambda impl=impl: impl.hydra_counts(
            x, weights, sel, 2))
        results[name] = (secs, out)
        print("hydra_counts  %-9s  %8.1f ms" % (name, secs * 1e3))
    if len(results) == 2:
        (h1, s1) = results["reference"][1]
        (h2, s2) = results["compiled"][1]
        same = np.array_equal(h1, h2) and np.allclose(s1, s2, atol=1e-12)
        print("hydra_counts  agreement: %s" % ("exact" if same else "MISMATCH"))
        print("hydra_counts  speedup: %.1fx"
              % (results["reference"][0] / results["compiled"][0]))


def bench_split(impls, n, d):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((n, d))
    y = rng.integers(0, 4, size=n).astype(np.int64)
    idx = np.arange(n, dtype=np.int64)
    m = max(1, d // 10)
    feats = rng.choice(d, size=m, replace=False).astype(np.int64)
    u = rng.random(m)

    results = {}
    for name, impl in impls.items():
        secs, out = _time(lambda impl=impl: impl.split_scan(
            x, y, idx, feats, u, 4))
        results[name] = (secs, out)
        print("split_scan    %-9s  %8.1f ms" % (name, secs * 1e3))
    if len(results) == 2:
        b1, t1, g1 = results["reference"][1]
        b2, t2, g2 = results["compiled"][1]
        same = (b1 == b2 and np.allclose(t1, t2, equal_nan=True)
                and np.allclose(g1, g2, atol=1e-9))
        print("split_scan    agreement: %s" % ("exact" if same else "MISMATCH"))
        print("split_scan    speedup: %.1fx"
              % (results["reference"][0] / results["compiled"][0]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--length", type=int, default=256)
    ap.add_argument("--features", type=int, default=2048)
    args = ap.parse_args()

    impls = _load_backends()
    if "compiled" not in impls:
        print("compiled backend unavailable; timing reference only")
    bench_hydra(impls, args.n, args.length)
    bench_split(impls, args.n * 8, args.features)


if __name__ == "__main__":
    main()
