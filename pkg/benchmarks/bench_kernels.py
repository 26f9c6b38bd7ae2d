"""Benchmark the JIT-compiled kernels against the pure-Python fallback.

Run:  python benchmarks/bench_kernels.py [--quick]

The same kernel source builds both ways (see ietflow._kernels); this
script times representative workloads and prints the speedup.  The
fallback is what you get with IETFLOW_NO_NUMBA=1.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ietflow._kernels import build_kernels, perm_array


def state_arrays(lam, perm):
    lam = np.array(lam, dtype=float)
    p = perm_array(perm)
    inv = np.empty(len(p), dtype=np.int64)
    for j in range(len(p)):
        inv[p[j]] = j
    return lam, p, inv


def bench(label, fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller sizes")
    args = ap.parse_args()

    scale = 0.1 if args.quick else 1.0
    n_hist = int(2_000_000 * scale)
    n_series = int(1_000_000 * scale)
    n_orbit = int(2_000_000 * scale)
    n_starts = int(20_000 * scale)

    print("building kernels (jit compile happens on first call)...")
    jit = build_kernels(True)
    pure = build_kernels(False)
    rng = np.random.default_rng(0)

    rows = []

    def compare(label, make_args, call, pure_fraction=0.01):
        a_jit = make_args()
        call(jit, a_jit)  # compile
        a_jit = make_args()
        t_jit = bench(label, lambda: call(jit, a_jit))
        a_pure = make_args(int(1 / pure_fraction))
        t_pure = bench(label, lambda: call(pure, a_pure), repeat=1) * (1 / pure_fraction)
        rows.append((label, t_jit, t_pure, t_pure / t_jit))

    compare(
        "invariant_hist (2e6 steps, m=2)",
        lambda shrink=1: (*state_arrays(rng.dirichlet([1, 1]), (2, 1)), 1000, n_hist // shrink, 50),
        lambda k, a: k.invariant_hist(*a),
    )
    compare(
        "orbit_coord_series (1e6 samples of G^2, m=4)",
        lambda shrink=1: (
            *state_arrays(rng.dirichlet(np.ones(4)), (4, 3, 2, 1)),
            1000, n_series // shrink, 2, 0, 1,
        ),
        lambda k, a: k.orbit_coord_series(*a),
    )
    compare(
        "iet_orbit (2e6 points, m=3)",
        lambda shrink=1: (
            np.array([0.2, 0.5, 1.0]),
            np.array([0.5, -0.1, -0.5]),
            0.1,
            n_orbit // shrink,
        ),
        lambda k, a: k.iet_orbit(*a),
    )
    compare(
        "clt_flow_integrals (2e4 starts, T=50, m=2)",
        lambda shrink=1: (
            rng.dirichlet([1, 1], size=n_starts // shrink),
            np.ones((n_starts // shrink, 2)),
            perm_array((2, 1)),
            16,
            50.0,
            0,
        ),
        lambda k, a: k.clt_flow_integrals(*a),
    )

    print(f"\n{'kernel':<48}{'jit (s)':>10}{'pure (s, scaled)':>18}{'speedup':>10}")
    for label, tj, tp, s in rows:
        print(f"{label:<48}{tj:>10.3f}{tp:>18.3f}{s:>9.0f}x")


if __name__ == "__main__":
    main()
