"""Timing comparison: numba-compiled kernels vs their pure-Python source.

Every hot kernel is written once and runs in two modes (compiled by
default, plain Python under ``METANML_NO_NUMBA=1``).  This script times
both paths of the same function objects and prints a speedup table.

Usage::

    python benchmarks/bench_kernels.py [--repeats 5] [--inner 20]

Run it from an environment where the package is importable.  When the
fallback mode is active there is nothing to compare against, so the
script measures the Python path only and says so.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from metanml._kernels import (
    NUMBA_ACTIVE,
    ball_sup_kernel,
    delta_ball_kernel,
    fisher_kernel,
    jacobi_eigh,
    reg_lower_gamma,
    softmax_mle_newton,
)


def _best_time(fn, repeats, inner):
    """Best-of-``repeats`` wall time for ``inner`` consecutive calls."""
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def _cases():
    rng = np.random.default_rng(0)
    K, m = 3, 4
    dim = (K - 1) * m
    center = rng.standard_normal(dim)
    x = rng.standard_normal(m)
    starts = center + 0.2 * rng.standard_normal((9, dim))

    log_f = np.log(rng.dirichlet(np.ones(K)))
    active = np.ones(K, dtype=np.bool_)

    A = rng.standard_normal((8, 8))
    A = 0.5 * (A + A.T)

    n = 2000
    X = rng.standard_normal((n, m))
    ys = rng.integers(0, K, size=n).astype(np.int64)
    theta0 = np.zeros(dim)

    return [
        ("ball_sup (d=8, 9 starts)", ball_sup_kernel,
         (1, K, center, 0.6, x, 0, starts, 500, 1e-8, 1e-4)),
        ("delta_ball (d=8, 9 starts)", delta_ball_kernel,
         (1, K, center, 0.6, x, log_f, active, starts, 500, 1e-8, 1e-4,
          1e3, 1e4)),
        ("fisher (d=8)", fisher_kernel, (1, K, center, x)),
        ("jacobi_eigh (8x8)", jacobi_eigh, (A, 1e-12, 100)),
        ("reg_lower_gamma (a=0.5)", reg_lower_gamma, (0.5, 1.9)),
        ("newton_mle (n=2000, d=8)", softmax_mle_newton,
         (1, K, X, ys, theta0, 1e-6, 200, 1e-8)),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions; the best is reported")
    parser.add_argument("--inner", type=int, default=20,
                        help="calls per repetition")
    args = parser.parse_args(argv)

    if not NUMBA_ACTIVE:
        print("numba is disabled (METANML_NO_NUMBA); timing the Python "
              "path only.\n")
    header = f"{'kernel':<28} {'python (ms)':>12} {'numba (ms)':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, fn, fn_args in _cases():
        py_fn = fn.py_func if NUMBA_ACTIVE else fn
        t_py = _best_time(lambda: py_fn(*fn_args), args.repeats, args.inner)
        if NUMBA_ACTIVE:
            fn(*fn_args)  # warm the compile cache before timing
            t_jit = _best_time(lambda: fn(*fn_args), args.repeats, args.inner)
            print(f"{name:<28} {t_py * 1e3:>12.3f} {t_jit * 1e3:>12.3f} "
                  f"{t_py / t_jit:>8.1f}x")
        else:
            print(f"{name:<28} {t_py * 1e3:>12.3f} {'-':>12} {'-':>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
