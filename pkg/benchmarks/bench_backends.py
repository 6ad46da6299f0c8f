"""Timing comparison of the compiled and pure-numpy sampling kernels.

Runs the same workloads once per backend and prints a table with the
speedup of the compiled path.  The compiled backend is warmed up first so
JIT compilation time is not counted.  Results are identical across
backends by construction; this script only measures wall time.

Usage: python3 benchmarks/bench_backends.py [--paths N] [--bridges N]
       [--steps K] [--repeat R] [--workers W]
"""

import argparse
import os
import time

import numpy as np

from liebridge.bridge import sample_guided_bridges
from liebridge.density import estimate_heat_kernel
from liebridge.group import group_exp
from liebridge.kernels import BACKEND_ENV, backend_name
from liebridge.sde import IntegratorConfig, sample_brownian_endpoints


def build_workloads(args):
    a = np.diag([0.5, 1.0, 2.0])
    target = group_exp(np.array([0.0, 0.0, 1.0]))
    cfg = IntegratorConfig(seed=0)
    return [
        ("brownian endpoints",
         f"{args.paths} paths x {args.steps} steps",
         lambda: sample_brownian_endpoints(a, 1.0, args.steps, args.paths, cfg,
                                           workers=args.workers)),
        ("guided bridges",
         f"{args.bridges} bridges x {args.steps} steps",
         lambda: sample_guided_bridges(target, a, 1.0, args.steps, args.bridges,
                                       cfg, workers=args.workers)),
        ("heat-kernel estimate",
         f"{args.bridges} bridges x {args.steps} steps",
         lambda: estimate_heat_kernel(target, a, 0.3, args.steps, args.bridges,
                                      cfg, workers=args.workers)),
    ]


def time_call(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=100_000)
    parser.add_argument("--bridges", type=int, default=8192)
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    os.environ[BACKEND_ENV] = "numba"
    try:
        backend_name()
    except Exception as err:
        print(f"compiled backend unavailable ({err}); nothing to compare")
        return 1

    workloads = build_workloads(args)
    print("warming up the compiled kernels (JIT compilation not measured)")
    for _, _, fn in workloads:
        fn()

    results = []
    for label, size, fn in workloads:
        os.environ[BACKEND_ENV] = "numba"
        t_numba = time_call(fn, args.repeat)
        os.environ[BACKEND_ENV] = "numpy"
        t_numpy = time_call(fn, args.repeat)
        results.append((label, size, t_numba, t_numpy))

    width = max(len(label) for label, *_ in results)
    print()
    print(f"{'workload':<{width}}  {'size':<28} {'numba':>9} {'numpy':>9} {'speedup':>8}")
    for label, size, t_numba, t_numpy in results:
        print(f"{label:<{width}}  {size:<28} {t_numba:>8.3f}s {t_numpy:>8.3f}s "
              f"{t_numpy / t_numba:>7.1f}x")
    print(f"\nbest of {args.repeat} runs, {args.workers} worker threads")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
