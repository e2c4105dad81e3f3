#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs itself once per backend (selected through the EVIFUSE_BACKEND
environment variable) and reports wall times for the hot paths: the
element-wise special functions and the Monte-Carlo divergence oracle.

Usage: python benchmarks/backend_bench.py
"""

import os
import subprocess
import sys
import time


def run_case() -> None:
    import numpy as np

    from evifuse._backend import backend_name
    from evifuse.dirichlet import DirichletParams
    from evifuse.divergence import HolderConfig, phd_mc_oracle
    from evifuse.special import digamma, log_gamma, trigamma

    x = np.random.default_rng(0).uniform(1e-3, 1e4, size=2_000_000)
    # warm-up triggers JIT compilation on the numba path
    digamma(x[:10])
    log_gamma(x[:10])
    trigamma(x[:10])

    results = {}
    for name, fn in (("log_gamma", log_gamma), ("digamma", digamma), ("trigamma", trigamma)):
        t0 = time.perf_counter()
        fn(x)
        results[name] = time.perf_counter() - t0

    cfg = HolderConfig(1.7, 0.8)
    p = DirichletParams([5.0, 3.0, 2.0])
    q = DirichletParams([2.0, 2.0, 6.0])
    phd_mc_oracle(cfg, p, q, 10_000, 0)  # warm-up
    t0 = time.perf_counter()
    phd_mc_oracle(cfg, p, q, 1_000_000, 0)
    results["phd_mc_oracle"] = time.perf_counter() - t0

    print(f"backend: {backend_name()}")
    for name, dt in results.items():
        print(f"  {name:16s} {dt * 1000:9.2f} ms")


def main() -> int:
    if os.environ.get("_EVIFUSE_BENCH_CHILD"):
        run_case()
        return 0
    for backend in ("numba", "numpy"):
        env = dict(os.environ)
        env["EVIFUSE_BACKEND"] = backend
        env["_EVIFUSE_BENCH_CHILD"] = "1"
        code = subprocess.call([sys.executable, os.path.abspath(__file__)], env=env)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
