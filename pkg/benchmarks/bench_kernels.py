#!/usr/bin/env python3
"""Benchmark the hot kernels on the compiled (numba) and pure-numpy paths.

The active path is chosen at import time by the FOODSYS_NO_NUMBA
environment variable. By default this script times the current path and
then re-runs itself in a subprocess with the flag flipped, printing a
side-by-side comparison.

Usage:
    python benchmarks/bench_kernels.py [--repeat N] [--no-twin] [--json FILE]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from foodsys import _kernels
from foodsys.data import load_bundled_uk_pork
from foodsys.inference import McmcConfig, ModelPosterior
from foodsys.integrator import IntegratorConfig, ModelField, integrate
from foodsys.model import DimensionlessParams


def time_call(fn, n, *args):
    fn(*args)  # warm (JIT compile on the numba path)
    start = time.perf_counter()
    for _ in range(n):
        fn(*args)
    return (time.perf_counter() - start) / n


def run_benchmarks(repeat):
    results = {}
    p8 = DimensionlessParams(alpha=1.2, beta=0.165, delta=5.0, omega=10.0,
                             gamma=26.0, kappa=0.3, mu=1.0, rho=1.0)
    p8_arr = p8.to_array()
    y = np.array([1.0, 1.0, 1.0, 1.0])
    out = np.empty(4)

    n = repeat * (200_000 if _kernels.NUMBA_ENABLED else 20_000)
    results["rhs_eval"] = time_call(_kernels.rhs_dimensionless_into, n, y, p8_arr, out)

    obs = np.linspace(0.0, 500.0, 11)
    cfg = IntegratorConfig()
    field = ModelField(p8)
    n = repeat * (200 if _kernels.NUMBA_ENABLED else 5)
    results["trajectory_tau500"] = time_call(
        lambda: integrate(field, y, (0.0, 500.0), obs, cfg), n
    )

    data = load_bundled_uk_pork()
    posterior = ModelPosterior(data, McmcConfig())
    rng = np.random.default_rng(0)
    thetas = 0.05 * rng.standard_normal((512, posterior.tset.dim))
    counter = [0]

    def eval_next():
        counter[0] = (counter[0] + 1) % len(thetas)
        return posterior(thetas[counter[0]])

    n = repeat * (2000 if _kernels.NUMBA_ENABLED else 20)
    results["posterior_eval"] = time_call(eval_next, n)
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=1)
    parser.add_argument("--no-twin", action="store_true",
                        help="do not spawn the other path for comparison")
    parser.add_argument("--json", help="dump this path's timings to a file")
    args = parser.parse_args()

    path_name = "numba" if _kernels.NUMBA_ENABLED else "numpy"
    print(f"active path: {path_name}")
    results = run_benchmarks(args.repeat)
    for name, seconds in results.items():
        print(f"  {name:24s} {seconds * 1e3:10.4f} ms")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)

    if args.no_twin:
        return 0

    env = dict(os.environ)
    env["FOODSYS_NO_NUMBA"] = "0" if "1" == env.get("FOODSYS_NO_NUMBA", "0") else "1"
    twin_file = f"/tmp/foodsys_bench_{os.getpid()}.json"
    print(f"\nspawning twin with FOODSYS_NO_NUMBA={env['FOODSYS_NO_NUMBA']} ...")
    proc = subprocess.run(
        [sys.executable, __file__, "--no-twin", "--json", twin_file],
        env=env, capture_output=True, text=True,
    )
    if proc.returncode != 0:
        print(proc.stderr, file=sys.stderr)
        return 1
    with open(twin_file) as fh:
        twin = json.load(fh)
    os.unlink(twin_file)

    other = "numpy" if _kernels.NUMBA_ENABLED else "numba"
    print(f"\n{'kernel':24s} {path_name:>12s} {other:>12s} {'speedup':>9s}")
    for name in results:
        a, b = results[name], twin[name]
        numba_t, numpy_t = (a, b) if _kernels.NUMBA_ENABLED else (b, a)
        print(f"{name:24s} {a * 1e3:10.4f}ms {b * 1e3:10.4f}ms "
              f"{numpy_t / numba_t:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
