#!/usr/bin/env python3
"""Benchmark the compiled event kernel against the pure-Python fallback.

Both kernels consume the random stream identically, so besides timing them
this script asserts that every workload produces bit-identical event
sequences. Workloads span the regimes the simulator actually runs: sparse
single-site telegraph dynamics, blockaded pair-loss dynamics, and a dense
multi-site lattice.

Usage: python benchmarks/compare_backends.py [--repeat N]
"""

import argparse
import time

import numpy as np

from trapsim.backend import CHUNK, available_backends

WORKLOADS = [
    # name, (load, gamma1, beta, n_sites, max_atoms, duration)
    ("single site, sparse", (0.5, 3.33, 0.0, 1, 1, 3000.0)),
    ("single site, busy", (5.0, 10.0, 0.0, 1, 1, 3000.0)),
    ("pair-loss blockade", (5.0, 1.0, 1000.0, 1, 2, 2000.0)),
    ("lattice, 10 sites", (2.0, 3.33, 50.0, 10, 2, 300.0)),
    ("lattice, 50 sites", (2.0, 3.33, 50.0, 50, 2, 60.0)),
]


def run(fn, args, seed):
    load, gamma1, beta, n_sites, max_atoms, duration = args
    rng = np.random.default_rng(seed)
    init = np.zeros(n_sites, dtype=np.int64)
    t0 = time.perf_counter()
    out = fn(load, gamma1, beta, n_sites, max_atoms, duration, init, rng, CHUNK)
    return time.perf_counter() - t0, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions")
    args = parser.parse_args()

    impls = available_backends()
    if "cython" not in impls:
        print("compiled kernel not available; only the Python fallback was timed")

    header = f"{'workload':<22} {'events':>9}"
    for name in impls:
        header += f" {name + ' [ms]':>14}"
    if len(impls) == 2:
        header += f" {'speedup':>9}"
    print(header)
    print("-" * len(header))

    for name, wl in WORKLOADS:
        times = {}
        outputs = {}
        for impl_name, fn in impls.items():
            best = float("inf")
            for rep in range(args.repeat):
                dt, out = run(fn, wl, seed=12345)
                best = min(best, dt)
                outputs[impl_name] = out
            times[impl_name] = best
        n_events = len(next(iter(outputs.values()))[0])
        if len(outputs) == 2:
            for a, b in zip(outputs["python"], outputs["cython"]):
                assert np.array_equal(a, b), f"backend mismatch on {name!r}"
        row = f"{name:<22} {n_events:>9}"
        for impl_name in impls:
            row += f" {times[impl_name] * 1e3:>14.2f}"
        if len(impls) == 2:
            row += f" {times['python'] / times['cython']:>8.1f}x"
        print(row)

    if len(impls) == 2:
        print("\nall workloads produced bit-identical event sequences")


if __name__ == "__main__":
    main()
