"""Compare the compiled and numpy response kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the raw response-matrix build for a few (n_max, k_max) shapes and a
complete 20-point coherent fit, once per available backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from mppc_nrf import _backend

SHAPES = [(3, 60), (8, 60), (10, 160), (400, 160)]


def bench_kernel(repeat):
    rows = []
    for n_max, k_max in SHAPES:
        timings = {}
        for name in _backend.available():
            kern = _backend.load(name)
            t = timeit.Timer(lambda: kern.response_matrix(0.163, 0.28, n_max, k_max))
            number, _ = t.autorange()
            timings[name] = min(t.repeat(repeat, number)) / number
        rows.append((n_max, k_max, timings))
    return rows


FIT_SNIPPET = """
import time, numpy as np
from mppc_nrf import NRFDataset, fit, nrf_model, BACKEND
m = np.linspace(0.05, 5, 20)
y = nrf_model(m, 0.163, 0.28, 3, 'coherent') + np.random.default_rng(0).normal(0, 0.005, 20)
t = time.perf_counter(); fit(NRFDataset(tuple(zip(m, y)), 'coherent')); print(BACKEND, time.perf_counter() - t)
"""


def bench_fit():
    out = {}
    for name in _backend.available():
        env = dict(os.environ, MPPC_NRF_BACKEND=name)
        res = subprocess.run([sys.executable, "-c", FIT_SNIPPET], env=env,
                             capture_output=True, text=True, check=True)
        backend, seconds = res.stdout.split()
        out[backend] = float(seconds)
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    names = _backend.available()
    print("response_matrix (microseconds per call)")
    print(f"{'n_max':>6} {'k_max':>6} " + " ".join(f"{n:>10}" for n in names) + "   speedup")
    for n_max, k_max, t in bench_kernel(args.repeat):
        cells = " ".join(f"{1e6 * t[n]:10.1f}" for n in names)
        speed = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{n_max:6d} {k_max:6d} {cells}   {speed:7.1f}x")
    print("\nfull fit, 7 n_max candidates x 9 starts (seconds)")
    fit_times = bench_fit()
    for name, seconds in fit_times.items():
        print(f"  {name:>8}: {seconds:.3f}")
    if len(fit_times) == 2:
        print(f"  speedup: {fit_times['python'] / fit_times['cython']:.1f}x")
    return 0


if __name__ == "__main__":
    np.seterr(all="ignore")
    sys.exit(main())
