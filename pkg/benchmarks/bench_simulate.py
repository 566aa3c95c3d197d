"""Time the co-simulation loop on the bundled vehicle scenario with each backend.

    python3 benchmarks/bench_simulate.py [--horizon 20] [--repeat 3]
"""

import argparse
import time

import numpy as np

from quadobs import kernels
from quadobs.harness import simulate, vehicle_scenario


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=20.0)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    sc = vehicle_scenario(step=args.step, horizon=args.horizon)
    backends = ["python"] + (["compiled"] if kernels.compiled_available() else [])
    results = {}
    for name in backends:
        elapsed, trace = best_of(lambda: simulate(sc, backend=name), args.repeat)
        results[name] = trace
        print(f"{name:>9}: {elapsed:8.3f} s  ({len(trace) - 1} RK4 steps)")
    if len(results) == 2:
        diff = np.max(np.abs(results["compiled"].zhat - results["python"].zhat))
        print(f"max |zhat_compiled - zhat_python| = {diff:.2e}")
    else:
        print("compiled extension not available; only the numpy loop was timed")


if __name__ == "__main__":
    main()
