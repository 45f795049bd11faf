"""Time one SCMS iteration as the data and mesh grow, and fit t = a * n^2."""

import argparse
import time

import numpy as np

from ridgepatrol.density import Bandwidth
from ridgepatrol.scms import ScmsConfig, run_scms
from ridgepatrol.synth import FilamentSpec, generate


def best_time(data, iters, repeats):
    config = ScmsConfig(bandwidth=Bandwidth(0.001), convergence=1e-12, mesh_size=len(data), max_iterations=iters)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_scms(data, config)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 4000])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    n = np.array(args.sizes, dtype=np.float64)
    t = []
    for size in args.sizes:
        data = generate(FilamentSpec("line-segment", n=size, seed=3))
        t.append((best_time(data, 7, args.repeats) - best_time(data, 2, args.repeats)) / 5)
        print(f"n={size:>6}  {t[-1]:.4f} s/iteration")
    t = np.array(t)
    a = t @ n**2 / (n**2 @ n**2)
    r2 = 1 - np.sum((t - a * n**2) ** 2) / np.sum((t - t.mean()) ** 2)
    print(f"fit t = {a:.3e} * n^2, R^2 = {r2:.4f}")


if __name__ == "__main__":
    main()
