#!/usr/bin/env python3
"""Benchmark the DDE stepping kernels: compiled extension vs pure Python.

Integrates the bundled four-term example in log space for a few horizon
lengths with each available backend, reports wall times and the speedup,
and verifies that both backends produce identical trajectories.

Usage:
    python benchmarks/bench_integrator.py [--periods 25 100] [--spp 512]
"""

import argparse
import time

import numpy as np

from mgperiodic import dde, load_model, section4_model_path
from mgperiodic._backend import available_backends


def run(model, periods: float, spp: int, backend: str):
    start = time.perf_counter()
    traj = dde.integrate(model, -0.65, (0.0, periods * model.T),
                         steps_per_period=spp, mode="log", backend=backend)
    return time.perf_counter() - start, traj


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--periods", type=float, nargs="+", default=[25.0, 100.0])
    ap.add_argument("--spp", type=int, default=512,
                    help="steps per period (default 512)")
    args = ap.parse_args()

    model = load_model(section4_model_path())
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if len(backends) == 1:
        print("compiled extension not built; benchmarking the pure backend only")

    header = f"{'periods':>8} {'steps':>8}" + "".join(
        f" {name:>18}" for name in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9} {'max |diff|':>12}"
    print(header)

    for periods in args.periods:
        times = []
        trajs = []
        for name in backends:
            dt, traj = run(model, periods, args.spp, name)
            times.append(dt)
            trajs.append(traj)
        row = f"{periods:8g} {len(trajs[0].times) - 1:8d}" + "".join(
            f" {dt:17.4f}s" for dt in times)
        if len(backends) == 2:
            diff = float(np.max(np.abs(trajs[0].values - trajs[1].values)))
            row += f" {times[0] / times[1]:8.1f}x {diff:12.3e}"
            if diff > 1e-12:
                print(row)
                print("ERROR: backends disagree beyond 1e-12")
                return 1
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
