"""Compiled vs pure-Python RK kernel on the same modes.

    python3 benchmarks/bench_integrator.py [--modes N] [--repeat R] [--json out.json]

Both backends integrate identical modes of the third order example (short
horizon, high frequency) and a second order wave mode; the script reports
wall time per mode, steps per second, and the largest relative difference
between the two trajectories.
"""
import argparse
import json
import math
import platform
import time

import numpy as np

from weakhyp import solver
from weakhyp.problem import constant, example1_spec, t_power, wave_spec
from weakhyp.reduction import build_system


def workloads(n_modes):
    e1 = build_system(example1_spec(t_power(2.0), T=0.002, lower={(0, (0,)): constant(1.0)}))
    wave = build_system(wave_spec(constant(1.0), T=1.0))
    lams = 2.0 ** np.linspace(20, 26, n_modes)
    yield "example1 T=0.002", e1, [np.array([math.sqrt(L * L - 1)]) for L in lams], np.ones(3) / math.sqrt(3)
    yield "wave T=1", wave, [np.array([x]) for x in np.geomspace(10, 1000, n_modes)], np.array([1.0, 0.0])


def bench(backend, system, xis, v0, tol, repeat):
    best, out, steps = math.inf, None, 0
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = [solver.integrate_mode(system, v0, xi, tol=tol, backend=backend) for xi in xis]
        best = min(best, time.perf_counter() - t0)
        out = res
    steps = sum(r.step_stats.steps for r in out)
    return best, steps, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--modes", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--tol", type=float, default=1e-10)
    ap.add_argument("--json")
    args = ap.parse_args()
    if "compiled" not in solver.BACKENDS:
        print("compiled kernel not built; only the Python kernel is available")
    rows = []
    for name, system, xis, v0 in workloads(args.modes):
        res = {}
        for be in sorted(solver.BACKENDS):
            t, steps, out = bench(be, system, xis, v0, args.tol, args.repeat)
            res[be] = (t, steps, out)
            rows.append({"workload": name, "backend": be, "seconds": t, "per_mode": t / len(xis),
                         "steps": steps, "steps_per_second": steps / t})
            print(f"{name:18s} {be:9s} {t:8.3f}s  {t / len(xis) * 1e3:9.2f} ms/mode  "
                  f"{steps / t:12.0f} steps/s")
        if len(res) == 2:
            diff = max(float(np.max(np.abs(a.V - b.V)) / np.max(np.abs(b.V)))
                       for a, b in zip(res["compiled"][2], res["python"][2]))
            speedup = res["python"][0] / res["compiled"][0]
            print(f"{name:18s} speedup {speedup:.1f}x, max relative trajectory difference {diff:.2e}")
            rows.append({"workload": name, "speedup": speedup, "max_relative_difference": diff})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"python": platform.python_version(), "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
