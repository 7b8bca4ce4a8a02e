#!/usr/bin/env python3
"""Benchmark the compiled flow kernel against the pure-numpy fallback.

Both lanes run the identical RK4 advance of a bump-family Hamiltonian
flow over the same point cloud; the script reports wall time per lane,
the speedup, and the maximum deviation between the two results (which
should sit at rounding level since the algorithms are identical).

Usage: python3 scripts/benchmark_kernels.py [--points N] [--steps M]
"""

import argparse
import time

import numpy as np

from disclab.kernels import backends


def run_lane(impl, pts, dt, nsteps, h_d, amp, rho, m, tau, cx, cy, support):
    work = np.ascontiguousarray(pts.copy())
    t0 = time.perf_counter()
    impl.rk4_bump_flow(work, dt, nsteps, h_d, amp, rho, m, tau, cx, cy, support)
    return time.perf_counter() - t0, work


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=30_000)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.75, 0.75, size=(args.points, 2))
    dt = 1.0 / args.steps
    amp, rho, m, support = 0.12, 0.8, 4, 0.8
    levels = 2 * args.steps + 1
    tau = np.ones(levels)
    cx = np.zeros(levels)
    cy = np.zeros(levels)

    lanes = backends()
    print(f"lanes available : {', '.join(sorted(lanes))}")
    print(f"workload        : {args.points} points x {args.steps} RK4 steps")
    results = {}
    for name in sorted(lanes):
        best = float("inf")
        for _ in range(args.repeats):
            elapsed, out = run_lane(
                lanes[name], pts, dt, args.steps, 1e-4, amp, rho, m,
                tau, cx, cy, support,
            )
            best = min(best, elapsed)
        results[name] = (best, out)
        rate = args.points * args.steps / best / 1e6
        print(f"{name:>8} lane : {best:8.3f} s   ({rate:7.1f} M point-steps/s)")
    if len(results) == 2:
        t_np, out_np = results["numpy"]
        t_cy, out_cy = results["cython"]
        dev = float(np.max(np.abs(out_np - out_cy)))
        print(f"speedup         : {t_np / t_cy:.1f}x (cython over numpy)")
        print(f"lane deviation  : {dev:.3e}")


if __name__ == "__main__":
    main()
