#!/usr/bin/env python3
"""Benchmark the compiled stepping kernel against the pure-Python fallback.

Runs the same constrained closed-loop segment through both kernels, checks
they agree bit-for-bit, and reports steps/second plus the speedup.  Usage:

    python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import math
import time

from ofo.engine import HAVE_COMPILED, SegmentSpec, pure
from ofo.engine.params import COST_SQRTPLUS, CTRL_PROJECTED, PLANT_SINE


def build_spec(n_steps: int) -> SegmentSpec:
    dt = 5e-4
    return SegmentSpec(
        n=2, m=1, p=1,
        plant_kind=PLANT_SINE,
        a=[0.0, -0.1, 0.1, -0.1],
        b=[0.0, 0.1],
        drift=[1e-4, 1e-4],
        c=[1.0, 1.0],
        sens0=[-1.0],
        cost_kind=COST_SQRTPLUS, cq1=11.0, cq2=0.0, mu4=0.0,
        ctrl_kind=CTRL_PROJECTED, alpha=10.0, beta=1.0 / 22.0,
        lo=[-5e-5], hi=[5e-5],
        x0=[0.0, 0.0], u0=[0.0],
        t0=0.0, t_end=n_steps * dt, dt=dt,
        n_full=n_steps, last_dt=0.0,
        record_stride=max(1, n_steps // 50), include_final=True,
    )


def timed(kernel, spec, repeats: int = 3):
    best = math.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = kernel.run_segment(spec)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=400_000,
                        help="integration steps per kernel run (default 400000)")
    args = parser.parse_args()

    spec = build_spec(args.steps)
    t_pure, r_pure = timed(pure, spec)
    print(f"pure-python : {args.steps / t_pure:12.0f} steps/s  ({t_pure:.3f} s)")
    if not HAVE_COMPILED:
        print("compiled    : not built (pip install -e . with Cython available)")
        return 0

    from ofo.engine import _speedup

    t_fast, r_fast = timed(_speedup, spec)
    print(f"compiled    : {args.steps / t_fast:12.0f} steps/s  ({t_fast:.3f} s)")
    print(f"speedup     : {t_pure / t_fast:12.1f}x")
    identical = (r_pure.times == r_fast.times and r_pure.xs == r_fast.xs
                 and r_pure.us == r_fast.us and r_pure.final_x == r_fast.final_x
                 and r_pure.final_u == r_fast.final_u)
    print(f"agreement   : {'bit-identical' if identical else 'MISMATCH'}")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
