"""Compare the compiled simulation kernel against the pure-Python fallback.

Both kernels consume identical pre-drawn arrival arrays and integer
aggregates, so every statistic must match bit for bit; the only thing
allowed to differ is wall-clock time.  Run from the repository root:

    python3 benchmarks/kernel_bench.py --cycles 2000000
"""

import argparse
import os
import time

import numpy as np

from fctlq import ArrivalModel, FctlInstance
from fctlq.extensions import VariantParams, build_variant
from fctlq.sim import SimConfig, active_kernel, simulate


def signature(rep):
    return (
        rep.mean,
        rep.variance,
        rep.passed,
        rep.delayed,
        np.asarray(rep.overflow_pmf).tobytes(),
        np.asarray(rep.start_green_pmf).tobytes() if rep.start_green_pmf is not None else b"",
        np.asarray(rep.delay_counts).tobytes() if rep.delay_counts is not None else b"",
    )


def run_once(obj, cfg, pure):
    if pure:
        os.environ["FCTLQ_PURE_PYTHON"] = "1"
    else:
        os.environ.pop("FCTLQ_PURE_PYTHON", None)
    t0 = time.perf_counter()
    rep = simulate(obj, cfg)
    return rep, time.perf_counter() - t0


def bench(label, obj, cfg):
    rep_c, dt_c = run_once(obj, cfg, pure=False)
    rep_p, dt_p = run_once(obj, cfg, pure=True)
    if signature(rep_p) != signature(rep_c):
        raise SystemExit(f"{label}: kernels disagree; this is a bug")
    rate_c = cfg.cycles / dt_c
    print(
        f"{label:14s} {rep_c.kernel:>8s} {dt_c:7.2f}s  {rate_c:10.0f} cyc/s | "
        f"{rep_p.kernel:>8s} {dt_p:7.2f}s  {cfg.cycles / dt_p:10.0f} cyc/s | "
        f"speedup {dt_p / dt_c:4.2f}x  (identical output)"
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cycles", type=int, default=2_000_000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--batches", type=int, default=20)
    args = ap.parse_args()

    if active_kernel() != "compiled":
        print("note: compiled kernel unavailable, both rows run the fallback")

    cfg = SimConfig(cycles=args.cycles, warmup=5_000, seed=args.seed,
                    batches=args.batches)
    inst = FctlInstance(20, 30, ArrivalModel.poisson(0.36))
    print(f"instance g=20 r=30 poisson(0.36), {args.cycles} cycles, "
          f"seed {args.seed}\n")
    bench("standard", inst, cfg)
    bench("right-turn", build_variant(inst, VariantParams.right_turn()), cfg)
    # hesitation scales the load by 1/(1-p); keep the instance stable
    lighter = FctlInstance(20, 30, ArrivalModel.poisson(0.30))
    bench("hesitation", build_variant(lighter, VariantParams.hesitation(0.1)), cfg)


if __name__ == "__main__":
    main()
