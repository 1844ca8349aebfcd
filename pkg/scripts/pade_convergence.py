#!/usr/bin/env python3
"""Convergence study: finite-dimensional Riccati oracle gamma versus Pade
order, compared against the direct synthesis value on the benchmark.

Usage: python scripts/pade_convergence.py [--orders 2 4 6 8 10]
"""
import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from delayhinf import synthesize  # noqa: E402
from delayhinf.oracle import pade_oracle_gamma  # noqa: E402

from run_benchmark import make_problem  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--orders", type=int, nargs="+",
                    default=[2, 4, 6, 8, 10])
    args = ap.parse_args()

    plant, weights = make_problem()
    _, syn, _ = synthesize(plant, weights, rel_tol=1e-7)
    print(f"direct synthesis gamma = {syn.gamma:.10f}")
    print(f"{'order':>5} {'oracle gamma':>14} {'rel gap':>10} {'time':>7}")
    for order in args.orders:
        t0 = time.time()
        g = pade_oracle_gamma(plant, weights, order=order)
        gap = abs(g - syn.gamma) / syn.gamma
        print(f"{order:>5} {g:>14.8f} {gap:>10.2e} {time.time() - t0:>6.2f}s")


if __name__ == "__main__":
    main()
