#!/usr/bin/env python3
"""Reproduce the benchmark synthesis end to end and print a summary.

Usage: python scripts/run_benchmark.py [--tol 1e-7] [--out-dir out]
"""
import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from delayhinf import (  # noqa: E402
    Weights,
    analyze,
    factorize,
    normalize_plant,
    plant_type,
    synthesize,
    verify_factorization,
)
from delayhinf.oracle import flatness_check, pade_oracle_gamma  # noqa: E402
from delayhinf.problemfile import write_csv  # noqa: E402
from delayhinf.rational import Polynomial, RationalFunction  # noqa: E402


def make_problem():
    plant = normalize_plant(
        [(0, [3.0, 1.0]), ("0.4", [-2.0, 2.0])],
        [(0, [0.0, 0.0, 1.0]), ("0.2", [0.0, 1.0]), ("0.5", [5.0])])
    W1 = RationalFunction(Polynomial([2.0, 2.0]), Polynomial([1.0, 10.0]))
    W2 = RationalFunction(Polynomial([0.22, 0.2]), Polynomial([1.0]))
    return plant, Weights(W1, W2)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tol", type=float, default=1e-7)
    ap.add_argument("--out-dir", default="out")
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    plant, weights = make_problem()
    print("numerator :", analyze(plant.numerator))
    print("denominator:", analyze(plant.denominator))
    print("plant type:", plant_type(plant).tag)

    fact = factorize(plant)
    res = verify_factorization(fact, plant)
    print("factorization residuals:",
          {k: f"{v:.2e}" for k, v in res.items()})

    t0 = time.time()
    fact, syn, ctrl = synthesize(plant, weights, rel_tol=args.tol)
    print(f"gamma_opt = {syn.gamma:.10f}  ({time.time() - t0:.2f}s)")

    g_or = pade_oracle_gamma(plant, weights, order=8)
    print(f"Pade-8 Riccati oracle gamma = {g_or:.7f} "
          f"(rel gap {abs(syn.gamma - g_or) / g_or:.2e})")

    fmax, fmin, profile = flatness_check(plant, ctrl, weights)
    print(f"cost profile: max {fmax:.10f} min {fmin:.10f} "
          f"flatness {(fmax - fmin) / syn.gamma:.2e}")

    grid = np.logspace(-3, 4, 1000)
    cv = ctrl(1j * grid)
    path = os.path.join(args.out_dir, "controller_frequency_response.csv")
    write_csv(path, ("omega", "magnitude", "phase_rad"),
              (grid, np.abs(cv), np.unwrap(np.angle(cv))))
    print("wrote", path)


if __name__ == "__main__":
    main()
