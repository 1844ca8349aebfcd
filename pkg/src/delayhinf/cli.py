"""Command-line interface.

``delayhinf <command> <problem-file> [flags]`` with commands classify,
factorize, synthesize, simulate and validate.  Exit codes: 0 success,
2 admissibility violation, 3 numerical failure, 4 input/output error.
Every failure prints an error block naming the violated clause.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .classify import analyze, plant_type
from .errors import (
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    DelayHinfError,
    NumericalError,
    UnsupportedPlantError,
)
from .factorize import factorize, verify_factorization
from .fir_decomp import verify_fir_support
from .oracle import (
    closed_loop_step,
    cross_validate_gamma,
    flatness_check,
    pade_oracle_gamma,
)
from .problemfile import load_problem, write_atomic, write_csv
from .synthesis import synthesize
from .winding import stable_rhp_count

COMMANDS = ("classify", "factorize", "synthesize", "simulate", "validate")
DEFAULT_TOL = 1e-6


def _build_parser():
    p = argparse.ArgumentParser(
        prog="delayhinf",
        description="Mixed-sensitivity H-infinity synthesis for SISO plants "
                    "with multiple rational time delays.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("problem_file")
        sp.add_argument("--grid-lo", type=float, default=None)
        sp.add_argument("--grid-hi", type=float, default=None)
        sp.add_argument("--grid-n", type=int, default=None)
        sp.add_argument("--pade-order", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--out-dir", default=".")
    return p


def _effective(args, options):
    """Flag > problem-file option > DELAYHINF_TOL env (tol only) > default."""
    def pick(flag, key, default):
        if flag is not None:
            return flag
        if key in options:
            return options[key]
        return default

    tol_default = DEFAULT_TOL
    env = os.environ.get("DELAYHINF_TOL")
    if env is not None:
        try:
            tol_default = float(env)
        except ValueError:
            raise NumericalError(
                f"DELAYHINF_TOL={env!r} is not a number",
                diagnostic="DELAYHINF_TOL") from None
    eff = {
        "grid-lo": pick(args.grid_lo, "grid-lo", 1e-3),
        "grid-hi": pick(args.grid_hi, "grid-hi", 1e4),
        "grid-n": pick(args.grid_n, "grid-n", 1000),
        "pade-order": pick(args.pade_order, "pade-order", 8),
        "tol": pick(args.tol, "tol", tol_default),
        "t-end": options.get("t-end", 10.0),
        "dt": options.get("dt", 1e-3),
    }
    if not (0.0 < eff["grid-lo"] < eff["grid-hi"]) or eff["grid-n"] < 2:
        raise NumericalError(
            f"invalid grid ({eff['grid-lo']}, {eff['grid-hi']}, "
            f"{eff['grid-n']})", diagnostic="grid")
    if eff["tol"] <= 0.0:
        raise NumericalError(f"tol must be positive, got {eff['tol']}",
                             diagnostic="tol")
    return eff


def _grid(eff):
    return np.logspace(np.log10(eff["grid-lo"]), np.log10(eff["grid-hi"]),
                       int(eff["grid-n"]))


def _fmt_report(name, rep):
    return (f"{name}: kind={rep.kind} F={rep.is_F} I={rep.is_I} "
            f"base={rep.commensurate_base} "
            f"scaled-delays={list(rep.scaled_delays)} "
            f"rel-degrees={list(rep.relative_degrees)}")


def cmd_classify(problem, eff, out_dir):
    rep_r = analyze(problem.plant.numerator)
    rep_t = analyze(problem.plant.denominator)
    print(_fmt_report("numerator", rep_r))
    print(_fmt_report("denominator", rep_t))
    pt = plant_type(problem.plant)
    if pt.tag == "Unsupported":
        raise UnsupportedPlantError(
            pt.diagnostic,
            diagnostic="corollary-3" if "corollary-3" in pt.diagnostic
            else "FI-delays")
    print(f"plant-type: {pt.tag}")
    return EXIT_OK


def cmd_factorize(problem, eff, out_dir):
    fact = factorize(problem.plant)
    res = verify_factorization(fact, problem.plant, grid=_grid(eff))
    print(f"plant-type: {fact.tag}")
    print(f"orientation: {fact.orientation}")
    print(f"reconstruction-residual: {res['reconstruction']:.3e}")
    print(f"inner-m_n-residual: {res['inner_m_n']:.3e}")
    print(f"inner-m_d-residual: {res['inner_m_d']:.3e}")
    worst = max(res.values())
    if worst > 1e-6:
        raise NumericalError(
            f"factorization residual {worst:.3e} exceeds 1e-6",
            diagnostic="factorization-residual")
    return EXIT_OK


def _fir_time_grid(block, dt):
    t_end = max(block.support * 2.0, 1.0)
    n = max(int(np.ceil(t_end / dt)) + 1, 64)
    return np.linspace(0.0, t_end, n)


def _write_synthesis_outputs(problem, ctrl, eff, out_dir):
    grid = _grid(eff)
    jw = 1j * grid
    cv = ctrl(jw)
    write_csv(os.path.join(out_dir, "controller_frequency_response.csv"),
              ("omega", "magnitude", "phase_rad"),
              (grid, np.abs(cv), np.unwrap(np.angle(cv))))
    for name, block in (("num_fir_impulse.csv", ctrl.num_fir),
                        ("den_fir_impulse.csv", ctrl.den_fir)):
        t = _fir_time_grid(block, eff["dt"])
        write_csv(os.path.join(out_dir, name), ("t", "value"),
                  (t, block.impulse(t)))


def cmd_synthesize(problem, eff, out_dir):
    fact, syn, ctrl = synthesize(problem.plant, problem.weights,
                                 rel_tol=eff["tol"])
    print(f"plant-type: {fact.tag}")
    print(f"gamma-opt: {syn.gamma:.10f}")
    print(f"num-fir: support={ctrl.num_fir.support:g} "
          f"genuine={ctrl.num_fir.genuine} terms={len(ctrl.num_fir.terms)}")
    print(f"den-fir: support={ctrl.den_fir.support:g} "
          f"genuine={ctrl.den_fir.genuine} terms={len(ctrl.den_fir.terms)}")
    _write_synthesis_outputs(problem, ctrl, eff, out_dir)
    for name in ("controller_frequency_response.csv", "num_fir_impulse.csv",
                 "den_fir_impulse.csv"):
        print(f"wrote: {os.path.join(out_dir, name)}")
    return EXIT_OK


def _closed_loop_stable(problem, ctrl):
    """Whether the closed loop is internally stable.

    Counts right-half-plane zeros of the characteristic function
    T*C_den + R*C_num directly.  Counting open-loop poles of P*C and
    winding 1 + P*C instead is fragile here: near the optimum the
    controller realization carries an all-pass pole/zero pair that
    straddles the imaginary axis within roundoff, which inflates the
    apparent open-loop pole count even though the pair cancels in the
    loop.  The characteristic function sees only the genuine closed-loop
    poles.
    """
    plant = problem.plant

    def chi(s):
        return (plant.denominator(s) * ctrl.den(s)
                + plant.numerator(s) * ctrl.num(s))

    return stable_rhp_count(chi)[0] == 0


def cmd_simulate(problem, eff, out_dir):
    fact, syn, ctrl = synthesize(problem.plant, problem.weights,
                                 rel_tol=eff["tol"])
    if not _closed_loop_stable(problem, ctrl):
        raise NumericalError(
            "closed loop is unstable; refusing to report a step response",
            diagnostic="closed-loop-stability")
    t, y = closed_loop_step(problem.plant, ctrl, eff["t-end"], dt=eff["dt"])
    path = os.path.join(out_dir, "step_response.csv")
    write_csv(path, ("t", "value"), (t, y))
    print(f"gamma-opt: {syn.gamma:.10f}")
    print(f"final-value: {y[-1]:.6f}")
    print(f"wrote: {path}")
    return EXIT_OK


def cmd_validate(problem, eff, out_dir):
    grid = _grid(eff)
    fact, syn, ctrl = synthesize(problem.plant, problem.weights,
                                 rel_tol=eff["tol"])
    g_oracle = pade_oracle_gamma(problem.plant, problem.weights,
                                 order=int(eff["pade-order"]))
    oracle_ok = cross_validate_gamma(syn.gamma, g_oracle)
    fmax, fmin, _ = flatness_check(problem.plant, ctrl, problem.weights,
                                   grid=grid)
    flat = (fmax - fmin) / syn.gamma
    stable = _closed_loop_stable(problem, ctrl)
    fir = {}
    for name, block in (("num", ctrl.num_fir), ("den", ctrl.den_fir)):
        ok, tail = verify_fir_support(block)
        fir[name] = {"genuine": bool(block.genuine), "support_ok": bool(ok),
                     "max_tail": tail, "support": block.support}
    report = {
        "plant_type": fact.tag,
        "gamma": syn.gamma,
        "oracle_gamma": g_oracle,
        "oracle_agrees": bool(oracle_ok),
        "flatness": flat,
        "flat_ok": bool(flat < 1e-2),
        "stable": bool(stable),
        "fir": fir,
        "factorization": verify_factorization(fact, problem.plant, grid=grid),
    }
    text = json.dumps(report, indent=2)
    write_atomic(os.path.join(out_dir, "validation.json"), text + "\n")
    print(text)
    failures = []
    if not oracle_ok:
        failures.append("oracle-gap")
    if not report["flat_ok"]:
        failures.append("flatness")
    if not stable:
        failures.append("closed-loop-stability")
    for name, d in fir.items():
        if not d["support_ok"]:
            failures.append(f"fir-{name}-support")
    if failures:
        raise NumericalError("validation failed: " + ", ".join(failures),
                             diagnostic=failures[0])
    return EXIT_OK


_DISPATCH = {
    "classify": cmd_classify,
    "factorize": cmd_factorize,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        problem = load_problem(args.problem_file)
        eff = _effective(args, problem.options)
        os.makedirs(args.out_dir, exist_ok=True)
        return _DISPATCH[args.command](problem, eff, args.out_dir)
    except DelayHinfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"diagnostic: {exc.diagnostic}", file=sys.stderr)
        print(f"exit-code: {exc.exit_code}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("diagnostic: io", file=sys.stderr)
        print(f"exit-code: {EXIT_IO}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("diagnostic: linear-algebra", file=sys.stderr)
        print(f"exit-code: {EXIT_NUMERICAL}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
