"""Retarded/neutral/advanced classification, the unit-circle criterion for
finitely many unstable zeros, root-chain asymptotics and the plant-type
decision (IF/FI/FF).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .delaysum import DelaySum, TimeDelayPlant, conjugate
from .errors import AssumptionViolation, DomainError
from .rational import Polynomial, poly_roots

RETARDED = "Retarded"
NEUTRAL = "Neutral"
ADVANCED = "Advanced"
SINGLE_TERM = "SingleTerm"

#: roots of phi this close to the unit circle mean imaginary-axis zero chains
UNIT_CIRCLE_TOL = 1e-9


@dataclass(frozen=True)
class Chain:
    """Asymptotic root chain: zeros approach real_part + j(offset + k*spacing)."""

    real_part: float
    imaginary_offset: float
    imaginary_spacing: float


@dataclass(frozen=True)
class ClassificationReport:
    kind: str
    relative_degrees: tuple
    commensurate_base: int
    scaled_delays: tuple
    phi_coefficients: tuple
    phi_roots: tuple
    is_F: bool
    is_I: bool
    chains: tuple


@dataclass(frozen=True)
class PlantType:
    tag: str  # IF, FI, FF, Unsupported
    diagnostic: str = ""


def classify_kind(R: DelaySum) -> str:
    """Definition-based kind from the coefficient relative degrees."""
    degs = R.relative_degrees()
    if len(degs) == 1:
        return SINGLE_TERM
    d1, rest = degs[0], max(degs[1:])
    if d1 < rest:
        return RETARDED
    if d1 == rest:
        return NEUTRAL
    return ADVANCED


def commensurate_base(delays):
    """(N, scaled) with delay_i = scaled_i / N and integer scaled delays."""
    fracs = [Fraction(d) for d in delays]
    N = 1
    for f in fracs:
        N = N * f.denominator // math.gcd(N, f.denominator)
    return N, tuple(int(f * N) for f in fracs)


def _delay_difference_step(delays):
    """Greatest rational g with every h_i - h_1 an integer multiple of g."""
    diffs = [Fraction(d) - Fraction(delays[0]) for d in delays[1:]]
    diffs = [d for d in diffs if d != 0]
    if not diffs:
        return None
    g = diffs[0]
    for d in diffs[1:]:
        # gcd over rationals
        g = Fraction(math.gcd(g.numerator * d.denominator,
                              d.numerator * g.denominator),
                     g.denominator * d.denominator)
    return g


def _xi_coefficients(R: DelaySum):
    """xi_i = lim R_i/R_1 at infinite frequency (leading-coefficient ratio)."""
    degs = R.relative_degrees()
    d1 = degs[0]
    lead1 = R.coeffs[0].num.leading / R.coeffs[0].den.leading
    xs = []
    for c, d in zip(R.coeffs[1:], degs[1:]):
        if d > d1:
            xs.append(0.0)
        else:
            xs.append((c.num.leading / c.den.leading) / lead1)
    return xs


def phi_polynomial(R: DelaySum) -> Polynomial:
    """phi(r) = 1 + sum xi_i r^{e_i} under the reduced commensuration of the
    delay differences h_i - h_1.

    Root magnitudes and the |r| vs 1 verdicts are invariant under the
    reduction (roots map by a power), and the reduced form matches the
    reported regression polynomial.
    """
    if classify_kind(R) != NEUTRAL:
        raise DomainError("phi polynomial is defined for neutral systems only")
    g = _delay_difference_step(R.delays)
    xs = _xi_coefficients(R)
    exps = [int((Fraction(h) - Fraction(R.delays[0])) / g) for h in R.delays[1:]]
    coeffs = np.zeros(max(exps) + 1)
    coeffs[0] = 1.0
    for e, x in zip(exps, xs):
        coeffs[e] += x
    return Polynomial(coeffs)


def _finite_unstable_zero_verdict(R: DelaySum):
    """(is_F, phi, roots, chains) for a delay sum."""
    kind = classify_kind(R)
    if kind in (RETARDED, SINGLE_TERM):
        return True, Polynomial([1.0]), [], []
    if kind == ADVANCED:
        # dominant term is delayed; the conjugate is retarded instead
        return False, Polynomial([1.0]), [], []
    phi = phi_polynomial(R)
    if phi.degree == 0:
        return True, phi, [], []
    roots = poly_roots(phi)
    for r in roots:
        if abs(abs(r) - 1.0) <= UNIT_CIRCLE_TOL:
            raise AssumptionViolation(
                f"A.2: phi root {r} on the unit circle implies infinitely many "
                "imaginary-axis zeros", diagnostic="A.2")
    g = float(_delay_difference_step(R.delays))
    chains = []
    inside = [r for r in roots if abs(r) < 1.0]
    groups = []
    for r in sorted(inside, key=abs):
        for grp in groups:
            if abs(abs(r) - abs(grp[0])) <= 1e-9 * (1.0 + abs(r)):
                grp.append(r)
                break
        else:
            groups.append([r])
    for grp in groups:
        sigma = -math.log(abs(grp[0])) / g
        rep = min(grp, key=lambda r: abs(cmath.phase(r)))
        offset = -cmath.phase(rep) / g
        spacing = 2.0 * math.pi / (g * len(grp))
        chains.append(Chain(sigma, offset, spacing))
    is_f = all(abs(r) > 1.0 for r in roots)
    return is_f, phi, roots, chains


def analyze(R: DelaySum) -> ClassificationReport:
    """Full classification report including the conjugate-based I verdict."""
    kind = classify_kind(R)
    N, scaled = commensurate_base(R.delays)
    is_f, phi, roots, chains = _finite_unstable_zero_verdict(R)
    is_i, _, _, _ = _finite_unstable_zero_verdict(conjugate(R))
    return ClassificationReport(
        kind=kind,
        relative_degrees=tuple(R.relative_degrees()),
        commensurate_base=N,
        scaled_delays=scaled,
        phi_coefficients=tuple(float(c) for c in phi.coeffs),
        phi_roots=tuple(roots),
        is_F=is_f,
        is_I=is_i,
        chains=tuple(chains),
    )


def plant_type(P: TimeDelayPlant) -> PlantType:
    """IF/FI/FF decision with named diagnostics on failure.

    FF is preferred when numerator and denominator are both F-systems;
    FI additionally requires h_1 = tau_1 = 0.
    """
    rep_r = P._cache.get("report_R")
    if rep_r is None:
        rep_r = analyze(P.numerator)
        P._cache["report_R"] = rep_r
    rep_t = P._cache.get("report_T")
    if rep_t is None:
        rep_t = analyze(P.denominator)
        P._cache["report_T"] = rep_t

    if rep_r.is_F and rep_t.is_F:
        out = PlantType("FF")
    elif rep_r.is_I and rep_t.is_F:
        out = PlantType("IF")
    elif rep_r.is_F and rep_t.is_I:
        if P.numerator.min_delay == 0 and P.denominator.min_delay == 0:
            out = PlantType("FI")
        else:
            out = PlantType(
                "Unsupported",
                "FI plant requires h_1 = tau_1 = 0; delayed FI plants are "
                "rejected, not transformed")
    else:
        out = PlantType(
            "Unsupported",
            "corollary-3: neither numerator nor denominator is an F-system "
            "(finitely-many-unstable-zeros test failed for both)")
    P._cache["plant_type"] = out
    return out
