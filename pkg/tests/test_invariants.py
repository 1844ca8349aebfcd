"""Randomized invariant suites: factorization identities, FIR structure and
winding self-consistency over large families of generated systems."""
from fractions import Fraction

import numpy as np

from delayhinf import DelaySum, Polynomial, RationalFunction, normalize_plant
from delayhinf.errors import DelayHinfError
from delayhinf.factorize import factorize, verify_factorization
from delayhinf.fir_decomp import phi_decompose, residue_cancellation
from delayhinf.winding import winding_number

GRID = np.logspace(-3, 4, 400)


def draw_plant(rng):
    a = rng.uniform(0.5, 3.0)
    b = rng.uniform(-1.5, 1.5)
    c = rng.uniform(-1.0, 3.0)
    d = rng.uniform(-2.0, 2.0)
    e = rng.uniform(-1.0, 1.0)
    f = rng.uniform(-2.0, 2.0)
    h1 = Fraction(int(rng.integers(0, 7)), 10)
    h2 = Fraction(int(rng.integers(1, 7)), 10)
    if rng.random() < 0.5:
        num = [(h1, [a, 1.0]), (h1 + h2, [b])]
    else:
        num = [(h1, [a, 1.0]), (h1 + h2, [b, rng.uniform(1.1, 2.5)])]
    den = [(0, [d, c, 1.0]), (Fraction(int(rng.integers(1, 7)), 10), [f, e])]
    return num, den


def test_factorization_invariants_hold_across_random_plants():
    """100 random admissible plants: the inner factors are inner on the axis
    and the factorization reconstructs the plant, all to 1e-8."""
    rng = np.random.default_rng(42)
    done = skipped = 0
    worst = {"reconstruction": 0.0, "inner_m_n": 0.0, "inner_m_d": 0.0}
    tags = set()
    attempts = 0
    while done < 100:
        attempts += 1
        assert attempts < 500, "too many inadmissible draws"
        num, den = draw_plant(rng)
        try:
            plant = normalize_plant(num, den)
            fact = factorize(plant)
        except DelayHinfError:
            skipped += 1
            continue
        res = verify_factorization(fact, plant, grid=GRID)
        for key in worst:
            worst[key] = max(worst[key], res[key])
        tags.add(fact.tag)
        done += 1
    assert worst["reconstruction"] < 1e-8
    assert worst["inner_m_n"] < 1e-8
    assert worst["inner_m_d"] < 1e-8
    # the family must actually exercise more than one plant type
    assert len(tags) >= 2


def test_phi_decomposition_invariants_hold_across_random_systems():
    """100 random interpolating systems: the decomposition reconstructs
    X/X0 to 1e-8 and the FIR residues cancel to 1e-9."""
    rng = np.random.default_rng(42)
    jw = 1j * GRID
    for _ in range(100):
        z = rng.uniform(0.2, 2.0)
        h = Fraction(int(rng.integers(1, 9)), 10)
        c1 = RationalFunction(
            Polynomial([rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)]),
            Polynomial([rng.uniform(0.5, 2.0), 1.0]) * Polynomial([1.0, 1.0]))
        c2 = RationalFunction(Polynomial([rng.uniform(0.5, 2.0)]),
                              Polynomial([rng.uniform(0.8, 3.0), 1.0]))
        # scale the delayed term so X vanishes at the test zero z of X0
        alpha = -complex(c1(z)) / (complex(c2(z)) * np.exp(-float(h) * z))
        X = DelaySum([(c1, Fraction(0)), (c2 * alpha.real, h)])
        X0 = RationalFunction(Polynomial([-z, 1.0]), Polynomial([1.0, 1.0]))
        dec = phi_decompose(X, X0)
        target = X(jw) / X0(jw)
        scale = max(np.max(np.abs(target)), 1e-12)
        assert np.max(np.abs(dec(jw) - target)) / scale < 1e-8
        resid, rscale = residue_cancellation(dec.fir)
        assert resid / max(rscale, 1e-12) < 1e-9
        assert dec.fir.genuine


def test_winding_counts_match_known_roots():
    """100 random real polynomials: the winding count over a box equals the
    number of constructed roots inside it."""
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 100:
        roots = rng.uniform(-4, 4, size=3) + 1j * rng.uniform(-4, 4, size=3)
        roots = np.concatenate([roots, roots.conj()])
        # skip draws with a root too close to the contour
        if (np.min(np.abs(roots.real - 1e-6)) < 1e-3
                or np.min(np.abs(roots.real - 5.0)) < 1e-3
                or np.min(np.abs(np.abs(roots.imag) - 5.0)) < 1e-3):
            continue
        p = Polynomial.from_roots(list(roots))
        inside = sum(1 for r in roots
                     if 1e-6 < r.real < 5.0 and abs(r.imag) < 5.0)
        assert winding_number(p, (1e-6, 5.0, -5.0, 5.0)) == inside
        checked += 1
