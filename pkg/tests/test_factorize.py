import numpy as np
import pytest

from delayhinf import (
    factorize,
    normalize_plant,
    rhp_zeros,
    verify_factorization,
)

from conftest import make_benchmark_plant

GRID = np.logspace(-3, 4, 600)


def test_benchmark_denominator_rhp_zero_pair():
    P = make_benchmark_plant()
    zs = rhp_zeros(P.denominator)
    assert len(zs) == 2
    zs = sorted((z for z, _ in zs), key=lambda z: z.imag)
    assert abs(zs[1] - (0.4672 + 1.8890j)) < 1e-3
    assert abs(zs[0] - (0.4672 - 1.8890j)) < 1e-3
    assert all(m == 1 for _, m in rhp_zeros(P.denominator))


def test_benchmark_factorization_residuals():
    P = make_benchmark_plant()
    fact = factorize(P)
    assert fact.tag == "IF"
    res = verify_factorization(fact, P, grid=GRID)
    assert res["reconstruction"] < 1e-10
    assert res["inner_m_n"] < 1e-10
    assert res["inner_m_d"] < 1e-10


def test_benchmark_m_d_carries_denominator_rhp_zeros():
    P = make_benchmark_plant()
    fact = factorize(P)
    for z, _ in rhp_zeros(P.denominator):
        assert abs(complex(fact.m_d(z))) < 1e-8


def test_ff_plant_factorization():
    P = normalize_plant(
        [(0, [2.0, 1.0]), ("0.3", [0.5])],
        [(0, [-1.0, 1.0, 1.0]), ("0.4", [0.5, 0.2])])
    fact = factorize(P)
    assert fact.tag == "FF"
    res = verify_factorization(fact, P, grid=GRID)
    assert max(res.values()) < 1e-10


def test_fi_plant_factorization():
    # stable rational numerator over a neutral I-system denominator
    P = normalize_plant(
        [(0, [2.0, 1.0])],
        [(0, [1.0, 1.0]), ("0.5", [-6.0, 3.0])])
    fact = factorize(P)
    assert fact.tag == "FI"
    res = verify_factorization(fact, P, grid=GRID)
    assert max(res.values()) < 1e-10


def test_inner_parts_are_inner_off_axis_contractive():
    # |m(s)| <= 1 in the open RHP for an inner function
    P = make_benchmark_plant()
    fact = factorize(P)
    pts = np.array([0.5 + 1j, 2.0 - 3j, 0.1 + 0.1j, 4.0])
    assert np.all(np.abs(fact.m_d(pts)) <= 1.0 + 1e-9)
    assert np.all(np.abs(fact.m_n(pts)) <= 1.0 + 1e-9)
