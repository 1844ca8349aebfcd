import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayhinf import (
    DomainError,
    InnerRational,
    Polynomial,
    RationalFunction,
    spectral_factor,
)

coeff_lists = st.lists(
    st.floats(min_value=-10, max_value=10, allow_nan=False,
              allow_infinity=False),
    min_size=1, max_size=5).filter(lambda c: any(abs(x) > 1e-6 for x in c))


@given(coeff_lists, coeff_lists)
@settings(max_examples=50, deadline=None)
def test_poly_product_pointwise(a, b):
    p, q = Polynomial(a), Polynomial(b)
    x = np.array([0.3, -1.2, 2.5 + 1j, -0.7 - 2j])
    assert np.allclose((p * q)(x), p(x) * q(x), rtol=1e-10, atol=1e-8)


@given(coeff_lists, coeff_lists)
@settings(max_examples=50, deadline=None)
def test_poly_sum_pointwise(a, b):
    p, q = Polynomial(a), Polynomial(b)
    x = np.array([0.0, 1.0, -3.0, 0.5j])
    assert np.allclose((p + q)(x), p(x) + q(x), rtol=1e-10, atol=1e-8)


def test_poly_from_roots_round_trip():
    roots = [-1.0, -2.0 + 1.5j, -2.0 - 1.5j, 0.5]
    p = Polynomial.from_roots(roots)
    vals = p(np.array(roots))
    assert np.max(np.abs(vals)) < 1e-9


def test_poly_flip_is_reflection():
    p = Polynomial([1.0, 2.0, 3.0])
    x = np.array([0.7, -1.3, 2.0 + 1j])
    assert np.allclose(p.flip()(x), p(-x))


def test_rational_reduce_cancels_common_factor():
    num = Polynomial.from_roots([-1.0, -3.0])
    den = Polynomial.from_roots([-1.0, -2.0])
    f = RationalFunction(num, den)
    x = np.array([0.5, 1j, -4.0])
    expected = (x + 3.0) / (x + 2.0)
    assert np.allclose(f(x), expected, rtol=1e-10)


def test_rational_arithmetic_pointwise():
    f = RationalFunction(Polynomial([1.0, 1.0]), Polynomial([2.0, 0.0, 1.0]))
    g = RationalFunction(Polynomial([3.0]), Polynomial([1.0, 1.0]))
    x = np.array([0.3, -0.8, 1.5j, 2.0 - 1j])
    assert np.allclose((f * g)(x), f(x) * g(x), rtol=1e-10)
    assert np.allclose((f + g)(x), f(x) + g(x), rtol=1e-10)
    assert np.allclose((f / g)(x), f(x) / g(x), rtol=1e-10)


def test_spectral_factor_magnitude_and_stability():
    # g = G(s) G(-s) built from a known stable biproper G, then recovered
    g_num = Polynomial([4.0, 0.0, -1.0])   # (2+s)(2-s)
    g_den = Polynomial([9.0, 0.0, -4.0])   # (3+2s)(3-2s)
    g = RationalFunction(g_num, g_den)
    G = spectral_factor(g)
    w = np.logspace(-2, 2, 200)
    assert np.allclose(np.abs(G(1j * w)) ** 2, g(1j * w).real, rtol=1e-8)
    for p in G.poles():
        assert p.real < 0
    for z in np.roots(G.num.coeffs[::-1]):
        assert z.real < 0  # outer: zeros in the closed LHP


def test_spectral_factor_rejects_non_para_hermitian():
    g = RationalFunction(Polynomial([1.0, 1.0]), Polynomial([2.0, 0.0, 1.0]))
    with pytest.raises(DomainError):
        spectral_factor(g)


def test_inner_rational_is_inner_on_axis():
    inner = InnerRational([1.0 + 2.0j, 1.0 - 2.0j, 0.5])
    w = np.logspace(-2, 3, 300)
    assert np.max(np.abs(np.abs(inner(1j * w)) - 1.0)) < 1e-12
    assert abs(inner(0.5)) < 1e-12
    assert abs(inner(1.0 + 2.0j)) < 1e-12


def test_inner_rational_rejects_lhp_zero():
    with pytest.raises(DomainError):
        InnerRational([-1.0])
