import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings
from hypothesis import strategies as st

from delayhinf import (
    AssumptionViolation,
    DelaySum,
    DelayStateSpace,
    DomainError,
    Polynomial,
    RationalFunction,
    conjugate,
    from_delay_state_space,
    normalize_plant,
    time_response,
)
from delayhinf.delaysum import as_fraction

from conftest import make_benchmark_plant


def stable_rf(num, den_roots):
    return RationalFunction(Polynomial(num),
                            Polynomial.from_roots(list(den_roots)))


def test_as_fraction_exact_decimals():
    assert as_fraction("0.4") == Fraction(2, 5)
    assert as_fraction(0.4) == Fraction(2, 5)
    assert as_fraction("2/5") == Fraction(2, 5)
    assert as_fraction(3) == Fraction(3)
    with pytest.raises(DomainError):
        as_fraction(float("inf"))


@given(st.lists(st.tuples(
    st.floats(min_value=-3, max_value=3, allow_nan=False),
    st.integers(min_value=0, max_value=5)), min_size=1, max_size=4))
@settings(max_examples=40, deadline=None)
def test_delaysum_sum_pointwise(spec):
    terms = [(stable_rf([g], [-1.0 - k]), Fraction(d, 10))
             for k, (g, d) in enumerate(spec)]
    X = DelaySum(terms)
    s = np.array([0.3j, 1.0 + 0.5j, -0.2 + 2.0j])
    manual = sum(c(s) * np.exp(-float(h) * s) for c, h in terms)
    assert np.allclose(X(s), manual, rtol=1e-12, atol=1e-12)


def test_delaysum_product_pointwise():
    X = DelaySum([(stable_rf([1.0], [-1.0]), Fraction(0)),
                  (stable_rf([2.0, 1.0], [-2.0, -3.0]), Fraction(1, 2))])
    Y = DelaySum([(stable_rf([0.5], [-1.5]), Fraction(1, 5))])
    s = np.array([0.1j, 1.0 + 1j, 2.0])
    assert np.allclose((X * Y)(s), X(s) * Y(s), rtol=1e-12)
    assert np.allclose((X + Y)(s), X(s) + Y(s), rtol=1e-12)


def test_delaysum_rejects_unstable_coefficient():
    with pytest.raises(DomainError):
        DelaySum([(RationalFunction(Polynomial([1.0]),
                                    Polynomial([-1.0, 1.0])), Fraction(0))])


def test_normalize_plant_benchmark_shape():
    P = make_benchmark_plant()
    # every coefficient shares the stable base denominator (s+1)^2
    for c, _ in list(P.numerator.terms) + list(P.denominator.terms):
        assert c.is_proper
        for p in c.poles():
            assert abs(p + 1.0) < 1e-9
    w = np.logspace(-2, 2, 50)
    jw = 1j * w
    raw_num = (3.0 + jw) + 2.0 * (jw - 1.0) * np.exp(-0.4 * jw)
    raw_den = jw ** 2 + jw * np.exp(-0.2 * jw) + 5.0 * np.exp(-0.5 * jw)
    assert np.allclose(P(jw), raw_num / raw_den, rtol=1e-12)


def test_admissibility_a1b_delay_ordering():
    with pytest.raises(AssumptionViolation) as exc:
        normalize_plant([("0.1", [1.0, 1.0])], [("0.2", [2.0, 1.0])])
    assert exc.value.diagnostic == "A.1(b)"
    assert exc.value.exit_code == 2


def test_admissibility_a1c_degree_ordering():
    with pytest.raises(AssumptionViolation) as exc:
        normalize_plant([(0, [1.0, 0.0, 1.0])], [(0, [2.0, 1.0])])
    assert exc.value.diagnostic == "A.1(c)"


def test_admissibility_a2_axis_zero():
    # numerator s^2 + 1 vanishes at s = j
    with pytest.raises(AssumptionViolation) as exc:
        normalize_plant([(0, [1.0, 0.0, 1.0])], [(0, [1.0, 2.0, 1.0])])
    assert exc.value.diagnostic == "A.2"


def test_conjugate_benchmark_coefficients():
    # numerator (s+3) + 2(s-1)e^{-0.4s}; its conjugate has exactly two
    # terms: 2/(s+1) at delay 0 and (s-3)/(s+1)^2 at delay 2/5
    P = make_benchmark_plant()
    rbar = conjugate(P.numerator)
    assert [h for _, h in rbar.terms] == [Fraction(0), Fraction(2, 5)]
    c0, c1 = rbar.coeffs
    s = np.array([0.0, 0.5j, 1.0 + 2.0j, -0.3 + 1.0j, 10.0])
    assert np.allclose(c0(s), 2.0 / (s + 1.0), rtol=1e-12, atol=1e-12)
    assert np.allclose(c1(s), (s - 3.0) / (s + 1.0) ** 2,
                       rtol=1e-12, atol=1e-12)


def test_conjugate_axis_identity():
    # |Rbar| = |R| on the axis and Rbar = sign * M_C e^{-h_n s} conj(R)
    P = make_benchmark_plant()
    R = P.numerator
    rbar = conjugate(R)
    w = np.logspace(-2, 2, 100)
    jw = 1j * w
    assert np.max(np.abs(np.abs(rbar(jw)) - np.abs(R(jw)))) < 1e-12
    mc = ((1.0 - jw) / (1.0 + jw)) ** 2
    ident = mc * np.exp(-0.4 * jw) * np.conj(R(jw))
    assert np.max(np.abs(rbar(jw) + ident)) < 1e-12


def test_time_response_first_order_lag():
    X = DelaySum([(stable_rf([1.0], [-2.0]), Fraction(1, 2))])
    t = np.linspace(0.0, 3.0, 301)
    y = time_response(X, t, kind="impulse")
    ref = np.where(t >= 0.5, np.exp(-2.0 * (t - 0.5)), 0.0)
    assert np.max(np.abs(y - ref)) < 1e-10


def test_delay_state_space_transfer_matches():
    # x' = -x(t) + 0.5 x(t-1) + u, y = x  =>  P = 1/(s + 1 - 0.5 e^{-s})
    sys = DelayStateSpace(
        a_terms=((0, [[-1.0]]), (1, [[0.5]])),
        b_terms=((0, [1.0]),),
        c_terms=((0, [1.0]),))
    P = from_delay_state_space(sys)
    w = np.logspace(-2, 2, 60)
    jw = 1j * w
    ref = 1.0 / (jw + 1.0 - 0.5 * np.exp(-jw))
    assert np.allclose(P(jw), ref, rtol=1e-10)
