import numpy as np
import pytest

from delayhinf import (
    Polynomial,
    RationalFunction,
    Weights,
    gamma_lower_bound,
    normalize_plant,
    synthesize,
)
from delayhinf.errors import AssumptionViolation, DomainError
from delayhinf.oracle import DEFAULT_GRID, flatness_check
from delayhinf.synthesis import e_function, rho_profile

from conftest import make_benchmark_weights


def make_delay_free_problem():
    """(s - 1.5)/((s + 3)(s - 0.5)) with first-order weights."""
    P = normalize_plant([(0, [-1.5, 1.0])], [(0, [-1.5, 2.5, 1.0])])
    W1 = RationalFunction(Polynomial([1.0]), Polynomial([1.0, 1.0]))
    W2 = RationalFunction(Polynomial([0.25, 0.5]), Polynomial([2.0, 1.0]))
    return P, Weights(W1, W2)


def test_benchmark_gamma(benchmark_synthesis):
    fact, syn, ctrl = benchmark_synthesis
    assert fact.tag == "IF"
    assert abs(syn.gamma - 0.72024466) < 1e-6


def test_benchmark_gamma_above_lower_bound(benchmark_weights,
                                           benchmark_synthesis):
    _, syn, _ = benchmark_synthesis
    glb = gamma_lower_bound(benchmark_weights)
    assert glb < syn.gamma


def test_benchmark_flatness(benchmark_plant, benchmark_weights,
                            benchmark_synthesis):
    _, syn, ctrl = benchmark_synthesis
    fmax, fmin, profile = flatness_check(benchmark_plant, ctrl,
                                         benchmark_weights)
    assert (fmax - fmin) / syn.gamma < 1e-8
    assert abs(fmax - syn.gamma) < 1e-6


def test_benchmark_controller_fir_blocks_genuine(benchmark_synthesis):
    _, _, ctrl = benchmark_synthesis
    assert ctrl.num_fir.genuine and ctrl.den_fir.genuine
    assert ctrl.num_fir.support > 0.0 and ctrl.den_fir.support > 0.0


def test_rho_matches_weight_combination(benchmark_weights):
    # |y|^2 = rho at flatness: rho * (g^2(|W1|^2+|W2|^2) - |W1 W2|^2) = g^4
    g = 0.9
    rho = rho_profile(g, benchmark_weights)
    w = np.logspace(-2, 2, 100)
    jw = 1j * w
    a = np.abs(benchmark_weights.W1(jw)) ** 2
    b = np.abs(benchmark_weights.W2(jw)) ** 2
    expected = g ** 4 / (g * g * (a + b) - a * b)
    assert np.allclose(rho(jw).real, expected, rtol=1e-10)


def test_e_function_real_on_axis(benchmark_weights):
    E = e_function(0.8, benchmark_weights)
    jw = 1j * np.logspace(-2, 2, 60)
    assert np.max(np.abs(E(jw).imag)) < 1e-12


def test_gamma_monotone_in_w1_scale(benchmark_plant, benchmark_weights):
    gammas = []
    for k in (0.8, 1.0, 1.25):
        w = Weights(benchmark_weights.W1 * k, benchmark_weights.W2)
        _, syn, _ = synthesize(benchmark_plant, w, rel_tol=1e-5)
        gammas.append(syn.gamma)
    assert gammas[0] < gammas[1] < gammas[2]


def test_delay_free_gamma_matches_riccati_oracle():
    from delayhinf.oracle import pade_oracle_gamma
    P, w = make_delay_free_problem()
    _, syn, ctrl = synthesize(P, w, rel_tol=1e-7)
    g_or = pade_oracle_gamma(P, w, order=4)
    assert abs(syn.gamma - g_or) / g_or < 1e-3
    fmax, fmin, _ = flatness_check(P, ctrl, w)
    assert (fmax - fmin) / syn.gamma < 1e-8


def test_delay_free_controller_fir_parts_vanish():
    P, w = make_delay_free_problem()
    _, _, ctrl = synthesize(P, w, rel_tol=1e-7)
    jw = 1j * DEFAULT_GRID
    for block in (ctrl.num_fir, ctrl.den_fir):
        if not block.is_zero:
            assert np.max(np.abs(block(jw))) < 1e-9


def test_controller_partition_consistency(benchmark_synthesis):
    # num/den split evaluates to the same function as the full controller
    _, _, ctrl = benchmark_synthesis
    jw = 1j * np.logspace(-2, 2, 50)
    num = ctrl.num_regular(jw) + ctrl.num_fir(jw)
    den = ctrl.den_regular(jw) + ctrl.den_fir(jw)
    assert np.allclose(ctrl(jw), num / den, rtol=1e-12)


def test_weights_reject_unstable_w1():
    with pytest.raises(AssumptionViolation):
        Weights(RationalFunction(Polynomial([1.0]), Polynomial([-1.0, 1.0])),
                RationalFunction.zero())


def test_weights_reject_zero_w1():
    with pytest.raises(DomainError):
        Weights(RationalFunction.zero(), RationalFunction.zero())
