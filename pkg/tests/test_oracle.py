import numpy as np
import pytest

from delayhinf import (
    DomainError,
    OracleMismatchError,
    closed_loop_step,
    cross_validate_gamma,
    pade_delay,
    stability_check,
)
from delayhinf.oracle import (
    DEFAULT_GRID,
    central_controller,
    hinf_bisect,
    mixed_sensitivity_plant,
    pade_oracle_gamma,
    plant_pade_ss,
    ss_response,
)

from conftest import make_benchmark_plant, make_benchmark_weights
from test_synthesis import make_delay_free_problem


def test_pade_delay_is_all_pass():
    for order in (2, 5, 8, 12):
        d = pade_delay(1.0, order)
        w = np.logspace(-2, 1, 100)
        assert np.max(np.abs(np.abs(d(1j * w)) - 1.0)) < 1e-10


def test_pade_delay_phase_accuracy_grows_with_order():
    w = np.linspace(0.1, 2.0, 50)
    errs = []
    for order in (2, 4, 8):
        d = pade_delay(0.7, order)
        errs.append(np.max(np.abs(d(1j * w) - np.exp(-0.7j * w))))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-12


def test_pade_delay_rejects_out_of_range_order():
    with pytest.raises(DomainError):
        pade_delay(1.0, 1)
    with pytest.raises(DomainError):
        pade_delay(1.0, 13)


def test_plant_pade_ss_matches_plant_at_low_frequency():
    P = make_benchmark_plant()
    ss = plant_pade_ss(P, 8)
    w = np.logspace(-2, 0.5, 60)
    assert np.max(np.abs(ss_response(ss, 1j * w) - P(1j * w))) < 1e-8


def test_benchmark_oracle_gamma_stable_across_orders():
    P = make_benchmark_plant()
    w = make_benchmark_weights()
    gammas = [pade_oracle_gamma(P, w, order=o) for o in (4, 8)]
    for g in gammas:
        assert abs(g - 0.7203) < 1e-2
    assert abs(gammas[0] - gammas[1]) < 1e-4


def test_central_controller_achieves_gamma():
    P, w = make_delay_free_problem()
    gp = mixed_sensitivity_plant(plant_pade_ss(P, 4), w.W1, w.W2, reg=1e-5)
    gamma = hinf_bisect(gp, 0.5, 3.0, rel_tol=1e-8)
    K = central_controller(gp, gamma * (1.0 + 1e-6))
    jw = 1j * DEFAULT_GRID
    Pv, Kv = P(jw), ss_response(K, jw)
    S = 1.0 / (1.0 + Pv * Kv)
    cost = np.sqrt(np.abs(w.W1(jw) * S) ** 2 + np.abs(w.W2(jw) * (1 - S)) ** 2)
    assert np.max(cost) < gamma * (1.0 + 1e-3)
    # the controller state matrix is Hurwitz
    assert np.max(np.linalg.eigvals(K[0]).real) < 0.0


def test_ss_response_matches_manual():
    A = np.array([[-1.0, 1.0], [0.0, -2.0]])
    B = np.array([[0.0], [1.0]])
    C = np.array([[1.0, 0.0]])
    D = np.array([[0.5]])
    s = np.array([0.3j, 1.0 + 1.0j])
    vals = ss_response((A, B, C, D), s)
    for k, sk in enumerate(s):
        ref = C @ np.linalg.solve(sk * np.eye(2) - A, B) + D
        assert abs(vals[k] - ref[0, 0]) < 1e-12


def test_closed_loop_step_first_order_oracle():
    # P = 1/(s+1) with unit feedback: step response of 1/(s+2)
    P = lambda s: 1.0 / (s + 1.0)
    C = lambda s: np.ones_like(np.asarray(s, dtype=complex))
    t, y = closed_loop_step(P, C, 10.0, dt=1e-3)
    ref = 0.5 * (1.0 - np.exp(-2.0 * t))
    mask = t > 0.05  # the first samples are smoothed by the band limit
    assert np.max(np.abs(y[mask] - ref[mask])) < 1e-4
    assert abs(y[-1] - 0.5) < 1e-5


def test_stability_check_detects_unstable_loop():
    P = make_benchmark_plant()  # 2 RHP poles
    stable_c = lambda s: np.zeros_like(np.asarray(s, dtype=complex)) + 0.1
    assert not stability_check(P, stable_c, 2)


def test_cross_validate_gamma_thresholds():
    assert cross_validate_gamma(1.000, 1.005)
    assert not cross_validate_gamma(1.00, 1.03)
    with pytest.raises(OracleMismatchError):
        cross_validate_gamma(1.0, 1.2)
