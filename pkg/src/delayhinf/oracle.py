"""Finite-dimensional validation oracle.

Each delay e^{-hs} is replaced by a diagonal Pade approximant, the
two-block weighted sensitivity problem is assembled as a generalized
state-space plant, and the optimal cost is found by the standard
two-Riccati bisection.  The module also provides closed-loop flatness and
argument-principle stability checks used by the CLI validation command.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .delaysum import DelaySum, TimeDelayPlant
from .errors import (
    DomainError,
    NumericalError,
    OracleMismatchError,
    ResolutionError,
)
from .rational import Polynomial, RationalFunction
from .winding import winding_number

DEFAULT_GRID = np.logspace(-3.0, 4.0, 1000)


# ---------------------------------------------------------------------------
# Pade approximation of the plant
# ---------------------------------------------------------------------------

def pade_delay(h: float, order: int) -> RationalFunction:
    """Diagonal Pade approximant of e^{-hs} of the given order."""
    if not (2 <= order <= 12):
        raise DomainError("Pade order must lie in [2, 12]")
    h = float(h)
    if h == 0.0:
        return RationalFunction.const(1.0)
    n = order
    # numerator of e^{-x}: sum_k (2n-k)! n! / ((2n)! k! (n-k)!) (-x)^k
    c = [math.factorial(2 * n - k) * math.factorial(n)
         / (math.factorial(2 * n) * math.factorial(k) * math.factorial(n - k))
         for k in range(n + 1)]
    num = Polynomial([c[k] * (-h) ** k for k in range(n + 1)])
    den = Polynomial([c[k] * h ** k for k in range(n + 1)])
    return RationalFunction(num, den, reduce=False)


def delay_sum_pade(X: DelaySum, order: int) -> RationalFunction:
    """Rational approximation of a delay sum."""
    out = RationalFunction.zero()
    for c, h in X.terms:
        out = out + c * pade_delay(float(h), order)
    return out


def plant_pade(P: TimeDelayPlant, order: int) -> RationalFunction:
    """Rational approximation of the plant (numerator and denominator are
    approximated separately so unstable poles are preserved exactly when
    the corresponding delay sums are polynomial)."""
    return delay_sum_pade(P.numerator, order) / delay_sum_pade(
        P.denominator, order)


# ---------------------------------------------------------------------------
# state-space helpers
# ---------------------------------------------------------------------------

def _tf_to_ss(r: RationalFunction):
    """Controllable-canonical realization (A, B, C, D) of a proper
    rational function."""
    if r.relative_degree < 0:
        raise DomainError("cannot realize an improper transfer function")
    den = np.asarray(r.den.coeffs, dtype=float)
    num = np.asarray(r.num.coeffs, dtype=float)
    den = den / den[-1]
    num = num / r.den.coeffs[-1]
    n = len(den) - 1
    if n == 0:
        return (np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)),
                np.array([[num[0] if len(num) else 0.0]]))
    d = num[n] if len(num) > n else 0.0
    rem = np.zeros(n)
    for k in range(min(len(num), n)):
        rem[k] = num[k] - d * den[k]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = rem.reshape(1, n)
    D = np.array([[d]])
    return A, B, C, D


def _ss_parallel(s1, s2):
    A1, B1, C1, D1 = s1
    A2, B2, C2, D2 = s2
    n1, n2 = A1.shape[0], A2.shape[0]
    A = np.block([[A1, np.zeros((n1, n2))], [np.zeros((n2, n1)), A2]])
    B = np.vstack([B1, B2])
    C = np.hstack([C1, C2])
    return A, B, C, D1 + D2


def _ss_series(s1, s2):
    """Output of s1 feeds s2."""
    A1, B1, C1, D1 = s1
    A2, B2, C2, D2 = s2
    n1, n2 = A1.shape[0], A2.shape[0]
    A = np.block([[A1, np.zeros((n1, n2))], [B2 @ C1, A2]])
    B = np.vstack([B1, B2 @ D1])
    C = np.hstack([D2 @ C1, C2])
    return A, B, C, D2 @ D1


def _ss_inverse(s1):
    A, B, C, D = s1
    if abs(D[0, 0]) < 1e-12:
        raise DomainError("cannot invert a strictly proper system")
    Di = np.array([[1.0 / D[0, 0]]])
    return A - B @ Di @ C, B @ Di, -Di @ C, Di


def _pade_coeffs(h: float, order: int):
    """Raw ascending coefficient arrays (num, den) of the diagonal Pade
    approximant of e^{-hs} (no trimming: the tiny leading coefficients are
    structural)."""
    n = order
    c = [math.factorial(2 * n - k) * math.factorial(n)
         / (math.factorial(2 * n) * math.factorial(k) * math.factorial(n - k))
         for k in range(n + 1)]
    num = np.array([c[k] * (-h) ** k for k in range(n + 1)])
    den = np.array([c[k] * h ** k for k in range(n + 1)])
    return num, den


def _ss_from_coeffs(num, den):
    """Balanced controllable-canonical block from raw ascending coefficient
    arrays of a proper transfer function."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    while len(den) > 1 and den[-1] == 0.0:
        den = den[:-1]
    while len(num) > 1 and num[-1] == 0.0:
        num = num[:-1]
    if len(num) > len(den):
        raise DomainError("cannot realize an improper transfer function")
    lead = den[-1]
    den = den / lead
    num = num / lead
    n = len(den) - 1
    if n == 0:
        return (np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)),
                np.array([[num[0]]]))
    d = num[n] if len(num) > n else 0.0
    rem = np.zeros(n)
    for k in range(min(len(num), n)):
        rem[k] = num[k] - d * den[k]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = rem.reshape(1, n)
    Ab, T = scipy.linalg.matrix_balance(A)
    return Ab, np.linalg.solve(T, B), C @ T, np.array([[d]])


def _pade_ss(h: float, order: int):
    """All-pass cascade realization of the diagonal Pade approximant
    (first/second-order sections built from the denominator roots, which
    stays well conditioned at high order)."""
    _, pd = _pade_coeffs(1.0, order)
    roots = np.roots(pd[::-1]) / h
    out = (np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)),
           np.array([[1.0]]))
    used = np.zeros(len(roots), dtype=bool)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        used[i] = True
        if abs(r.imag) > 1e-9 * abs(r):
            j = int(np.argmin([abs(roots[k] - np.conj(r)) if not used[k]
                               else np.inf for k in range(len(roots))]))
            used[j] = True
            # q(s) = (s-r)(s-conj r); section q(-s)/q(s)
            den = np.array([abs(r) ** 2, -2.0 * r.real, 1.0])
            num = np.array([abs(r) ** 2, 2.0 * r.real, 1.0])
        else:
            den = np.array([-r.real, 1.0])
            num = np.array([-r.real, -1.0])
        out = _ss_series(out, _ss_from_coeffs(num, den))
    return out


def delay_sum_ss(X: DelaySum, order: int):
    """State-space realization of the Pade approximation of a delay sum,
    built term by term so every block stays small and well conditioned."""
    out = None
    for c, h in X.terms:
        blk = _ss_from_coeffs(np.asarray(c.num.coeffs, dtype=float),
                              np.asarray(c.den.coeffs, dtype=float))
        if float(h) != 0.0:
            blk = _ss_series(blk, _pade_ss(float(h), order))
        out = blk if out is None else _ss_parallel(out, blk)
    if out is None:
        raise DomainError("empty delay sum")
    return out


def plant_pade_ss(P: TimeDelayPlant, order: int):
    """Balanced state-space realization of the Pade-approximated plant
    R * T^{-1} (series of the numerator sum with the inverted denominator
    sum; avoids one giant ill-conditioned companion form)."""
    sR = delay_sum_ss(P.numerator, order)
    sT = delay_sum_ss(P.denominator, order)
    A, B, C, D = _ss_series(sR, _ss_inverse(sT))
    Ab, T = scipy.linalg.matrix_balance(A)
    Tinv = np.diag(1.0 / np.diag(T))
    return Ab, Tinv @ B, C @ T, D


@dataclass(frozen=True)
class GeneralizedPlant:
    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    D11: np.ndarray
    D12: np.ndarray
    C2: np.ndarray
    D21: np.ndarray


def _split_improper(w: RationalFunction):
    """w = (a s + b) + strictly proper remainder; a = 0 when w is proper."""
    if w.relative_degree >= 0:
        q = Polynomial([0.0])
        rem = w
    else:
        if w.relative_degree < -1:
            raise DomainError(
                "weights more than one degree improper are not supported")
        qc, rc = np.polydiv(np.asarray(w.num.coeffs, dtype=float)[::-1],
                            np.asarray(w.den.coeffs, dtype=float)[::-1])
        q = Polynomial(qc[::-1])
        rem = RationalFunction(Polynomial(rc[::-1]), w.den)
    a = q.coeffs[1] if q.degree >= 1 else 0.0
    b = q.coeffs[0] if len(q.coeffs) else 0.0
    return float(a), float(b), rem


def mixed_sensitivity_plant(plant_ss, W1: RationalFunction,
                            W2: RationalFunction,
                            reg: float = 1e-5) -> GeneralizedPlant:
    """Generalized plant for the two-block weighted sensitivity problem.

    ``plant_ss`` is an (A, B, C, D) realization of the plant.  Channels:
    z1 = W1 (w - y_P), z2 = W2 y_P, z3 = reg * u, y = w - y_P.  An
    improper-by-one W2 = a s + b + proper is realized exactly through the
    plant-state derivative (the plant must be strictly proper for that
    path).
    """
    Ap, Bp, Cp, Dp = plant_ss
    a2, b2, W2rem = _split_improper(W2)
    if a2 != 0.0 and abs(Dp[0, 0]) > 1e-12:
        raise DomainError("improper W2 requires a strictly proper plant")
    A1, B1w, C1w, D1w = _tf_to_ss(W1)
    A2, B2w, C2w, D2w = _tf_to_ss(W2rem)
    npl, n1, n2 = Ap.shape[0], A1.shape[0], A2.shape[0]
    n = npl + n1 + n2
    A = np.zeros((n, n))
    A[:npl, :npl] = Ap
    A[npl:npl + n1, npl:npl + n1] = A1
    A[npl + n1:, npl + n1:] = A2
    A[npl:npl + n1, :npl] = -B1w @ Cp
    A[npl + n1:, :npl] = B2w @ Cp
    B1 = np.zeros((n, 1))
    B1[npl:npl + n1] = B1w
    B2 = np.zeros((n, 1))
    B2[:npl] = Bp
    # z rows
    z1_x = np.zeros((1, n))
    z1_x[:, :npl] = -D1w @ Cp
    z1_x[:, npl:npl + n1] = C1w
    z2_x = np.zeros((1, n))
    z2_x[:, :npl] = a2 * (Cp @ Ap) + (b2 + D2w[0, 0]) * Cp
    z2_x[:, npl + n1:] = C2w
    z3_x = np.zeros((1, n))
    C1 = np.vstack([z1_x, z2_x, z3_x])
    D11 = np.array([[D1w[0, 0]], [0.0], [0.0]])
    D12 = np.array([[0.0], [a2 * float((Cp @ Bp).item()) + (b2 + D2w[0, 0])
                            * Dp[0, 0]], [reg]])
    C2 = np.zeros((1, n))
    C2[:, :npl] = -Cp
    D21 = np.array([[1.0]])
    return GeneralizedPlant(A, B1, B2, C1, D11, D12, C2, D21)


# ---------------------------------------------------------------------------
# Riccati machinery
# ---------------------------------------------------------------------------

def _ric_stabilizing(H, tol=1e-8):
    """Stabilizing solution X of the Riccati equation with Hamiltonian H,
    or None when the stable invariant subspace does not define one."""
    n = H.shape[0] // 2
    try:
        T, Z, sdim = scipy.linalg.schur(H, sort=lambda x: x.real < 0.0,
                                        output="complex")
    except Exception:
        return None
    eigs = np.diag(T)
    if sdim != n:
        return None
    scale = max(1.0, float(np.max(np.abs(eigs))))
    if np.min(np.abs(eigs.real)) < tol * scale * 1e-4:
        return None
    U11 = Z[:n, :n]
    U21 = Z[n:, :n]
    try:
        X = np.real(U21 @ np.linalg.solve(U11, np.eye(n)))
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(X)):
        return None
    sym = np.linalg.norm(X - X.T) / max(1.0, np.linalg.norm(X))
    if sym > 1e-6:
        return None
    return 0.5 * (X + X.T)


def _psd(X, tol=1e-7):
    w = np.linalg.eigvalsh(X)
    return w.min() >= -tol * max(1.0, w.max())


def hinf_feasible(gp: GeneralizedPlant, gamma: float) -> bool:
    """Two-Riccati existence test at level gamma (general direct terms)."""
    A, B1, B2 = gp.A, gp.B1, gp.B2
    C1, D11, D12 = gp.C1, gp.D11, gp.D12
    C2, D21 = gp.C2, gp.D21
    m1, m2 = B1.shape[1], B2.shape[1]
    p1, p2 = C1.shape[0], C2.shape[0]
    g2 = gamma * gamma
    B = np.hstack([B1, B2])
    C = np.vstack([C1, C2])
    D1a = np.hstack([D11, D12])                     # p1 x (m1+m2)
    Da1 = np.vstack([D11, D21])                     # (p1+p2) x m1
    R = D1a.T @ D1a - np.diag([g2] * m1 + [0.0] * m2)
    Rt = Da1 @ Da1.T - np.diag([g2] * p1 + [0.0] * p2)
    try:
        Rinv = np.linalg.inv(R)
        Rtinv = np.linalg.inv(Rt)
    except np.linalg.LinAlgError:
        return False
    # the level must exceed the direct-feedthrough bound in each channel
    if np.linalg.eigvalsh(R)[:m1].max() >= 0 or \
       np.linalg.eigvalsh(Rt)[:p1].max() >= 0:
        return False
    n = A.shape[0]
    HX = np.block([[A, np.zeros((n, n))], [-C1.T @ C1, -A.T]]) - \
        np.vstack([B, -C1.T @ D1a]) @ Rinv @ np.hstack([D1a.T @ C1, B.T])
    X = _ric_stabilizing(HX)
    if X is None or not _psd(X):
        return False
    HY = np.block([[A.T, np.zeros((n, n))], [-B1 @ B1.T, -A]]) - \
        np.vstack([C.T, -B1 @ Da1.T]) @ Rtinv @ np.hstack([Da1 @ B1.T, C])
    Y = _ric_stabilizing(HY)
    if Y is None or not _psd(Y):
        return False
    rho = np.max(np.abs(np.linalg.eigvals(X @ Y)))
    return bool(rho < g2)


def hinf_bisect(gp: GeneralizedPlant, lo: float, hi: float,
                rel_tol: float = 1e-5, max_iter: int = 200) -> float:
    """Smallest feasible gamma in [lo, hi] by bisection."""
    if not hinf_feasible(gp, hi):
        for _ in range(40):
            hi *= 2.0
            if hinf_feasible(gp, hi):
                break
        else:
            raise NumericalError("no feasible level found while doubling")
    for _ in range(max_iter):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if hinf_feasible(gp, mid):
            hi = mid
        else:
            lo = mid
    return hi


def pade_oracle_gamma(P: TimeDelayPlant, w, order: int = 8,
                      reg: float = 1e-5) -> float:
    """Optimal two-block cost of the Pade-approximated problem."""
    gp = mixed_sensitivity_plant(plant_pade_ss(P, order), w.W1, w.W2,
                                 reg=reg)
    from .synthesis import gamma_lower_bound
    lo = max(gamma_lower_bound(w) * 0.5, 1e-9)
    return hinf_bisect(gp, lo, 4.0 * lo + 1.0)


def central_controller(gp: GeneralizedPlant, gamma: float):
    """State-space central controller (Ac, Bc, Cc, Dc) at a feasible level.

    Requires a zero direct disturbance-to-cost term (D11 = 0); the cross
    terms D12'C1 and B1 D21' may be nonzero.  The measurement convention is
    the one of ``mixed_sensitivity_plant`` (y = w - y_P), so the returned
    system maps the tracking error to the control input.
    """
    if np.max(np.abs(gp.D11)) > 1e-12:
        raise DomainError("central controller requires D11 = 0")
    A, B1, B2 = gp.A, gp.B1, gp.B2
    C1, D11, D12 = gp.C1, gp.D11, gp.D12
    C2, D21 = gp.C2, gp.D21
    m1, m2 = B1.shape[1], B2.shape[1]
    p1, p2 = C1.shape[0], C2.shape[0]
    g2 = gamma * gamma
    B = np.hstack([B1, B2])
    C = np.vstack([C1, C2])
    D1a = np.hstack([D11, D12])
    Da1 = np.vstack([D11, D21])
    R = D1a.T @ D1a - np.diag([g2] * m1 + [0.0] * m2)
    Rt = Da1 @ Da1.T - np.diag([g2] * p1 + [0.0] * p2)
    Rinv = np.linalg.inv(R)
    Rtinv = np.linalg.inv(Rt)
    n = A.shape[0]
    HX = np.block([[A, np.zeros((n, n))], [-C1.T @ C1, -A.T]]) - \
        np.vstack([B, -C1.T @ D1a]) @ Rinv @ np.hstack([D1a.T @ C1, B.T])
    HY = np.block([[A.T, np.zeros((n, n))], [-B1 @ B1.T, -A]]) - \
        np.vstack([C.T, -B1 @ Da1.T]) @ Rtinv @ np.hstack([Da1 @ B1.T, C])
    X = _ric_stabilizing(HX)
    Y = _ric_stabilizing(HY)
    if X is None or Y is None or not _psd(X) or not _psd(Y):
        raise NumericalError(
            "central controller: no stabilizing Riccati pair at this level")
    rho = np.max(np.abs(np.linalg.eigvals(X @ Y)))
    if rho >= g2:
        raise NumericalError(
            "central controller: spectral-radius condition fails")
    F = -Rinv @ (D1a.T @ C1 + B.T @ X)
    L = -(B1 @ Da1.T + Y @ C.T) @ Rtinv
    F1, F2 = F[:m1], F[m1:]
    L2 = L[:, p1:]
    Z = np.linalg.inv(np.eye(n) - Y @ X / g2)
    Ac = A + B1 @ F1 + B2 @ F2 + Z @ L2 @ (C2 + D21 @ F1)
    Bc = -Z @ L2
    Cc = F2
    Dc = np.zeros((m2, p2))
    return Ac, Bc, Cc, Dc


def ss_response(ss, s):
    """Frequency response C (sI - A)^{-1} B + D of a SISO realization."""
    A, B, C, D = ss
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    n = A.shape[0]
    out = np.empty(s.shape, dtype=complex)
    for i, si in enumerate(s.ravel()):
        out.ravel()[i] = (C @ np.linalg.solve(si * np.eye(n) - A, B)
                          + D)[0, 0]
    return out


def pade_oracle_controller(P: TimeDelayPlant, w, order: int = 8,
                           reg: float = 1e-5, margin: float = 1e-7):
    """(gamma, controller state space) for the Pade-approximated problem.

    The controller is the central one at gamma * (1 + margin); as margin
    shrinks it converges to the optimal finite-dimensional controller.
    """
    gp = mixed_sensitivity_plant(plant_pade_ss(P, order), w.W1, w.W2,
                                 reg=reg)
    from .synthesis import gamma_lower_bound
    lo = max(gamma_lower_bound(w) * 0.5, 1e-9)
    gamma = hinf_bisect(gp, lo, 4.0 * lo + 1.0)
    return gamma, central_controller(gp, gamma * (1.0 + margin))


# ---------------------------------------------------------------------------
# closed-loop checks
# ---------------------------------------------------------------------------

def flatness_check(P: TimeDelayPlant, C, w, grid=None):
    """(max, min, profile) of the two-block cost magnitude on the grid."""
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    jw = 1j * grid
    S = 1.0 / (1.0 + P(jw) * C(jw))
    if not np.all(np.isfinite(S)):
        raise NumericalError("closed loop is not well posed on the grid")
    profile = np.sqrt(np.abs(w.W1(jw) * S) ** 2
                      + np.abs(w.W2(jw) * (1.0 - S)) ** 2)
    return float(profile.max()), float(profile.min()), profile


def stability_check(P: TimeDelayPlant, C, rhp_pole_count: int,
                    x_min: float = 1e-9, box: float = 64.0) -> bool:
    """Closed-loop stability by the argument principle.

    Counts encirclements of the origin by 1 + P C over an expanding RHP
    rectangle; the loop is stable when the winding equals minus the open
    RHP pole count of P*C (given by the caller, multiplicity included).
    """
    def f(s):
        return 1.0 + P(s) * C(s)

    b, om = box, box
    counts = []
    for _ in range(8):
        try:
            counts.append(winding_number(f, (x_min, b, -om, om)))
        except ResolutionError:
            return False
        if len(counts) >= 2 and counts[-1] == counts[-2]:
            return counts[-1] + rhp_pole_count == 0
        b *= 2.0
        om *= 2.0
    raise ResolutionError("stability winding did not stabilize")


def closed_loop_step(P: TimeDelayPlant, C, t_end: float, dt: float = 1e-3):
    """Step response of PC/(1+PC) by windowed Fourier inversion.

    The loop transfer is sampled on the imaginary axis and inverted with an
    FFT after removing the DC component analytically; a cosine taper on the
    top half of the band suppresses truncation ripple.  Valid only for a
    stable closed loop (check separately); the first few samples after t=0
    are smoothed over a band-limit width of a few dt.
    """
    if t_end <= 0.0 or dt <= 0.0:
        raise DomainError("t_end and dt must be positive")
    n = 4096
    while n * dt < 8.0 * max(t_end, 1.0):
        n *= 2
    dw = 2.0 * np.pi / (n * dt)
    w = np.arange(1, n // 2 + 1) * dw
    jw = 1j * w
    loop = P(jw) * C(jw)
    T = loop / (1.0 + loop)
    if not np.all(np.isfinite(T)):
        raise NumericalError("closed loop is not well posed on the "
                             "inversion grid")
    s0 = 1j * dw * 1e-3
    loop0 = complex(P(s0) * C(s0))
    T0 = (loop0 / (1.0 + loop0)).real
    H = (T - T0) / jw
    taper = np.ones_like(w)
    top = w >= w[-1] / 2.0
    taper[top] = np.cos(np.pi * (w[top] - w[-1] / 2.0) / w[-1]) ** 2
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[1:] = H * taper
    spec[0] = spec[1].real
    y = T0 + np.fft.irfft(spec, n) / dt
    t = np.arange(n) * dt
    keep = t <= t_end * (1.0 + 1e-12)
    return t[keep], y[keep]


def cross_validate_gamma(gamma_main: float, gamma_oracle: float,
                         tol: float = 0.01, hard: float = 0.05) -> bool:
    """True when the synthesized and oracle costs agree within tol;
    raises when the gap exceeds the hard limit."""
    gap = abs(gamma_main - gamma_oracle) / max(abs(gamma_oracle), 1e-12)
    if gap > hard:
        raise OracleMismatchError(
            f"cost {gamma_main:.6f} vs oracle {gamma_oracle:.6f} "
            f"({100 * gap:.2f}% apart)")
    return gap <= tol
