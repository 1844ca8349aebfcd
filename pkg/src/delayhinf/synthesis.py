"""Two-block mixed-sensitivity synthesis: optimal cost search, the E/F/L
data, the K partition, and cancellation-free controller assembly.

With y = m_n F L the weighted two-block cost is flat at level gamma exactly
when |y|^2 equals the rational profile rho_gamma on the axis; F is the outer
spectral factor of that profile, L carries the interpolation conditions
that make the controller analytic at the RHP zeros of E*m_d, and the
feasibility of a given gamma is decided by a winding count of
D = 1 + (1+E) y over the right half plane.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .delaysum import A2_GRID, DelaySum, TimeDelayPlant
from .errors import (
    AssumptionViolation,
    DomainError,
    InfeasibleError,
    MismatchError,
    NonOptimalGammaError,
    ResolutionError,
)
from .factorize import PlantFactorization, factorize
from .fir_decomp import FirBlock, phi_decompose
from .rational import (
    InnerRational,
    Polynomial,
    RationalFunction,
    cluster_points,
    poly_roots,
    spectral_factor,
)
from .winding import winding_number

log = logging.getLogger(__name__)

#: real parts this close to zero count as imaginary-axis (excluded from
#: interpolation; axis zeros of the plant itself are already ruled out)
AXIS_TOL = 1e-9


@dataclass(frozen=True)
class Weights:
    """Mixed-sensitivity weight pair; W2 may be improper (polynomial)."""

    W1: RationalFunction
    W2: RationalFunction

    def __post_init__(self):
        for name, w in (("W1", self.W1), ("W2", self.W2)):
            for p in w.poles():
                if p.real >= -AXIS_TOL * (1.0 + abs(p)):
                    raise AssumptionViolation(
                        f"{name} has a non-Hurwitz pole at {p}",
                        diagnostic="weights")
        if self.W1.is_zero:
            raise DomainError("W1 must be nonzero")


@dataclass(frozen=True)
class SynthesisData:
    gamma: float
    E: RationalFunction
    F: RationalFunction
    L: RationalFunction
    K: RationalFunction
    theta_gamma: RationalFunction
    theta_sys: RationalFunction
    sigma: float
    psi: Polynomial
    interpolation_points: tuple  # ((z, multiplicity), ...) merged RHP set


@dataclass(frozen=True)
class ControllerRealization:
    """(num_regular + num_fir)/(den_regular + den_fir)."""

    num_regular: DelaySum
    num_fir: FirBlock
    den_regular: DelaySum
    den_fir: FirBlock
    plant_type: str
    gamma: float

    def num(self, s):
        return self.num_regular(s) + self.num_fir(s)

    def den(self, s):
        return self.den_regular(s) + self.den_fir(s)

    def __call__(self, s):
        return self.num(s) / self.den(s)


# ---------------------------------------------------------------------------
# gamma-dependent data
# ---------------------------------------------------------------------------

def _para(p: Polynomial) -> Polynomial:
    return p * p.flip()


def rho_profile(gamma, w: Weights) -> RationalFunction:
    """Rational para-Hermitian profile with |y(jw)|^2 = rho(jw) at flatness:
    rho = gamma^4 / (gamma^2(|W1|^2+|W2|^2) - |W1|^2 |W2|^2)."""
    g2 = gamma * gamma
    n1, d1 = w.W1.num, w.W1.den
    n2, d2 = w.W2.num, w.W2.den
    num = _para(d1) * _para(d2) * (g2 * g2)
    den = (_para(n1) * _para(d2) * g2
           + _para(n2) * (_para(d1) * g2 - _para(n1)))
    return RationalFunction(num, den, reduce=False)


def gamma_lower_bound(w: Weights, grid=None) -> float:
    """gamma_inf = max_w |W1 W2| / sqrt(|W1|^2 + |W2|^2); rho is positive
    exactly above this level."""
    grid = A2_GRID if grid is None else grid
    jw = 1j * grid
    a = np.abs(w.W1(jw)) ** 2
    b = np.abs(w.W2(jw)) ** 2
    return float(np.sqrt(np.max(a * b / (a + b + 1e-300))))


def e_function(gamma, w: Weights) -> RationalFunction:
    """E = (W1 W1~ - gamma^2)/gamma^2, real on the imaginary axis."""
    g2 = gamma * gamma
    n1, d1 = w.W1.num, w.W1.den
    return RationalFunction(_para(n1) - _para(d1) * g2, _para(d1) * g2,
                            reduce=False)


def _e_rhp_zeros(gamma, w: Weights):
    n1, d1 = w.W1.num, w.W1.den
    e_num = _para(n1) - _para(d1) * (gamma * gamma)
    if e_num.degree <= 0:
        return []
    roots = poly_roots(e_num)
    keep = [z for z in roots if z.real > AXIS_TOL * (1.0 + abs(z))]
    return cluster_points(keep, 1e-7)


def interpolation_set(gamma, w: Weights, m_d: InnerRational):
    """Merged open-RHP zeros of E*m_d with multiplicities added on overlap."""
    merged = {}
    for z, m in list(_e_rhp_zeros(gamma, w)) + list(
            cluster_points(list(m_d.rhp_zeros), 1e-7)):
        for key in list(merged):
            if abs(z - key) <= 1e-6 * (1.0 + abs(z)):
                merged[key] += m
                break
        else:
            merged[complex(z)] = m
    return sorted(merged.items(), key=lambda km: (km[0].real, km[0].imag))


def _taylor_numeric(fun, z, n, r=1e-4):
    """First n Taylor coefficients of an analytic callable at z (FFT on a
    small circle)."""
    k = max(16, 4 * n)
    th = 2.0 * np.pi * np.arange(k) / k
    vals = np.array([fun(z + r * cmath.exp(1j * t)) for t in th])
    coef = np.fft.fft(vals) / k
    return [complex(coef[j]) / r ** j for j in range(n)]


def _poly_taylor_rows(d1: Polynomial, z, nord, deg_psi):
    """Rows A[j][k]: Taylor_j at z of d1(s)*s^k, for k = 0..deg_psi."""
    d1t = [complex(c) for c in _taylor_shift(d1, z, nord)]
    rows = np.zeros((nord, deg_psi + 1), dtype=complex)
    for k in range(deg_psi + 1):
        # Taylor of s^k at z: C(k, b) z^{k-b}
        pk = [math.comb(k, b) * z ** (k - b) if b <= k else 0.0
              for b in range(nord)]
        for j in range(nord):
            rows[j, k] = sum(d1t[a] * pk[j - a] for a in range(j + 1))
    return rows


def _taylor_shift(p: Polynomial, z, n):
    """First n Taylor coefficients of polynomial p at z."""
    out = []
    coeffs = np.asarray(p.coeffs, dtype=complex)
    cur = coeffs.copy()
    fact = 1.0
    for j in range(n):
        if j > 0:
            cur = np.array([cur[i] * i for i in range(1, len(cur))],
                           dtype=complex) if len(cur) > 1 else np.zeros(1,
                           dtype=complex)
            fact *= j
        out.append(complex(np.polynomial.polynomial.polyval(z, cur)) / fact)
    return out


def _interpolation_matrix(zset, c_fun, d1: Polynomial, deg_psi, sigma):
    """Real matrix of the homogeneous conditions
    d^j/ds^j [L1(s) + sigma c(s) L1(-s)] = 0 at each z, L1 = d1*psi."""
    rows = []
    for z, m in zset:
        a_rows = _poly_taylor_rows(d1, z, m, deg_psi)           # L1 at z
        # L1(-s) at z: (-1)^b * Taylor_b of L1 at -z
        b_base = _poly_taylor_rows(d1, -z, m, deg_psi)
        ct = _taylor_numeric(c_fun, z, m)
        b_rows = np.zeros_like(a_rows)
        for j in range(m):
            for a in range(j + 1):
                b_rows[j] += ct[a] * ((-1.0) ** (j - a)) * b_base[j - a]
        block = a_rows + sigma * b_rows
        is_real = abs(z.imag) <= 1e-9 * (1.0 + abs(z))
        for j in range(m):
            if is_real:
                rows.append(block[j].real)
            else:
                rows.append(block[j].real)
                rows.append(block[j].imag)
    return np.array(rows) if rows else np.zeros((0, deg_psi + 1))


def _kernel_psi(mat):
    """(psi coefficients, degeneracy flag) from the SVD kernel of mat."""
    if mat.shape[0] == 0:
        return Polynomial([1.0]), False
    _, svals, vt = np.linalg.svd(mat)
    psi = vt[-1]
    degenerate = len(svals) >= 2 and svals[-2] <= 1e-10 * max(svals[0], 1e-30)
    if abs(psi[np.argmax(np.abs(psi))]) > 0:
        psi = psi / psi[np.argmax(np.abs(psi))]
    return Polynomial(psi), degenerate


def _psi_hurwitz(psi: Polynomial):
    if psi.degree <= 0:
        return not psi.is_zero
    return all(r.real < -AXIS_TOL * (1.0 + abs(r)) for r in poly_roots(psi))


def _zero_confinement_radius(G: RationalFunction, margin=1e-9,
                             rho0=8.0, rho_max=2.0 ** 18):
    """Smallest tested semicircle radius outside which |G| < 1 - margin in
    the closed RHP (None when |G| stays at or above 1 out to infinity)."""
    if G.relative_degree > 0:
        ginf = 0.0
    else:
        ginf = abs(G.num.leading / G.den.leading)
    if ginf >= 1.0 - margin:
        return None
    th = np.linspace(-np.pi / 2, np.pi / 2, 181)
    rho = rho0
    while rho <= rho_max:
        arc = np.max(np.abs(G(rho * np.exp(1j * th))))
        tail = np.max(np.abs(G(1j * np.logspace(np.log10(rho),
                                                np.log10(rho) + 3, 120))))
        if max(arc, tail) < 1.0 - margin:
            return rho
        rho *= 2.0
    return None


# ---------------------------------------------------------------------------
# feasibility probe and optimal cost
# ---------------------------------------------------------------------------

def compute_EFL(gamma, fact: PlantFactorization, w: Weights) -> SynthesisData:
    """E, F, L and the partitioned K at a given cost level.

    Raises InfeasibleError when rho is not positive, NonOptimalGammaError
    when the interpolation kernel is degenerate or no sign choice yields a
    Hurwitz interpolant with the right closed-loop winding.
    """
    rho = rho_profile(gamma, w)
    F = spectral_factor(rho)
    E = e_function(gamma, w)
    m_d = fact.m_d
    zset = interpolation_set(gamma, w, m_d)
    # one representative per conjugate pair; its real/imag rows carry the
    # conjugate condition implicitly (real psi)
    reps = [(z, m) for z, m in zset if z.imag >= -1e-9 * (1.0 + abs(z))]
    deg_psi = sum((1 if abs(z.imag) <= 1e-9 * (1.0 + abs(z)) else 2) * m
                  for z, m in reps)
    d1 = w.W1.den

    def c_fun(s):
        return fact.m_n(s) * F(s)

    expected = sum(m for z, m in _e_rhp_zeros(gamma, w))
    last_reason = "no sign choice admits an admissible interpolant"
    cands = []
    for sigma in (1.0, -1.0):
        mat = _interpolation_matrix(reps, c_fun, d1, deg_psi, sigma)
        psi, degenerate = _kernel_psi(mat)
        if degenerate:
            raise NonOptimalGammaError(
                "interpolation kernel is degenerate at this gamma")
        if psi.is_zero:
            continue
        roots = poly_roots(psi) if psi.degree > 0 else []
        if any(abs(r.real) <= AXIS_TOL * (1.0 + abs(r)) for r in roots):
            last_reason = "interpolant has an imaginary-axis root"
            continue
        # RHP roots of psi are poles of y that cancel in S = (1+y)/D and in
        # the controller quotient; they only shift the winding census below
        psi_rhp = [r for r in roots if r.real > AXIS_TOL * (1.0 + abs(r))]
        reach = max((abs(r) for r in psi_rhp), default=0.0)
        cands.append((reach, sigma, psi, psi_rhp))
    # prefer the sign whose y-poles sit in the smaller search box
    for reach, sigma, psi, psi_rhp in sorted(cands, key=lambda t: t[0]):
        L1 = d1 * psi
        L = RationalFunction(L1.flip() * sigma, L1, reduce=False)
        # G = (1+E) F L is RHP-analytic after the d1(-s) cancellation except
        # at the psi poles, and |m_n| <= 1, so zeros of D = 1 + G m_n need
        # |G| >= 1; a semicircle with |G| < 1 on and beyond it bounds the
        # search box (it necessarily encloses every pole of G).
        G = (RationalFunction.const(1.0) + E) * F * L
        bad = [p for p in G.poles()
               if p.real > -AXIS_TOL * (1.0 + abs(p))
               and not any(abs(p - r) <= 1e-6 * (1.0 + abs(p))
                           for r in psi_rhp)]
        if bad:
            last_reason = f"mirror-pole cancellation failed near {bad[0]}"
            continue
        # the semicircle must enclose every pole of G: beyond a pole |G| is
        # locally large, so zeros of D could hide next to an excluded pole
        radius = _zero_confinement_radius(G, rho0=max(8.0, 2.0 * reach))
        if radius is None:
            last_reason = "|(1+E)FL| does not drop below 1 at infinity"
            continue

        def d_fun(s, _L=L):
            y = fact.m_n(s) * F(s) * _L(s)
            return 1.0 + (1.0 + E(s)) * y

        try:
            count = winding_number(d_fun,
                                   (AXIS_TOL, radius, -radius, radius))
        except ResolutionError as exc:
            last_reason = f"winding did not resolve: {exc}"
            continue
        # winding counts zeros minus the y-poles enclosed by the box
        poles_in = sum(1 for r in psi_rhp
                       if r.real < radius and abs(r.imag) < radius)
        if count != expected - poles_in:
            last_reason = (f"closed-loop winding {count} != expected "
                           f"{expected - poles_in}")
            continue
        K = E * F * m_d.as_rational() * L
        log.debug("K cancellations: raw degrees (%d/%d)",
                  K.num.degree, K.den.degree)
        theta_gamma = InnerRational(
            [z for z, m in zset for _ in range(m)]).as_rational()
        theta_sys = K / theta_gamma
        return SynthesisData(gamma=float(gamma), E=E, F=F, L=L, K=K,
                             theta_gamma=theta_gamma, theta_sys=theta_sys,
                             sigma=sigma, psi=psi,
                             interpolation_points=tuple(zset))
    raise NonOptimalGammaError(last_reason)


def _feasible(gamma, fact, w):
    try:
        return compute_EFL(gamma, fact, w)
    except (InfeasibleError, NonOptimalGammaError, ResolutionError):
        return None


def gamma_opt(fact: PlantFactorization, w: Weights, hint=None,
              rel_tol=1e-6, max_iter=80):
    """Smallest feasible cost by bisection.

    ``hint`` (e.g. from the finite-dimensional oracle) seeds the upper
    bracket; otherwise the bracket is grown by doubling.
    """
    lo = max(gamma_lower_bound(w), 1e-9) * (1.0 + 1e-9)
    hi = None
    start = hint * 1.02 if hint else max(2.0 * lo, 1.0)
    g = start
    for _ in range(60):
        if _feasible(g, fact, w) is not None:
            hi = g
            break
        g *= 2.0
    if hi is None:
        raise InfeasibleError("no feasible cost found while doubling the "
                              "upper bracket")
    if _feasible(lo, fact, w) is not None:
        return lo
    for _ in range(max_iter):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if _feasible(mid, fact, w) is not None:
            hi = mid
        else:
            lo = mid
    return hi


def partition_K(K: RationalFunction, m_d: InnerRational, E: RationalFunction,
                tol=1e-6):
    """K = theta_gamma * theta_sys with theta_gamma biproper carrying the
    RHP zeros of E*m_d; census-checked against K itself."""
    zset = []
    for z, m in cluster_points(list(m_d.rhp_zeros), 1e-7):
        zset.extend([(z, m)])
    e_zeros = [(z, m) for z, m in cluster_points(
        [r for r in (E.zeros() if not E.is_zero else [])
         if r.real > AXIS_TOL * (1.0 + abs(r))], 1e-7)]
    merged = {}
    for z, m in zset + e_zeros:
        for key in list(merged):
            if abs(z - key) <= 1e-6 * (1.0 + abs(z)):
                merged[key] += m
                break
        else:
            merged[complex(z)] = m
    scale = max(abs(K(1.0)), abs(K(2.0)), 1e-12)
    for z in merged:
        if abs(K(z)) > tol * scale:
            raise MismatchError(
                f"K does not vanish at the claimed partition zero {z}")
    theta_gamma = InnerRational(
        [z for z, m in merged.items() for _ in range(m)]).as_rational()
    return theta_gamma, K / theta_gamma


# ---------------------------------------------------------------------------
# controller assembly
# ---------------------------------------------------------------------------

def _hat_assembly(fact, syn, X_sys: DelaySum, m_sys: InnerRational,
                  bar_or_shifted_num: DelaySum, m_num_bar: InnerRational,
                  den2_sum: DelaySum):
    """Shared IF/FF pipeline.

    numerator  = Phi(X_sys * theta_sys, m_sys)
    denominator= Phi(bar_or_shifted_num, m_num_bar * theta_gamma)
               + Phi(den2_sum, theta_gamma)
    """
    theta_g = syn.theta_gamma
    num = phi_decompose(X_sys.scale_coeffs(syn.theta_sys, check=False),
                        m_sys.as_rational())
    den1 = phi_decompose(bar_or_shifted_num,
                         m_num_bar.as_rational() * theta_g)
    den2 = phi_decompose(den2_sum, theta_g)
    den_regular = den1.regular + den2.regular
    den_fir = den1.fir.merge(den2.fir)
    return num, den_regular, den_fir


def assemble_IF(fact: PlantFactorization, syn: SynthesisData,
                P: TimeDelayPlant) -> ControllerRealization:
    """Cancellation-free IF controller (H_T + F_T)/(H_g + F_g)."""
    parts = fact.parts
    tau1 = parts["tau1"]
    FL = syn.F * syn.L
    den2_sum = P.numerator.shift_delays(tau1).scale_coeffs(FL, check=False)
    num, den_regular, den_fir = _hat_assembly(
        fact, syn,
        X_sys=parts["T_shift"], m_sys=parts["M_T"],
        bar_or_shifted_num=parts["Rbar"], m_num_bar=parts["M_Rbar"],
        den2_sum=den2_sum)
    return ControllerRealization(num.regular, num.fir, den_regular, den_fir,
                                 "IF", syn.gamma)


def assemble_FF(fact: PlantFactorization, syn: SynthesisData,
                P: TimeDelayPlant) -> ControllerRealization:
    """Cancellation-free FF controller; same shape as the IF case with the
    finite Blaschke factor of the numerator in place of the conjugate."""
    parts = fact.parts
    tau1 = parts["tau1"]
    FL = syn.F * syn.L
    den2_sum = P.numerator.shift_delays(tau1).scale_coeffs(FL, check=False)
    num, den_regular, den_fir = _hat_assembly(
        fact, syn,
        X_sys=parts["T_shift"], m_sys=parts["M_T"],
        bar_or_shifted_num=parts["R_shift"], m_num_bar=parts["M_R"],
        den2_sum=den2_sum)
    return ControllerRealization(num.regular, num.fir, den_regular, den_fir,
                                 "FF", syn.gamma)


def assemble_FI(fact: PlantFactorization, syn: SynthesisData,
                P: TimeDelayPlant) -> ControllerRealization:
    """FI controller: the IF pipeline on the reciprocal data, with the
    resulting numerator and denominator roles swapped (the displayed
    quotient is the controller inverse)."""
    parts = fact.parts
    FL = syn.F * syn.L
    den2_sum = P.denominator.scale_coeffs(FL, check=False)
    num, den_regular, den_fir = _hat_assembly(
        fact, syn,
        X_sys=P.numerator, m_sys=parts["M_R"],
        bar_or_shifted_num=parts["Tbar"], m_num_bar=parts["M_Tbar"],
        den2_sum=den2_sum)
    # inverse quotient: the Phi blocks above form C^{-1}
    return ControllerRealization(den_regular, den_fir, num.regular, num.fir,
                                 "FI", syn.gamma)


def assemble(fact: PlantFactorization, syn: SynthesisData,
             P: TimeDelayPlant) -> ControllerRealization:
    if fact.tag == "IF":
        return assemble_IF(fact, syn, P)
    if fact.tag == "FF":
        return assemble_FF(fact, syn, P)
    if fact.tag == "FI":
        return assemble_FI(fact, syn, P)
    raise DomainError(f"no assembly rule for factorization tag {fact.tag}")


def synthesize(P: TimeDelayPlant, w: Weights, hint=None, rel_tol=1e-6):
    """Full pipeline: factorize, find the optimal cost, assemble.

    Returns (factorization, synthesis data, controller realization).
    """
    fact = factorize(P)
    g = gamma_opt(fact, w, hint=hint, rel_tol=rel_tol)
    syn = compute_EFL(g, fact, w)
    ctrl = assemble(fact, syn, P)
    return fact, syn, ctrl
