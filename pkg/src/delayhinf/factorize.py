"""RHP zero location for delay sums and inner/outer plant factorizations.

A plant P = R/T is rewritten as P = m_n N_o / m_d (hat orientation) or
P = m_d N_o / m_n (tilde orientation) with m_n inner containing all RHP
zeros, m_d a finite Blaschke product containing all RHP poles, and N_o
outer.  The supported families are FF, IF and FI (the latter only with
zero smallest delays), plus the two mixed displays built from a user
supplied F/I split of one side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .classify import analyze, plant_type
from .delaysum import A2_GRID, DelaySum, TimeDelayPlant, conjugate
from .errors import DomainError, NumericalError, UnsupportedPlantError
from .rational import InnerRational, cluster_points
from .winding import find_zeros, stable_rhp_count


# ---------------------------------------------------------------------------
# RHP zeros of a delay sum
# ---------------------------------------------------------------------------

def _qp_derivative_eval(qp):
    """Callable for d/ds of a quasipolynomial sum p_i(s) e^{-h_i s}."""
    terms = [(float(h), p.derivative() + p * (-float(h))) for h, p in qp.terms]

    def fprime(s):
        return sum(p(s) * np.exp(-h * s) for h, p in terms)

    return fprime


def rhp_zeros(X: DelaySum, tol=1e-10, x_min=1e-9):
    """Open-RHP zeros of a delay sum, as [(zero, multiplicity)].

    X is cleared to a quasipolynomial over its stable common denominator,
    the search box is doubled until the winding count stabilizes, then each
    zero is pinned down by subdivision plus Newton refinement.
    """
    qp, _ = X.common_denominator()
    f = qp.__call__
    fp = _qp_derivative_eval(qp)
    count, box = stable_rhp_count(f, x0=x_min)
    if count == 0:
        return []
    x0, x1, y0, y1 = box
    edge = np.concatenate([
        x0 + (x1 - x0) * np.linspace(0, 1, 25) + 1j * y0,
        x0 + (x1 - x0) * np.linspace(0, 1, 25) + 1j * y1,
        x0 + 1j * np.linspace(y0, y1, 25),
        x1 + 1j * np.linspace(y0, y1, 25),
    ])
    scale = max(float(np.max(np.abs(f(edge)))), 1e-6)
    zeros = find_zeros(f, fp, box, scale=scale, tol=tol)
    if len(zeros) != count:
        raise NumericalError(
            f"located {len(zeros)} RHP zeros but the winding count is {count}")
    out = []
    for z, m in cluster_points(zeros, tol=1e-6):
        if m > 1:
            # modified Newton (step scaled by the multiplicity) restores
            # quadratic convergence at a repeated zero
            for _ in range(60):
                fz = f(z)
                fpz = fp(z)
                if fpz == 0:
                    break
                step = m * fz / fpz
                z = z - step
                if abs(step) < 1e-13 * (1.0 + abs(z)):
                    break
        if abs(z.imag) < 1e-7 * (1.0 + abs(z)):
            z = complex(z.real, 0.0)
        out.append((z, m))
    return out


def rhp_zero_list(X: DelaySum, **kw):
    """Open-RHP zeros repeated by multiplicity."""
    out = []
    for z, m in rhp_zeros(X, **kw):
        out.extend([z] * m)
    return out


def blaschke_of(X: DelaySum, **kw):
    """Finite Blaschke product carrying the RHP zeros of X."""
    return InnerRational(rhp_zero_list(X, **kw))


# ---------------------------------------------------------------------------
# evaluable products of structural factors
# ---------------------------------------------------------------------------

class FreqProduct:
    """Product of pointwise-evaluable factors with exponents +-1."""

    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = tuple((obj, int(e)) for obj, e in factors)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.ones(s.shape, dtype=complex)
        for obj, e in self.factors:
            v = obj(s)
            out = out * v if e > 0 else out / v
        return out if out.shape else complex(out)

    def __mul__(self, other):
        if isinstance(other, FreqProduct):
            return FreqProduct(self.factors + other.factors)
        return FreqProduct(self.factors + ((other, 1),))

    def inv(self):
        return FreqProduct(tuple((obj, -e) for obj, e in self.factors))

    def __repr__(self):
        return f"FreqProduct({len(self.factors)} factors)"


class DelayFactor:
    """Pure exponential e^{-theta s}."""

    __slots__ = ("theta",)

    def __init__(self, theta):
        th = float(theta)
        if th < 0:
            raise DomainError("delay factor exponent must be nonnegative")
        self.theta = th

    def __call__(self, s):
        return np.exp(-self.theta * np.asarray(s, dtype=complex))

    def __repr__(self):
        return f"DelayFactor({self.theta})"


# ---------------------------------------------------------------------------
# factorizations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantFactorization:
    """Inner/outer decomposition of a plant.

    ``orientation`` is "hat" (P = m_n N_o / m_d) or "tilde"
    (P = m_d N_o / m_n).  ``parts`` keeps the named ingredients needed for
    controller assembly (conjugates, shifted delay sums, Blaschke factors).
    """

    tag: str
    orientation: str
    m_n: FreqProduct
    m_d: InnerRational
    N_o: FreqProduct
    parts: dict = field(default_factory=dict)

    def reconstruct(self, s):
        if self.orientation == "hat":
            return self.m_n(s) * self.N_o(s) / self.m_d(s)
        return self.m_d(s) * self.N_o(s) / self.m_n(s)


def _factorize_IF(P: TimeDelayPlant):
    R, T = P.numerator, P.denominator
    h1, tau1 = R.min_delay, T.min_delay
    Rbar = conjugate(R)
    M_Rbar = blaschke_of(Rbar)
    M_T = blaschke_of(T)
    R_shift = R.shift_delays(h1)
    T_shift = T.shift_delays(tau1)
    m_n = FreqProduct([
        (DelayFactor(h1 - tau1), 1),
        (M_Rbar, 1),
        (R_shift, 1),
        (Rbar, -1),
    ])
    N_o = FreqProduct([
        (Rbar, 1),
        (M_Rbar, -1),
        (M_T, 1),
        (T_shift, -1),
    ])
    parts = dict(Rbar=Rbar, M_Rbar=M_Rbar, M_T=M_T, R_shift=R_shift,
                 T_shift=T_shift, h1=h1, tau1=tau1)
    return PlantFactorization("IF", "hat", m_n, M_T, N_o, parts)


def _factorize_FI(P: TimeDelayPlant):
    R, T = P.numerator, P.denominator
    if R.min_delay != 0 or T.min_delay != 0:
        raise UnsupportedPlantError(
            "FI factorization requires zero smallest delays",
            diagnostic="FI-delays")
    Tbar = conjugate(T)
    M_Tbar = blaschke_of(Tbar)
    M_R = blaschke_of(R)
    m_n = FreqProduct([
        (M_Tbar, 1),
        (T, 1),
        (Tbar, -1),
    ])
    N_o = FreqProduct([
        (R, 1),
        (M_R, -1),
        (M_Tbar, 1),
        (Tbar, -1),
    ])
    parts = dict(Tbar=Tbar, M_Tbar=M_Tbar, M_R=M_R,
                 h1=Fraction(0), tau1=Fraction(0))
    return PlantFactorization("FI", "tilde", m_n, M_R, N_o, parts)


def _factorize_FF(P: TimeDelayPlant):
    R, T = P.numerator, P.denominator
    h1, tau1 = R.min_delay, T.min_delay
    M_R = blaschke_of(R)
    M_T = blaschke_of(T)
    R_shift = R.shift_delays(h1)
    T_shift = T.shift_delays(tau1)
    m_n = FreqProduct([
        (DelayFactor(h1 - tau1), 1),
        (M_R, 1),
    ])
    N_o = FreqProduct([
        (R_shift, 1),
        (M_R, -1),
        (M_T, 1),
        (T_shift, -1),
    ])
    parts = dict(M_R=M_R, M_T=M_T, R_shift=R_shift, T_shift=T_shift,
                 h1=h1, tau1=tau1)
    return PlantFactorization("FF", "hat", m_n, M_T, N_o, parts)


def factorize(P: TimeDelayPlant):
    """Dispatch on the plant family; raises with a named diagnostic when
    neither side admits the decomposition."""
    pt = plant_type(P)
    if pt.tag == "FF":
        return _factorize_FF(P)
    if pt.tag == "IF":
        return _factorize_IF(P)
    if pt.tag == "FI":
        return _factorize_FI(P)
    raise UnsupportedPlantError(pt.diagnostic, diagnostic="corollary-3"
                                if "corollary-3" in pt.diagnostic
                                else "FI-delays")


def _check_split(whole: DelaySum, f_part: DelaySum, i_part: DelaySum, grid):
    prod = f_part * i_part
    lhs = whole(1j * grid)
    rhs = prod(1j * grid)
    err = np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(lhs)), 1e-12)
    if err > 1e-8:
        raise DomainError(f"F/I split does not multiply back (residual {err:.3e})")
    if not analyze(f_part).is_F:
        raise DomainError("claimed F factor fails the finite-unstable-zeros test")
    if not analyze(i_part).is_I:
        raise DomainError("claimed I factor fails the conjugate test")


def factorize_mixed_numerator(P: TimeDelayPlant, R_F: DelaySum, R_I: DelaySum,
                              grid=None):
    """Hat factorization for R = R_F * R_I with R_F an F- and R_I an
    I-system, and an F denominator."""
    grid = A2_GRID if grid is None else grid
    _check_split(P.numerator, R_F, R_I, grid)
    T = P.denominator
    RbarI = conjugate(R_I)
    M_RF = blaschke_of(R_F)
    M_RbarI = blaschke_of(RbarI)
    M_T = blaschke_of(T)
    m_n = FreqProduct([(M_RF, 1), (M_RbarI, 1), (R_I, 1), (RbarI, -1)])
    N_o = FreqProduct([
        (R_F, 1), (M_RF, -1),
        (RbarI, 1), (M_RbarI, -1),
        (M_T, 1), (T, -1),
    ])
    parts = dict(R_F=R_F, R_I=R_I, RbarI=RbarI, M_RF=M_RF, M_RbarI=M_RbarI,
                 M_T=M_T)
    return PlantFactorization("mixed-numerator", "hat", m_n, M_T, N_o, parts)


def factorize_mixed_denominator(P: TimeDelayPlant, T_F: DelaySum,
                                T_I: DelaySum, grid=None):
    """Tilde factorization for T = T_F * T_I with an F numerator.

    Labeled so the tilde reconstruction P = m_d N_o / m_n holds: the inner
    factor carrying the denominator structure plays the m_n role.
    """
    grid = A2_GRID if grid is None else grid
    _check_split(P.denominator, T_F, T_I, grid)
    R = P.numerator
    TbarI = conjugate(T_I)
    M_TF = blaschke_of(T_F)
    M_TbarI = blaschke_of(TbarI)
    M_R = blaschke_of(R)
    m_n = FreqProduct([(M_TF, 1), (M_TbarI, 1), (T_I, 1), (TbarI, -1)])
    N_o = FreqProduct([
        (R, 1), (M_R, -1),
        (M_TF, 1), (T_F, -1),
        (M_TbarI, 1), (TbarI, -1),
    ])
    parts = dict(T_F=T_F, T_I=T_I, TbarI=TbarI, M_TF=M_TF, M_TbarI=M_TbarI,
                 M_R=M_R)
    return PlantFactorization("mixed-denominator", "tilde", m_n, M_R, N_o,
                              parts)


def verify_factorization(fact: PlantFactorization, P: TimeDelayPlant,
                         grid=None):
    """Grid residuals: reconstruction error and inner-ness of m_n, m_d."""
    grid = A2_GRID if grid is None else grid
    jw = 1j * grid
    pv = P(jw)
    rec = np.max(np.abs(fact.reconstruct(jw) - pv)) / max(
        float(np.max(np.abs(pv))), 1e-12)
    inner_n = float(np.max(np.abs(np.abs(fact.m_n(jw)) - 1.0)))
    inner_d = float(np.max(np.abs(np.abs(fact.m_d(jw)) - 1.0)))
    return {"reconstruction": float(rec), "inner_m_n": inner_n,
            "inner_m_d": inner_d}
