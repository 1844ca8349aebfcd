"""Delay sums R(s) = sum_i R_i(s) e^{-h_i s}, plant normalization,
the conjugate operator, delay state-space ingestion and time responses.

Delays are exact rationals (fractions.Fraction) so commensuration is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npp
import scipy.optimize
from scipy import signal

from .errors import (
    AssumptionViolation,
    DegenerateInputError,
    DomainError,
    NumericalError,
)
from .rational import (
    DEFAULT_TOL,
    Polynomial,
    RationalFunction,
    _pair_conjugates,
    cluster_points,
)

#: default A.2 verification grid (rad/s)
A2_GRID = np.logspace(-3, 4, 1000)
#: minimum |R(jw)|, |T(jw)| on the grid for A.2 to be declared satisfied
A2_MIN = 1e-6


def as_fraction(x):
    """Exact rational delay from int/str/Fraction/decimal-float input."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"delay {x} is not finite")
        # decimal representation is treated as exact (0.4 -> 2/5)
        return Fraction(repr(x))
    raise DomainError(f"cannot interpret {x!r} as a rational delay")


# ---------------------------------------------------------------------------
# quasipolynomials: sum of polynomial * e^{-h s}
# ---------------------------------------------------------------------------

class QuasiPolynomial:
    """Finite sum of real polynomials times delay exponentials."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        merged = {}
        for h, p in terms:
            h = as_fraction(h)
            if h < 0:
                raise DomainError("negative delay in quasipolynomial")
            if not isinstance(p, Polynomial):
                p = Polynomial(p)
            if h in merged:
                merged[h] = merged[h] + p
            else:
                merged[h] = p
        clean = [(h, p) for h, p in sorted(merged.items()) if not p.is_zero]
        object.__setattr__(self, "terms", tuple(clean))

    def __setattr__(self, *a):
        raise AttributeError("QuasiPolynomial is immutable")

    @property
    def is_zero(self):
        return not self.terms

    @classmethod
    def const(cls, c):
        return cls([(Fraction(0), Polynomial([float(c)]))])

    def __add__(self, other):
        return QuasiPolynomial(list(self.terms) + list(other.terms))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, QuasiPolynomial):
            out = []
            for h1, p1 in self.terms:
                for h2, p2 in other.terms:
                    out.append((h1 + h2, p1 * p2))
            return QuasiPolynomial(out)
        if isinstance(other, Polynomial):
            return QuasiPolynomial([(h, p * other) for h, p in self.terms])
        return QuasiPolynomial([(h, p * float(other)) for h, p in self.terms])

    __rmul__ = __mul__

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros(s.shape, dtype=complex)
        for h, p in self.terms:
            out = out + p(s) * np.exp(-float(h) * s)
        return out if out.shape else complex(out)

    def max_degree(self):
        return max((p.degree for _, p in self.terms), default=0)

    def __repr__(self):
        return f"QuasiPolynomial({[(str(h), list(p.coeffs)) for h, p in self.terms]})"


def _qp_det(m):
    """Determinant of a square matrix of QuasiPolynomials (Laplace expansion)."""
    n = len(m)
    if n == 1:
        return m[0][0]
    acc = QuasiPolynomial()
    for i in range(n):
        if m[i][0].is_zero:
            continue
        minor = [[m[r][c] for c in range(1, n)] for r in range(n) if r != i]
        term = m[i][0] * _qp_det(minor)
        acc = acc + ((-1.0) ** i) * term
    return acc


# ---------------------------------------------------------------------------
# delay sums
# ---------------------------------------------------------------------------

class DelaySum:
    """sum_i R_i(s) e^{-h_i s} with stable proper rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms, check=True, tol=DEFAULT_TOL):
        merged = {}
        for coeff, h in terms:
            h = as_fraction(h)
            if h < 0:
                raise DomainError("negative delay in DelaySum")
            if not isinstance(coeff, RationalFunction):
                coeff = RationalFunction.const(coeff)
            if h in merged:
                merged[h] = merged[h] + coeff
            else:
                merged[h] = coeff
        clean = [(c, h) for h, c in sorted(merged.items()) if not c.is_zero]
        if not clean:
            clean = [(RationalFunction.zero(), Fraction(0))]
        if check:
            for c, h in clean:
                if not c.is_proper:
                    raise DomainError(f"coefficient at delay {h} is improper")
                for p in c.poles():
                    if p.real >= -1e-9 * (1.0 + abs(p)):
                        raise DomainError(
                            f"coefficient at delay {h} has an unstable pole {p}"
                        )
        object.__setattr__(self, "terms", tuple(clean))

    def __setattr__(self, *a):
        raise AttributeError("DelaySum is immutable")

    @property
    def delays(self):
        return [h for _, h in self.terms]

    @property
    def coeffs(self):
        return [c for c, _ in self.terms]

    @property
    def n_terms(self):
        return len(self.terms)

    @property
    def max_delay(self):
        return self.terms[-1][1]

    @property
    def min_delay(self):
        return self.terms[0][1]

    @property
    def is_zero(self):
        return self.n_terms == 1 and self.terms[0][0].is_zero

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros(s.shape, dtype=complex)
        for c, h in self.terms:
            out = out + c(s) * np.exp(-float(h) * s)
        return out if out.shape else complex(out)

    def evaluate(self, s):
        return self(s)

    def scale_coeffs(self, r, check=True):
        """Multiply every coefficient by a rational function (or scalar)."""
        return DelaySum([(c * r, h) for c, h in self.terms], check=check)

    def shift_delays(self, dh):
        """Subtract dh from every delay; all results must stay nonnegative.

        Implements the brace operator {e^{dh s} X} as delay subtraction.
        """
        dh = as_fraction(dh)
        return DelaySum([(c, h - dh) for c, h in self.terms], check=False)

    def __add__(self, other):
        if isinstance(other, DelaySum):
            return DelaySum(list(self.terms) + list(other.terms), check=False)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, DelaySum):
            out = []
            for c1, h1 in self.terms:
                for c2, h2 in other.terms:
                    out.append((c1 * c2, h1 + h2))
            return DelaySum(out, check=False)
        return self.scale_coeffs(other, check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale_coeffs(-1.0, check=False)

    def common_denominator(self):
        """(quasipolynomial numerator, common stable denominator polynomial).

        X(s) = Q(s)/d(s) with Q a quasipolynomial and d the least common
        denominator of the coefficients (root-cluster based).
        """
        roots = []
        for z, m in self.pole_clusters():
            roots.extend([z] * m)
        d = Polynomial.from_roots(_pair_conjugates(roots)) if roots else Polynomial.one()
        qterms = []
        for c, h in self.terms:
            quo, rem = npp.polydiv(d.coeffs, c.den.coeffs)
            if np.max(np.abs(rem)) > 1e-6 * max(1.0, np.max(np.abs(d.coeffs))):
                raise NumericalError("common denominator division inexact")
            qterms.append((h, c.num * Polynomial(quo)))
        return QuasiPolynomial(qterms), d

    def pole_clusters(self, tol=1e-6):
        """Distinct poles across all coefficients with max multiplicity."""
        agg = {}
        for c, _ in self.terms:
            for z, m in cluster_points(c.poles(), tol):
                for key in list(agg):
                    if abs(z - key) <= tol * (1.0 + abs(z)):
                        agg[key] = max(agg[key], m)
                        break
                else:
                    agg[z] = m
        return sorted(agg.items(), key=lambda km: (km[0].real, km[0].imag))

    def relative_degrees(self):
        return [c.relative_degree for c, _ in self.terms]

    def __repr__(self):
        inner = ", ".join(f"({c!r})*e^-{h}s" for c, h in self.terms)
        return f"DelaySum[{inner}]"


def evaluate(X, s):
    """Evaluate a DelaySum (module-level convenience wrapper)."""
    return X(s)


def conjugate(R):
    """Conjugate system: e^{-h_n s} R(-s) M_C(s), sign-normalized.

    M_C is the inner function whose poles are the poles of R (so the
    conjugate has stable proper coefficients).  The overall sign is chosen
    so the lowest-delay coefficient has a positive leading numerator
    coefficient; classification verdicts and zero sets are sign-invariant.
    """
    if R.is_zero:
        raise DegenerateInputError("conjugate of the zero system")
    h_n = R.max_delay
    roots = []
    for z, m in R.pole_clusters():
        roots.extend([z] * m)
    d = Polynomial.from_roots(_pair_conjugates(roots)) if roots else Polynomial.one()
    # c.flip() * M_C = c.num.flip() * (d / c.den).flip() / d; the division
    # is exact by construction of d (root-matching cancellation is too
    # fragile for the repeated roots of the normalized base denominator)
    terms = []
    for c, h in R.terms:
        quo, rem = npp.polydiv(d.coeffs, c.den.coeffs)
        if np.max(np.abs(rem)) > 1e-9 * max(1.0, float(np.max(np.abs(d.coeffs)))):
            raise NumericalError("conjugate pole division inexact")
        coeff = RationalFunction(c.num.flip() * Polynomial(quo).flip(), d,
                                 reduce=False)
        terms.append((coeff, h_n - h))
    out = DelaySum(terms, check=True)
    lead = out.terms[0][0].num.leading
    if lead < 0:
        out = DelaySum([(-c, h) for c, h in out.terms], check=False)
    return out


# ---------------------------------------------------------------------------
# plants
# ---------------------------------------------------------------------------

class TimeDelayPlant:
    """Normalized plant P = R/T with quasipolynomial provenance."""

    __slots__ = ("numerator", "denominator", "raw_numerator", "raw_denominator",
                 "_cache")

    def __init__(self, numerator, denominator, raw_numerator=None,
                 raw_denominator=None):
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "denominator", denominator)
        object.__setattr__(self, "raw_numerator", raw_numerator)
        object.__setattr__(self, "raw_denominator", raw_denominator)
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, *a):
        raise AttributeError("TimeDelayPlant is immutable")

    def __call__(self, s):
        return self.numerator(s) / self.denominator(s)

    def reciprocal(self):
        """The plant 1/P (used for FI duality)."""
        return TimeDelayPlant(self.denominator, self.numerator,
                              self.raw_denominator, self.raw_numerator)

    def __repr__(self):
        return f"TimeDelayPlant(R={self.numerator!r}, T={self.denominator!r})"


def _check_a1(num_qp, den_qp):
    """Assumption A.1 checks on raw quasipolynomial term lists."""
    if num_qp.is_zero or den_qp.is_zero:
        raise DegenerateInputError("plant numerator/denominator is zero")
    h = [t[0] for t in num_qp.terms]
    tau = [t[0] for t in den_qp.terms]
    if h[0] < tau[0]:
        raise AssumptionViolation(
            f"A.1(b): h_1 = {h[0]} < tau_1 = {tau[0]}", diagnostic="A.1(b)")
    # largest-degree polynomials (smallest index on ties)
    num_degs = [p.degree for _, p in num_qp.terms]
    den_degs = [p.degree for _, p in den_qp.terms]
    i_max = int(np.argmax(num_degs))
    j_max = int(np.argmax(den_degs))
    if num_degs[i_max] > den_degs[j_max]:
        raise AssumptionViolation(
            f"A.1(c): deg r_p,imax = {num_degs[i_max]} > deg t_p,jmax = "
            f"{den_degs[j_max]}", diagnostic="A.1(c)")
    if h[i_max] < tau[j_max]:
        raise AssumptionViolation(
            f"A.1(c): h_imax = {h[i_max]} < tau_jmax = {tau[j_max]}",
            diagnostic="A.1(c)")
    return den_degs[j_max]


def _check_a2(R, T, grid=None):
    grid = A2_GRID if grid is None else grid
    for name, X in (("zeros", R), ("poles", T)):
        vals = np.abs(X(1j * grid))
        # polish every local minimum of |X(jw)| (and w = 0) so that axis
        # zeros falling between grid points are still detected
        wmin, vmin = 0.0, float(abs(X(0.0 + 0.0j)))
        interior = np.where((vals[1:-1] <= vals[:-2])
                            & (vals[1:-1] <= vals[2:]))[0] + 1
        interior = interior[np.argsort(vals[interior])][:8]
        for i in interior:
            res = scipy.optimize.minimize_scalar(
                lambda w: float(np.abs(X(1j * w))),
                bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                options={"xatol": 1e-12 * grid[i]})
            if res.fun < vmin:
                wmin, vmin = float(res.x), float(res.fun)
        if vmin < A2_MIN:
            raise AssumptionViolation(
                f"A.2: plant has imaginary-axis {name} near w = {wmin:.6g} "
                f"(|.| = {vmin:.3e})", diagnostic="A.2")


def _coerce_qp(raw):
    if isinstance(raw, QuasiPolynomial):
        return raw
    return QuasiPolynomial([(h, p) for h, p in raw])


def normalize_plant(raw_num, raw_den, grid=None):
    """Normalize a quasipolynomial plant ratio into stable proper form.

    Divides every polynomial by (s+1)^k with k the largest denominator
    polynomial degree, then verifies A.1 and A.2.
    """
    num_qp = _coerce_qp(raw_num)
    den_qp = _coerce_qp(raw_den)
    k = _check_a1(num_qp, den_qp)
    base = Polynomial.one()
    for _ in range(k):
        base = base * Polynomial([1.0, 1.0])
    R = DelaySum([(RationalFunction(p, base, reduce=False), h)
                  for h, p in num_qp.terms])
    T = DelaySum([(RationalFunction(p, base, reduce=False), h)
                  for h, p in den_qp.terms])
    _check_a2(R, T, grid)
    return TimeDelayPlant(R, T, num_qp, den_qp)


# ---------------------------------------------------------------------------
# delay state-space ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DelayStateSpace:
    """x' = sum A_i x(t-h_Ai) + sum b_j u(t-h_bj);
    y = sum c_k x(t-h_ck) + d u(t-h_d)."""

    a_terms: tuple  # ((delay, (n,n) array), ...)
    b_terms: tuple  # ((delay, (n,) array), ...)
    c_terms: tuple  # ((delay, (n,) array), ...)
    d_terms: tuple = ()  # ((delay, scalar), ...)

    def __post_init__(self):
        def norm(terms, shape_check):
            out = []
            for h, m in terms:
                h = as_fraction(h)
                m = np.asarray(m, dtype=float)
                shape_check(m)
                out.append((h, m))
            out.sort(key=lambda t: t[0])
            return tuple(out)

        n = np.asarray(self.a_terms[0][1]).shape[0]

        def sq(m):
            if m.shape != (n, n):
                raise DomainError("A matrices must be square and consistent")

        def vec(m):
            if m.shape != (n,):
                raise DomainError("b/c vectors must have the state dimension")

        object.__setattr__(self, "a_terms", norm(self.a_terms, sq))
        object.__setattr__(self, "b_terms", norm(self.b_terms, vec))
        object.__setattr__(self, "c_terms", norm(self.c_terms, vec))
        object.__setattr__(
            self, "d_terms",
            tuple((as_fraction(h), float(v)) for h, v in self.d_terms))

    @property
    def n_states(self):
        return np.asarray(self.a_terms[0][1]).shape[0]


def from_delay_state_space(sys, grid=None):
    """Transfer function of a delay state-space model as a TimeDelayPlant.

    P(s) = c(s) adj(sI - A(s)) b(s) / det(sI - A(s)) + d-terms, expanded in
    the quasipolynomial ring and normalized.
    """
    n = sys.n_states
    # sI - A(s) as a QP matrix
    m = [[QuasiPolynomial() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        m[i][i] = QuasiPolynomial([(Fraction(0), Polynomial([0.0, 1.0]))])
    for h, a in sys.a_terms:
        for i in range(n):
            for j in range(n):
                if a[i, j] != 0.0:
                    m[i][j] = m[i][j] + QuasiPolynomial(
                        [(h, Polynomial([-a[i, j]]))])
    det = _qp_det(m)
    # adjugate via cofactors
    adj = [[QuasiPolynomial() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[m[r][c] for c in range(n) if c != j]
                     for r in range(n) if r != i]
            cof = _qp_det(minor) if n > 1 else QuasiPolynomial.const(1.0)
            adj[j][i] = ((-1.0) ** (i + j)) * cof
    # c(s) adj b(s)
    num = QuasiPolynomial()
    for hc, c in sys.c_terms:
        for hb, b in sys.b_terms:
            for i in range(n):
                for j in range(n):
                    if c[i] != 0.0 and b[j] != 0.0:
                        num = num + QuasiPolynomial(
                            [(hc + hb, Polynomial([c[i] * b[j]]))]) * adj[i][j]
    for hd, dv in sys.d_terms:
        if dv != 0.0:
            num = num + QuasiPolynomial([(hd, Polynomial([dv]))]) * det
    return normalize_plant(num, det, grid)


# ---------------------------------------------------------------------------
# time responses
# ---------------------------------------------------------------------------

def _rational_time_modes(r, kind):
    """Residue data for the impulse/step response of a proper rational r.

    Returns (modes, const) with modes = [(pole, order, residue)] such that
    the response is sum residue * t^(order-1)/(order-1)! * e^{pole t}
    plus const (step feedthrough).
    """
    num = r.num.coeffs[::-1]
    den = r.den.coeffs[::-1]
    if kind == "step":
        den = np.polymul(den, [1.0, 0.0])
    res, poles, k = signal.residue(num, den)
    if k is not None and len(np.atleast_1d(k)) > 0 and np.max(np.abs(k)) > 0:
        raise DomainError("impulse response of a biproper term needs a delta")
    modes = []
    order = {}
    for rr, pp in zip(res, poles):
        key = complex(pp)
        hit = None
        for q in order:
            if abs(q - key) < 1e-9 * (1.0 + abs(key)):
                hit = q
                break
        key = hit if hit is not None else key
        order[key] = order.get(key, 0) + 1
        modes.append((key, order[key], complex(rr)))
    return modes


def _modes_eval(modes, t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    pos = t >= 0
    tp = t[pos]
    acc = np.zeros(tp.shape, dtype=complex)
    for p, order, rr in modes:
        acc += rr * tp ** (order - 1) / math.factorial(order - 1) * np.exp(p * tp)
    out[pos] = acc
    return np.real(out)


def time_response(X, t, kind="impulse"):
    """Sampled impulse/step response of a DelaySum (exact modal evaluation).

    Strictly proper coefficients are required for ``kind='impulse'``;
    the response of each term is shifted by its delay.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    for c, h in X.terms:
        if c.is_zero:
            continue
        if kind == "impulse" and not c.is_strictly_proper:
            raise DomainError(
                "impulse response of a biproper coefficient contains a delta")
        modes = _rational_time_modes(c, kind)
        out = out + _modes_eval(modes, t - float(h))
    return out


def _delay_to_samples(h, dt):
    k = float(h) / dt
    ki = int(round(k))
    if abs(k - ki) > 1e-9:
        raise NumericalError(f"step {dt} does not resolve delay {h}")
    return ki


def simulate_ds_ratio(num_ds, den_ds, t_end, dt=1e-3, kind="step",
                      overflow=1e9):
    """Fixed-step simulation of y = (num_ds/den_ds) u via delay recursion.

    The lowest-delay denominator term is used as the implicit part:
    A_0 y = sum B_i u(.-nu_i) - sum_{k>=1} A_k y(.-mu_k), with every
    rational filter discretized by first-order hold and delayed through
    ring buffers.  Returns (t, y, diverged flag).
    """
    mu0 = den_ds.min_delay
    num_ds = num_ds.shift_delays(mu0) if num_ds.min_delay >= mu0 else None
    if num_ds is None:
        raise DomainError("numerator delay smaller than denominator delay")
    den_ds = den_ds.shift_delays(mu0)
    a0 = den_ds.terms[0][0]

    filters = []  # (sign, delay_samples, discrete ss or None-for-direct, gain)
    for c, h in num_ds.terms:
        filters.append((+1.0, h, c / a0, "u"))
    for c, h in den_ds.terms[1:]:
        filters.append((-1.0, h, c / a0, "y"))

    n_steps = int(np.ceil(t_end / dt)) + 1
    t = np.arange(n_steps) * dt
    if kind == "step":
        u = np.ones(n_steps)
    elif kind == "impulse":
        u = np.zeros(n_steps)
        u[0] = 1.0 / dt
    else:
        u = np.asarray(kind, dtype=float)
        if u.shape != (n_steps,):
            raise DomainError("input signal length mismatch")

    disc = []
    for sign, h, r, src in filters:
        if not r.is_proper:
            raise NumericalError("improper recursion filter; cannot simulate")
        ks = _delay_to_samples(h, dt)
        direct = float(r.num.coeffs[0]) if r.den.degree == 0 and r.num.degree == 0 \
            else None
        if direct is None:
            a, b, c, d = signal.tf2ss(r.num.coeffs[::-1], r.den.coeffs[::-1])
            ad, bd, cd, dd, _ = signal.cont2discrete((a, b, c, d), dt,
                                                     method="foh")
            state = np.zeros((ad.shape[0],))
            disc.append([sign, ks, (ad, bd.ravel(), cd.ravel(), float(dd)),
                         state, src])
        else:
            disc.append([sign, ks, direct, None, src])

    y = np.zeros(n_steps)
    diverged = False
    for n in range(n_steps):
        acc = 0.0
        pend = []  # filters whose input at this step is y[n] itself (ks==0,y)
        for f in disc:
            sign, ks, flt, state, src = f
            idx = n - ks
            if src == "u":
                x_in = u[idx] if idx >= 0 else 0.0
            else:
                if idx >= n:  # depends on current y -> must be strictly delayed
                    if isinstance(flt, tuple) and abs(flt[3]) < 1e-14:
                        x_in = 0.0  # strictly proper: output first, update later
                    else:
                        raise NumericalError(
                            "zero-delay biproper output feedback in recursion")
                else:
                    x_in = y[idx] if idx >= 0 else 0.0
            if isinstance(flt, tuple):
                ad, bd, cd, dd = flt
                acc += sign * (cd @ state + dd * x_in)
                pend.append((f, x_in, idx))
            else:
                acc += sign * flt * x_in
        y[n] = acc
        if not np.isfinite(y[n]) or abs(y[n]) > overflow:
            diverged = True
            y = y[: n + 1]
            t = t[: n + 1]
            break
        for f, x_in, idx in pend:
            sign, ks, (ad, bd, cd, dd), state, src = f
            if src == "y" and idx == n:
                x_in = y[n]
            f[3] = ad @ state + bd * x_in
    return t, y, diverged
