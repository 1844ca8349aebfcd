"""Real-coefficient polynomials, rational functions, Blaschke products,
partial fractions and scalar spectral factorization.

Ascending-power coefficient convention throughout (numpy.polynomial).
All values are immutable after construction; operations are pure.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import polynomial as npp

from .errors import (
    DegenerateInputError,
    DomainError,
    InfeasibleError,
    MismatchError,
    NumericalError,
)

#: shared absolute-plus-relative tolerance for root matching / coprimality
DEFAULT_TOL = 1e-8


def _trim(coeffs, tol=1e-12):
    """Drop trailing (leading-power) coefficients below tol * max|c|."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float)).ravel()
    if c.size == 0:
        return np.zeros(1)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1)
    cut = c.size
    while cut > 1 and abs(c[cut - 1]) <= tol * scale:
        cut -= 1
    return np.array(c[:cut])


def cluster_points(points, tol):
    """Greedy clustering of complex points; returns list of (center, count).

    Points within ``tol * (1 + |center|)`` of an existing cluster are merged
    (running mean).  Used for repeated roots and pole matching.
    """
    clusters = []  # [center, count]
    for p in sorted(points, key=lambda q: (q.real, q.imag)):
        for c in clusters:
            if abs(p - c[0]) <= tol * (1.0 + abs(c[0])):
                c[0] = (c[0] * c[1] + p) / (c[1] + 1)
                c[1] += 1
                break
        else:
            clusters.append([complex(p), 1])
    return [(c[0], c[1]) for c in clusters]


def _pair_conjugates(roots, tol=1e-7):
    """Snap roots of a real polynomial to exact conjugate symmetry."""
    roots = [complex(r) for r in roots]
    out = []
    pos = []
    neg = []
    for r in roots:
        if abs(r.imag) <= tol * (1.0 + abs(r)):
            out.append(complex(r.real, 0.0))
        elif r.imag > 0:
            pos.append(r)
        else:
            neg.append(r)
    # pair each positive-imag root with its closest mirrored partner
    for p in pos:
        if not neg:
            out.append(p)  # un-pairable (non-real input); keep as is
            continue
        j = min(range(len(neg)), key=lambda k: abs(np.conj(neg[k]) - p))
        q = neg.pop(j)
        avg = 0.5 * (p + np.conj(q))
        out.extend([avg, np.conj(avg)])
    out.extend(neg)
    return out


class Polynomial:
    """Real-coefficient polynomial, ascending powers."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = _trim(coeffs)
        object.__setattr__(self, "coeffs", c)
        self.coeffs.setflags(write=False)

    def __setattr__(self, *a):  # immutable
        raise AttributeError("Polynomial is immutable")

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return float(self.coeffs[-1])

    @property
    def is_zero(self):
        return self.degree == 0 and self.coeffs[0] == 0.0

    @classmethod
    def from_roots(cls, roots, leading=1.0):
        """Real polynomial with the given (conjugate-closed) roots."""
        c = np.array([1.0 + 0j])
        for r in roots:
            c = npp.polymul(c, [-r, 1.0])
        if np.max(np.abs(c.imag)) > 1e-7 * max(1.0, np.max(np.abs(c))):
            raise DomainError("root set not conjugate-closed")
        return cls(np.real(c) * leading)

    @classmethod
    def one(cls):
        return cls([1.0])

    def __call__(self, s):
        return npp.polyval(s, self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(npp.polymul(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial([float(other)])
        return Polynomial(npp.polyadd(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial([float(other)])
        return Polynomial(npp.polysub(self.coeffs, other.coeffs))

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def derivative(self):
        if self.degree == 0:
            return Polynomial([0.0])
        return Polynomial(npp.polyder(self.coeffs))

    def flip(self):
        """p(-s)."""
        signs = np.array([(-1.0) ** k for k in range(len(self.coeffs))])
        return Polynomial(self.coeffs * signs)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)})"


def poly_roots(p):
    """All complex roots of ``p`` (with multiplicity), conjugate-paired."""
    if isinstance(p, Polynomial):
        c = p.coeffs
    else:
        c = _trim(p)
    if len(c) == 1:
        if c[0] == 0.0:
            raise DegenerateInputError("roots of the zero polynomial")
        return []
    r = npp.polyroots(c)
    return _pair_conjugates(r)


def _polydiv_exact(num, den, rel_tol=1e-6):
    """Polynomial division asserting a (numerically) zero remainder."""
    quo, rem = npp.polydiv(num, den)
    scale = max(np.max(np.abs(num)), 1e-300)
    if np.max(np.abs(rem)) > rel_tol * scale:
        raise NumericalError(
            f"inexact polynomial division (remainder {np.max(np.abs(rem)):.2e} "
            f"vs scale {scale:.2e})"
        )
    return _trim(quo, tol=0.0)


class RationalFunction:
    """Ratio of real polynomials, stored coprime up to a root tolerance.

    The denominator is normalized monic; the overall gain lives in the
    numerator.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den, reduce=True, tol=DEFAULT_TOL):
        if not isinstance(num, Polynomial):
            num = Polynomial(num)
        if not isinstance(den, Polynomial):
            den = Polynomial(den)
        if den.is_zero:
            raise DegenerateInputError("rational function with zero denominator")
        if reduce and not num.is_zero and num.degree > 0 and den.degree > 0:
            num, den = _reduce_pair(num, den, tol)
        lead = den.leading
        num = Polynomial(num.coeffs / lead)
        den = Polynomial(den.coeffs / lead)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *a):
        raise AttributeError("RationalFunction is immutable")

    @classmethod
    def const(cls, c):
        return cls([float(c)], [1.0], reduce=False)

    @classmethod
    def zero(cls):
        return cls([0.0], [1.0], reduce=False)

    @property
    def is_zero(self):
        return self.num.is_zero

    @property
    def relative_degree(self):
        return self.den.degree - self.num.degree

    @property
    def is_proper(self):
        return self.is_zero or self.relative_degree >= 0

    @property
    def is_strictly_proper(self):
        return self.is_zero or self.relative_degree >= 1

    def poles(self):
        return poly_roots(self.den) if self.den.degree > 0 else []

    def zeros(self):
        if self.is_zero or self.num.degree == 0:
            return []
        return poly_roots(self.num)

    def __call__(self, s):
        return self.num(s) / self.den(s)

    def flip(self):
        """r(-s)."""
        return RationalFunction(self.num.flip(), self.den.flip(), reduce=False)

    def __mul__(self, other):
        if isinstance(other, RationalFunction):
            return RationalFunction(self.num * other.num, self.den * other.den)
        if isinstance(other, Polynomial):
            return RationalFunction(self.num * other, self.den)
        return RationalFunction(self.num * float(other), self.den, reduce=False)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, RationalFunction):
            if other.is_zero:
                raise DegenerateInputError("division by the zero rational")
            return RationalFunction(self.num * other.den, self.den * other.num)
        if isinstance(other, Polynomial):
            return RationalFunction(self.num, self.den * other)
        return RationalFunction(self.num * (1.0 / float(other)), self.den, reduce=False)

    def __rtruediv__(self, other):
        return RationalFunction.const(other) / self

    def __add__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction.const(other)
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction.const(other)
        return self + (-other)

    def __neg__(self):
        return RationalFunction(-self.num, self.den, reduce=False)

    def __repr__(self):
        return f"RationalFunction({list(self.num.coeffs)}, {list(self.den.coeffs)})"


def _reduce_pair(num, den, tol):
    """Cancel common roots of num and den (within tolerance)."""
    rn = poly_roots(num)
    rd = poly_roots(den)
    cancelled = False
    keep_d = list(rd)
    keep_n = []
    for r in rn:
        hit = None
        for j, q in enumerate(keep_d):
            if abs(r - q) <= tol * (1.0 + abs(r)):
                hit = j
                break
        if hit is None:
            keep_n.append(r)
        else:
            keep_d.pop(hit)
            cancelled = True
    if not cancelled:
        return num, den
    keep_n = _pair_conjugates(keep_n)
    keep_d = _pair_conjugates(keep_d)
    new_num = Polynomial.from_roots(keep_n, leading=num.leading)
    new_den = Polynomial.from_roots(keep_d, leading=den.leading)
    return new_num, new_den


def _taylor(poly_coeffs, z, n):
    """First n Taylor coefficients of the polynomial at z."""
    d = np.array(poly_coeffs, dtype=complex)
    out = []
    for k in range(n):
        out.append(npp.polyval(z, d) / math.factorial(k))
        d = npp.polyder(d) if len(d) > 1 else np.array([0.0 + 0j])
    return out


def _series_div(a, b, n):
    """Leading n coefficients of the power series a(e)/b(e); b[0] != 0."""
    q = []
    for k in range(n):
        acc = a[k] if k < len(a) else 0.0
        for j in range(k):
            acc -= q[j] * (b[k - j] if k - j < len(b) else 0.0)
        q.append(acc / b[0])
    return q


def pf_split(r, pole_set, tol=DEFAULT_TOL):
    """Split a proper rational r into (H, F) with r = H + F.

    F is strictly proper with poles exactly the elements of ``pole_set``
    (with multiplicity); H has no poles in ``pole_set``.
    """
    if not isinstance(r, RationalFunction):
        raise DomainError("pf_split expects a RationalFunction")
    pole_set = [complex(z) for z in pole_set]
    if not pole_set:
        return r, RationalFunction.zero()
    if not r.is_proper:
        raise DomainError("pf_split requires a proper rational function")
    if r.is_zero:
        raise MismatchError("pole_set element is not a pole of the zero function")

    den_roots = r.poles()
    den_clusters = cluster_points(den_roots, max(tol, 1e-6))
    requested = cluster_points(pole_set, max(tol, 1e-6))

    # match each requested cluster against a denominator cluster
    matched = []  # (center, multiplicity)
    for z, m in requested:
        best = None
        for c, cm in den_clusters:
            if abs(z - c) <= 1e-5 * (1.0 + abs(z)) + tol:
                best = (c, cm)
                break
        if best is None:
            raise MismatchError(f"pole {z} is not a root of the denominator")
        if m > best[1]:
            raise MismatchError(
                f"pole {z} requested with multiplicity {m} but denominator "
                f"multiplicity is {best[1]}"
            )
        matched.append((best[0], m))

    # canonical conjugate-closed requested root list
    s_roots = []
    for z, m in matched:
        s_roots.extend([z] * m)
    s_roots = _pair_conjugates(s_roots)
    dS = Polynomial.from_roots(s_roots)
    dH = Polynomial(_polydiv_exact(r.den.coeffs, dS.coeffs))

    # principal part at each requested cluster by local Taylor division
    terms = []  # (z, [a_1 .. a_m])  with a_j the coefficient of 1/(s-z)^j
    by_center = cluster_points(s_roots, max(tol, 1e-6))
    for z, m in by_center:
        # q(s) = r(s) (s-z)^m = num / (den/(s-z)^m); expand about z
        rest = [w for w in s_roots if abs(w - z) > 1e-5 * (1.0 + abs(z)) + tol]
        dfull_c = npp.polymul(dH.coeffs.astype(complex), _complex_from_roots(rest))
        a = _taylor(r.num.coeffs, z, m)
        b = _taylor(dfull_c, z, m)
        q = _series_div(a, b, m)
        # q[j] multiplies (s-z)^j; contributes to 1/(s-z)^{m-j}
        terms.append((z, [q[m - 1 - (j - 1)] for j in range(1, m + 1)]))

    # assemble F over the common denominator dS
    f_num = np.zeros(max(dS.degree, 1), dtype=complex)
    for z, coeffs in terms:
        m = len(coeffs)
        for j, a_j in enumerate(coeffs, start=1):
            # a_j / (s-z)^j -> a_j * dS/(s-z)^j
            rest = list(s_roots)
            for _ in range(j):
                k = min(range(len(rest)), key=lambda i: abs(rest[i] - z))
                rest.pop(k)
            part = _complex_from_roots(rest)
            f_num = npp.polyadd(f_num, a_j * part)
    if np.max(np.abs(f_num.imag)) > 1e-6 * max(1.0, np.max(np.abs(f_num))):
        raise NumericalError("partial-fraction numerator failed to be real")
    F = RationalFunction(Polynomial(np.real(f_num)), dS, reduce=False)

    # H = (num - f*dH) / (dS*dH), exactly divisible by dS
    h_top = npp.polysub(r.num.coeffs, npp.polymul(np.real(f_num), dH.coeffs))
    if np.max(np.abs(h_top)) <= 1e-12 * max(1.0, np.max(np.abs(r.num.coeffs))):
        H = RationalFunction.zero()
    else:
        h_num = _polydiv_exact(h_top, dS.coeffs, rel_tol=1e-5)
        H = RationalFunction(Polynomial(h_num), dH, reduce=False)
    return H, F


def _complex_from_roots(roots):
    c = np.array([1.0 + 0j])
    for r in roots:
        c = npp.polymul(c, [-r, 1.0])
    return c


def spectral_factor(g, grid=None, tol=1e-8):
    """Outer spectral factor G of a para-Hermitian g: G(s) G(-s) = g(s).

    g must satisfy g(s) = g(-s) and g(jw) >= 0 on the verification grid.
    """
    if not isinstance(g, RationalFunction):
        g = RationalFunction.const(g)
    if g.is_zero:
        raise InfeasibleError("spectral factor of the zero function")
    if grid is None:
        grid = np.logspace(-3, 4, 1000)

    # para-Hermitian check: g(-s) == g(s) up to numerical tolerance
    probe = np.array([0.3 + 0.7j, 1.1 - 0.2j, 2.0 + 1.0j, 0.05 + 3.0j])
    gv = g(probe)
    gf = g(-probe)
    if np.max(np.abs(gv - gf)) > 1e-6 * (1.0 + np.max(np.abs(gv))):
        raise DomainError("g is not para-Hermitian: g(s) != g(-s)")

    vals = g(1j * grid)
    scale = np.max(np.abs(vals))
    if np.max(np.abs(vals.imag)) > 1e-6 * (1.0 + scale):
        raise DomainError("g is not real on the imaginary axis")
    if np.min(vals.real) < -1e-9 * (1.0 + scale):
        w = grid[int(np.argmin(vals.real))]
        raise InfeasibleError(
            f"g(jw) negative at w = {w:.6g} (min {np.min(vals.real):.3e})"
        )

    def lhp_half(poly):
        if poly.degree == 0:
            return Polynomial.one()
        roots = poly_roots(poly)
        lhp, axis = [], []
        for z in roots:
            if z.real < -1e-7 * (1.0 + abs(z)):
                lhp.append(z)
            elif z.real <= 1e-7 * (1.0 + abs(z)):
                axis.append(z)
        if axis:
            raise InfeasibleError(
                f"para-Hermitian factor has imaginary-axis roots near {axis[0]:.6g}"
            )
        if 2 * len(lhp) != len(roots):
            raise NumericalError("root set of para-Hermitian polynomial is not symmetric")
        return Polynomial.from_roots(_pair_conjugates(lhp))

    gn = lhp_half(g.num)
    gd = lhp_half(g.den)
    cand = RationalFunction(gn, gd, reduce=False)

    # fix the gain on a well-conditioned axis point
    idx = int(np.argmax(np.abs(vals)))
    s0 = 1j * grid[idx]
    ratio = g(s0) / (cand(s0) * cand(-s0))
    if ratio.real <= 0 or abs(ratio.imag) > 1e-6 * abs(ratio):
        raise NumericalError("spectral gain is not positive real")
    G = cand * math.sqrt(ratio.real)

    resid = np.abs(np.abs(G(1j * grid)) ** 2 - vals.real) / (1.0 + np.abs(vals.real))
    if np.max(resid) > 100 * tol:
        raise NumericalError(
            f"spectral identity residual {np.max(resid):.3e} exceeds tolerance"
        )
    return G


class InnerRational:
    """Blaschke product with optional pure-delay factor: inner on the axis.

    sign * e^{-theta s} * prod (s - z)/(s + conj(z)) over conjugate-closed
    RHP zeros z.
    """

    __slots__ = ("rhp_zeros", "sign", "delay_exponent")

    def __init__(self, rhp_zeros=(), sign=1.0, delay_exponent=0.0):
        zeros = [complex(z) for z in rhp_zeros]
        for z in zeros:
            if z.real <= 0:
                raise DomainError(f"Blaschke zero {z} has nonpositive real part")
        # greedy conjugate matching (sorting is unstable under ulp noise)
        pool = list(zeros)
        while pool:
            z = pool.pop()
            if abs(z.imag) <= 1e-7 * (1.0 + abs(z)):
                continue
            j = min(range(len(pool)), key=lambda k: abs(pool[k] - np.conj(z)),
                    default=None)
            if j is None or abs(pool[j] - np.conj(z)) > 1e-7 * (1.0 + abs(z)):
                raise DomainError("Blaschke zero set is not conjugate-closed")
            pool.pop(j)
        if float(delay_exponent) < 0:
            raise DomainError("delay exponent must be nonnegative")
        if abs(abs(float(sign)) - 1.0) > 1e-12:
            raise DomainError("gain sign must be +1 or -1")
        object.__setattr__(self, "rhp_zeros", tuple(_pair_conjugates(zeros)))
        object.__setattr__(self, "sign", float(sign))
        object.__setattr__(self, "delay_exponent", float(delay_exponent))

    def __setattr__(self, *a):
        raise AttributeError("InnerRational is immutable")

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.full(s.shape, self.sign, dtype=complex)
        for z in self.rhp_zeros:
            out = out * (s - z) / (s + np.conj(z))
        if self.delay_exponent:
            out = out * np.exp(-self.delay_exponent * s)
        return out if out.shape else complex(out)

    def as_rational(self):
        """Finite-dimensional part as a RationalFunction (delay must be 0)."""
        if self.delay_exponent != 0.0:
            raise DomainError("delayed inner function is not rational")
        num = Polynomial.from_roots(self.rhp_zeros, leading=self.sign)
        den = Polynomial.from_roots([-np.conj(z) for z in self.rhp_zeros])
        return RationalFunction(num, den, reduce=False)

    def __mul__(self, other):
        if isinstance(other, InnerRational):
            return InnerRational(
                list(self.rhp_zeros) + list(other.rhp_zeros),
                self.sign * other.sign,
                self.delay_exponent + other.delay_exponent,
            )
        return NotImplemented

    def __repr__(self):
        return (
            f"InnerRational(zeros={list(self.rhp_zeros)}, sign={self.sign}, "
            f"delay={self.delay_exponent})"
        )


def blaschke_from_zeros(zeros):
    """Inner function whose zeros are exactly the given RHP points."""
    return InnerRational(zeros, sign=1.0, delay_exponent=0.0)
