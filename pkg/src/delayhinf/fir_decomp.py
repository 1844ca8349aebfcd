"""Decomposition operator Phi and FIR blocks.

Phi splits a delay sum divided by a biproper rational X0 into a regular
delay-system part (poles away from the zeros of X0) plus a block whose
impulse response has finite support whenever the zeros of X0 are also RHP
zeros of the delay sum.  The finite support is what removes unstable
pole-zero cancellations from the assembled controllers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .delaysum import A2_GRID, DelaySum, _modes_eval, _rational_time_modes
from .errors import DegenerateInputError, DomainError
from .rational import (
    Polynomial,
    RationalFunction,
    cluster_points,
    pf_split,
    poly_roots,
)

#: |X(z)| below this (relative) means z counts as a zero of X
GENUINE_REL_TOL = 1e-6


class FirBlock:
    """sum_i F_i(s) e^{-h_i s} with strictly proper F_i whose poles lie in
    ``pole_set``; the impulse response is truncated past the support only
    when the block is flagged genuine."""

    __slots__ = ("terms", "pole_set", "genuine", "_modes")

    def __init__(self, terms=(), pole_set=(), genuine=False):
        clean = []
        for f, h in terms:
            h = Fraction(h) if not isinstance(h, Fraction) else h
            if h < 0:
                raise DomainError("negative delay in FirBlock")
            if not f.is_zero and not f.is_strictly_proper:
                raise DomainError("FirBlock coefficients must be strictly proper")
            if not f.is_zero:
                clean.append((f, h))
        clean.sort(key=lambda t: t[1])
        object.__setattr__(self, "terms", tuple(clean))
        object.__setattr__(self, "pole_set",
                           tuple((complex(z), int(m)) for z, m in pole_set))
        object.__setattr__(self, "genuine", bool(genuine))
        object.__setattr__(self, "_modes",
                           tuple((_rational_time_modes(f, "impulse"), float(h))
                                 for f, h in clean))

    def __setattr__(self, *a):
        raise AttributeError("FirBlock is immutable")

    @classmethod
    def zero(cls):
        return cls((), (), genuine=True)

    @property
    def is_zero(self):
        return not self.terms

    @property
    def support(self):
        """Upper end h_n of the claimed support [0, h_n]."""
        return float(self.terms[-1][1]) if self.terms else 0.0

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros(s.shape, dtype=complex)
        for f, h in self.terms:
            out = out + f(s) * np.exp(-float(h) * s)
        return out if out.shape else complex(out)

    def impulse(self, t, truncate=None):
        """Impulse response by the residue formula.

        ``truncate=None`` follows the genuineness flag; pass False to see
        the raw (untruncated) exponential sum past the support.
        """
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for modes, h in self._modes:
            out = out + _modes_eval(modes, t - h)
        if truncate is None:
            truncate = self.genuine
        if truncate:
            out = np.where(t > self.support * (1.0 + 1e-12) + 1e-15, 0.0, out)
        return out if out.shape else float(out)

    def merge(self, other):
        """Concatenate blocks; genuineness is re-established from the
        residue cancellation of the merged term list."""
        merged_poles = {}
        for z, m in list(self.pole_set) + list(other.pole_set):
            for key in list(merged_poles):
                if abs(z - key) <= 1e-6 * (1.0 + abs(z)):
                    merged_poles[key] = max(merged_poles[key], m)
                    break
            else:
                merged_poles[z] = m
        out = FirBlock(list(self.terms) + list(other.terms),
                       tuple(merged_poles.items()), genuine=False)
        resid, scale = residue_cancellation(out)
        genuine = resid <= 1e-9 * scale
        return FirBlock(out.terms, out.pole_set, genuine=genuine)

    def __add__(self, other):
        return self.merge(other)

    def __repr__(self):
        return (f"FirBlock({len(self.terms)} terms, support={self.support}, "
                f"genuine={self.genuine})")


def residue_cancellation(block: FirBlock):
    """(max residual, scale) of the tail-vanishing conditions.

    For each pole z of total multiplicity m the response past the support
    is e^{z t} times a degree-(m-1) polynomial in t; the block is FIR
    exactly when every coefficient of these polynomials vanishes.  For a
    simple pole the single coefficient is sum_i Res{F_i}|_z e^{-h_i z}.
    """
    if block.is_zero:
        return 0.0, 1.0
    worst = 0.0
    scale = 0.0
    for z, m in block.pole_set:
        coeffs = np.zeros(m, dtype=complex)
        for modes, h in block._modes:
            for p, order, rr in modes:
                if abs(p - z) > 1e-6 * (1.0 + abs(z)):
                    continue
                scale = max(scale, abs(rr))
                # rr (t-h)^{order-1}/(order-1)! e^{z(t-h)} contributes to t^q
                for q in range(order):
                    coeffs[q] += (rr * np.exp(-z * h) * (-h) ** (order - 1 - q)
                                  / (math.factorial(q)
                                     * math.factorial(order - 1 - q)))
        worst = max(worst, float(np.max(np.abs(coeffs))))
    return worst, max(scale, 1e-30)


def fir_response(block: FirBlock, t):
    """Impulse response at time(s) t (exact zero past a genuine support)."""
    return block.impulse(t)


def verify_fir_support(block: FirBlock, tol=1e-6, n=1000):
    """(verdict, max tail magnitude): samples the untruncated residue
    formula on (h_n, 2h_n] and compares with the peak on [0, h_n]."""
    if block.is_zero:
        return True, 0.0
    hn = block.support
    if hn == 0.0:
        return True, 0.0
    body = np.abs(block.impulse(np.linspace(0.0, hn, n), truncate=False))
    tail = np.abs(block.impulse(hn + (np.arange(1, n + 1) / n) * hn,
                                truncate=False))
    peak = float(np.max(body))
    max_tail = float(np.max(tail))
    return max_tail < tol * max(peak, 1e-30), max_tail


@dataclass(frozen=True)
class DecompositionResult:
    """regular + fir reconstructs X/X0 pointwise."""

    regular: DelaySum
    fir: FirBlock

    def __call__(self, s):
        return self.regular(s) + self.fir(s)


def phi_decompose(X: DelaySum, X0, genuine_tol=GENUINE_REL_TOL):
    """Decomposition operator: X/X0 = regular + fir, splitting each
    coefficient by partial fractions against the zeros of X0.

    The fir part is flagged genuinely finite-support only when every zero
    of X0 lies in the open RHP, the tail-vanishing residuals cancel, and a
    numerical support check passes.
    """
    if isinstance(X0, (int, float)):
        X0 = RationalFunction.const(X0)
    if X0.is_zero:
        raise DomainError("division by the zero function")
    if X0.relative_degree != 0:
        raise DomainError("Phi requires a biproper divisor")
    zeros = poly_roots(X0.num) if X0.num.degree > 0 else []
    clusters = cluster_points(zeros, 1e-6)
    for z, _ in clusters:
        if abs(z.real) <= 1e-9 * (1.0 + abs(z)):
            raise DegenerateInputError(
                f"divisor has an imaginary-axis zero at {z}")
    if not clusters:
        # zero-free divisor: X/X0 stays a plain delay sum
        return DecompositionResult(X.scale_coeffs(1.0 / X0, check=False),
                                   FirBlock.zero())

    reg_terms = []
    fir_terms = []
    for c, h in X.terms:
        r = c / X0
        # only the X0 zeros that survived cancellation are split off
        requested = []
        rpoles = cluster_points(r.poles(), 1e-6)
        for z, m in clusters:
            for p, pm in rpoles:
                if abs(z - p) <= 1e-5 * (1.0 + abs(z)):
                    requested.extend([p] * min(m, pm))
                    break
        if requested:
            H, F = pf_split(r, requested)
        else:
            H, F = r, RationalFunction.zero()
        reg_terms.append((H, h))
        if not F.is_zero:
            fir_terms.append((F, h))

    regular = DelaySum(reg_terms, check=False)
    fir = FirBlock(fir_terms, clusters, genuine=False)
    if fir.is_zero:
        return DecompositionResult(regular, FirBlock.zero())
    genuine = all(z.real > 0 for z, _ in clusters)
    if genuine:
        resid, scale = residue_cancellation(fir)
        genuine = resid <= genuine_tol * scale
        if genuine:
            genuine, _ = verify_fir_support(fir, tol=genuine_tol)
    return DecompositionResult(regular,
                               FirBlock(fir.terms, fir.pole_set,
                                        genuine=genuine))
