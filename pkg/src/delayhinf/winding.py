"""Argument-principle machinery: adaptive winding numbers over rectangles,
zero search by recursive subdivision, and Newton refinement.

Used for quasipolynomial RHP-zero location and closed-loop stability
verdicts.  All functions take plain callables, so they work for delay sums,
rationals and assembled closed-loop expressions alike.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import ResolutionError


class _ContourNearZero(Exception):
    """Internal: |f| vanished on the contour; caller should jitter the box."""


def _arg_change(f, z1, z2, f1, f2, depth, floor):
    if abs(f1) < floor or abs(f2) < floor:
        raise _ContourNearZero(z1)
    d = cmath.phase(f2 / f1)
    zm = 0.5 * (z1 + z2)
    fm = f(zm)
    if abs(fm) < floor:
        raise _ContourNearZero(zm)
    d1 = cmath.phase(fm / f1)
    d2 = cmath.phase(f2 / fm)
    if abs(d) <= 0.8 and abs(d1) <= 0.8 and abs(d2) <= 0.8 \
            and abs(d1 + d2 - d) < 1e-9:
        # a single midpoint can be fooled when the argument advances a full
        # turn in each half (the hidden turns cancel in the sum check), so
        # acceptance additionally requires agreement at the quarter points
        ok = True
        for a, b, fa, fb, dd in ((z1, zm, f1, fm, d1), (zm, z2, fm, f2, d2)):
            zq = 0.5 * (a + b)
            fq = f(zq)
            if abs(fq) < floor:
                raise _ContourNearZero(zq)
            e1 = cmath.phase(fq / fa)
            e2 = cmath.phase(fb / fq)
            if abs(e1) > 0.8 or abs(e2) > 0.8 or abs(e1 + e2 - dd) >= 1e-9:
                ok = False
                break
        if ok:
            return d
    if depth <= 0:
        raise ResolutionError("winding refinement depth exhausted")
    return (_arg_change(f, z1, zm, f1, fm, depth - 1, floor)
            + _arg_change(f, zm, z2, fm, f2, depth - 1, floor))


def _winding_once(f, rect, n0, depth, floor):
    x0, x1, y0, y1 = rect
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1),
               complex(x0, y1)]
    total = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        zs = [a + (b - a) * k / n0 for k in range(n0 + 1)]
        fs = [f(z) for z in zs]
        for (z1, z2, f1, f2) in zip(zs[:-1], zs[1:], fs[:-1], fs[1:]):
            total += _arg_change(f, z1, z2, f1, f2, depth, floor)
    w = total / (2.0 * math.pi)
    wi = int(round(w))
    if abs(w - wi) > 1e-3:
        raise ResolutionError(f"winding number {w} did not round to an integer")
    return wi


def winding_number(f, rect, n0=16, depth=42, floor_rel=1e-12, jitter=6):
    """Integer winding number of f around the rectangle (x0, x1, y0, y1).

    The contour is refined adaptively; if |f| vanishes on the contour the
    rectangle is jittered slightly (up to ``jitter`` attempts).
    """
    x0, x1, y0, y1 = rect
    scale = max(abs(f(complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))), 1.0)
    base = (x1 - x0, y1 - y0)
    for k in range(jitter + 1):
        eps = 0.0 if k == 0 else (0.004 * k) * min(base)
        r = (x0 - eps * 0.7, x1 + eps, y0 - eps, y1 + eps * 1.3)
        if r[0] < 0 <= x0:
            r = (x0 * 0.5, r[1], r[2], r[3])  # keep the left edge nonnegative
        try:
            return _winding_once(f, r, n0, depth, floor_rel * scale)
        except _ContourNearZero:
            continue
    raise ResolutionError("winding contour could not avoid zeros of f")


def newton_refine(f, fprime, z0, tol=1e-10, max_iter=80):
    """Newton iteration; returns (z, residual)."""
    z = complex(z0)
    for _ in range(max_iter):
        fz = f(z)
        if abs(fz) < tol:
            # one extra polished step
            fp = fprime(z)
            if fp != 0:
                z = z - fz / fp
            return z, abs(f(z))
        fp = fprime(z)
        if fp == 0:
            break
        step = fz / fp
        z = z - step
        if abs(step) < 1e-15 * (1.0 + abs(z)):
            break
    return z, abs(f(z))


def find_zeros(f, fprime, rect, scale=1.0, tol=1e-10, min_size=1e-5,
               max_boxes=4000):
    """All zeros (with multiplicity) of analytic f inside the rectangle.

    Recursive winding-count subdivision down to small boxes, then Newton
    refinement to residual < tol * scale.
    """
    zeros = []
    stack = [(rect, winding_number(f, rect))]
    boxes = 0
    while stack:
        boxes += 1
        if boxes > max_boxes:
            raise ResolutionError("zero search exceeded the box budget")
        r, w = stack.pop()
        x0, x1, y0, y1 = r
        if w == 0:
            continue
        if w < 0:
            raise ResolutionError("negative winding: f is not analytic here")
        small = max(x1 - x0, y1 - y0) <= min_size * (1.0 + abs(complex(x1, y1)))
        if w == 1 or small:
            z0 = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
            z, resid = newton_refine(f, fprime, z0, tol=tol * scale)
            in_box = (x0 - 1e-6 <= z.real <= x1 + 1e-6
                      and y0 - 1e-6 <= z.imag <= y1 + 1e-6)
            if resid <= tol * scale and in_box:
                zeros.extend([z] * w)
                continue
            if small:
                # multiple/defective zero: accept the box center
                if abs(f(z0)) <= math.sqrt(tol) * scale:
                    zeros.extend([z0] * w)
                    continue
                raise ResolutionError(
                    f"winding {w} in a tiny box but no zero found near {z0}")
        # split along the longer side; child windings are computed without
        # contour jitter and must sum to the parent count so that a zero on
        # a trial split line is attributed to exactly one child.  Irrational
        # fractions keep split lines off exact zero locations (a zero on the
        # line would be silently half-counted by both children).
        horizontal = (x1 - x0) >= (y1 - y0)
        for frac in (0.5136918253, 0.4563021781, 0.5718264347,
                     0.4268731529, 0.6102413397, 0.3897586603):
            if horizontal:
                xm = x0 + frac * (x1 - x0)
                r1, r2 = (x0, xm, y0, y1), (xm, x1, y0, y1)
            else:
                ym = y0 + frac * (y1 - y0)
                r1, r2 = (x0, x1, y0, ym), (x0, x1, ym, y1)
            try:
                w1 = winding_number(f, r1, jitter=0)
                w2 = winding_number(f, r2, jitter=0)
            except ResolutionError:
                continue
            if w1 + w2 == w:
                stack.append((r1, w1))
                stack.append((r2, w2))
                break
        else:
            raise ResolutionError(
                f"no consistent split of the box {r} (winding {w})")
    return zeros


def stable_rhp_count(f, x0=1e-9, b0=2.0, om0=8.0, max_doublings=12):
    """Zero count of f in the open right half plane.

    The box (x0, B) x (-Om, Om) is doubled until the winding count is
    stable over two successive enlargements.
    """
    counts = []
    b, om = b0, om0
    for _ in range(max_doublings):
        counts.append(winding_number(f, (x0, b, -om, om)))
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
            return counts[-1], (x0, b, -om, om)
        b *= 2.0
        om *= 2.0
    raise ResolutionError("RHP zero count did not stabilize under box doubling")
