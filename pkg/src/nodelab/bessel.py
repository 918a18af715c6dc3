"""Bessel functions of the first kind and their positive zeros.

Disk eigenmodes need J_k and its zeros j_{k,m}.  The ascending power series
loses all significant digits once the argument passes ~20 (the terms grow to
~1e7 before cancelling), and zeros up to j_{k,m} ~ 40 are needed for moderate
mode indices, so J_k is evaluated from the integral form

    J_k(x) = (1/pi) * integral_0^pi cos(k t - x sin t) dt.

The integrand is a trigonometric polynomial in t of degree ~(k + x), for
which the composite rectangle rule on [0, pi] is exact once the number of
points exceeds the degree.  A fixed generous point count keeps the whole
thing a few numpy lines.
"""

from __future__ import annotations

import numpy as np


def bessel_j(k: int, x) -> np.ndarray | float:
    """J_k(x) for integer k >= 0, scalar or array x."""
    if k < 0 or k != int(k):
        raise ValueError(f"order must be a nonnegative integer, got {k!r}")
    x = np.asarray(x, dtype=float)
    n = max(64, int(np.max(np.abs(x)) if x.size else 0) + k + 32)
    t = (np.arange(n) + 0.5) * (np.pi / n)
    vals = np.cos(k * t - np.multiply.outer(x, np.sin(t))).mean(axis=-1)
    return float(vals) if vals.ndim == 0 else vals


def bessel_zeros(k: int, count: int, tol: float = 1e-12) -> np.ndarray:
    """First `count` positive zeros of J_k, each to absolute accuracy `tol`.

    Brackets are found by scanning for sign changes on a fine grid starting
    just past x = k (J_k has no positive zeros below its order), then each
    bracket is bisected.  Consecutive zeros are at least ~pi apart, so a
    0.05 scan step cannot skip one.
    """
    if count < 1:
        raise ValueError("count must be positive")
    zeros = []
    step = 0.05
    x0 = max(k, 1e-6)
    f0 = bessel_j(k, x0)
    while len(zeros) < count:
        x1 = x0 + step
        f1 = bessel_j(k, x1)
        if f0 == 0.0:
            zeros.append(x0)
        elif f0 * f1 < 0.0:
            a, b, fa = x0, x1, f0
            while b - a > tol:
                m = 0.5 * (a + b)
                fm = bessel_j(k, m)
                if fm == 0.0:
                    a = b = m
                elif fa * fm < 0.0:
                    b = m
                else:
                    a, fa = m, fm
            zeros.append(0.5 * (a + b))
        x0, f0 = x1, f1
    return np.array(zeros[:count])
