"""Least-squares power-law fits in log-log coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, LogDomainError


@dataclass(frozen=True)
class PowerLawFit:
    """v ~ coefficient * x^exponent fitted to positive data."""

    exponent: float
    coefficient: float
    r_squared: float
    points: tuple[tuple[float, float], ...]

    @property
    def n(self) -> int:
        return len(self.points)


def fit_power_law(points) -> PowerLawFit:
    """Fit (x, v) pairs; needs >= 3 points, all strictly positive."""
    pts = [(float(x), float(v)) for x, v in points]
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 points, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if (x <= 0).any() or (v <= 0).any():
        raise LogDomainError("power-law fit needs strictly positive data")
    lx, lv = np.log(x), np.log(v)
    slope, intercept = np.polyfit(lx, lv, 1)
    resid = lv - (slope * lx + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((lv - lv.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return PowerLawFit(
        exponent=float(slope),
        coefficient=float(np.exp(intercept)),
        r_squared=r2,
        points=tuple(pts),
    )
