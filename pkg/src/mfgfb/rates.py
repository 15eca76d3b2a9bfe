"""Log-log rate fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InputError

MIN_R2 = 0.98


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r2: float
    target: float
    tol: float
    n_points: int
    dropped: int = 0

    @property
    def within(self) -> bool:
        return abs(self.exponent - self.target) <= self.tol

    @property
    def reliable(self) -> bool:
        return self.r2 >= MIN_R2

    @property
    def passed(self) -> bool:
        return self.within and self.reliable

    @property
    def flags(self) -> list[str]:
        out = []
        if self.dropped:
            out.append(f"dropped {self.dropped} nonpositive samples")
        if not self.reliable:
            out.append(f"poor fit r2={self.r2:.4f}")
        return out


def holder_exponent(distances, increments, target: float = float("nan"), tol: float = float("inf")) -> RateFit:
    """Least-squares slope of ``log increments`` against ``log distances``."""
    d = np.asarray(distances, dtype=float).ravel()
    v = np.abs(np.asarray(increments, dtype=float).ravel())
    if d.shape != v.shape:
        raise InputError("distances and increments differ in length")
    keep = (d > 0) & (v > 0) & np.isfinite(v)
    if keep.sum() < 3:
        raise InputError("need at least three positive samples for a rate fit")
    res = stats.linregress(np.log(d[keep]), np.log(v[keep]))
    return RateFit(float(res.slope), float(res.intercept), float(res.rvalue**2), target, tol, int(keep.sum()), int((~keep).sum()))
