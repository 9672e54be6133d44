"""Least-squares helpers shared by the estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BURN_IN = 0.1


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    residual: float  # RMS of the residuals
    npoints: int


def fit_line(x, y, burn_in: float = BURN_IN) -> LineFit:
    """Ordinary least squares y ~ intercept + slope*x after dropping a burn-in prefix."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    skip = int(np.floor(burn_in * len(x)))
    x, y = x[skip:], y[skip:]
    if len(x) < 2:
        raise ValueError("need at least two points to fit a line")
    A = np.vstack([np.ones_like(x), x]).T
    (b, m), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (b + m * x)
    return LineFit(float(m), float(b), float(np.sqrt(np.mean(res**2))), len(x))
