"""Pullbacks of small disks centred on the Julia set.

Each branch pulls D(x, r) back one preimage at a time while carrying a disk
enclosure D(w, rho) of the pulled-back component.  Away from critical points
the enclosure follows the linearization inflated by a Koebe distortion
factor; when a critical point is too close, a local power model is used and
the step is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from ..dyncore import FiberPolynomial
from ..errors import PreconditionError
from ..fitting import fit_line
from .julia import preimages
from .roots import critical_points

BLOWUP = 10.0  # enclosure radius (relative to the escape radius) treated as a blow-up


@dataclass(frozen=True)
class ShrinkResult:
    diam: np.ndarray        # (branches, n + 1); NaN after a branch becomes unresolved
    critical: np.ndarray    # (branches, n) True where a critical pullback was used
    unresolved: np.ndarray  # (branches,) step at which the enclosure blew up, -1 if never
    max_diam: np.ndarray    # per depth, over resolved branches
    mu_exp: float
    residual: float


def _critical_step(p: FiberPolynomial, w: complex, rho: float, wnew: complex, c: complex,
                   m: int) -> float:
    """Enclosure radius about wnew for a component containing the critical point c.

    Near c, p(z) - p(c) ~ A (z - c)^(m+1) with A = |p^(m+1)(c)|/(m+1)!, so the
    component lies within ((|w - p(c)| + rho)/A)^(1/(m+1)) of c.
    """
    a = np.array(p.coeffs)
    for _ in range(m + 1):
        a = a[1:] * np.arange(1, len(a))
    A = abs(complex(np.polyval(a[::-1], c))) / factorial(m + 1)
    reach = ((abs(w - p(c)) + rho) / A) ** (1.0 / (m + 1))
    return abs(wnew - c) + reach


def pullback_branch(p: FiberPolynomial, x: complex, r: float, n: int, choices: np.ndarray,
                    crit=None):
    """Follow one branch; returns (radii[n+1], critical flags[n], unresolved step or -1)."""
    crit = crit or critical_points(p)
    cpts, cmult = crit.points, crit.multiplicity
    limit = BLOWUP * p.escape_radius
    radii = np.full(n + 1, np.nan)
    flags = np.zeros(n, dtype=bool)
    w, rho = complex(x), float(r)
    radii[0] = rho
    for k in range(n):
        pre = preimages(p, w)
        wn = complex(pre[choices[k] % len(pre)])
        dists = np.abs(cpts - wn)
        lin = rho / abs(p.deriv(wn)) if p.deriv(wn) != 0 else np.inf
        j = int(np.argmin(dists))
        if np.isfinite(lin) and 4 * lin < dists[j]:
            s = 4 * lin / dists[j]
            rho_new = lin / (1 - s) ** 2
        else:
            rho_new = _critical_step(p, w, rho, wn, complex(cpts[j]), int(cmult[j]))
            flags[k] = True
        if not np.isfinite(rho_new) or rho_new > limit:
            return radii, flags, k + 1
        w, rho = wn, rho_new
        radii[k + 1] = rho
    return radii, flags, -1


def exp_shrink_estimate(p: FiberPolynomial, x: complex, r: float, n: int, branches: int = 64,
                        seed: int = 0, sampler=None) -> ShrinkResult:
    """Max enclosure diameter per depth over random branches, with a fitted shrink rate."""
    if sampler is not None and sampler.cloud_distance(x)[0] > 1e-3:
        raise PreconditionError("not-on-julia", "x is not within 1e-3 of the Julia cloud", "onedim")
    rng = np.random.default_rng(seed)
    choices = rng.integers(0, p.degree, size=(branches, max(n, 1)))
    crit = critical_points(p)
    diam = np.empty((branches, n + 1))
    flags = np.zeros((branches, n), dtype=bool)
    unres = np.full(branches, -1)
    for b in range(branches):
        radii, fl, u = pullback_branch(p, x, r, n, choices[b], crit)
        diam[b], flags[b], unres[b] = 2 * radii, fl, u
    with np.errstate(all="ignore"):
        maxd = np.nanmax(diam, axis=0)
    mu, res = _envelope_rate(maxd)
    return ShrinkResult(diam, flags, unres, maxd, mu, res)


def _envelope_rate(maxd: np.ndarray) -> tuple[float, float]:
    """Shrink rate fitted on the tail where the max-diameter envelope no longer grows.

    Critical pullbacks inflate the envelope for a few early steps; those
    belong to the constant in front of mu^-n, not to the rate.
    """
    n = len(maxd) - 1
    ups = np.nonzero(np.diff(maxd) > 0)[0]
    start = max(int(np.ceil(0.1 * (n + 1))), int(ups[-1]) + 1 if len(ups) else 0)
    if n + 1 - start >= 3:
        fit = fit_line(np.arange(start, n + 1), np.log(maxd[start:]), burn_in=0.0)
        mu, res = float(np.exp(-fit.slope)), fit.residual
    else:
        mu, res = float("nan"), float("nan")
    return mu, res


@dataclass(frozen=True)
class ThetaFit:
    theta0: float
    C0: float
    mu_exp: float
    radii: np.ndarray
    intercepts: np.ndarray


def theta_fit(p: FiberPolynomial, x: complex, r_grid, n: int, branches: int = 64,
              seed: int = 0) -> ThetaFit:
    """Fit diam <= C0 mu^-k r^theta0 across radii with a shared mu."""
    runs = [exp_shrink_estimate(p, x, r, n, branches, seed) for r in r_grid]
    mu = float(np.median([s.mu_exp for s in runs]))
    k = np.arange(n + 1)
    icpt = np.array([np.nanmax(np.log(s.max_diam) + k * np.log(mu)) for s in runs])
    fit = fit_line(np.log(r_grid), icpt, burn_in=0.0)
    return ThetaFit(fit.slope, float(np.exp(np.max(icpt - fit.slope * np.log(r_grid)))), mu,
                    np.asarray(r_grid, dtype=float), icpt)
