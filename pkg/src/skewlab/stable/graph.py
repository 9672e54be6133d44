"""Stable manifold at a critical value as a graph z = g(t) over U_0.

For a base point t the stable graph value solves the backward recursion
h(lam^k t, g_k) = g_{k+1}, started from the bidisk centre at the deepest
level.  Because each f: B_k -> B_{k+1} is degree-1 Henon-like, each solve has
a unique root near the centre of V_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CloughTocher2DInterpolator

from ..dyncore import SkewMap
from ..errors import NumericalError, PreconditionError
from ..fitting import fit_line
from .blocks import BidiskSequence

NEWTON_TOL = 1e-10
CERT_TOL = 1e-8
EXTRA = 5


def _solve_level(f: SkewMap, t: np.ndarray, target: np.ndarray, guess: complex, k: int,
                 maxiter: int = 60) -> tuple[np.ndarray, float]:
    """Damped Newton for h(t, g) = target, vectorized over t, started at guess."""
    g = np.full(t.shape, guess, dtype=complex)
    res = np.abs(f.h(t, g) - target)
    for _ in range(maxiter):
        if np.all(res < NEWTON_TOL * 1e-3):
            break
        step = (f.h(t, g) - target) / f.dh_dz(t, g)
        new = g - step
        nres = np.abs(f.h(t, new) - target)
        worse = nres > res
        if np.any(worse):
            new[worse] = g[worse] - 0.5 * step[worse]
            nres[worse] = np.abs(f.h(t[worse], new[worse]) - target[worse])
        g, res = new, nres
        if np.all(np.abs(step) <= 1e-16 * (1 + np.abs(g))):
            break
    worst = float(np.max(res)) if res.size else 0.0
    if not np.isfinite(worst) or worst >= NEWTON_TOL:
        j = int(np.nanargmax(np.where(np.isfinite(res), res, np.inf)))
        raise NumericalError("newton-divergence", f"backward solve failed at level {k}", "stable",
                             k=k, t=complex(t.flat[j]), residual=float(res.flat[j]))
    return g, worst


def backward_orbit(f: SkewMap, centers: np.ndarray, t: np.ndarray, depth: int):
    """Rows k = 0..depth of the z-coordinates g_k(lam^k t), plus the max residual."""
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    if len(centers) < depth + 1:
        raise PreconditionError("depth-exceeds-bidisks", "not enough bidisk centres", "stable")
    rows = np.empty((depth + 1, len(t)), dtype=complex)
    rows[depth] = centers[depth]
    worst = 0.0
    for k in range(depth - 1, -1, -1):
        rows[k], r = _solve_level(f, f.lam ** k * t, rows[k + 1], complex(centers[k]), k)
        worst = max(worst, r)
    return rows, worst


@dataclass
class StableGraph:
    t: np.ndarray
    g: np.ndarray
    residual: float
    depth: int
    certificate: float  # sup |g_depth - g_{depth+5}| over the samples
    centers: np.ndarray = field(repr=False)
    lam: complex = 0.5
    _interp: object = field(default=None, repr=False)

    def evaluate(self, f: SkewMap, t) -> np.ndarray:
        """Exact graph value by a fresh backward solve."""
        rows, _ = backward_orbit(f, self.centers, t, self.depth)
        return rows[0]

    def interpolate(self, t) -> np.ndarray:
        """Piecewise cubic (Clough-Tocher) interpolation of the samples."""
        if self._interp is None:
            pts = np.column_stack([self.t.real, self.t.imag])
            self._interp = CloughTocher2DInterpolator(pts, self.g)
        t = np.atleast_1d(np.asarray(t, dtype=complex))
        return self._interp(np.column_stack([t.real, t.imag]))


def graph_samples(radius: float, rings: int = 4, angles: int = 16) -> np.ndarray:
    rr = radius * np.arange(1, rings + 1) / rings
    ang = np.exp(2j * np.pi * np.arange(angles) / angles)
    return np.concatenate([[0j], (rr[:, None] * ang[None, :]).ravel()])


def graph_transform(f: SkewMap, bd: BidiskSequence, depth: int, t=None,
                    centers: np.ndarray | None = None) -> StableGraph:
    """Stable graph over U_0 by backward Newton solves; certified against depth + 5.

    ``centers`` may extend bd.centers beyond bd.depth (needed for the
    certificate run); by default the last centre is repeated only if the
    orbit is fixed there.
    """
    if depth > bd.depth:
        raise PreconditionError("depth-exceeds-bidisks", "depth larger than bidisk sequence",
                                "stable")
    t = graph_samples(bd.horiz[0]) if t is None else np.atleast_1d(np.asarray(t, dtype=complex))
    cs = np.asarray(bd.centers if centers is None else centers)
    rows, res = backward_orbit(f, cs, t, depth)
    if len(cs) < depth + EXTRA + 1:
        raise PreconditionError("depth-exceeds-bidisks",
                                f"certificate needs centres to depth {depth + EXTRA}", "stable")
    rows2, res2 = backward_orbit(f, cs, t, depth + EXTRA)
    cert = float(np.max(np.abs(rows[0] - rows2[0])))
    return StableGraph(t, rows[0], max(res, res2), depth, cert, cs, f.lam)


@dataclass(frozen=True)
class ShadowFit:
    lam1: float
    C0: float
    distances: np.ndarray  # (samples, depth + 1)
    u: np.ndarray
    insufficient: bool


def shadow_rate(graph: StableGraph, f: SkewMap, depth: int, u=None, pad: int = 20) -> ShadowFit:
    """Fit dist_v(f^n(u, g(u)), p^n(v)) <= C0 lam1^n over sampled nonzero u.

    The forward orbit of a graph point is read off the backward solve run
    ``pad`` levels deeper and truncated, since forward iteration from the
    graph amplifies rounding errors exponentially.
    """
    if u is None:
        u = graph.t[np.abs(graph.t) > 0]
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    cs = graph.centers
    deep = min(depth + pad, len(cs) - 1)
    if deep < depth:
        raise PreconditionError("depth-exceeds-bidisks", "not enough centres", "stable")
    rows, _ = backward_orbit(f, cs, u, deep)
    dist = np.abs(rows[:depth + 1] - cs[:depth + 1, None]).T
    if depth < 2:
        return ShadowFit(float("nan"), float("nan"), dist, u, True)
    n = np.arange(depth + 1)
    lam1, C0 = 0.0, 0.0
    for row in dist:
        ok = row > 0
        if ok.sum() < 3:
            continue
        fit = fit_line(n[ok], np.log(row[ok]))
        lam1 = max(lam1, float(np.exp(fit.slope)))
        C0 = max(C0, float(np.max(row[ok] / np.exp(fit.slope) ** n[ok])))
    if lam1 >= 1:
        raise NumericalError("non-contracting", f"fitted shadow rate {lam1:.3f} >= 1", "stable",
                             lam1=lam1)
    return ShadowFit(lam1, C0, dist, u, False)
