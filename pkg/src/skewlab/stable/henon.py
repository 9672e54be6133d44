"""Sampled checks that f maps one bidisk to the next as a degree-1 Henon-like map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dyncore import SkewMap
from ..errors import NumericalError, PreconditionError
from ..onedim.conditions import fiber_orbit
from .blocks import BidiskSequence, block_schedule, radii_tce_wr


def modulus_lower_bound(eps0: float) -> float:
    """log(1 + eps0) / (4 pi): lower bound on the modulus of the pulled-back annuli."""
    if not eps0 > 0:
        raise PreconditionError("bad-eps0", "eps0 must be positive", "stable")
    return float(np.log1p(eps0) / (4 * np.pi))


def winding_number(values: np.ndarray, point: complex = 0j) -> int:
    """Winding number of the closed polygon through values about point."""
    d = np.asarray(values, dtype=complex) - point
    if np.any(d == 0):
        raise NumericalError("curve-through-point", "curve passes through the point", "stable")
    steps = np.angle(np.roll(d, -1) / d)
    return int(round(float(np.sum(steps)) / (2 * np.pi)))


@dataclass(frozen=True)
class HenonRecord:
    i: int
    horizontal_ok: bool
    horizontal_margin: float
    sampling_error: float
    vertical_ok: bool
    degree_ok: bool
    windings: tuple[int, ...]
    modulus_lb: float

    @property
    def passed(self) -> bool:
        return self.horizontal_ok and self.vertical_ok and self.degree_ok


def _disk_samples(radius: float, n_r: int, n_a: int) -> np.ndarray:
    rr = radius * np.arange(n_r + 1) / n_r
    ang = np.exp(2j * np.pi * np.arange(n_a) / n_a)
    return np.unique((rr[:, None] * ang[None, :]).ravel())


def henon_check(f: SkewMap, bd: BidiskSequence, i: int, samples: int = 2048,
                t_rings: int = 4, t_angles: int = 16) -> HenonRecord:
    """Check B_i -> B_{i+1}: horizontal-boundary clearance, vertical containment, degree 1.

    The clearance min |h(t, z) - c_{i+1}| - r_{i+1} is sampled over t in the
    closed disk U_i and z on the circle |z - c_i| = r_i.  The sampling error is
    bounded by the local Lipschitz constants times half the sample spacing; a
    margin below ten times that error is refused.
    """
    if i + 1 > bd.depth:
        raise PreconditionError("index-out-of-range", "need i + 1 <= depth", "stable")
    ci, cn = bd.centers[i], bd.centers[i + 1]
    ri, rn = bd.vert[i], bd.vert[i + 1]
    T = _disk_samples(bd.horiz[i], t_rings, t_angles)
    th = np.exp(2j * np.pi * np.arange(samples) / samples)
    Zc = ci + ri * th
    TT, ZZ = np.meshgrid(T, Zc, indexing="ij")
    H = f.h(TT, ZZ)
    clearance = np.abs(H - cn) - rn
    margin = float(np.min(clearance))
    dz = np.pi * ri / samples
    dt = bd.horiz[i] * max(1.0 / t_rings, np.pi / t_angles)
    err = 1.1 * (float(np.max(np.abs(f.dh_dz(TT, ZZ)))) * dz
                 + float(np.max(np.abs(f.dh_dt(TT, ZZ)))) * dt)
    if margin > 0 and margin < 10 * err:
        raise NumericalError("sample-budget-too-small", "clearance margin below 10x sampling error",
                             "stable", i=i, margin=margin, error=err)
    vertical = abs(f.lam) * bd.horiz[i] < bd.horiz[i + 1]
    wind = tuple(winding_number(H[k], cn) for k in range(len(T)))
    return HenonRecord(i, margin > 0, margin, err, bool(vertical), all(w == 1 for w in wind), wind,
                       modulus_lower_bound(bd.eps0))


def bidisks_along(f: SkewMap, v: complex, r0: float, eps0: float, depth: int, N: int = 1,
                  mu_exp: float | None = None) -> BidiskSequence:
    """Bidisk sequence at the critical value v from the fiber derivatives a_m = |p'(p^m v)|."""
    p = f.fiber
    zs = fiber_orbit(p, v, depth)
    a = np.abs(p.deriv(zs[:depth])) if depth else np.array([])
    sched = block_schedule(a if depth else np.array([1.0]), N, eps0, f.lam, mu_exp)
    return radii_tce_wr(sched, r0, depth, zs)


def select_r0(f: SkewMap, v: complex, eps0: float, depth: int, N: int = 1, start: float = 1e-3,
              floor: float = 1e-9, **kw) -> tuple[float, BidiskSequence, list[HenonRecord]]:
    """Halve r0 from ``start`` until every level up to depth passes the Henon-like checks."""
    r0 = start
    while r0 >= floor:
        bd = bidisks_along(f, v, r0, eps0, depth, N)
        try:
            recs = [henon_check(f, bd, i, **kw) for i in range(depth)]
        except NumericalError:
            recs = None
        if recs is not None and all(r.passed for r in recs):
            return r0, bd, recs
        r0 /= 2
    raise NumericalError("r0-floor", "no r0 above the floor passes the Henon-like checks", "stable")
