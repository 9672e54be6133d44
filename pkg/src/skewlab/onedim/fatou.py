"""Attracting cycles, critical-point labels, trapping regions and K_m areas."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .. import _kernels as K
from ..dyncore import FiberPolynomial
from ..errors import PreconditionError
from ..fitting import fit_line
from ..parallel import concat, run_slabs
from .roots import CriticalSet, critical_points

CAUCHY_TOL = 1e-9
WINDOW = 32
INVARIANCE_MARGIN = 1e-6


@dataclass(frozen=True)
class Cycle:
    points: tuple[complex, ...]
    multiplier: complex

    @property
    def period(self) -> int:
        return len(self.points)

    @property
    def attracting(self) -> bool:
        return abs(self.multiplier) < 1


def _refine_cycle(p: FiberPolynomial, z: complex, q: int) -> Cycle:
    """Newton on p^q(z) - z starting from z, then collect the orbit and multiplier."""
    for _ in range(50):
        w, dw = z, 1 + 0j
        for _ in range(q):
            dw *= p.deriv(w)
            w = p(w)
        g, dg = w - z, dw - 1
        if dg == 0:
            break
        step = g / dg
        z -= step
        if abs(step) < 1e-15 * (1 + abs(z)):
            break
    pts, mult, w = [], 1 + 0j, z
    for _ in range(q):
        pts.append(complex(w))
        mult *= p.deriv(w)
        w = p(w)
    return Cycle(tuple(pts), complex(mult))


def _follow(p: FiberPolynomial, z: complex, budget: int, R: float):
    """Iterate z; return ('escape', n) | ('cycle', Cycle) | ('exhausted', None)."""
    hist = np.empty(budget + 1, dtype=complex)
    hist[0] = z
    for n in range(1, budget + 1):
        z = p(z)
        hist[n] = z
        if not abs(z) <= R:
            return "escape", n
        for q in range(1, min(WINDOW, n) + 1):
            if abs(z - hist[n - q]) < CAUCHY_TOL:
                return "cycle", _refine_cycle(p, complex(z), q)
    return "exhausted", None


def _same_cycle(a: Cycle, b: Cycle) -> bool:
    return a.period == b.period and min(abs(b.points[0] - z) for z in a.points) < 1e-7


def classify_crit(p: FiberPolynomial, sampler=None, budget: int = 4000,
                  crit: CriticalSet | None = None) -> CriticalSet:
    """Label each critical point inFatou (escapes or is captured by an attracting cycle) or inJulia.

    A critical orbit that lands on a repelling or indifferent cycle, or that is
    still undecided when the budget runs out, is labeled inJulia; the latter
    case is also marked ambiguous.
    """
    crit = crit if crit is not None else critical_points(p)
    R = sampler.escape_radius if sampler is not None else p.escape_radius
    labels, amb = [], []
    for c in crit.points:
        kind, info = _follow(p, complex(c), budget, R)
        if kind == "escape" or (kind == "cycle" and info.attracting):
            labels.append("inFatou")
        else:
            labels.append("inJulia")
        amb.append(kind == "exhausted")
    return replace(crit, labels=labels, ambiguous=amb)


def attracting_cycles(p: FiberPolynomial, budget: int = 4000) -> list[Cycle]:
    """Attracting cycles found along critical orbits (each one attracts a critical point)."""
    out: list[Cycle] = []
    for c in critical_points(p).points:
        kind, info = _follow(p, complex(c), budget, p.escape_radius)
        if kind == "cycle" and info.attracting and not any(_same_cycle(info, o) for o in out):
            out.append(info)
    return out


@dataclass
class TrappingRegion:
    """W0 = union of cycle disks together with {|z| > infinity_radius}."""

    cycle_disks: list[tuple[complex, float]] = field(default_factory=list)
    infinity_radius: float = np.inf
    level: int = 0
    successor: list[int] = field(default_factory=list)

    def arrays(self):
        c = np.array([d[0] for d in self.cycle_disks], dtype=complex)
        r = np.array([d[1] for d in self.cycle_disks], dtype=float)
        return c, r

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        inside = np.abs(z) > self.infinity_radius
        for c, r in self.cycle_disks:
            inside |= np.abs(z - c) < r
        return inside


def _disk_maps_into(p: FiberPolynomial, c0, r0, c1, r1, samples: int = 1024) -> bool:
    """max over |z - c0| = r0 of |p(z) - c1| plus sampling error stays below r1 - margin.

    By the maximum principle this certifies p(closed disk) inside the open target.
    """
    z = c0 + r0 * np.exp(2j * np.pi * np.arange(samples) / samples)
    err = float(np.max(np.abs(p.deriv(z)))) * r0 * np.pi / samples
    return float(np.max(np.abs(p(z) - c1))) + err <= r1 - INVARIANCE_MARGIN


def _infinity_invariant(p: FiberPolynomial, R: float) -> bool:
    """|p(z)| > |z| + margin on |z| >= R, via the monotone bound |a_d| R^(d-1) - sum |a_j| R^(j-1) > 1."""
    a = np.abs(p.coeffs)
    d = p.degree
    j = np.arange(d)
    bound = a[d] * R ** (d - 1) - float(np.sum(a[:d] * R ** (j - 1.0)))
    return bound > 1 + INVARIANCE_MARGIN


def check_trap(p: FiberPolynomial, trap: TrappingRegion) -> bool:
    """Forward invariance p(closure W0) in W0 by boundary sampling."""
    if np.isfinite(trap.infinity_radius) and not _infinity_invariant(p, trap.infinity_radius):
        return False
    succ = trap.successor or None
    for i, (c, r) in enumerate(trap.cycle_disks):
        if succ is not None:
            targets = [trap.cycle_disks[succ[i]]]
        else:
            img = p(c)
            targets = sorted(trap.cycle_disks, key=lambda d: abs(d[0] - img))[:1]
        if not any(_disk_maps_into(p, c, r, tc, tr) for tc, tr in targets):
            return False
    return True


def _cycle_radii(p: FiberPolynomial, pts: np.ndarray) -> np.ndarray:
    """Relative disk radii along a cycle adapted to the local derivatives.

    r_{i+1} = (|p'(z_i)| + s) r_i with s chosen so the product around the
    cycle is (1 + |multiplier|)/2 < 1; small disks then map strictly inside
    their successors even when single steps expand.
    """
    dp = np.abs(p.deriv(pts))
    q = len(pts)
    if q == 1:
        return np.ones(1)
    target = (1 + float(np.prod(dp))) / 2
    lo, hi = 0.0, 1.0
    while np.prod(dp + hi) < target:
        hi *= 2
    for _ in range(100):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if np.prod(dp + mid) < target else (lo, mid)
    rel = np.ones(q)
    for i in range(q - 1):
        rel[i + 1] = rel[i] * (dp[i] + lo)
    return rel


def build_trap(p: FiberPolynomial, budget: int = 4000, infinity_radius: float | None = None,
               start_radius: float = 0.25) -> TrappingRegion:
    """Disks around every attracting cycle point, halved until W0 is forward invariant."""
    cycles = attracting_cycles(p, budget)
    R = infinity_radius if infinity_radius is not None else p.escape_radius
    disks, succ = [], []
    for cyc in cycles:
        pts = np.array(cyc.points)
        q = len(pts)
        scale = _cycle_radii(p, pts)
        sep = min([abs(a - b) for a in pts for b in pts if a != b] + [4 * start_radius])
        r = min(start_radius, sep / 4) / max(scale)
        while r > 1e-12:
            rad = r * scale
            if all(_disk_maps_into(p, pts[i], rad[i], pts[(i + 1) % q], rad[(i + 1) % q])
                   for i in range(q)):
                break
            r /= 2
        else:
            raise PreconditionError("trap-not-invariant", "could not fit an invariant cycle disk",
                                    "onedim")
        base = len(disks)
        disks += [(complex(z), float(x)) for z, x in zip(pts, rad)]
        succ += [base + (i + 1) % q for i in range(q)]
    trap = TrappingRegion(disks, R, 0, succ)
    if not check_trap(p, trap):
        raise PreconditionError("trap-not-invariant", "trapping region failed invariance", "onedim")
    return trap


@dataclass(frozen=True)
class KmResult:
    m: np.ndarray
    area: np.ndarray
    slope: float
    residual: float


def fiber_grid(half_width: float, n: int, center: complex = 0j) -> tuple[np.ndarray, float]:
    """Cell centres of an n x n grid on the square of given half-width; returns (points, cell area)."""
    h = 2 * half_width / n
    x = -half_width + h * (np.arange(n) + 0.5)
    Z = (center + x[None, :] + 1j * x[:, None]).ravel()
    return Z, h * h


def entry_times(p: FiberPolynomial, trap: TrappingRegion, Z: np.ndarray, m_max: int,
                threads: int | None = None) -> np.ndarray:
    c, r = trap.arrays()
    a = np.ascontiguousarray(p.coeffs)
    R = float(trap.infinity_radius)
    parts = run_slabs(lambda lo, hi: K.entry_times_slab(a, Z, m_max, c, r, R, lo, hi), len(Z),
                      threads)
    return concat(parts)


def km_measure(p: FiberPolynomial, trap: TrappingRegion, m_max: int, grid: int = 512,
               half_width: float | None = None, threads: int | None = None) -> KmResult:
    """Grid area of K_m = {z : p^k(z) not in W0 for k <= m}, m = 0..m_max, with a log-linear fit."""
    if not check_trap(p, trap):
        raise PreconditionError("trap-not-invariant", "W0 is not forward invariant", "onedim")
    if half_width is None:
        half_width = trap.infinity_radius if np.isfinite(trap.infinity_radius) else p.escape_radius
    Z, cell = fiber_grid(half_width, grid)
    times = entry_times(p, trap, Z, m_max, threads)
    counts = np.bincount(np.minimum(times, m_max + 1), minlength=m_max + 2)
    # points with entry time > m remain in K_m
    remaining = counts[::-1].cumsum()[::-1]
    area = cell * remaining[1:m_max + 2].astype(float)
    m = np.arange(m_max + 1)
    pos = area > 0
    if pos.sum() >= 2:
        fit = fit_line(m[pos], np.log(area[pos]))
        slope, res = fit.slope, fit.residual
    else:
        slope, res = -np.inf, 0.0
    return KmResult(m, area, slope, res)
