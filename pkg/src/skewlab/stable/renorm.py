"""Renormalization scales along a critical value curve, j(s), and escape fractions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..dyncore import Region, SkewMap, sup_partials
from ..errors import NumericalError, PreconditionError
from ..fitting import fit_line
from ..parallel import concat, run_slabs
from .blocks import BidiskSequence
from .branch import CriticalBranch
from .henon import winding_number

CIRCLE = 512
BISECT_STEPS = 80


@dataclass(frozen=True)
class RenormScale:
    n: int
    rho: float
    diamD: float
    degree: int


def psi_n(f: SkewMap, branch: CriticalBranch, u, n: int, centers=None) -> np.ndarray:
    """pi_2 f^n(gamma(u)) with gamma(u) = f(u, c(u)) = (lam u, psi(u)).

    With ``centers`` (the orbit p^k(v)) the deviation psi_n(u) - p^n(v) is
    returned instead, propagated in deviation form so that scales far below
    the machine epsilon of the centres stay resolved.
    """
    u = np.asarray(u, dtype=complex)
    t = f.lam * u
    if centers is None:
        z = branch.psi_at(f, u)
        for _ in range(n):
            z = f.h(t, z)
            t = f.lam * t
        return z
    dz = f.h_delta(u, branch.c0, branch.c_at(f, u) - branch.c0)
    for k in range(n):
        dz = f.h_delta(t, complex(centers[k]), dz)
        t = f.lam * t
    return dz


def _circle_max(f, branch, n, rho, centers, samples=CIRCLE) -> float:
    """Boundary maximum of |psi_n - p^n(v)| on |u| = rho, Richardson-refined once."""
    def m(k):
        u = rho * np.exp(2j * np.pi * np.arange(k) / k)
        return float(np.max(np.abs(psi_n(f, branch, u, n, centers))))
    coarse, fine = m(samples), m(2 * samples)
    return fine + max(0.0, fine - coarse) / 3


def renorm_scale(f: SkewMap, branch: CriticalBranch, bd: BidiskSequence, n: int,
                 rho_max: float | None = None) -> RenormScale:
    """Largest rho with psi_n(D(0, rho)) inside D(center_n, r_n / 2), by log-scale bisection."""
    if not branch.vertical_ok:
        raise PreconditionError("degenerate-branch", "branch has psi'(0) = 0 or lies on the stable "
                                "graph; no renormalization is built", "stable")
    if n > bd.depth:
        raise PreconditionError("depth-exceeds-bidisks", "n larger than bidisk depth", "stable")
    if abs(branch.v - bd.centers[0]) > 1e-12 * (1 + abs(branch.v)):
        raise PreconditionError("center-mismatch", "bidisks are not centred at the branch's "
                                "critical value", "stable")
    cs, half = bd.centers, bd.vert[n] / 2
    rho_max = float(np.max(np.abs(branch.t))) if rho_max is None else rho_max
    with np.errstate(over="ignore", invalid="ignore"):
        return _renorm_scale(f, branch, cs, n, half, rho_max)


def _renorm_scale(f, branch, cs, n, half, rho_max) -> RenormScale:
    inside = lambda rho: _circle_max(f, branch, n, rho, cs) <= half
    lo, hi = rho_max * 1e-40, rho_max
    if not inside(lo):
        raise NumericalError("bisection-bracket-failure", "containment fails at the smallest radius",
                             "stable", n=n)
    if inside(hi):
        raise NumericalError("bisection-bracket-failure", "rho range exhausted before the boundary "
                             "of V_n was reached", "stable", n=n)
    for _ in range(BISECT_STEPS):
        mid = np.sqrt(lo * hi)
        lo, hi = (mid, hi) if inside(mid) else (lo, mid)
    rho = lo
    u = rho * (1 + 1e-6) * np.exp(2j * np.pi * np.arange(CIRCLE) / CIRCLE)
    deg = winding_number(psi_n(f, branch, u, n, cs))
    return RenormScale(n, float(rho), _diam_ratio(f, branch, n, rho, cs, half, rho_max), deg)


def _diam_ratio(f, branch, n, rho, cs, half, rho_max, rays: int = CIRCLE) -> float:
    """diam of the component of psi_n^{-1}(D(p^n v, half)) around 0, divided by rho.

    Each ray from 0 is followed outward to its first exit point, found by
    doubling and then bisection on the radius.
    """
    ang = np.exp(2j * np.pi * np.arange(rays) / rays)
    lo = np.full(rays, rho)
    hi = np.full(rays, rho)
    out = np.zeros(rays, dtype=bool)
    outside = lambda r: ~(np.abs(psi_n(f, branch, r * ang, n, cs)) <= half)
    with np.errstate(all="ignore"):
        for _ in range(60):
            hi = np.where(out, hi, np.minimum(2 * hi, rho_max))
            out = outside(hi)
            if np.all(out | (hi >= rho_max)):
                break
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            o = outside(mid)
            hi = np.where(o, mid, hi)
            lo = np.where(o, lo, mid)
    pts = lo * ang
    diam = float(np.max(np.abs(pts[:, None] - pts[None, :])))
    return diam / rho


def renorm_scales(f: SkewMap, branch: CriticalBranch, bd: BidiskSequence, nmax: int) -> list[RenormScale]:
    return [renorm_scale(f, branch, bd, n) for n in range(nmax + 1)]


def j_of_s(scales, lam: complex, s: float) -> int:
    """Largest j with |lam|^s <= rho_j (scales must be non-increasing); -1 if none."""
    rho = np.asarray(scales, dtype=float)
    if np.any(np.diff(rho) > 0):
        raise PreconditionError("non-monotone-scales", "scales must be non-increasing", "stable")
    ok = np.nonzero(abs(lam) ** s <= rho)[0]
    return int(ok[-1]) if len(ok) else -1


def beta_from(lam: complex, M: float) -> float:
    """beta = -log|lam| / (2 log M)."""
    return float(-np.log(abs(lam)) / (2 * np.log(M)))


def default_M(f: SkewMap) -> float:
    return sup_partials(f, Region(f.r_delta, f.fiber.escape_radius)).M


@dataclass(frozen=True)
class EscapeFraction:
    s: int
    j: int
    steps: int
    fraction: float
    complement: float
    sigma: float


def escape_fraction(f: SkewMap, branch: CriticalBranch, trap, s: int, sample_count: int,
                    seed: int, scales, beta: float | None = None, eps: float = 1e-3,
                    threads: int | None = None) -> EscapeFraction:
    """Fraction of u in D(0, r_delta) with f^{j(s)+floor(beta s)}(gamma(lam^s u)) in W'.

    Here W' is the trapping region lifted with margin eps.  Samples are drawn
    up front from the seed, so the result does not depend on the thread count.
    """
    if sample_count < 1:
        raise PreconditionError("bad-count", "sampleCount must be >= 1", "stable")
    beta = beta_from(f.lam, default_M(f)) if beta is None else beta
    j = j_of_s(scales, f.lam, s)
    if j < 0 or j >= len(scales) - 1:
        raise PreconditionError("depth-insufficient", f"renormalization depth too small for s={s}",
                                "stable", j=j, depth=len(scales) - 1)
    steps = j + int(np.floor(beta * s))
    rng = np.random.default_rng(seed)
    u = f.r_delta * np.sqrt(rng.random(sample_count)) * np.exp(2j * np.pi * rng.random(sample_count))
    w = f.lam ** s * u
    T0 = f.lam * w
    Z0 = branch.psi_at(f, w)
    lifted = trap.lifted(eps)
    c, r, ids = lifted.arrays()
    C = np.ascontiguousarray(f.coeffs)
    # first entry into W' within `steps` iterations; W' is forward invariant, so the
    # point is in W' at the final time exactly when it entered by then
    parts = run_slabs(lambda lo, hi: K.classify_slab(C, complex(f.lam), T0, Z0, steps,
                                                     lifted.infinity_radius, c, r, ids,
                                                     lifted.r_bulge, lo, hi), sample_count, threads)
    labels, _ = concat(parts)
    frac = float(np.mean(labels != 0))
    sig = float(np.sqrt(max(frac * (1 - frac), 1.0 / sample_count) / sample_count))
    return EscapeFraction(int(s), j, steps, frac, 1 - frac, sig)


def complement_slope(results: list[EscapeFraction]) -> float:
    s = np.array([r.s for r in results], dtype=float)
    comp = np.array([max(r.complement, 0.5 / 1e9) for r in results])
    return fit_line(s, np.log(comp), burn_in=0.0).slope
