"""Julia set sampling by inverse iteration, Green's function distances, box counting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .. import _kernels as K
from ..dyncore import FiberPolynomial
from ..errors import NumericalError, PreconditionError
from ..fitting import fit_line
from ..parallel import concat, run_slabs
from .roots import poly_roots

BURN_IN = 50
BIG = 1e12


def preimages(p: FiberPolynomial, w: complex) -> np.ndarray:
    """All solutions of p(z) = w, sorted by argument."""
    a = np.array(p.coeffs)
    a[0] -= w
    if p.degree == 2:
        a0, a1, a2 = a
        s = np.sqrt(a1 * a1 - 4 * a2 * a0 + 0j)
        r = np.array([(-a1 + s) / (2 * a2), (-a1 - s) / (2 * a2)])
    else:
        r = poly_roots(a)
    return r[np.argsort(np.angle(r))]


def repelling_fixed_point(p: FiberPolynomial) -> complex:
    a = np.array(p.coeffs)
    a[1] -= 1
    fps = poly_roots(a)
    mults = np.abs(p.deriv(fps))
    k = int(np.argmax(mults))
    if mults[k] <= 1 + 1e-12:
        raise PreconditionError("no-repelling-fixed-point", "p has no repelling fixed point", "onedim")
    return complex(fps[k])


def _backward_step(p: FiberPolynomial, Z: np.ndarray, choice: np.ndarray, threads) -> np.ndarray:
    if p.degree == 2:
        a0, a1, a2 = p.coeffs
        s = np.sqrt(a1 * a1 - 4 * a2 * (a0 - Z))
        r1, r2 = (-a1 + s) / (2 * a2), (-a1 - s) / (2 * a2)
        # sort the two roots by argument, as preimages() does
        swap = np.angle(r1) > np.angle(r2)
        lo, hi = np.where(swap, r2, r1), np.where(swap, r1, r2)
        return np.where(choice == 0, lo, hi)
    a = np.ascontiguousarray(p.coeffs)
    parts = run_slabs(lambda lo, hi: K.preimage_slab(a, Z, choice, lo, hi), len(Z), threads)
    return concat(parts)


@dataclass(frozen=True)
class DistanceBracket:
    lower: float
    upper: float
    method: str  # "green" or "cloud"
    heuristic: bool = False


def green(p: FiberPolynomial, z: complex, depth: int = 64) -> tuple[float, float, bool]:
    """Green's function G(z) and |grad G| by iteration; third value tells whether z escaped."""
    d = p.degree
    w, dw = complex(z), 1 + 0j
    corr = np.log(abs(p.leading)) / (d - 1)
    for n in range(depth):
        if abs(w) > BIG:
            scale = float(d) ** (-n)
            G = scale * (np.log(abs(w)) + corr)
            grad = scale * abs(dw) / abs(w)
            return float(G), float(grad), True
        dw = dw * p.deriv(w)
        w = p(w)
    return 0.0, 0.0, False


@dataclass
class JuliaSampler:
    p: FiberPolynomial
    cloud: np.ndarray
    escape_radius: float
    _tree: cKDTree | None = None

    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(np.column_stack([self.cloud.real, self.cloud.imag]))
        return self._tree

    def cloud_distance(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        d, _ = self.tree().query(np.column_stack([z.real, z.imag]))
        return d

    def green(self, z, depth: int = 64):
        return green(self.p, z, depth)


def julia_sample(p: FiberPolynomial, count: int, seed: int = 0, burn_in: int = BURN_IN,
                 threads: int | None = None) -> JuliaSampler:
    """Independent inverse-iteration chains from the most repelling fixed point.

    Each chain takes ``burn_in`` backward steps with uniformly random branch
    choices; the chain endpoints form the cloud.
    """
    if count < 1:
        raise PreconditionError("bad-count", "count must be >= 1", "onedim")
    R = p.escape_radius
    z0 = repelling_fixed_point(p)
    rng = np.random.default_rng(seed)
    choices = rng.integers(0, p.degree, size=(burn_in, count))
    Z = np.full(count, z0, dtype=complex)
    worst = abs(z0)
    for k in range(burn_in):
        Z = _backward_step(p, Z, choices[k], threads)
        worst = max(worst, float(np.max(np.abs(Z))))
    if worst > R:
        raise NumericalError("cloud-escaped", "inverse iteration left the escape disk", "onedim")
    return JuliaSampler(p, Z, R)


def green_distance(p: FiberPolynomial, z: complex, depth: int = 64,
                   sampler: JuliaSampler | None = None) -> DistanceBracket:
    """Bracket on dist(z, J(p)).

    In the basin of infinity this is the classical estimate
    sinh G / (2 e^G |grad G|) <= dist <= 2 sinh G / |grad G|.  Inside bounded
    Fatou components the distance to the sampled cloud is returned as the
    upper bound and half of it as the lower bound (heuristic).
    """
    if depth < 8:
        raise PreconditionError("bad-depth", "depth must be >= 8", "onedim")
    G, grad, escaped = green(p, z, depth)
    if escaped:
        if G < 1e-14 or grad == 0:
            raise NumericalError("on-julia", "Green's function vanishes at z", "onedim")
        s = np.sinh(G)
        return DistanceBracket(float(s / (2 * np.exp(G) * grad)), float(2 * s / grad), "green")
    if sampler is None:
        raise PreconditionError("needs-sampler", "bounded orbit: a Julia cloud is required",
                                "onedim")
    dc = float(sampler.cloud_distance(z)[0])
    if dc < 1e-14:
        raise NumericalError("on-julia", "point lies on the sampled Julia cloud", "onedim")
    return DistanceBracket(dc / 2, dc, "cloud", heuristic=True)


@dataclass(frozen=True)
class BoxDimension:
    dimension: float
    residual: float
    eps: np.ndarray
    counts: np.ndarray
    used: np.ndarray


def box_dimension(cloud, levels: int = 16, saturation: float = 0.2,
                  min_count: int = 8) -> BoxDimension:
    """Slope of log N(eps) against log(1/eps) over dyadic eps = L / 2^k.

    L is the side of the bounding square.  A scale is usable when it is fine
    enough to resolve the set (N >= min_count) and coarse enough not to be
    saturated by the finite sample (N <= saturation * count).
    """
    z = np.asarray(cloud, dtype=complex).ravel()
    x, y = z.real, z.imag
    L = max(float(np.ptp(x)), float(np.ptp(y))) if len(z) else 0.0
    if L == 0.0:
        return BoxDimension(0.0, 0.0, np.array([]), np.array([]), np.array([], dtype=bool))
    eps = L / 2.0 ** np.arange(1, levels + 1)
    counts = np.empty(levels, dtype=np.int64)
    for k, e in enumerate(eps):
        ix = np.floor((x - x.min()) / e).astype(np.int64)
        iy = np.floor((y - y.min()) / e).astype(np.int64)
        counts[k] = len(np.unique(ix * (2 ** (k + 3)) + iy))
    used = (counts >= min_count) & (counts <= saturation * len(z))
    if used.sum() < 4:
        raise NumericalError("insufficient-scales", "fewer than 4 usable box scales", "onedim",
                             usable=int(used.sum()))
    fit = fit_line(np.log(1 / eps[used]), np.log(counts[used]), burn_in=0.0)
    return BoxDimension(fit.slope, fit.residual, eps, counts, used)
