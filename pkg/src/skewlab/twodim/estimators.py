"""Vertical distances to Crit', slow approach, vertical Lyapunov exponents and phi sums."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..dyncore import Point2, SkewMap
from ..errors import NumericalError, OrbitEscapedError, PreconditionError
from ..onedim.conditions import PHI_CAP
from ..onedim.fatou import classify_crit
from ..parallel import concat, run_slabs


@dataclass(frozen=True)
class VerticalDistanceField:
    """Branches of Crit' over the base, tracked as t -> c_b(t) with dh/dz(t, c_b(t)) = 0."""

    f: SkewMap
    c0: np.ndarray  # Julia critical points of the fiber polynomial

    @property
    def empty(self) -> bool:
        return len(self.c0) == 0

    def branch_points(self, t: complex) -> np.ndarray:
        C = np.ascontiguousarray(self.f.coeffs)
        return np.array([K.branch_newton(C, complex(t), complex(c)) for c in self.c0])

    def distance(self, t: complex, z: complex) -> float:
        if self.empty:
            return float("inf")
        return float(np.min(np.abs(z - self.branch_points(t))))


def vertical_field(f: SkewMap, budget: int = 4000) -> VerticalDistanceField:
    return VerticalDistanceField(f, classify_crit(f.fiber, budget=budget).crit_prime)


def dist_v_crit(field: VerticalDistanceField, x: Point2) -> float:
    """min over Crit' branches of |z - c_b(t)|; +inf when Crit' is empty."""
    if abs(x.t) > field.f.r_delta * (1 + 1e-12):
        raise PreconditionError("domain-exceeded", "|t| exceeds r_delta", "twodim")
    return field.distance(x.t, x.z)


@dataclass(frozen=True)
class SlowApproach:
    violations: list[int]
    escaped_at: int | None  # escaping orbits approach nothing; flagged, not an error


def slow_approach_test(f: SkewMap, field: VerticalDistanceField, x: Point2, alpha: float,
                       n_range: tuple[int, int]) -> SlowApproach:
    """Indices n in [lo, hi] with dist_v(f^n(x), Crit') < exp(-alpha n)."""
    if not alpha > 0:
        raise PreconditionError("bad-alpha", "alpha must be positive", "twodim")
    lo, hi = n_range
    C = np.ascontiguousarray(f.coeffs)
    out, t, z = [], complex(x.t), complex(x.z)
    cb = field.branch_points(t) if not field.empty else np.array([])
    for n in range(hi + 1):
        if n >= lo and len(cb) and np.min(np.abs(z - cb)) < np.exp(-alpha * n):
            out.append(n)
        if n == hi:
            break
        z = complex(f.h(t, z))
        t = f.lam * t
        if not abs(z) <= f.escape_radius:
            return SlowApproach(out, n + 1)
        cb = np.array([K.branch_newton(C, t, c) for c in cb])
    return SlowApproach(out, None)


@dataclass(frozen=True)
class SlowApproachBatch:
    fibers: np.ndarray           # base points t
    violating_fraction: np.ndarray  # per fiber, among non-escaping samples
    bounded: np.ndarray          # per fiber count of non-escaping samples
    overall: float


def slow_approach_batch(f: SkewMap, field: VerticalDistanceField, alpha: float,
                        n_range: tuple[int, int], T: np.ndarray, Z: np.ndarray,
                        threads: int | None = None) -> SlowApproachBatch:
    """Violating fraction per fiber; T and Z have shape (fibers, samples)."""
    T = np.asarray(T, dtype=complex)
    Z = np.asarray(Z, dtype=complex)
    shape = Z.shape
    Tf = np.ascontiguousarray(np.broadcast_to(T, shape).ravel())
    Zf = np.ascontiguousarray(Z.ravel())
    C = np.ascontiguousarray(f.coeffs)
    c0 = np.asarray(field.c0, dtype=complex)
    lo, hi = n_range
    parts = run_slabs(lambda a, b: K.slow_approach_slab(C, complex(f.lam), Tf, Zf, float(alpha), lo,
                                                        hi, c0, float(f.escape_radius), a, b),
                      len(Zf), threads)
    esc, nviol, _ = concat(parts)
    bounded = (esc < 0).reshape(shape)
    viol = ((nviol > 0) & (esc < 0)).reshape(shape)
    nb = bounded.sum(axis=1)
    frac = np.where(nb > 0, viol.sum(axis=1) / np.maximum(nb, 1), 0.0)
    overall = float(viol.sum() / max(bounded.sum(), 1))
    return SlowApproachBatch(np.asarray(T)[:, 0] if T.ndim == 2 else T, frac, nb, overall)


@dataclass(frozen=True)
class VerticalLyapunov:
    running: np.ndarray
    liminf_proxy: float


def vertical_lyapunov(f: SkewMap, x: Point2, n: int) -> VerticalLyapunov:
    """Running averages (1/k) log|vertical cocycle| and their minimum over the final quarter."""
    if n == 0:
        return VerticalLyapunov(np.array([]), float("nan"))
    bail = f.escape_radius
    t, z = complex(x.t), complex(x.z)
    logs = np.empty(n)
    for k in range(n):
        d = complex(f.dh_dz(t, z))
        if d == 0:
            raise NumericalError("zero-derivative", f"vertical derivative vanishes at step {k}",
                                 "twodim", index=k)
        logs[k] = np.log(abs(d))
        z = complex(f.h(t, z))
        t = f.lam * t
        if not abs(z) <= 2 * bail and k + 1 < n:
            raise OrbitEscapedError("twodim", k + 1)
    running = np.cumsum(logs) / np.arange(1, n + 1)
    return VerticalLyapunov(running, float(np.min(running[n - n // 4 - 1:])))


def lyapunov_batch(f: SkewMap, T, Z, n: int, threads: int | None = None):
    """Vectorized liminf proxies; escaping or critical-hit orbits give NaN."""
    T = np.ascontiguousarray(np.asarray(T, dtype=complex).ravel())
    Z = np.ascontiguousarray(np.asarray(Z, dtype=complex).ravel())
    C = np.ascontiguousarray(f.coeffs)
    R = 2 * float(f.escape_radius)
    parts = run_slabs(lambda a, b: K.lyapunov_slab(C, complex(f.lam), T, Z, n, R, a, b), len(Z),
                      threads)
    esc, proxy, final, zero = concat(parts)
    return proxy, final, esc, zero


@dataclass(frozen=True)
class PhiOrbit:
    phi: np.ndarray
    C: float
    offset: float
    clipped: int
    empty_crit: bool = False


def phi_orbit(f: SkewMap, field: VerticalDistanceField, x: Point2, n: int) -> PhiOrbit:
    """phi(f^k x) = min(-log dist_v, cap) + log(2R) and C = sup_k (partial sum)/k."""
    offset = float(np.log(2 * f.escape_radius))
    if n == 0:
        return PhiOrbit(np.array([]), 0.0, offset, 0, field.empty)
    t, z = complex(x.t), complex(x.z)
    phi = np.empty(n)
    clipped = 0
    for k in range(n):
        d = field.distance(t, z)
        raw = 0.0 if field.empty else (-np.log(d) if d > 0 else np.inf)
        if raw > PHI_CAP:
            clipped += 1
            raw = PHI_CAP
        phi[k] = raw + offset
        z = complex(f.h(t, z))
        t = f.lam * t
        if not abs(z) <= 2 * f.escape_radius and k + 1 < n:
            raise OrbitEscapedError("twodim", k + 1)
    C = float(np.max(np.cumsum(phi) / np.arange(1, n + 1)))
    return PhiOrbit(phi, C, offset, clipped, field.empty)
