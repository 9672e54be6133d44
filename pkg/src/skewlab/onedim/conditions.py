"""Estimators for critical-orbit conditions of the fiber polynomial.

Collet-Eckmann growth, Lyapunov exponents at critical values, weak
regularity sums, slow recurrence, first returns of critical disks, the
truncated -log dist sums, and expansion away from critical points.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ..dyncore import FiberPolynomial
from ..errors import CriticalHitError, NumericalError, OrbitEscapedError, PreconditionError
from ..fitting import fit_line
from .roots import CriticalSet, critical_points
from .fatou import classify_crit

PHI_CAP = 50.0
HIT_TOL = 1e-12


def fiber_orbit(p: FiberPolynomial, v: complex, n: int, strict: bool = True) -> np.ndarray:
    """z_0 = v, ..., z_n.  Raises orbit-escaped past twice the escape radius (or truncates)."""
    bail = 2 * p.escape_radius
    out = np.empty(n + 1, dtype=complex)
    z = complex(v)
    out[0] = z
    for k in range(1, n + 1):
        z = complex(p(z))
        if not abs(z) <= bail:
            if strict:
                raise OrbitEscapedError("onedim", k)
            return out[:k]
        out[k] = z
    return out


def crit_prime(p: FiberPolynomial, crit: CriticalSet | None = None) -> np.ndarray:
    crit = crit if crit is not None and crit.labels else classify_crit(p, crit=crit)
    return crit.crit_prime


def dist_to_set(z, pts) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    pts = np.asarray(pts, dtype=complex)
    if len(pts) == 0:
        return np.full(z.shape, np.inf)
    return np.min(np.abs(z[:, None] - pts[None, :]), axis=1)


def _log_derivs(p: FiberPolynomial, zs: np.ndarray, crit_pts) -> np.ndarray:
    """log|p'(z_j)|; an exact or near-exact critical hit raises log-of-zero."""
    hit = dist_to_set(zs, crit_pts) <= HIT_TOL
    if np.any(hit):
        raise CriticalHitError("onedim", int(np.argmax(hit)))
    return np.log(np.abs(p.deriv(zs)))


@dataclass(frozen=True)
class CEReport:
    log_derivs: np.ndarray  # log|(p^k)'(v)| for k = 1..n
    C: float
    mu_ce: float
    residual: float

    @property
    def plausible(self) -> bool:
        return self.mu_ce > 1 and self.residual < 0.1

    @property
    def moduli(self) -> np.ndarray:
        return np.exp(self.log_derivs)


def ce_report(p: FiberPolynomial, c: complex, n: int, crit: CriticalSet | None = None) -> CEReport:
    """Derivative growth along the orbit of v = p(c), fitted as C * mu^k."""
    cp = crit_prime(p, crit)
    if len(cp) == 0 or np.min(np.abs(cp - c)) > 1e-7:
        raise PreconditionError("not-in-crit-prime", "c is not a Julia critical point", "onedim")
    zs = fiber_orbit(p, p(c), n)
    logs = np.cumsum(_log_derivs(p, zs[:n], critical_points(p).points))
    k = np.arange(1, n + 1)
    fit = fit_line(k, logs)
    return CEReport(logs, float(np.exp(fit.intercept)), float(np.exp(fit.slope)), fit.residual)


@dataclass(frozen=True)
class LyapunovResult:
    value: float
    running: np.ndarray


def lyapunov_at_value(p: FiberPolynomial, v: complex, n: int) -> LyapunovResult:
    """(1/n) sum_{j<n} log|p'(p^j(v))| and its running averages."""
    if n == 0:
        return LyapunovResult(float("nan"), np.array([]))
    zs = fiber_orbit(p, v, n)
    logs = _log_derivs(p, zs[:n], critical_points(p).points)
    running = np.cumsum(logs) / np.arange(1, n + 1)
    return LyapunovResult(float(running[-1]), running)


def wr_terms(p: FiberPolynomial, v: complex, n: int, cp) -> tuple[np.ndarray, np.ndarray]:
    """Distances to Crit' and -log|p'| along z_0..z_{n-1}."""
    zs = fiber_orbit(p, v, n)[:n]
    with np.errstate(divide="ignore"):
        terms = -np.log(np.abs(p.deriv(zs)))
    return dist_to_set(zs, cp), terms


def wr_sum(p: FiberPolynomial, v: complex, n: int, eta: float,
           crit: CriticalSet | None = None) -> float:
    """Sum of -log|p'(p^j v)| over j < n with dist(p^j v, Crit') <= eta."""
    if n == 0:
        return 0.0
    dist, terms = wr_terms(p, v, n, crit_prime(p, crit))
    return float(np.sum(terms[dist <= eta]))


@dataclass(frozen=True)
class WRProfileEntry:
    eta: float
    iota: float  # sup over the tail of (S_k - C0)/k
    C0: float
    sums: np.ndarray


def wr_profile(p: FiberPolynomial, v: complex, n: int, eta_grid,
               crit: CriticalSet | None = None) -> list[WRProfileEntry]:
    """Partial WR sums per eta, summarized by an intercept C0 and growth rate iota."""
    dist, terms = wr_terms(p, v, n, crit_prime(p, crit))
    k = np.arange(1, n + 1)
    out = []
    for eta in eta_grid:
        S = np.cumsum(np.where(dist <= eta, terms, 0.0))
        fit = fit_line(k, S)
        tail = slice(max(1, n // 10) - 1, n)
        iota = float(np.max((S[tail] - fit.intercept) / k[tail]))
        out.append(WRProfileEntry(float(eta), iota, fit.intercept, S))
    return out


def sr_check(p: FiberPolynomial, v: complex, n: int, alpha: float,
             crit: CriticalSet | None = None) -> list[int]:
    """Indices j <= n with dist(p^j v, Crit') < exp(-alpha j)."""
    cp = crit_prime(p, crit)
    zs = fiber_orbit(p, v, n, strict=False)
    j = np.arange(len(zs))
    bad = dist_to_set(zs, cp) < np.exp(-alpha * j)
    return [int(i) for i in j[bad]]


def sr_alpha_from_wr(iota: float, margin: float = 1e-3) -> float:
    """Rate alpha for which a WR growth rate iota forces slow recurrence.

    The per-step bound |p'(p^n v)| > exp(-n iota - C0) together with
    |p'(z)| <= A dist(z, Crit') near a critical point gives
    dist >= exp(-n iota - C0) / A, so any alpha > iota works after a transient.
    """
    return max(iota, 0.0) + margin


@dataclass(frozen=True)
class PrzytyckiResult:
    eps: float
    nstar: int | None  # None: no return within budget
    samples: int


def _disk_overlaps(w: np.ndarray, c: complex, eps: float) -> bool:
    d = w - c
    if np.min(np.abs(d)) < eps:
        return True
    ang = np.angle(np.concatenate([d, d[:1]]))
    turns = np.sum(np.angle(np.exp(1j * np.diff(ang)))) / (2 * np.pi)
    return abs(round(turns)) >= 1


def przytycki_stat(p: FiberPolynomial, c: complex, eps: float, budget: int = 200,
                   crit: CriticalSet | None = None, max_samples: int = 1 << 21) -> PrzytyckiResult:
    """Smallest n <= budget with p^n(D(c, eps)) meeting D(c, eps).

    The image of the disk meets D(c, eps) exactly when its boundary curve
    p^n(circle) comes within eps of c or winds around c.  The circle is
    resampled until consecutive image points are closer than eps/4.
    """
    cp = crit_prime(p, crit)
    if len(cp) == 0 or np.min(np.abs(cp - c)) > 1e-7:
        raise PreconditionError("not-in-crit-prime", "c is not a Julia critical point", "onedim")
    th = 2 * np.pi * np.arange(256) / 256
    bail = 2 * p.escape_radius
    for n in range(1, budget + 1):
        while True:
            w = p.iterate(c + eps * np.exp(1j * th), n)
            if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > 1e6 * bail:
                # the image has spread past the escape disk, so it certainly covers J
                return PrzytyckiResult(eps, n, len(th))
            gap = np.abs(np.diff(np.concatenate([w, w[:1]])))
            wide = gap > eps / 4
            if not np.any(wide):
                break
            nxt = np.concatenate([th[1:], th[:1] + 2 * np.pi])
            th = np.sort(np.concatenate([th, 0.5 * (th + nxt)[wide]]))
            if len(th) > max_samples:
                raise NumericalError("sample-budget", "boundary refinement exceeded budget",
                                     "onedim", n=n)
        if _disk_overlaps(w, c, eps):
            return PrzytyckiResult(eps, n, len(th))
    return PrzytyckiResult(eps, None, len(th))


def przytycki_fit(results: list[PrzytyckiResult]) -> float:
    """Largest C with n* >= C log(1/eps) over the grid (eps < 1 only)."""
    vals = [r.nstar / np.log(1 / r.eps) for r in results if r.nstar and r.eps < 1]
    return float(min(vals)) if vals else float("nan")


@dataclass(frozen=True)
class DPUResult:
    total: float  # sum over j < n after dropping the M largest terms
    Q: float      # sup over prefixes of (truncated sum)/k
    M: int
    clipped: int
    offset: float
    empty_crit: bool = False


def phi_values(z, cp, offset: float) -> tuple[np.ndarray, int]:
    """phi = min(-log dist(z, Crit'), cap) + offset, with the number of clip events."""
    with np.errstate(divide="ignore"):
        raw = -np.log(dist_to_set(z, cp))
    clipped = int(np.sum(raw > PHI_CAP))
    return np.minimum(raw, PHI_CAP) + offset, clipped


def truncated_prefix_sums(vals: np.ndarray, M: int) -> np.ndarray:
    """For every prefix, its sum minus its M largest terms."""
    out = np.empty(len(vals))
    heap: list[float] = []
    total = top = 0.0
    for i, x in enumerate(vals):
        total += x
        if M > 0:
            if len(heap) < M:
                heapq.heappush(heap, x)
                top += x
            elif x > heap[0]:
                top += x - heapq.heapreplace(heap, x)
        out[i] = total - top
    return out


def dpu_sum(p: FiberPolynomial, x: complex, n: int, crit: CriticalSet | None = None) -> DPUResult:
    """Sum of phi along the orbit of x, discarding the #Crit' largest terms."""
    cp = crit_prime(p, crit)
    offset = float(np.log(2 * p.escape_radius))
    if n == 0 or len(cp) == 0:
        return DPUResult(0.0, 0.0, len(cp), 0, offset, empty_crit=len(cp) == 0)
    zs = fiber_orbit(p, x, n)[:n]
    vals, clipped = phi_values(zs, cp, offset)
    S = truncated_prefix_sums(vals, len(cp))
    Q = float(np.max(S / np.arange(1, n + 1)))
    return DPUResult(float(S[-1]), Q, len(cp), clipped, offset)


def hyperbolic_away(p: FiberPolynomial, x: complex, N: int, eta: float,
                    crit: CriticalSet | None = None) -> float:
    """|(p^N)'(x)| for an orbit segment staying eta-away from Crit'."""
    cp = crit_prime(p, crit)
    zs = fiber_orbit(p, x, N)[:N]
    if np.any(dist_to_set(zs, cp) <= eta):
        raise PreconditionError("segment-enters-eta-neighborhood",
                                "orbit segment comes within eta of Crit'", "onedim")
    return float(np.prod(np.abs(p.deriv(zs))))


@dataclass(frozen=True)
class AwayFit:
    C1: float
    alpha: float
    mu: float
    etas: np.ndarray
    worst: np.ndarray  # min over samples of log|(p^N)'| - N log mu, per eta


def hyperbolic_away_batch(p: FiberPolynomial, cloud: np.ndarray, N: int, etas, mu: float,
                          crit: CriticalSet | None = None, samples: int = 2000,
                          seed: int = 0) -> AwayFit:
    """Fit |(p^N)'(x)| >= C1 eta^alpha mu^N over orbit segments started on the cloud."""
    cp = crit_prime(p, crit)
    rng = np.random.default_rng(seed)
    starts = cloud[rng.choice(len(cloud), size=min(samples, len(cloud)), replace=False)]
    segs = np.empty((len(starts), N), dtype=complex)
    z = starts.copy()
    for k in range(N):
        segs[:, k] = z
        z = p(z)
    with np.errstate(divide="ignore"):
        logd = np.sum(np.log(np.abs(p.deriv(segs))), axis=1)
    dmin = dist_to_set(segs.ravel(), cp).reshape(segs.shape).min(axis=1)
    etas = np.asarray(etas, dtype=float)
    worst = np.full(len(etas), np.nan)
    for i, eta in enumerate(etas):
        ok = dmin > eta
        if ok.any():
            worst[i] = float(np.min(logd[ok])) - N * np.log(mu)
    good = np.isfinite(worst)
    if good.sum() >= 2:
        fit = fit_line(np.log(etas[good]), worst[good], burn_in=0.0)
        alpha = max(fit.slope, 0.0)
    else:
        alpha = 0.0
    logC1 = float(np.min(worst[good] - alpha * np.log(etas[good]))) if good.any() else float("nan")
    return AwayFit(float(np.exp(logC1)), float(alpha), float(mu), etas, worst)
