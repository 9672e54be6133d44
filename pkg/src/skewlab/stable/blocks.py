"""Block schedules and the radii of the bidisk sequence along a critical value orbit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..fitting import fit_line

FIRST, SECOND = "first", "second"


@dataclass(frozen=True)
class BlockSchedule:
    N: int
    eps0: float
    types: tuple[str, ...]  # one entry per block
    mu: np.ndarray          # per index
    derivs: np.ndarray      # a_m = |p'(p^m v)|

    def block_of(self, m: int) -> int:
        return m // self.N


def _block_slices(n: int, N: int):
    for start in range(0, n, N):
        yield slice(start, min(start + N, n))


def block_schedule(derivs, N: int, eps0: float, lam: complex | None = None,
                   mu_exp: float | None = None) -> BlockSchedule:
    """Split indices into blocks [iN, (i+1)N) and assign the per-index rates mu_m.

    A block is of first type when the product of a_m over it is at least
    (1+eps0)^len; its indices get mu_m = (1+eps0) * (geometric mean of a_m).
    Second-type blocks get mu_m = (1+eps0)^2.  A trailing partial block is
    typed on its own length.
    """
    a = np.asarray(derivs, dtype=float)
    if N < 1:
        raise PreconditionError("bad-block-length", "N must be >= 1", "stable")
    if np.any(~(a > 0)):
        raise PreconditionError("nonpositive-derivative", "derivs must be positive", "stable")
    if not eps0 > 0:
        raise PreconditionError("eps0-out-of-range", "eps0 must be positive", "stable")
    bound = np.inf
    if lam is not None:
        bound = min(bound, abs(lam) ** (-1 / 3) - 1)
    if mu_exp is not None:
        bound = min(bound, mu_exp - 1)
    if eps0 >= bound:
        raise PreconditionError("eps0-out-of-range", f"eps0 must be below {bound:.4g}", "stable")
    mu = np.empty_like(a)
    types = []
    logs = np.log(a)
    for sl in _block_slices(len(a), N):
        k = sl.stop - sl.start
        s = float(np.sum(logs[sl]))
        if s >= k * np.log1p(eps0):
            types.append(FIRST)
            mu[sl] = (1 + eps0) * np.exp(s / k)
        else:
            types.append(SECOND)
            mu[sl] = (1 + eps0) ** 2
    return BlockSchedule(int(N), float(eps0), tuple(types), mu, a)


def verify_schedule(s: BlockSchedule) -> list[str]:
    """Independent re-check of the schedule rules; returns a list of violations."""
    bad = []
    for b, sl in enumerate(_block_slices(len(s.derivs), s.N)):
        k = sl.stop - sl.start
        prod = float(np.prod(s.derivs[sl]))
        first = prod >= (1 + s.eps0) ** k * (1 - 1e-12)
        if first != (s.types[b] == FIRST) and abs(prod / (1 + s.eps0) ** k - 1) > 1e-9:
            bad.append(f"block {b}: type")
        want = (1 + s.eps0) * prod ** (1 / k) if s.types[b] == FIRST else (1 + s.eps0) ** 2
        if not np.allclose(s.mu[sl], want, rtol=1e-12):
            bad.append(f"block {b}: mu")
    if np.any(s.mu < (1 + s.eps0) * (1 - 1e-12)):
        bad.append("mu below 1 + eps0")
    return bad


def select_block_length(C1: float, alpha: float, eta: float, mu_exp: float, eps0: float,
                        cap: int = 10_000) -> int:
    """Smallest N >= 1 with C1 eta^alpha mu_exp^N >= (1 + eps0)^N."""
    gain = np.log(mu_exp) - np.log1p(eps0)
    if gain <= 0:
        raise PreconditionError("eps0-out-of-range", "need mu_exp > 1 + eps0", "stable")
    deficit = -(np.log(C1) + alpha * np.log(eta))
    N = max(1, int(np.ceil(deficit / gain - 1e-12)))
    if N > cap:
        raise PreconditionError("block-length", f"block length {N} exceeds cap", "stable")
    return N


@dataclass(frozen=True)
class BidiskSequence:
    """B_i = U_i x V_i with U_i = D(0, horiz[i]) in t and V_i = D(centers[i], vert[i]) in z."""

    centers: np.ndarray
    horiz: np.ndarray
    vert: np.ndarray
    r0: float
    eps0: float
    mu: np.ndarray
    derivs: np.ndarray
    C2: float = float("nan")
    C3: float = float("nan")
    exponent: float = float("nan")
    violations: int = 0

    @property
    def depth(self) -> int:
        return len(self.vert) - 1


def _radii(r0: float, a: np.ndarray, mu: np.ndarray, depth: int) -> np.ndarray:
    r = np.empty(depth + 1)
    r[0] = r0
    for i in range(depth):
        r[i + 1] = r[i] * a[i] / mu[i]
    return r


def horizontal_radii(r0: float, eps0: float, depth: int) -> np.ndarray:
    return r0 * (1 + eps0) ** (-3.0 * np.arange(depth + 1))


def radii_tce_wr(schedule: BlockSchedule, r0: float, depth: int,
                 centers: np.ndarray | None = None) -> BidiskSequence:
    """Vertical radii r_{i+1} = r_i a_i / mu_i, checked against r_n <= C2 r0 (1+eps0)^-n.

    C2 = max(1, max a)^N.  The lower growth is summarized by the effective
    exponent kappa and constant C3 in r_n >= C3 r0 exp(-kappa n) (1+eps0)^(-2n).
    """
    if depth > len(schedule.derivs):
        raise PreconditionError("depth-exceeds-schedule", "schedule shorter than depth", "stable")
    if not r0 > 0:
        raise PreconditionError("bad-radius", "r0 must be positive", "stable")
    e = schedule.eps0
    r = _radii(r0, schedule.derivs, schedule.mu, depth)
    n = np.arange(depth + 1)
    C2 = max(1.0, float(np.max(schedule.derivs[:max(depth, 1)]))) ** schedule.N
    upper = C2 * r0 * (1 + e) ** (-n.astype(float))
    viol = int(np.sum(r > upper * (1 + 1e-12)))
    scaled = np.log(r / r0) + 2 * n * np.log1p(e)
    kappa = 0.0
    if depth >= 2:
        kappa = max(0.0, -fit_line(n, scaled, burn_in=0.0).slope)
    C3 = float(np.exp(np.min(scaled + kappa * n)))
    if centers is None:
        centers = np.full(depth + 1, np.nan + 0j)
    return BidiskSequence(np.asarray(centers[:depth + 1]), horizontal_radii(r0, e, depth), r, r0, e,
                          schedule.mu[:depth], schedule.derivs[:depth], C2, C3, kappa, viol)


def radii_pl(chi_v: float, eps0: float, r0: float, derivs, depth: int,
             centers: np.ndarray | None = None) -> BidiskSequence:
    """Radii with the constant rate mu = (1+eps0) e^chi_v.

    C2 and C3 are fitted on the first half of the sequence for the bands
    C3 r0 (1+2 eps0)^-n <= r_n <= C2 r0 (1+eps0/2)^-n; violations are then
    counted over the whole sequence.
    """
    if not chi_v > 0:
        raise PreconditionError("nonpositive-exponent", "chi_v must be positive", "stable")
    a = np.asarray(derivs, dtype=float)
    if depth > len(a):
        raise PreconditionError("depth-exceeds-schedule", "too few derivatives", "stable")
    mu = np.full(depth, (1 + eps0) * np.exp(chi_v))
    r = _radii(r0, a, mu, depth)
    n = np.arange(depth + 1)
    up = r / (r0 * (1 + eps0 / 2) ** (-n.astype(float)))
    lo = r / (r0 * (1 + 2 * eps0) ** (-n.astype(float)))
    half = depth // 2 + 1
    C2, C3 = float(np.max(up[:half])), float(np.min(lo[:half]))
    viol = int(np.sum(up > C2 * (1 + 1e-12)) + np.sum(lo < C3 * (1 - 1e-12)))
    if centers is None:
        centers = np.full(depth + 1, np.nan + 0j)
    return BidiskSequence(np.asarray(centers[:depth + 1]), horizontal_radii(r0, eps0, depth), r, r0,
                          eps0, mu, a[:depth], C2, C3, float("nan"), viol)
