"""Hyperbolic times, expanding-time horizons and shadow-set membership."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError


@dataclass(frozen=True)
class HypTimeRecord:
    log_derivs: np.ndarray
    sigma: float
    times: np.ndarray  # sorted m in 1..n
    density: float


def pliss_hyperbolic_times(log_derivs, sigma: float) -> HypTimeRecord:
    """All m in 1..n with sum_{j=i}^{m-1} L_j >= (m - i) log sigma for every 0 <= i < m.

    With S_k = sum_{j<k} (L_j - log sigma) the condition reads S_m >= S_i for
    all i < m, so one pass with a running maximum of the partial sums decides
    every m in linear time.
    """
    if not sigma > 1:
        raise PreconditionError("bad-sigma", "sigma must be > 1", "twodim")
    L = np.asarray(log_derivs, dtype=float)
    ls = math.log(sigma)
    times = []
    S, best = 0.0, 0.0
    for m in range(1, len(L) + 1):
        S += L[m - 1] - ls
        if S >= best:
            times.append(m)
            best = S
    n = len(L)
    return HypTimeRecord(L, float(sigma), np.array(times, dtype=int), len(times) / n if n else 0.0)


def pliss_bruteforce(log_derivs, sigma: float) -> np.ndarray:
    """Quadratic reference: every suffix window sum ending at m is formed directly."""
    L = np.asarray(log_derivs, dtype=float)
    ls = math.log(sigma)
    out = []
    for m in range(1, len(L) + 1):
        windows = np.cumsum(L[m - 1::-1] - ls)
        if np.all(windows >= 0):
            out.append(m)
    return np.array(out, dtype=int)


def expanding_horizon(t: complex, theta: float, M: float) -> float:
    """floor(-theta log|t|): every n up to it is an expanding time.  t = 0 gives +inf."""
    if not (0 < theta < 1 / math.log(M)):
        raise PreconditionError("bad-theta", "need 0 < theta < 1/log M", "twodim")
    a = abs(t)
    if a == 0:
        return math.inf
    if a > 1:
        raise PreconditionError("domain-exceeded", "need |t| <= 1", "twodim")
    return float(math.floor(-theta * math.log(a) + 1e-9))


@dataclass(frozen=True)
class ShadowConfig:
    K: float
    N: int
    phi: np.ndarray
    counts: np.ndarray   # number of shadows S(j, K) containing n, for n = 1..len(phi)
    member: np.ndarray   # n in A(N, K)
    density: float
    bound: float         # 1 - C K / (N + 1)

    @property
    def holds(self) -> bool:
        return self.density >= self.bound - 1e-12


def shadow_membership(phi, K: float, N: int, C: float | None = None) -> ShadowConfig:
    """Count, for every n, the shadows S(j, K) = (j, j + K phi_j] containing n.

    Endpoints are swept in order with a difference array.  The membership
    density of A(N, K) over 1..n is compared with 1 - C K/(N + 1), where C is
    sup_k (phi_0 + ... + phi_{k-1})/k unless given.
    """
    if not K > 0 or N < 0:
        raise PreconditionError("bad-shadow-params", "need K > 0 and N >= 0", "twodim")
    phi = np.asarray(phi, dtype=float)
    n = len(phi)
    if n == 0:
        return ShadowConfig(K, N, phi, np.array([], int), np.array([], bool), 1.0, 1.0)
    j = np.arange(n)
    last = np.floor(j + K * np.maximum(phi, 0.0) + 1e-12).astype(np.int64)
    last = np.minimum(last, n)
    diff = np.zeros(n + 2, dtype=np.int64)
    has = last >= j + 1
    np.add.at(diff, j[has] + 1, 1)
    np.add.at(diff, last[has] + 1, -1)
    counts = np.cumsum(diff)[1:n + 1]
    member = counts <= N
    if C is None:
        C = float(np.max(np.cumsum(phi) / np.arange(1, n + 1)))
    return ShadowConfig(float(K), int(N), phi, counts, member, float(member.mean()),
                        1 - C * K / (N + 1))
