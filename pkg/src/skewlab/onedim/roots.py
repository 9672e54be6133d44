"""Polynomial roots and critical sets of the fiber polynomial."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels as K
from ..dyncore import FiberPolynomial
from ..errors import NumericalError, PreconditionError

MERGE_TOL = 1e-7
CLUSTER_TOL = 1e-3
RESIDUAL_TOL = 1e-10


def poly_roots(a, tol: float = 1e-15, maxiter: int = 500) -> np.ndarray:
    """Roots of sum_j a[j] z^j (ascending coefficients), with repetition."""
    a = np.trim_zeros(np.asarray(a, dtype=complex), "b")
    n = len(a) - 1
    if n < 1:
        raise PreconditionError("bad-degree", "constant polynomial has no roots", "onedim")
    if n == 1:
        return np.array([-a[0] / a[1]])
    roots, it = K.aberth(a, tol, maxiter)
    if it >= maxiter:
        res = np.abs([K.poly_eval(a, r)[0] for r in roots])
        raise NumericalError("root-nonconvergence", "Aberth iteration did not converge", "onedim",
                             residuals=res.tolist())
    return roots


def _cluster(roots: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, r in enumerate(roots):
        for g in groups:
            if abs(roots[g[0]] - r) < tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _polish(a: np.ndarray, z: complex, m: int) -> complex:
    """Newton on the (m-1)-th derivative, where a root of multiplicity m is simple."""
    q = a.copy()
    for _ in range(m - 1):
        q = q[1:] * np.arange(1, len(q))
    dq = q[1:] * np.arange(1, len(q))
    for _ in range(8):
        num = K.poly_eval(q, z)[0]
        den = K.poly_eval(dq, z)[0] if len(dq) else 0j
        if den == 0 or num == 0:
            break
        z -= num / den
    return z


def _is_multiple(a: np.ndarray, z: complex, m: int, tol: float) -> bool:
    """p(z), p'(z)/1!, ..., p^(m-1)(z)/(m-1)! all small relative to the coefficient scale."""
    q = a.copy()
    scale = float(np.max(np.abs(a))) * (1 + abs(z)) ** (len(a) - 1)
    fact = 1.0
    for k in range(m):
        if abs(K.poly_eval(q, z)[0]) / fact > tol * scale:
            return False
        q = q[1:] * np.arange(1, len(q))
        fact *= k + 1
    return True


def roots_with_multiplicity(a, tol: float = MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Distinct roots and their multiplicities.

    Simultaneous iteration resolves an m-fold root only to about eps^(1/m), so
    candidate clusters are gathered at CLUSTER_TOL, polished by Newton on the
    (m-1)-th derivative, and kept merged only if the polished point is an
    m-fold root to within ``tol``.  Otherwise the members stay separate.
    """
    a = np.asarray(a, dtype=complex)
    raw = poly_roots(a)
    pts, mult = [], []
    for g in _cluster(raw, CLUSTER_TOL):
        m = len(g)
        z = _polish(a, complex(np.mean(raw[g])), m)
        if m == 1 or _is_multiple(a, z, m, tol):
            pts.append(z)
            mult.append(m)
            continue
        for sub in _cluster(raw[g], tol):
            k = len(sub)
            pts.append(_polish(a, complex(np.mean(raw[g][sub])), k))
            mult.append(k)
    return np.array(pts, dtype=complex), np.array(mult, dtype=int)


@dataclass
class CriticalSet:
    """Critical points of p with multiplicities and Julia/Fatou labels."""

    points: np.ndarray
    multiplicity: np.ndarray
    labels: list[str] = field(default_factory=list)
    ambiguous: list[bool] = field(default_factory=list)

    @property
    def crit_prime(self) -> np.ndarray:
        """Critical points labeled as lying in the Julia set."""
        if not self.labels:
            raise PreconditionError("unclassified", "critical set has not been classified", "onedim")
        return np.array([c for c, lab in zip(self.points, self.labels) if lab == "inJulia"],
                        dtype=complex)

    def __len__(self):
        return len(self.points)


def critical_points(p: FiberPolynomial) -> CriticalSet:
    """Roots of p' with multiplicities; every returned point has |p'(c)| < 1e-10."""
    dp = p.deriv_coeffs(1)
    pts, mult = roots_with_multiplicity(dp)
    scale = max(1.0, float(np.max(np.abs(dp))))
    res = np.abs(p.deriv(pts))
    if np.any(res > RESIDUAL_TOL * scale):
        raise NumericalError("root-nonconvergence", "critical point residual too large", "onedim",
                             residuals=res.tolist())
    return CriticalSet(pts, mult)
