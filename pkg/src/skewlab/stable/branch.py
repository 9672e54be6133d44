"""Critical branches t -> c(t) with dh/dz(t, c(t)) = 0 and their critical value curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dyncore import SkewMap
from ..errors import NumericalError, PreconditionError
from ..onedim.roots import critical_points

BRANCH_TOL = 1e-10


def _hz_t(f: SkewMap, t, z):
    """d^2 h / dz dt."""
    acc = 0j
    k = np.arange(1, f.coeffs.shape[1])
    for j in range(f.degree, 0, -1):
        row = f.coeffs[j]
        drow = row[1:] * k
        val = sum(c * t ** i for i, c in enumerate(drow)) if len(drow) else 0j
        acc = acc * z + j * val
    return acc


def _newton_branch(f: SkewMap, t, c, maxiter: int = 40):
    t = np.asarray(t, dtype=complex)
    c = np.array(c, dtype=complex)
    for _ in range(maxiter):
        step = f.dh_dz(t, c) / f.d2h_dz2(t, c)
        c = c - step
        if np.all(np.abs(step) <= 1e-16 * (1 + np.abs(c))):
            break
    return c


@dataclass
class CriticalBranch:
    c0: complex
    t: np.ndarray           # (rays, steps + 1) grid along rays t = s e^{i theta}
    c: np.ndarray           # branch values on the grid
    gamma_t: np.ndarray     # lam * t
    psi: np.ndarray         # h(t, c(t))
    l: int
    psi_prime0: complex
    step: float
    degenerate: bool = False
    lam: complex = 0.5

    @property
    def v(self) -> complex:
        return complex(self.psi[0, 0])

    @property
    def vertical_ok(self) -> bool:
        """Usable as a vertical curve only when psi'(0) != 0."""
        return abs(self.psi_prime0) > 1e-12 and not self.degenerate

    def c_at(self, f: SkewMap, u) -> np.ndarray:
        """Branch point over u by Newton from c0 (valid inside the traced disk)."""
        u = np.asarray(u, dtype=complex)
        return _newton_branch(f, u, np.full(u.shape, self.c0))

    def psi_at(self, f: SkewMap, u) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        return f.h(u, self.c_at(f, u))


def critical_branch(f: SkewMap, c0: complex, radius: float | None = None, steps: int = 16,
                    rays: int = 32, graph=None) -> CriticalBranch:
    """Trace the branch through c0 over |t| <= radius by predictor-corrector continuation.

    Along each ray the predictor uses dc/dt = -h_zt / h_zz and Newton on
    dh/dz corrects.  The psi expansion psi(u) = psi(0) + a u^l + ... is fitted
    on the innermost ring.  If a StableGraph is given, the branch is marked
    degenerate when its critical values lie on the graph within 1e-8.
    """
    p = f.fiber
    if abs(p.deriv(c0)) > 1e-10:
        raise PreconditionError("not-critical", "p'(c0) != 0", "stable")
    if abs(p.deriv2(c0)) < 1e-10:
        raise PreconditionError("degenerate-critical-point",
                                "multiple critical point: branch is not a graph over t", "stable")
    radius = f.r_delta if radius is None else radius
    h = radius / steps
    others = [c for c in critical_points(p).points if abs(c - c0) > 1e-7]
    ang = np.exp(2j * np.pi * np.arange(rays) / rays)
    s = h * np.arange(steps + 1)
    T = s[None, :] * ang[:, None]
    C = np.empty_like(T)
    C[:, 0] = _newton_branch(f, 0j, c0)
    for j in range(1, steps + 1):
        prev_t, prev_c = T[:, j - 1], C[:, j - 1]
        slope = -_hz_t(f, prev_t, prev_c) / f.d2h_dz2(prev_t, prev_c)
        C[:, j] = _newton_branch(f, T[:, j], prev_c + slope * (T[:, j] - prev_t))
    res = np.abs(f.dh_dz(T, C))
    if np.max(res) > BRANCH_TOL:
        raise NumericalError("branch-residual", "continuation lost the branch", "stable",
                             residual=float(np.max(res)))
    jump = float(np.max(np.abs(np.diff(C, axis=1)))) if steps else 0.0
    for c1 in others:
        other = _branch_grid(f, T, c1)
        if np.min(np.abs(other - C)) <= 2 * jump:
            raise NumericalError("branch-collision", "critical branches merge inside the domain; "
                                 "reduce r_delta", "stable")
    psi = f.h(T, C)
    l, pp = _fit_power(T[:, 1], psi[:, 1] - psi[0, 0])
    br = CriticalBranch(complex(c0), T, C, f.lam * T, psi, l, pp, h, False, f.lam)
    if graph is not None:
        u = T.ravel()
        inside = np.abs(f.lam * u) <= np.max(np.abs(graph.t)) * (1 + 1e-12)
        gv = graph.evaluate(f, f.lam * u[inside])
        br.degenerate = bool(np.max(np.abs(psi.ravel()[inside] - gv)) < 1e-8)
    return br


def _branch_grid(f: SkewMap, T, c1):
    C = np.empty_like(T)
    C[:, 0] = _newton_branch(f, 0j, c1)
    for j in range(1, T.shape[1]):
        C[:, j] = _newton_branch(f, T[:, j], C[:, j - 1])
    return C


def _fit_power(u: np.ndarray, dpsi: np.ndarray) -> tuple[int, complex]:
    """Order l and leading coefficient of dpsi ~ a u^l (l = 0, a = 0 when dpsi vanishes)."""
    scale = np.max(np.abs(dpsi))
    if scale < 1e-14 * max(1.0, np.max(np.abs(u))):
        return 0, 0j
    # local fit dpsi = a u^l + b u^(l+1) for l = 1..4; choose the order with the best residual
    best = None
    for l in range(1, 5):
        A = np.column_stack([u**l, u ** (l + 1)])
        coef, *_ = np.linalg.lstsq(A, dpsi, rcond=None)
        r = np.linalg.norm(A @ coef - dpsi) / max(np.linalg.norm(dpsi), 1e-300)
        if best is None or r < best[0] * 0.5:
            best = (r, l, complex(coef[0]))
    return best[1], (best[2] if best[1] == 1 else 0j)
