"""Two-dimensional trapping regions: bulged cycle basins plus a neighbourhood of infinity."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..dyncore import SkewMap
from ..errors import PreconditionError
from ..onedim.fatou import INVARIANCE_MARGIN, attracting_cycles, build_trap


@dataclass(frozen=True)
class Trap2D:
    """{|t| < r_bulge} x (cycle disks)  together with  {|z| > infinity_radius}."""

    cycle_disks: tuple[tuple[complex, float], ...]
    successor: tuple[int, ...]
    cycle_id: tuple[int, ...]
    r_bulge: float
    infinity_radius: float
    ncycles: int = 0
    periods: tuple[int, ...] = field(default=())

    def arrays(self):
        c = np.array([d[0] for d in self.cycle_disks], dtype=complex)
        r = np.array([d[1] for d in self.cycle_disks], dtype=float)
        return c, r, np.array(self.cycle_id, dtype=np.int64)

    def lifted(self, eps: float) -> "Trap2D":
        """W': cycle disks shrunk by eps and the infinity radius pushed out by eps."""
        disks = tuple((c, r - eps) for c, r in self.cycle_disks if r > eps)
        ids = tuple(i for (c, r), i in zip(self.cycle_disks, self.cycle_id) if r > eps)
        return replace(self, cycle_disks=disks, cycle_id=ids, infinity_radius=self.infinity_radius + eps)

    def contains(self, t, z) -> np.ndarray:
        t = np.asarray(t, dtype=complex)
        z = np.asarray(z, dtype=complex)
        inside = np.abs(z) > self.infinity_radius
        near = np.abs(t) < self.r_bulge
        for c, r in self.cycle_disks:
            inside |= near & (np.abs(z - c) < r)
        return inside


def _torus_ok(f: SkewMap, rb: float, c0: complex, r0: float, c1: complex, r1: float,
              samples: int = 128) -> bool:
    """max of |h(t, z) - c1| over |t| = rb, |z - c0| = r0 (plus sampling error) below r1 - margin.

    h is holomorphic in both variables, so the maximum over the closed
    polydisk is attained on this torus.
    """
    ang = np.exp(2j * np.pi * np.arange(samples) / samples)
    T, Z = np.meshgrid(rb * ang, c0 + r0 * ang, indexing="ij")
    val = float(np.max(np.abs(f.h(T, Z) - c1)))
    err = (float(np.max(np.abs(f.dh_dz(T, Z)))) * r0
           + float(np.max(np.abs(f.dh_dt(T, Z)))) * rb) * np.pi / samples
    return val + err <= r1 - INVARIANCE_MARGIN


def build_trap2d(f: SkewMap, budget: int = 4000, start_radius: float = 0.25) -> Trap2D:
    """Bulge the fiber trap: halve r_bulge from r_delta until the polydisks map into each other."""
    p = f.fiber
    trap = build_trap(p, budget, infinity_radius=p.escape_radius, start_radius=start_radius)
    cycles = attracting_cycles(p, budget)
    ids, k = [], 0
    for cyc in cycles:
        ids += [k] * cyc.period
        k += 1
    rb = f.r_delta
    disks = trap.cycle_disks
    while disks:
        if all(_torus_ok(f, rb, c, r, *disks[trap.successor[i]]) for i, (c, r) in enumerate(disks)):
            break
        rb /= 2
        if rb < 1e-12:
            raise PreconditionError("trap-not-invariant", "no bulging radius found", "twodim")
    return Trap2D(tuple(disks), tuple(trap.successor), tuple(ids), rb, f.escape_radius, len(cycles),
                  tuple(c.period for c in cycles))
