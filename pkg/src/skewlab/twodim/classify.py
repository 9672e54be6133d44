"""Fatou/Julia labeling of points and rasters, and Julia-suspect area tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..dyncore import Point2, SkewMap
from ..parallel import concat, run_slabs
from .trap import Trap2D

SUSPECT, ESCAPING, BASIN0 = K.SUSPECT, K.ESCAPING, K.BASIN0


def label_name(code: int) -> str:
    if code == ESCAPING:
        return "escaping"
    if code == SUSPECT:
        return "julia-suspect"
    return f"basin-{code - BASIN0}"


def gray_level(labels: np.ndarray) -> np.ndarray:
    """escaping -> 255, basin k -> 64 + (32 k mod 192), julia-suspect -> 0."""
    labels = np.asarray(labels)
    k = np.maximum(labels.astype(np.int64) - BASIN0, 0)
    g = np.where(labels == ESCAPING, 255, np.where(labels == SUSPECT, 0, 64 + (32 * k) % 192))
    return g.astype(np.uint8)


def first_events(f: SkewMap, trap: Trap2D, T: np.ndarray, Z: np.ndarray, budget: int,
                 threads: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Label and step of the first trap entry or escape within budget, per point."""
    T = np.ascontiguousarray(np.asarray(T, dtype=complex).ravel())
    Z = np.ascontiguousarray(np.asarray(Z, dtype=complex).ravel())
    c, r, ids = trap.arrays()
    C = np.ascontiguousarray(f.coeffs)
    parts = run_slabs(lambda a, b: K.classify_slab(C, complex(f.lam), T, Z, int(budget),
                                                   float(trap.infinity_radius), c, r, ids,
                                                   float(trap.r_bulge), a, b), len(Z), threads)
    return concat(parts)


def classify_point(f: SkewMap, trap: Trap2D, x: Point2, budget: int) -> str:
    lab, _ = first_events(f, trap, np.array([x.t]), np.array([x.z]), budget, threads=1)
    return label_name(int(lab[0]))


@dataclass(frozen=True)
class Window:
    """Rectangle of pixel centres.

    plane "tz": real t on the horizontal axis and real z on the vertical one.
    plane "z": the complex z-plane of the fiber over a fixed base point t.
    """

    x0: float
    x1: float
    y0: float
    y1: float
    plane: str = "tz"
    t_fixed: complex = 0j

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def points(self, nx: int, ny: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        ny = nx if ny is None else ny
        xs = self.x0 + (self.x1 - self.x0) * (np.arange(nx) + 0.5) / nx
        ys = self.y1 - (self.y1 - self.y0) * (np.arange(ny) + 0.5) / ny  # top row first
        X, Y = np.meshgrid(xs, ys)
        if self.plane == "tz":
            return X.astype(complex), Y.astype(complex)
        if self.plane == "z":
            return np.full(X.shape, self.t_fixed, dtype=complex), X + 1j * Y
        raise ValueError(f"unknown plane {self.plane!r}")


@dataclass(frozen=True)
class ClassificationRaster:
    window: Window
    resolution: int
    budget: int
    labels: np.ndarray  # (ny, nx) int16
    counts: np.ndarray  # step of the deciding event; budget + 1 when undecided

    def at_budget(self, budget: int) -> "ClassificationRaster":
        """The raster a smaller budget would have produced (events after it become suspect)."""
        if budget > self.budget:
            raise ValueError("can only lower the budget")
        late = self.counts > budget
        lab = np.where(late, SUSPECT, self.labels).astype(np.int16)
        cnt = np.where(late, budget + 1, self.counts).astype(np.int32)
        return ClassificationRaster(self.window, self.resolution, budget, lab, cnt)

    @property
    def cell_area(self) -> float:
        return self.window.area / self.labels.size

    def area(self, code: int | None = None, basins: bool = False) -> float:
        if basins:
            return self.cell_area * int(np.sum(self.labels >= BASIN0))
        return self.cell_area * int(np.sum(self.labels == code))

    def gray(self) -> np.ndarray:
        return gray_level(self.labels)


def classify_raster(f: SkewMap, trap: Trap2D, window: Window, resolution: int, budget: int,
                    threads: int | None = None) -> ClassificationRaster:
    T, Z = window.points(resolution)
    lab, cnt = first_events(f, trap, T, Z, budget, threads)
    shape = T.shape
    return ClassificationRaster(window, resolution, budget, lab.reshape(shape), cnt.reshape(shape))


@dataclass(frozen=True)
class AreaRow:
    resolution: int
    budget: int
    suspect_area: float
    escaping_area: float
    basin_area: float


def julia_area_estimate(f: SkewMap, trap: Trap2D, window: Window, resolutions, budgets,
                        threads: int | None = None):
    """Area table over (resolution, budget) plus the raster of every setting.

    Each resolution is iterated once at the largest budget; the rasters for
    smaller budgets follow from the recorded event times.
    """
    rows, rasters = [], {}
    bmax = max(budgets)
    for res in resolutions:
        full = classify_raster(f, trap, window, res, bmax, threads)
        for b in budgets:
            r = full.at_budget(b)
            rasters[(res, b)] = r
            rows.append(AreaRow(res, b, r.area(SUSPECT), r.area(ESCAPING), r.area(basins=True)))
    return rows, rasters
