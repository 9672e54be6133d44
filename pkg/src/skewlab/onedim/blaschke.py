"""Preimage measures under finite Blaschke products on the unit disk."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc


def _disk_points(count: int, radius: float, seed) -> np.ndarray:
    """Scrambled Sobol points pushed to the disk by the area-preserving polar map."""
    m = int(np.ceil(np.log2(max(count, 2))))
    u = qmc.Sobol(d=2, scramble=True, seed=np.random.default_rng(seed)).random_base2(m)[:count]
    return radius * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])


@dataclass(frozen=True)
class Blaschke:
    zeros: np.ndarray
    rotation: complex

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.rotation, dtype=complex)
        for a in self.zeros:
            out *= (z - a) / (1 - np.conj(a) * z)
        return out


def _in_union(z: np.ndarray, disks) -> np.ndarray:
    hit = np.zeros(z.shape, dtype=bool)
    for c, r in disks:
        hit |= np.abs(z - c) < r
    return hit


def preimage_measure(G, disks, count: int, seed) -> float:
    """Lebesgue measure of G^{-1}(R) inside the unit disk, R a union of disks."""
    z = _disk_points(count, 1.0, seed)
    return float(np.pi * np.mean(_in_union(G(z), disks)))


def set_measure(disks, count: int, seed) -> float:
    """Measure of a union of disks contained in D(0, 1/2)."""
    if len(disks) == 1:
        return float(np.pi * disks[0][1] ** 2)
    z = _disk_points(count, 0.5, seed)
    return float(np.pi * 0.25 * np.mean(_in_union(z, disks)))


def measure_ratio(G, disks, D: int, points: int = 100_000, seed=0) -> float:
    """meas G^{-1}(R) / meas(R)^(2^-D); an empty R gives 0."""
    if not disks:
        return 0.0
    ss = np.random.SeedSequence(seed).spawn(2)
    mR = set_measure(disks, points, ss[0])
    if mR == 0:
        return 0.0
    return preimage_measure(G, disks, points, ss[1]) / mR ** (2.0 ** (-D))


@dataclass(frozen=True)
class BlaschkeReport:
    worst_ratio: float
    ratios: np.ndarray
    degrees: np.ndarray
    z2_measured: float
    z2_analytic: float

    @property
    def z2_rel_error(self) -> float:
        return abs(self.z2_measured - self.z2_analytic) / self.z2_analytic


def blaschke_measure_check(D: int, trials: int, seed: int = 0,
                           points: int = 100_000) -> BlaschkeReport:
    """Empirical C4 = max meas G^{-1}(R) / meas(R)^(2^-D) over random products and sets.

    D = 0 draws rotations; otherwise the degree is drawn uniformly from 1..D.
    Each R is a union of one to five disks inside D(0, 1/2).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ss = np.random.SeedSequence(seed)
    child = ss.spawn(trials + 1)
    ratios = np.empty(trials)
    degs = np.empty(trials, dtype=int)
    for i in range(trials):
        rng = np.random.default_rng(child[i])
        deg = 1 if D == 0 else int(rng.integers(1, D + 1))
        if D == 0:
            zeros = np.array([0j])
        else:
            zeros = 0.9 * np.sqrt(rng.random(deg)) * np.exp(2j * np.pi * rng.random(deg))
        G = Blaschke(zeros, complex(np.exp(2j * np.pi * rng.random())))
        disks = []
        for _ in range(int(rng.integers(1, 6))):
            c = 0.45 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            disks.append((complex(c), float((0.5 - abs(c)) * rng.uniform(0.05, 1.0))))
        ratios[i] = measure_ratio(G, disks, D, points, int(rng.integers(0, 2**32)))
        degs[i] = G.degree
    z2 = Blaschke(np.array([0j, 0j]), 1 + 0j)
    rng = np.random.default_rng(child[-1])
    measured = preimage_measure(z2, [(0j, 0.1)], points, int(rng.integers(0, 2**32)))
    return BlaschkeReport(float(ratios.max()), ratios, degs, measured, float(np.pi * 0.1))
