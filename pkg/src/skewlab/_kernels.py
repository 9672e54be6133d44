"""Compiled inner loops.

Every kernel works on a contiguous slab [lo, hi) of a flat point array and
touches only its own output slots, so slabs can run on separate threads and
be concatenated in index order.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ESCAPING = 1
SUSPECT = 0
BASIN0 = 2


@njit(cache=True, nogil=True)
def h_eval(C, t, z):
    d = C.shape[0] - 1
    K = C.shape[1]
    acc = 0j
    dacc = 0j
    for j in range(d, -1, -1):
        a = 0j
        for k in range(K - 1, -1, -1):
            a = a * t + C[j, k]
        dacc = dacc * z + acc
        acc = acc * z + a
    return acc, dacc


@njit(cache=True, nogil=True)
def hz_eval(C, t, z):
    """dh/dz and d2h/dz2 at (t, z)."""
    d = C.shape[0] - 1
    K = C.shape[1]
    acc = 0j
    dacc = 0j
    for j in range(d, 0, -1):
        a = 0j
        for k in range(K - 1, -1, -1):
            a = a * t + C[j, k]
        dacc = dacc * z + acc
        acc = acc * z + j * a
    return acc, dacc


@njit(cache=True, nogil=True)
def branch_newton(C, t, c):
    for _ in range(60):
        g, gz = hz_eval(C, t, c)
        if gz == 0:
            break
        step = g / gz
        c = c - step
        if abs(step) <= 1e-15 * (1.0 + abs(c)):
            break
    return c


@njit(cache=True, nogil=True)
def poly_eval(a, z):
    acc = 0j
    dacc = 0j
    for j in range(a.shape[0] - 1, -1, -1):
        dacc = dacc * z + acc
        acc = acc * z + a[j]
    return acc, dacc


@njit(cache=True, nogil=True)
def classify_slab(C, lam, T, Z, budget, R, cyc_c, cyc_r, cyc_id, r_bulge, lo, hi):
    """First event (escape or trap entry) within `budget` steps for points lo..hi."""
    n = hi - lo
    labels = np.zeros(n, dtype=np.int16)
    times = np.full(n, budget + 1, dtype=np.int32)
    for i in range(n):
        t = T[lo + i]
        z = Z[lo + i]
        for step in range(1, budget + 1):
            z = h_eval(C, t, z)[0]
            t = lam * t
            if not abs(z) <= R:
                labels[i] = ESCAPING
                times[i] = step
                break
            if abs(t) < r_bulge:
                hit = -1
                for q in range(cyc_c.shape[0]):
                    if abs(z - cyc_c[q]) < cyc_r[q]:
                        hit = cyc_id[q]
                        break
                if hit >= 0:
                    labels[i] = BASIN0 + hit
                    times[i] = step
                    break
    return labels, times


@njit(cache=True, nogil=True)
def entry_times_slab(a, Z, mmax, cyc_c, cyc_r, R, lo, hi):
    """First m with p^m(z) in W0 = union of disks and {|z| > R}; mmax+1 if none."""
    n = hi - lo
    out = np.full(n, mmax + 1, dtype=np.int32)
    for i in range(n):
        z = Z[lo + i]
        for m in range(mmax + 1):
            inside = abs(z) > R
            if not inside:
                for q in range(cyc_c.shape[0]):
                    if abs(z - cyc_c[q]) < cyc_r[q]:
                        inside = True
                        break
            if inside:
                out[i] = m
                break
            z = poly_eval(a, z)[0]
    return out


@njit(cache=True, nogil=True)
def slow_approach_slab(C, lam, T, Z, alpha, n_lo, n_hi, c0s, R, lo, hi):
    """Escape step, number of violations and first violation for each point.

    A violation at step n in [n_lo, n_hi] means the vertical distance to the
    nearest tracked critical branch is below exp(-alpha*n).
    """
    n = hi - lo
    esc = np.full(n, -1, dtype=np.int32)
    nviol = np.zeros(n, dtype=np.int32)
    first = np.full(n, -1, dtype=np.int32)
    nb = c0s.shape[0]
    cb = np.empty(nb, dtype=np.complex128)
    for i in range(n):
        t = T[lo + i]
        z = Z[lo + i]
        for b in range(nb):
            cb[b] = branch_newton(C, t, c0s[b])
        for step in range(n_hi + 1):
            if step >= n_lo and nb > 0:
                dmin = np.inf
                for b in range(nb):
                    dd = abs(z - cb[b])
                    if dd < dmin:
                        dmin = dd
                if dmin < np.exp(-alpha * step):
                    nviol[i] += 1
                    if first[i] < 0:
                        first[i] = step
            if step == n_hi:
                break
            z = h_eval(C, t, z)[0]
            t = lam * t
            if not abs(z) <= R:
                esc[i] = step + 1
                break
            for b in range(nb):
                cb[b] = branch_newton(C, t, cb[b])
    return esc, nviol, first


@njit(cache=True, nogil=True)
def lyapunov_slab(C, lam, T, Z, nsteps, R, lo, hi):
    """Running-average vertical Lyapunov statistics for points lo..hi.

    Returns escape step (-1 if bounded), the minimum running average over the
    final quarter, the final average, and the first zero-derivative step.
    """
    n = hi - lo
    esc = np.full(n, -1, dtype=np.int32)
    proxy = np.full(n, np.nan)
    final = np.full(n, np.nan)
    zero = np.full(n, -1, dtype=np.int32)
    start = nsteps - nsteps // 4
    for i in range(n):
        t = T[lo + i]
        z = Z[lo + i]
        s = 0.0
        best = np.inf
        for k in range(nsteps):
            hv, dz = h_eval(C, t, z)
            if dz == 0:
                zero[i] = k
                break
            s += np.log(abs(dz))
            avg = s / (k + 1)
            if k + 1 >= start and avg < best:
                best = avg
            z = hv
            t = lam * t
            if not abs(z) <= R:
                esc[i] = k + 1
                break
        if esc[i] < 0 and zero[i] < 0:
            proxy[i] = best
            final[i] = s / nsteps
    return esc, proxy, final, zero


@njit(cache=True, nogil=True)
def aberth(a, tol, maxiter):
    """All roots of sum_j a[j] z^j by Aberth-Ehrlich iteration.

    Returns (roots, iterations); iterations == maxiter signals non-convergence.
    """
    n = a.shape[0] - 1
    lead = a[n]
    center = -a[n - 1] / (n * lead)
    rad = 0.0
    for j in range(n):
        r = 2.0 * abs(a[j] / lead) ** (1.0 / (n - j))
        if r > rad:
            rad = r
    rad = max(rad, 1e-3)
    z = np.empty(n, dtype=np.complex128)
    for k in range(n):
        ang = 2.0 * np.pi * k / n + 0.4
        z[k] = center + rad * (np.cos(ang) + 1j * np.sin(ang))
    it = 0
    while it < maxiter:
        it += 1
        worst = 0.0
        for k in range(n):
            pv, dpv = poly_eval(a, z[k])
            if pv == 0:
                continue
            ratio = pv / dpv if dpv != 0 else 1e-3 + 0j
            s = 0j
            for j in range(n):
                if j != k:
                    diff = z[k] - z[j]
                    if diff != 0:
                        s += 1.0 / diff
            w = ratio / (1.0 - ratio * s)
            z[k] -= w
            rel = abs(w) / (1.0 + abs(z[k]))
            if rel > worst:
                worst = rel
        if worst < tol:
            break
    return z, it


@njit(cache=True, nogil=True)
def preimage_slab(a, Z, choice, lo, hi):
    """Root number choice[i] of p(w) = Z[i] (roots sorted by argument)."""
    n = hi - lo
    d = a.shape[0] - 1
    out = np.empty(n, dtype=np.complex128)
    b = a.copy()
    for i in range(n):
        b[0] = a[0] - Z[lo + i]
        r, _ = aberth(b, 1e-15, 200)
        for _k in range(3):
            for k in range(d):
                pv, dpv = poly_eval(b, r[k])
                if dpv != 0:
                    r[k] -= pv / dpv
        args = np.empty(d)
        for k in range(d):
            args[k] = np.angle(r[k])
        order = np.argsort(args)
        out[i] = r[order[choice[lo + i] % d]]
    return out
