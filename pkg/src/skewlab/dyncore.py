"""Attracting polynomial skew products f(t, z) = (lam*t, h(t, z)).

The vertical polynomial is h(t, z) = sum_j a_j(t) z^j where each a_j is a
polynomial in t.  Coefficients are stored as a complex array ``coeffs`` of
shape (d + 1, K) with ``coeffs[j, k]`` the coefficient of t^k in a_j.
"""

from __future__ import annotations

import math
from importlib import resources
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, PreconditionError

ESCAPE_SAFETY = 2.0


def _horner(c: np.ndarray, x):
    """Evaluate sum_k c[k] x^k (ascending storage) by Horner's rule."""
    acc = np.zeros_like(np.asarray(x, dtype=complex)) if np.ndim(x) else 0j
    for ck in c[::-1]:
        acc = acc * x + ck
    return acc


def taylor_shift(a: np.ndarray, c: complex) -> np.ndarray:
    """Ascending coefficients of q(x) = p(x + c), i.e. p^(i)(c) / i!."""
    b = np.array(a, dtype=complex)
    n = len(b) - 1
    for k in range(n):
        for i in range(n - 1, k - 1, -1):
            b[i] += c * b[i + 1]
    return b


@dataclass(frozen=True, eq=False)
class FiberPolynomial:
    """p(z) = sum_j coeffs[j] z^j, the restriction of h to the invariant line."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if len(c) < 3:
            raise PreconditionError("bad-degree", "fiber degree must be at least 2", "dyncore")
        if c[-1] == 0:
            raise PreconditionError("bad-degree", "leading coefficient vanishes", "dyncore")

    @classmethod
    def from_roots_form(cls, *coeffs) -> "FiberPolynomial":
        return cls(np.array(coeffs, dtype=complex))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return complex(self.coeffs[-1])

    @property
    def escape_radius(self) -> float:
        """Radius R with |p(z)| > |z| whenever |z| > R, and R >= 2."""
        tail = float(np.sum(np.abs(self.coeffs[:-1])))
        return max(2.0, (1.0 + tail) / abs(self.leading))

    def __call__(self, z):
        return _horner(self.coeffs, z)

    def deriv_coeffs(self, order: int = 1) -> np.ndarray:
        c = self.coeffs
        for _ in range(order):
            c = c[1:] * np.arange(1, len(c))
        return c

    def deriv(self, z):
        return _horner(self.deriv_coeffs(1), z)

    def deriv2(self, z):
        return _horner(self.deriv_coeffs(2), z)

    def iterate(self, z, n: int):
        for _ in range(n):
            z = self(z)
        return z


@dataclass(frozen=True)
class Point2:
    t: complex
    z: complex


@dataclass(frozen=True, eq=False)
class SkewMap:
    lam: complex
    coeffs: np.ndarray
    r_delta: float = 1.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "lam", complex(self.lam))
        if not 0 < abs(self.lam) < 1:
            raise PreconditionError("not-attracting", "need 0 < |lambda| < 1", "dyncore")
        if c.shape[0] < 3:
            raise PreconditionError("bad-degree", "fiber degree must be at least 2", "dyncore")
        if c[-1, 0] == 0:
            raise PreconditionError("bad-degree", "a_d(0) must be nonzero", "dyncore")
        if not self.r_delta > 0:
            raise PreconditionError("bad-radius", "r_delta must be positive", "dyncore")

    @classmethod
    def from_poly(cls, lam, fiber, t_terms=None, r_delta=1.0, name=""):
        """Build from fiber coefficients plus optional {(j, k): coefficient of t^k z^j}."""
        fiber = np.asarray(fiber, dtype=complex)
        t_terms = dict(t_terms or {})
        kmax = max([k for (_, k) in t_terms] + [0])
        c = np.zeros((len(fiber), kmax + 1), dtype=complex)
        c[:, 0] = fiber
        for (j, k), v in t_terms.items():
            c[j, k] += v
        return cls(lam, c, r_delta, name)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def fiber(self) -> FiberPolynomial:
        return FiberPolynomial(self.coeffs[:, 0])

    @property
    def is_product(self) -> bool:
        return not np.any(self.coeffs[:, 1:])

    @property
    def escape_radius(self) -> float:
        """Escape radius valid uniformly over |t| <= r_delta."""
        r = self.r_delta
        powers = r ** np.arange(self.coeffs.shape[1])
        bounds = np.abs(self.coeffs) @ powers
        lead_low = abs(self.coeffs[-1, 0]) - float(np.abs(self.coeffs[-1, 1:]) @ powers[1:])
        if lead_low <= 0:
            raise PreconditionError("degree-drop", "a_d(t) may vanish on the domain; shrink r_delta",
                                    "dyncore")
        return max(2.0, (1.0 + float(np.sum(bounds[:-1]))) / lead_low)

    def a(self, t):
        """Array of a_j(t), j = 0..d."""
        return np.array([_horner(row, t) for row in self.coeffs])

    def h(self, t, z):
        acc = 0j
        for row in self.coeffs[::-1]:
            acc = acc * z + _horner(row, t)
        return acc

    def dh_dz(self, t, z):
        acc = 0j
        d = self.degree
        for j in range(d, 0, -1):
            acc = acc * z + j * _horner(self.coeffs[j], t)
        return acc

    def d2h_dz2(self, t, z):
        acc = 0j
        d = self.degree
        for j in range(d, 1, -1):
            acc = acc * z + j * (j - 1) * _horner(self.coeffs[j], t)
        return acc

    def h_delta(self, t, c, delta):
        """h(t, c + delta) - h(0, c), computed without cancellation for small t and delta.

        The vertical part uses the Taylor coefficients of the fiber at c; the
        horizontal part only involves the t-dependent terms a_j(t) - a_j(0).
        """
        t = np.asarray(t, dtype=complex)
        delta = np.asarray(delta, dtype=complex)
        b = taylor_shift(self.coeffs[:, 0], c)
        acc = _horner(b[1:], delta) * delta
        if self.coeffs.shape[1] > 1:
            x = c + delta
            tpart = 0j
            for row in self.coeffs[::-1]:
                tpart = tpart * x + _horner(row[1:], t) * t
            acc = acc + tpart
        return acc

    def dh_dt(self, t, z):
        acc = 0j
        k = np.arange(1, self.coeffs.shape[1])
        for row in self.coeffs[::-1]:
            drow = row[1:] * k
            acc = acc * z + (_horner(drow, t) if len(drow) else 0j)
        return acc


def _check_domain(f: SkewMap, t):
    if np.any(np.abs(t) > f.r_delta * (1 + 1e-12)):
        raise PreconditionError("domain-exceeded", f"|t| exceeds r_delta={f.r_delta}", "dyncore")


def eval_skew(f: SkewMap, x: Point2) -> Point2:
    _check_domain(f, x.t)
    return Point2(f.lam * x.t, complex(f.h(x.t, x.z)))


def vertical_derivative(f: SkewMap, x: Point2) -> complex:
    _check_domain(f, x.t)
    return complex(f.dh_dz(x.t, x.z))


@dataclass(frozen=True, eq=False)
class OrbitTrace:
    """Orbit x_0..x_n together with the vertical derivative at every point."""

    t: np.ndarray
    z: np.ndarray
    vderivs: np.ndarray
    escaped: bool = False

    @property
    def length(self) -> int:
        return len(self.z) - 1

    @property
    def points(self) -> list[Point2]:
        return [Point2(complex(a), complex(b)) for a, b in zip(self.t, self.z)]

    def log_moduli(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.vderivs))


def orbit(f: SkewMap, x: Point2, n: int) -> OrbitTrace:
    """Iterate f n times from x; stops early (escaped=True) past twice the escape radius."""
    if n < 0:
        raise PreconditionError("bad-length", "n must be non-negative", "dyncore")
    _check_domain(f, x.t)
    bail = ESCAPE_SAFETY * f.escape_radius
    ts, zs, ds = [complex(x.t)], [complex(x.z)], [complex(f.dh_dz(x.t, x.z))]
    t, z = ts[0], zs[0]
    escaped = abs(z) > bail
    k = 0
    while k < n and not escaped:
        z = complex(f.h(t, z))
        t = f.lam * t
        ts.append(t)
        zs.append(z)
        k += 1
        if not math.isfinite(abs(z)) or abs(z) > bail:
            escaped = True
            ds.append(complex("nan"))
        else:
            ds.append(complex(f.dh_dz(t, z)))
    return OrbitTrace(np.array(ts), np.array(zs), np.array(ds), escaped)


def vertical_cocycle(trace: OrbitTrace, i: int, k: int) -> complex:
    """Product vderivs[i] * ... * vderivs[i+k-1], multiplied left to right."""
    if i < 0 or k < 0 or i + k > trace.length:
        raise PreconditionError("index-out-of-range", f"cocycle({i},{k}) outside trace", "dyncore")
    prod = 1 + 0j
    for d in trace.vderivs[i:i + k]:
        prod = prod * complex(d)
    return prod


def log_cocycle(trace: OrbitTrace, i: int, k: int) -> float:
    """log |vertical_cocycle(trace, i, k)| without overflow."""
    if i < 0 or k < 0 or i + k > trace.length:
        raise PreconditionError("index-out-of-range", f"cocycle({i},{k}) outside trace", "dyncore")
    return float(np.sum(trace.log_moduli()[i:i + k]))


@dataclass(frozen=True)
class Region:
    """Polydisk D(t_center, t_radius) x D(z_center, z_radius)."""

    t_radius: float
    z_radius: float
    t_center: complex = 0j
    z_center: complex = 0j


@dataclass(frozen=True)
class PartialSupBound:
    M: float
    region: Region


SUP_SAFETY = 1.1


def sup_partials(f: SkewMap, region: Region, grid_resolution: int = 64) -> PartialSupBound:
    """Grid bound for max(|dh/dz|, |dh/dt|) on a polydisk.

    Both partials are holomorphic, so their moduli peak on the distinguished
    boundary |t - tc| = rt, |z - zc| = rz; only that torus is sampled.
    """
    if grid_resolution < 2:
        raise PreconditionError("bad-resolution", "gridResolution must be >= 2", "dyncore")
    ang = np.exp(2j * np.pi * np.arange(grid_resolution) / grid_resolution)
    ts = region.t_center + region.t_radius * ang
    zs = region.z_center + region.z_radius * ang
    T, Z = np.meshgrid(ts, zs, indexing="ij")
    m = max(float(np.max(np.abs(f.dh_dz(T, Z)))), float(np.max(np.abs(f.dh_dt(T, Z)))))
    return PartialSupBound(max(SUP_SAFETY * m, abs(f.lam)), region)


# --- map definition files -------------------------------------------------

_MAP_KEYS = {"lambda_re", "lambda_im", "fiber_degree", "r_delta", "name"}


def _parse_complex(tok: str) -> complex:
    parts = tok.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(tok)


def parse_map(text: str, source: str = "<string>") -> SkewMap:
    vals: dict[str, str] = {}
    rows: dict[int, list[complex]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError("io-parse", f"{source}:{lineno}: expected key = value", "dyncore")
        key, val = (s.strip() for s in line.split("=", 1))
        if key.startswith("a[") and key.endswith("]"):
            try:
                j = int(key[2:-1])
                rows[j] = [_parse_complex(tok) for tok in val.split()]
            except ValueError:
                raise InputError("io-parse", f"{source}:{lineno}: bad coefficient line", "dyncore")
        elif key in _MAP_KEYS:
            vals[key] = val
        else:
            raise InputError("io-parse", f"{source}:{lineno}: unknown key {key!r}", "dyncore")
    try:
        d = int(vals["fiber_degree"])
        lam = complex(float(vals["lambda_re"]), float(vals.get("lambda_im", 0.0)))
        r_delta = float(vals.get("r_delta", 1.0))
    except (KeyError, ValueError) as exc:
        raise InputError("io-parse", f"{source}: missing or bad header field ({exc})", "dyncore")
    if any(j < 0 or j > d for j in rows):
        raise InputError("io-parse", f"{source}: coefficient index outside 0..{d}", "dyncore")
    width = max([len(r) for r in rows.values()] + [1])
    c = np.zeros((d + 1, width), dtype=complex)
    for j, r in rows.items():
        c[j, :len(r)] = r
    return SkewMap(lam, c, r_delta, vals.get("name", Path(source).stem))


def load_map(path) -> SkewMap:
    path = Path(path)
    if not path.exists():
        raise InputError("io-not-found", f"map file not found: {path}", "dyncore")
    return parse_map(path.read_text(), str(path))


def format_map(f: SkewMap) -> str:
    lines = []
    if f.name:
        lines.append(f"name = {f.name}")
    lines += [f"lambda_re = {float(f.lam.real)!r}", f"lambda_im = {float(f.lam.imag)!r}",
              f"fiber_degree = {f.degree}", f"r_delta = {float(f.r_delta)!r}"]
    for j, row in enumerate(f.coeffs):
        if np.any(row):
            lines.append(f"a[{j}] = " + " ".join(f"{float(c.real)!r},{float(c.imag)!r}" for c in row))
    return "\n".join(lines) + "\n"


BUILTIN_MAPS = ("example", "chebyshev", "circle", "basilica", "cubic")


def builtin_map(name: str) -> SkewMap:
    """One of the bundled maps: example, chebyshev, circle, basilica or cubic."""
    if name not in BUILTIN_MAPS:
        raise InputError("io-not-found", f"no built-in map named {name!r}", "dyncore")
    res = resources.files("skewlab") / "data" / f"{name}.map"
    return parse_map(res.read_text(), f"builtin:{name}")
