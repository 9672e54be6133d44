"""Command-line front end: one subcommand per operation, reproducible runs, flat-file reports.

Every run writes into the output directory a JSON summary named after the
command, its CSV/PGM tables, optional PNG figures and a manifest.json that
echoes the fully resolved configuration.  ``skewlab replay manifest.json``
re-runs a manifest.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import io as sio
from .dyncore import (
    BUILTIN_MAPS, FiberPolynomial, Point2, SkewMap, builtin_map, format_map, load_map, orbit,
)
from .errors import InputError, SkewlabError
from .parallel import set_threads

# ---------------------------------------------------------------- parameters


def _complex(s) -> complex:
    if isinstance(s, (int, float, complex)):
        return complex(s)
    try:
        return complex(str(s).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {s!r}")


def _floats(s) -> list[float]:
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    try:
        return [float(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {s!r}")


def _ints(s) -> list[int]:
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    try:
        return [int(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {s!r}")


def _opt_complex(s):
    return None if s in (None, "", "auto") else _complex(s)


def _opt_float(s):
    return None if s in (None, "", "auto") else float(s)


@dataclass(frozen=True)
class Param:
    kind: object
    default: object
    help: str
    choices: tuple | None = None


GLOBAL = {
    "map": Param(str, "builtin:example", "map file, or builtin:NAME (" + ", ".join(BUILTIN_MAPS) + ")"),
    "seed": Param(int, 0, "64-bit seed for every random draw"),
    "out": Param(str, "skewlab-out", "output directory"),
    "threads": Param(int, 1, "worker threads for the parallel sweeps"),
    "figures": Param(int, 1, "write PNG figures (0 or 1)"),
}

COMMANDS: dict[str, tuple[str, dict, object]] = {}


def command(name: str, help: str, **params: Param):
    def deco(fn):
        COMMANDS[name] = (help, params, fn)
        return fn
    return deco


# ---------------------------------------------------------------- run context


class Run:
    def __init__(self, name: str, cfg: dict, params: dict):
        self.name = name
        self.cfg = cfg
        self.params = params
        self.out = Path(cfg["out"])
        self.seed = int(cfg["seed"]) % 2**64
        self.threads = int(cfg["threads"])
        self.figures = bool(int(cfg["figures"]))
        self.artifacts: list[str] = []
        self._f: SkewMap | None = None

    @property
    def f(self) -> SkewMap:
        if self._f is None:
            spec = self.cfg["map"]
            self._f = builtin_map(spec[8:]) if spec.startswith("builtin:") else load_map(spec)
        return self._f

    @property
    def p(self) -> FiberPolynomial:
        return self.f.fiber

    def csv(self, name: str, header, rows):
        sio.write_csv(self.out / name, header, rows)
        self.artifacts.append(name)

    def pgm(self, name: str, gray):
        sio.write_pgm(self.out / name, gray)
        self.artifacts.append(name)

    def figure(self, name: str, fn, *args, **kw):
        if self.figures:
            from . import plotting

            getattr(plotting, fn)(self.out / name, *args, **kw)
            self.artifacts.append(name)


def _crit_prime_default(run: Run, c):
    from .onedim import classify_crit

    if c is not None:
        return c
    cp = classify_crit(run.p).crit_prime
    if len(cp) == 0:
        raise InputError("no-crit-prime", "the fiber polynomial has no Julia critical point; pass --c",
                         "cli")
    return complex(cp[0])


def _value_default(run: Run, v):
    return v if v is not None else complex(run.p(_crit_prime_default(run, None)))


# ---------------------------------------------------------------- dyncore / onedim


@command("orbit", "iterate the skew product and record vertical derivatives",
         t=Param(_complex, 0j, "base point t"), z=Param(_complex, 0j, "fiber point z"),
         n=Param(int, 50, "number of steps"))
def cmd_orbit(run: Run, t, z, n):
    tr = orbit(run.f, Point2(t, z), n)
    k = np.arange(len(tr.z))
    run.csv("orbit.csv", ["k", "t", "z", "vderiv"], zip(k.tolist(), tr.t, tr.z, tr.vderivs))
    run.figure("orbit.png", "line_plot", k, {"|z|": np.abs(tr.z)}, "k", "|z_k|", "orbit modulus")
    return {"steps": int(len(tr.z) - 1), "escaped": tr.escaped, "final": {"t": tr.t[-1], "z": tr.z[-1]}}


@command("crit", "critical points of the fiber polynomial with Julia/Fatou labels",
         budget=Param(int, 4000, "iteration budget per critical orbit"))
def cmd_crit(run: Run, budget):
    from .onedim import classify_crit

    cs = classify_crit(run.p, budget=budget)
    run.csv("crit.csv", ["c", "multiplicity", "label", "ambiguous"],
            zip(cs.points, cs.multiplicity.tolist(), cs.labels, cs.ambiguous))
    return {"points": cs.points, "labels": cs.labels, "crit_prime": cs.crit_prime}


@command("ce", "Collet-Eckmann growth along a critical value orbit",
         c=Param(_opt_complex, None, "Julia critical point (default: the first one)"),
         n=Param(int, 200, "orbit length"))
def cmd_ce(run: Run, c, n):
    from .onedim import ce_report

    c = _crit_prime_default(run, c)
    r = ce_report(run.p, c, n)
    k = np.arange(1, n + 1)
    run.csv("ce.csv", ["k", "log_abs_deriv"], zip(k.tolist(), r.log_derivs))
    run.figure("ce.png", "line_plot", k, {"log|(p^k)'(v)|": r.log_derivs}, "k", "log derivative")
    return {"c": c, "mu_ce": r.mu_ce, "C": r.C, "residual": r.residual, "plausible": r.plausible,
            "definitions": {"mu_ce": "fitted rate in |(p^k)'(v)| >= C mu_ce^k",
                            "C": "fitted constant in the same bound"}}


@command("lyapunov", "Lyapunov exponent at a critical value",
         v=Param(_opt_complex, None, "critical value (default: p of the first Julia critical point)"),
         n=Param(int, 100, "orbit length"))
def cmd_lyapunov(run: Run, v, n):
    from .onedim import lyapunov_at_value

    v = _value_default(run, v)
    r = lyapunov_at_value(run.p, v, n)
    k = np.arange(1, n + 1)
    run.csv("lyapunov.csv", ["k", "running_average"], zip(k.tolist(), r.running))
    run.figure("lyapunov.png", "line_plot", k, {"running average": r.running}, "k", "average")
    return {"v": v, "value": r.value,
            "definitions": {"value": "(1/n) sum of log|p'| along the orbit of v"}}


@command("wr", "weak-regularity sums per eta",
         v=Param(_opt_complex, None, "critical value"), n=Param(int, 10_000, "orbit length"),
         etas=Param(_floats, [0.1, 0.5, 1.0], "comma-separated eta grid"))
def cmd_wr(run: Run, v, n, etas):
    from .onedim import wr_profile

    v = _value_default(run, v)
    prof = wr_profile(run.p, v, n, etas)
    k = np.arange(1, n + 1)
    run.csv("wr.csv", ["k"] + [f"eta={e:g}" for e in etas],
            zip(k.tolist(), *[e.sums for e in prof]))
    return {"v": v, "entries": [{"eta": e.eta, "iota": e.iota, "C0": e.C0, "final_sum": e.sums[-1]}
                                for e in prof],
            "definitions": {"iota": "growth rate of the truncated sums",
                            "C0": "intercept of the linear fit"}}


@command("sr", "slow-recurrence violations of a critical value orbit",
         v=Param(_opt_complex, None, "critical value"), n=Param(int, 1000, "orbit length"),
         alpha=Param(float, 0.05, "rate alpha"))
def cmd_sr(run: Run, v, n, alpha):
    from .onedim import sr_check

    v = _value_default(run, v)
    bad = sr_check(run.p, v, n, alpha)
    return {"v": v, "alpha": alpha, "violations": bad, "count": len(bad)}


@command("przytycki", "first return times of small disks around a critical point",
         c=Param(_opt_complex, None, "Julia critical point"),
         eps=Param(_floats, [0.1, 0.03, 0.01, 0.003, 0.001], "comma-separated radii"),
         budget=Param(int, 200, "maximal return time"))
def cmd_przytycki(run: Run, c, eps, budget):
    from .onedim import przytycki_fit, przytycki_stat

    c = _crit_prime_default(run, c)
    res = [przytycki_stat(run.p, c, e, budget) for e in eps]
    run.csv("przytycki.csv", ["eps", "nstar", "samples"],
            [(r.eps, -1 if r.nstar is None else r.nstar, r.samples) for r in res])
    return {"c": c, "nstar": [r.nstar for r in res], "C": przytycki_fit(res),
            "definitions": {"C": "largest C with n*(eps) >= C log(1/eps) on the grid"}}


@command("dpu", "truncated sums of -log dist(., Crit') along an orbit",
         x=Param(_opt_complex, None, "start point (default: a critical value)"),
         n=Param(int, 1000, "orbit length"))
def cmd_dpu(run: Run, x, n):
    from .onedim import dpu_sum

    x = _value_default(run, x)
    r = dpu_sum(run.p, x, n)
    return {"x": x, "total": r.total, "Q": r.Q, "M": r.M, "clipped": r.clipped, "offset": r.offset,
            "empty_crit": r.empty_crit,
            "definitions": {"Q": "sup over prefixes of truncated sum / length"}}


@command("shrink", "pullback diameters of a small disk on the Julia set",
         x=Param(_complex, 1 + 0j, "centre on the Julia set"), r=Param(float, 0.1, "radius"),
         n=Param(int, 20, "pullback depth"), branches=Param(int, 64, "random branches"),
         r_grid=Param(_floats, [], "optional radii for the exponent fit"))
def cmd_shrink(run: Run, x, r, n, branches, r_grid):
    from .onedim import exp_shrink_estimate, theta_fit

    res = exp_shrink_estimate(run.p, x, r, n, branches, seed=run.seed)
    k = np.arange(n + 1)
    run.csv("shrink.csv", ["k", "max_diam"], zip(k.tolist(), res.max_diam))
    run.figure("shrink.png", "line_plot", k, {"max diameter": res.max_diam}, "depth", "diameter",
               logy=True)
    out = {"mu_exp": res.mu_exp, "residual": res.residual,
           "critical_pullbacks": int(res.critical.sum()),
           "unresolved": int(np.sum(res.unresolved >= 0)),
           "definitions": {"mu_exp": "fitted rate in diam <= mu_exp^-n"}}
    if r_grid:
        th = theta_fit(run.p, x, r_grid, n, branches, seed=run.seed)
        out.update(theta0=th.theta0, C0=th.C0)
        out["definitions"]["theta0"] = "fitted exponent in diam <= C0 mu^-n r^theta0"
    return out


@command("boxdim", "box-counting dimension of a sampled Julia cloud",
         count=Param(int, 100_000, "cloud size"), levels=Param(int, 16, "dyadic levels"))
def cmd_boxdim(run: Run, count, levels):
    from .onedim import box_dimension, julia_sample

    s = julia_sample(run.p, count, seed=run.seed, threads=run.threads)
    b = box_dimension(s.cloud, levels)
    run.csv("boxdim.csv", ["eps", "count", "used"], zip(b.eps, b.counts.tolist(), b.used.tolist()))
    run.figure("cloud.png", "scatter_plot", s.cloud, "Julia cloud")
    return {"dimension": b.dimension, "residual": b.residual,
            "definitions": {"dimension": "slope of log N(eps) against log(1/eps)"}}


@command("km", "areas of the sets K_m that avoid the trapping region for m steps",
         m_max=Param(int, 14, "largest m"), grid=Param(int, 1024, "grid cells per side"),
         disk_radius=Param(_opt_float, None, "override the cycle-disk radius"),
         infinity_radius=Param(_opt_float, None, "override the infinity radius"))
def cmd_km(run: Run, m_max, grid, disk_radius, infinity_radius):
    from .onedim import TrappingRegion, build_trap, km_measure

    trap = build_trap(run.p)
    if disk_radius is not None:
        trap = TrappingRegion([(c, disk_radius) for c, _ in trap.cycle_disks], trap.infinity_radius,
                              0, trap.successor)
    if infinity_radius is not None:
        trap = TrappingRegion(trap.cycle_disks, infinity_radius, 0, trap.successor)
    r = km_measure(run.p, trap, m_max, grid, threads=run.threads)
    run.csv("km.csv", ["m", "area"], zip(r.m.tolist(), r.area))
    run.figure("km.png", "line_plot", r.m, {"area": r.area}, "m", "area of K_m", logy=True,
               markers=True)
    return {"slope": r.slope, "residual": r.residual,
            "non_increasing": bool(np.all(np.diff(r.area) <= 0)),
            "definitions": {"slope": "fitted slope of log area(K_m) against m"}}


@command("blaschke", "preimage measures under random Blaschke products",
         D=Param(int, 3, "maximal degree (0 draws rotations)"), trials=Param(int, 500, "products"),
         points=Param(int, 100_000, "quasi-Monte Carlo points per measure"))
def cmd_blaschke(run: Run, D, trials, points):
    from .onedim import blaschke_measure_check

    r = blaschke_measure_check(D, trials, seed=run.seed, points=points)
    run.csv("blaschke.csv", ["trial", "degree", "ratio"],
            zip(range(trials), r.degrees.tolist(), r.ratios))
    return {"worst_ratio": r.worst_ratio, "z2_measured": r.z2_measured,
            "z2_analytic": r.z2_analytic, "z2_rel_error": r.z2_rel_error,
            "definitions": {"worst_ratio": "max of meas G^-1(R) / meas(R)^(2^-D)"}}


# ---------------------------------------------------------------- stable


def _schedule_inputs(run: Run, v, depth, N, eps0):
    from .onedim import (
        exp_shrink_estimate, fiber_orbit, hyperbolic_away_batch, julia_sample,
    )
    from .onedim.conditions import crit_prime, dist_to_set
    from .stable import select_block_length

    p = run.p
    zs = fiber_orbit(p, v, depth)
    derivs = np.abs(p.deriv(zs[:depth]))
    mu = None
    if N == 0:
        cloud = julia_sample(p, 20_000, seed=run.seed, threads=run.threads).cloud
        x0 = complex(cloud[0])
        mu = exp_shrink_estimate(p, x0, 0.1, 20, 64, seed=run.seed).mu_exp
        away = hyperbolic_away_batch(p, cloud, 8, [0.05, 0.1, 0.2, 0.4], mu, seed=run.seed)
        eta = float(np.min(dist_to_set(zs, crit_prime(p))))
        N = select_block_length(away.C1, away.alpha, eta, mu, eps0)
    return zs, derivs, N, mu


@command("blocks", "block schedule along a critical value orbit",
         v=Param(_opt_complex, None, "critical value"), depth=Param(int, 500, "orbit length"),
         N=Param(int, 0, "block length (0 selects it from fitted constants)"),
         eps0=Param(float, 0.05, "epsilon_0"))
def cmd_blocks(run: Run, v, depth, N, eps0):
    from .stable import block_schedule, verify_schedule

    v = _value_default(run, v)
    zs, derivs, N, mu = _schedule_inputs(run, v, depth, N, eps0)
    s = block_schedule(derivs, N, eps0, run.f.lam, mu)
    run.csv("blocks.csv", ["m", "a", "mu", "type"],
            [(m, s.derivs[m], s.mu[m], s.types[s.block_of(m)]) for m in range(depth)])
    bad = verify_schedule(s)
    return {"v": v, "N": N, "first_type": s.types.count("first"),
            "second_type": s.types.count("second"), "problems": bad, "passed": not bad}


@command("radii", "vertical radii of the bidisk sequence and their bounds",
         v=Param(_opt_complex, None, "critical value"), depth=Param(int, 500, "depth"),
         N=Param(int, 0, "block length (0 selects it)"), eps0=Param(float, 0.05, "epsilon_0"),
         r0=Param(float, 1e-3, "initial radius"),
         mode=Param(str, "tce", "schedule rule", ("tce", "pl")),
         chi=Param(_opt_float, None, "vertical exponent for the pl rule (default: fitted)"))
def cmd_radii(run: Run, v, depth, N, eps0, r0, mode, chi):
    from .onedim import lyapunov_at_value
    from .stable import block_schedule, radii_pl, radii_tce_wr

    v = _value_default(run, v)
    zs, derivs, N, mu = _schedule_inputs(run, v, depth, N if mode == "tce" else 1, eps0)
    if mode == "tce":
        bd = radii_tce_wr(block_schedule(derivs, N, eps0, run.f.lam, mu), r0, depth, zs)
    else:
        chi = lyapunov_at_value(run.p, v, depth).value if chi is None else chi
        bd = radii_pl(chi, eps0, r0, derivs, depth, zs)
    k = np.arange(depth + 1)
    run.csv("radii.csv", ["i", "center", "horizontal", "vertical"],
            zip(k.tolist(), bd.centers, bd.horiz, bd.vert))
    run.figure("radii.png", "line_plot", k, {"vertical": bd.vert, "horizontal": bd.horiz}, "i",
               "radius", logy=True)
    return {"mode": mode, "N": N, "C2": bd.C2, "C3": bd.C3, "exponent": bd.exponent,
            "violations": bd.violations, "passed": bd.violations == 0,
            "definitions": {"C2": "upper band constant", "C3": "lower band constant"}}


def _bidisks(run: Run, v, r0, eps0, depth):
    from .stable import bidisks_along

    return bidisks_along(run.f, v, r0, eps0, depth)


@command("henon", "sampled Henon-like checks along the bidisk sequence",
         v=Param(_opt_complex, None, "critical value"), r0=Param(float, 1e-3, "initial radius"),
         eps0=Param(float, 0.05, "epsilon_0"), depth=Param(int, 30, "levels"),
         samples=Param(int, 2048, "boundary samples"))
def cmd_henon(run: Run, v, r0, eps0, depth, samples):
    from .stable import henon_check

    v = _value_default(run, v)
    bd = _bidisks(run, v, r0, eps0, depth)
    recs = [henon_check(run.f, bd, i, samples) for i in range(depth)]
    run.csv("henon.csv", ["i", "horizontal_ok", "margin", "sampling_error", "vertical_ok",
                          "degree_ok"],
            [(r.i, r.horizontal_ok, r.horizontal_margin, r.sampling_error, r.vertical_ok,
              r.degree_ok) for r in recs])
    return {"v": v, "passed": all(r.passed for r in recs),
            "min_margin_over_error": min(r.horizontal_margin / r.sampling_error for r in recs),
            "windings": sorted({w for r in recs for w in r.windings}),
            "modulus_lower_bound": recs[0].modulus_lb}


@command("stable", "stable graph at a critical value by backward Newton solves",
         v=Param(_opt_complex, None, "critical value"), r0=Param(float, 1e-3, "initial radius"),
         eps0=Param(float, 0.05, "epsilon_0"), depth=Param(int, 30, "graph depth"))
def cmd_stable(run: Run, v, r0, eps0, depth):
    from .stable import graph_transform, shadow_rate

    v = _value_default(run, v)
    bd = _bidisks(run, v, r0, eps0, depth + 25)
    g = graph_transform(run.f, bd, depth)
    sh = shadow_rate(g, run.f, depth)
    run.csv("stable.csv", ["t", "g"], zip(g.t, g.g))
    n = np.arange(depth + 1)
    run.figure("shadow.png", "line_plot", n, {"max distance": sh.distances.max(axis=0)}, "n",
               "vertical distance to the critical value orbit", logy=True)
    ok = g.residual < 1e-10 and g.certificate < 1e-8 and sh.lam1 < 1
    return {"v": v, "residual": g.residual, "certificate": g.certificate, "lambda1": sh.lam1,
            "C0": sh.C0, "passed": ok,
            "definitions": {"lambda1": "fitted shadowing rate", "C0": "shadowing constant"}}


def _branch_setup(run: Run, c0, r0, eps0, depth):
    from .stable import critical_branch

    br = critical_branch(run.f, c0)
    bd = _bidisks(run, br.v, r0, eps0, depth)
    return br, bd


@command("renorm", "renormalization scales along a critical value curve",
         c0=Param(_opt_complex, None, "critical point on the invariant fiber"),
         nmax=Param(int, 12, "deepest level"), r0=Param(float, 1e-3, "initial radius"),
         eps0=Param(float, 0.05, "epsilon_0"))
def cmd_renorm(run: Run, c0, nmax, r0, eps0):
    from .fitting import fit_line
    from .stable import renorm_scales

    c0 = _crit_prime_default(run, c0)
    br, bd = _branch_setup(run, c0, r0, eps0, max(nmax, 1))
    sc = renorm_scales(run.f, br, bd, nmax)
    rho = np.array([s.rho for s in sc])
    n = np.arange(len(sc))
    run.csv("renorm.csv", ["n", "rho", "diamD", "degree"],
            [(s.n, s.rho, s.diamD, s.degree) for s in sc])
    run.figure("renorm.png", "line_plot", n, {"rho_n": rho, "r_n": bd.vert[:len(sc)]}, "n",
               "scale", logy=True, markers=True)
    fit = fit_line(n, np.log(rho / bd.vert[:len(sc)]), burn_in=0.0)
    return {"c0": c0, "l": br.l, "psi_prime0": br.psi_prime0, "slope": fit.slope,
            "non_increasing": bool(np.all(np.diff(rho) <= 0)),
            "degrees": [s.degree for s in sc],
            "definitions": {"slope": "fitted slope of log(rho_n / r_n) against n"}}


@command("escape", "fraction of a shrinking curve piece captured by the trapping region",
         c0=Param(_opt_complex, None, "critical point on the invariant fiber"),
         s=Param(_ints, [20, 30, 40, 50, 60], "comma-separated scales s"),
         samples=Param(int, 10_000, "samples per scale"), eps=Param(float, 1e-3, "lift margin"),
         depth=Param(int, 30, "renormalization depth"), r0=Param(float, 1e-3, "initial radius"),
         eps0=Param(float, 0.05, "epsilon_0"))
def cmd_escape(run: Run, c0, s, samples, eps, depth, r0, eps0):
    from .stable import escape_fraction, renorm_scales
    from .twodim import build_trap2d

    c0 = _crit_prime_default(run, c0)
    br, bd = _branch_setup(run, c0, r0, eps0, depth)
    rho = np.array([x.rho for x in renorm_scales(run.f, br, bd, depth)])
    trap = build_trap2d(run.f)
    res = [escape_fraction(run.f, br, trap, k, samples, run.seed + k, rho, eps=eps,
                           threads=run.threads) for k in s]
    run.csv("escape.csv", ["s", "j", "steps", "fraction", "complement", "sigma"],
            [(r.s, r.j, r.steps, r.fraction, r.complement, r.sigma) for r in res])
    run.figure("escape.png", "line_plot", s, {"complement": [r.complement for r in res]}, "s",
               "not captured", markers=True)
    return {"complement": [r.complement for r in res], "sigma": [r.sigma for r in res]}


# ---------------------------------------------------------------- twodim


def _parse_logs(spec: str) -> np.ndarray:
    """const:VALUE:N, alt:A:B:N or file:PATH (one number per line); VALUE may be log2 or logK."""
    def num(tok: str) -> float:
        if tok.startswith("log"):
            return math.log(float(tok[3:]))
        return float(tok)

    kind, _, rest = spec.partition(":")
    try:
        if kind == "const":
            val, n = rest.rsplit(":", 1)
            return np.full(int(n), num(val))
        if kind == "alt":
            a, b, n = rest.split(":")
            return np.where(np.arange(int(n)) % 2 == 0, num(a), num(b))
        if kind == "file":
            path = Path(rest)
            if not path.exists():
                raise InputError("io-not-found", f"log file not found: {path}", "cli")
            return np.array([float(x) for x in path.read_text().split()])
    except ValueError:
        pass
    raise InputError("bad-logs", f"cannot parse --logs {spec!r}", "cli")


@command("pliss", "hyperbolic times of a sequence of log-derivatives",
         sigma=Param(float, 1.5, "expansion threshold sigma > 1"),
         logs=Param(str, "const:log2:1000", "const:V:N, alt:A:B:N or file:PATH"))
def cmd_pliss(run: Run, sigma, logs):
    from .twodim import pliss_hyperbolic_times

    r = pliss_hyperbolic_times(_parse_logs(logs), sigma)
    run.csv("pliss.csv", ["m"], [(m,) for m in r.times.tolist()])
    return {"sigma": sigma, "n": len(r.log_derivs), "count": len(r.times), "density": r.density}


@command("slowapproach", "slow approach of orbits to the critical branches",
         t=Param(_opt_complex, None, "single point base coordinate (batch mode if omitted)"),
         z=Param(_opt_complex, None, "single point fiber coordinate"),
         alpha=Param(float, 0.05, "rate alpha"), n_lo=Param(int, 150, "window start"),
         n_hi=Param(int, 300, "window end"), fibers=Param(int, 100, "sampled fibers (batch)"),
         samples=Param(int, 1000, "points per fiber (batch)"),
         z_range=Param(float, 2.5, "half-width of the real z sampling interval (batch)"))
def cmd_slowapproach(run: Run, t, z, alpha, n_lo, n_hi, fibers, samples, z_range):
    from .twodim import slow_approach_batch, slow_approach_test, vertical_field

    field = vertical_field(run.f)
    if z is not None:
        r = slow_approach_test(run.f, field, Point2(t or 0j, z), alpha, (n_lo, n_hi))
        return {"violations": r.violations, "escaped_at": r.escaped_at,
                "empty_crit": field.empty}
    rng = np.random.default_rng(run.seed)
    T = rng.uniform(-run.f.r_delta, run.f.r_delta, fibers)[:, None]
    Z = rng.uniform(-z_range, z_range, (fibers, samples))
    b = slow_approach_batch(run.f, field, alpha, (n_lo, n_hi), T, Z, threads=run.threads)
    run.csv("slowapproach.csv", ["t", "bounded", "violating_fraction"],
            zip(b.fibers.real, b.bounded.tolist(), b.violating_fraction))
    return {"violating_fraction": b.overall, "bounded_points": int(b.bounded.sum()),
            "empty_crit": field.empty}


@command("vlyap", "running vertical Lyapunov averages along an orbit",
         t=Param(_complex, 0j, "base point"), z=Param(_complex, -2 + 0j, "fiber point"),
         n=Param(int, 400, "orbit length"))
def cmd_vlyap(run: Run, t, z, n):
    from .twodim import vertical_lyapunov

    r = vertical_lyapunov(run.f, Point2(t, z), n)
    k = np.arange(1, n + 1)
    run.csv("vlyap.csv", ["k", "running_average"], zip(k.tolist(), r.running))
    run.figure("vlyap.png", "line_plot", k, {"running average": r.running}, "k", "average")
    return {"liminf_proxy": r.liminf_proxy,
            "definitions": {"liminf_proxy": "minimum running average over the final quarter"}}


@command("shadow", "shadow-set membership along an orbit",
         t=Param(_complex, 0j, "base point"), z=Param(_complex, -2 + 0j, "fiber point"),
         n=Param(int, 1000, "orbit length"), K=Param(float, 1.0, "shadow scale K"),
         N=Param(int, 1, "multiplicity bound N"))
def cmd_shadow(run: Run, t, z, n, K, N):
    from .twodim import phi_orbit, shadow_membership, vertical_field

    ph = phi_orbit(run.f, vertical_field(run.f), Point2(t, z), n)
    s = shadow_membership(ph.phi, K, N, ph.C)
    run.csv("shadow.csv", ["n", "phi", "count", "member"],
            zip(range(1, n + 1), ph.phi, s.counts.tolist(), s.member.tolist()))
    return {"C": ph.C, "offset": ph.offset, "clipped": ph.clipped, "density": s.density,
            "bound": s.bound, "passed": s.holds, "empty_crit": ph.empty_crit,
            "definitions": {"C": "sup of the phi partial averages",
                            "bound": "1 - C K / (N + 1)"}}


def _window(window, plane, t_fixed):
    from .twodim import Window

    if len(window) != 4:
        raise InputError("bad-window", "window needs four numbers x0,x1,y0,y1", "cli")
    return Window(*window, plane=plane, t_fixed=t_fixed)


WINDOW = Param(_floats, [-0.3, 0.3, -2.5, 2.5], "x0,x1,y0,y1 (real t by real z, or Re z by Im z)")
PLANE = Param(str, "tz", "tz: real slice; z: complex fiber over t_fixed", ("tz", "z"))


@command("classify", "Fatou/Julia labels of a point or a raster",
         t=Param(_complex, 0j, "base point (point mode)"),
         z=Param(_opt_complex, None, "fiber point; raster mode if omitted"),
         budget=Param(int, 400, "iteration budget"), resolution=Param(int, 512, "pixels per side"),
         window=WINDOW, plane=PLANE, t_fixed=Param(_complex, 0j, "fiber for plane z"))
def cmd_classify(run: Run, t, z, budget, resolution, window, plane, t_fixed):
    from .twodim import build_trap2d, classify_point, classify_raster

    trap = build_trap2d(run.f)
    if z is not None:
        return {"label": classify_point(run.f, trap, Point2(t, z), budget)}
    w = _window(window, plane, t_fixed)
    r = classify_raster(run.f, trap, w, resolution, budget, threads=run.threads)
    run.pgm("classify.pgm", r.gray())
    labels = ("Re t", "z") if plane == "tz" else ("Re z", "Im z")
    run.figure("classify.png", "raster_plot", r.gray(), [w.x0, w.x1, w.y0, w.y1], *labels)
    return {"suspect_area": r.area(0), "escaping_area": r.area(1),
            "basin_area": r.area(basins=True), "r_bulge": trap.r_bulge,
            "gray_levels": {"escaping": 255, "basin k": "64 + (32 k mod 192)", "julia-suspect": 0}}


@command("area", "Julia-suspect area table over resolutions and budgets",
         resolutions=Param(_ints, [512, 1024], "comma-separated resolutions"),
         budgets=Param(_ints, [100, 400, 1600], "comma-separated budgets"),
         window=WINDOW, plane=PLANE, t_fixed=Param(_complex, 0j, "fiber for plane z"))
def cmd_area(run: Run, resolutions, budgets, window, plane, t_fixed):
    from .twodim import build_trap2d, julia_area_estimate

    w = _window(window, plane, t_fixed)
    rows, rasters = julia_area_estimate(run.f, build_trap2d(run.f), w, resolutions, budgets,
                                        threads=run.threads)
    run.csv("area.csv", ["resolution", "budget", "suspect_area", "escaping_area", "basin_area"],
            [(r.resolution, r.budget, r.suspect_area, r.escaping_area, r.basin_area) for r in rows])
    for (res, b), r in sorted(rasters.items()):
        run.pgm(f"area_{res}_{b}.pgm", r.gray())
    for res in resolutions:
        run.figure(f"area_{res}.png", "line_plot", budgets,
                   {"suspect": [r.suspect_area for r in rows if r.resolution == res]}, "budget",
                   "area", markers=True)
    non_inc = all(a.suspect_area >= b.suspect_area for a, b in zip(rows, rows[1:])
                  if a.resolution == b.resolution)
    return {"rows": [vars(r) for r in rows], "non_increasing_in_budget": non_inc}


@command("selftest", "run the acceptance suite",
         criteria=Param(_ints, [], "comma-separated criterion numbers (default: all)"),
         other_threads=Param(int, 8, "thread count compared against in the determinism check"))
def cmd_selftest(run: Run, criteria, other_threads):
    from .acceptance import run_suite

    res = run_suite(criteria or None, threads=run.threads, other_threads=other_threads,
                    echo=lambda s: print(s, flush=True))
    run.csv("selftest.csv", ["criterion", "title", "passed", "seconds"],
            [(r.number, r.title, r.passed, round(r.seconds, 3)) for r in res])
    failed = [r.number for r in res if not r.passed]
    return {"results": [{"criterion": r.number, "title": r.title, "passed": r.passed,
                         "values": r.values} for r in res],
            "failed": failed, "passed": not failed}


# ---------------------------------------------------------------- driver


def _read_config_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise InputError("io-not-found", f"config file not found: {p}", "cli")
    out = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError("io-parse", f"{p}:{lineno}: expected key = value", "cli")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _add_params(sp, params: dict):
    for key, prm in params.items():
        kind = prm.kind
        sp.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind, default=argparse.SUPPRESS,
                        choices=prm.choices, help=f"{prm.help} (default: {prm.default!r})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skewlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"skewlab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    _add_params(common, GLOBAL)
    common.add_argument("--no-figures", dest="figures", action="store_const", const=0,
                        default=argparse.SUPPRESS, help="skip PNG figures")
    common.add_argument("--config", dest="config_file", default=None,
                        help="plain-text key=value file; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (help_, params, _) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, parents=[common], description=help_)
        _add_params(sp, params)
    rp = sub.add_parser("replay", help="re-run a manifest.json", parents=[common])
    rp.add_argument("manifest")
    return parser


def resolve(command_name: str, explicit: dict, file_values: dict | None = None) -> tuple[dict, dict]:
    """Merge defaults, config-file values and explicit flags; unknown keys are rejected."""
    _, params, _ = COMMANDS[command_name]
    file_values = dict(file_values or {})
    unknown = sorted(set(file_values) - set(params) - set(GLOBAL))
    if unknown:
        raise InputError("unknown-key", f"unknown configuration keys: {', '.join(unknown)}", "cli",
                         keys=unknown)
    cfg, prm = {}, {}
    for table, spec in ((cfg, GLOBAL), (prm, params)):
        for key, p in spec.items():
            if key in explicit:
                val = explicit[key]
            elif key in file_values:
                try:
                    val = p.kind(file_values[key])
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise InputError("io-parse", f"bad value for {key}: {exc}", "cli")
                if p.choices and val not in p.choices:
                    raise InputError("io-parse", f"{key} must be one of {p.choices}", "cli")
            else:
                val = p.default
            table[key] = val
    return cfg, prm


def execute(command_name: str, cfg: dict, prm: dict) -> int:
    _, _, fn = COMMANDS[command_name]
    if int(cfg["threads"]) < 1:
        raise InputError("bad-threads", "threads must be >= 1", "cli")
    set_threads(int(cfg["threads"]))
    run = Run(command_name, cfg, prm)
    summary = fn(run, **prm)
    summary = {"command": command_name, **summary}
    out = run.out
    sio.write_json(out / f"{command_name}.json", summary)
    manifest = {"skewlab_version": __version__, "command": command_name, "config": cfg,
                "params": prm, "artifacts": sorted(run.artifacts + [f"{command_name}.json"])}
    if run._f is not None:
        manifest["map_text"] = format_map(run._f)
    sio.write_json(out / "manifest.json", manifest)
    print(sio.dumps(summary), end="")
    return 1 if summary.get("passed") is False else 0


def _replay(path: str, explicit: dict) -> tuple[str, dict, dict]:
    p = Path(path)
    if not p.exists():
        raise InputError("io-not-found", f"manifest not found: {p}", "cli")
    try:
        m = json.loads(p.read_text())
        name = m["command"]
        raw = {**m["config"], **m["params"]}
    except (ValueError, KeyError) as exc:
        raise InputError("io-parse", f"bad manifest: {exc}", "cli")
    if name not in COMMANDS:
        raise InputError("io-parse", f"manifest names unknown command {name!r}", "cli")
    _, params, _ = COMMANDS[name]
    vals = {}
    for k, v in raw.items():
        spec = params.get(k) or GLOBAL.get(k)
        if spec is None:
            raise InputError("unknown-key", f"unknown manifest key {k}", "cli")
        if isinstance(v, dict) and set(v) == {"re", "im"}:
            v = complex(float(v["re"]), float(v["im"]))
        vals[k] = v if v is None else spec.kind(v)
    vals.update({k: v for k, v in explicit.items() if k in GLOBAL})
    cfg, prm = resolve(name, vals)
    return name, cfg, prm


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    name = args.pop("command")
    config_file = args.pop("config_file", None)
    try:
        if name == "replay":
            name, cfg, prm = _replay(args.pop("manifest"), args)
        else:
            file_values = _read_config_file(config_file) if config_file else {}
            cfg, prm = resolve(name, args, file_values)
        return execute(name, cfg, prm)
    except SkewlabError as exc:
        print(json.dumps({"error": exc.record()}, default=str), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
