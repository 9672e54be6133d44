from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skewlab import Point2, PreconditionError, SkewMap, builtin_map
from skewlab.onedim import lyapunov_at_value
from skewlab.stable import bidisks_along
from skewlab.stable.graph import backward_orbit
from skewlab.twodim import (
    Window, build_trap2d, classify_point, classify_raster, dist_v_crit, expanding_horizon,
    gray_level, julia_area_estimate, phi_orbit, pliss_bruteforce, pliss_hyperbolic_times,
    shadow_membership, slow_approach_test, vertical_field, vertical_lyapunov,
)

TZ = Window(-0.3, 0.3, -2.5, 2.5)


@pytest.fixture(scope="module")
def field(example):
    return vertical_field(example)


@pytest.fixture(scope="module")
def trap(example):
    return build_trap2d(example)


@pytest.fixture(scope="module")
def basilica():
    f = builtin_map("basilica")
    return f, build_trap2d(f)


# vertical distance and slow approach

def test_dist_v_to_critical_branch(example, field):
    assert dist_v_crit(field, Point2(0, 1)) == 1
    assert dist_v_crit(field, Point2(0.2, 0)) == 0


def test_dist_v_without_julia_critical_points():
    f = SkewMap.from_poly(0.5, [0, 0, 1], {})
    fld = vertical_field(f)
    assert fld.empty
    assert dist_v_crit(fld, Point2(0, 0.5)) == math.inf


def test_dist_v_outside_base_disk(field):
    with pytest.raises(PreconditionError):
        dist_v_crit(field, Point2(2, 0))


def test_slow_approach_fixed_point_never_violates(example, field):
    assert slow_approach_test(example, field, Point2(0, -2), 0.05, (0, 200)).violations == []


def test_slow_approach_reports_exact_branch_hit(example, field):
    # (0, 0) -> (0, -2) -> (0, 2): the orbit sits on the branch c = 0 only at n = 0
    assert slow_approach_test(example, field, Point2(0, 0), 0.05, (0, 20)).violations == [0]
    # z = sqrt(2) maps onto the critical point at n = 1
    assert slow_approach_test(example, field, Point2(0, math.sqrt(2)), 0.05, (0, 20)).violations[0] == 1


def test_slow_approach_huge_alpha_is_empty(example, field):
    assert slow_approach_test(example, field, Point2(0.1, 0.3), 1e6, (1, 200)).violations == []


def test_slow_approach_flags_escape(example, field):
    res = slow_approach_test(example, field, Point2(0, 3), 0.05, (0, 50))
    assert res.escaped_at is not None and res.violations == []


@given(st.floats(-0.5, 0.5), st.floats(-2.0, 2.0), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_slow_approach_monotone_in_alpha(example, field, t, z, a1, a2):
    hi, lo = max(a1, a2), min(a1, a2)
    x = Point2(t, z)
    strict = set(slow_approach_test(example, field, x, hi, (0, 120)).violations)
    loose = set(slow_approach_test(example, field, x, lo, (0, 120)).violations)
    assert strict <= loose


# vertical Lyapunov exponents

def test_vertical_lyapunov_fixed_point(example):
    res = vertical_lyapunov(example, Point2(0, -2), 50)
    assert np.allclose(res.running, math.log(4), rtol=0, atol=1e-13)
    assert res.liminf_proxy == pytest.approx(math.log(4))


def test_vertical_lyapunov_unit_circle():
    f = SkewMap.from_poly(0.5, [0, 0, 1], {})
    res = vertical_lyapunov(f, Point2(0, np.exp(0.7j)), 40)
    assert np.allclose(res.running, math.log(2), atol=1e-12)


def test_vertical_lyapunov_empty(example):
    assert len(vertical_lyapunov(example, Point2(0, -2), 0).running) == 0


def test_vertical_lyapunov_on_stable_graph(example):
    # forward iteration from the graph loses the orbit to rounding within a
    # few dozen steps, so the orbit is read off the backward solve instead
    n, t = 200, 5e-4
    bd = bidisks_along(example, -2, 1e-3, 0.05, n)
    rows, _ = backward_orbit(example, bd.centers, np.array([t]), n)
    ts = t * example.lam ** np.arange(n)
    logs = np.log(np.abs(example.dh_dz(ts, rows[:n, 0])))
    target = lyapunov_at_value(example.fiber, -2, 400).value
    assert abs(np.mean(logs) - target) < 0.05


# phi orbits and shadows

def test_phi_constant_along_fixed_point(example, field):
    res = phi_orbit(example, field, Point2(0, -2), 30)
    assert np.allclose(res.phi, -math.log(2) + res.offset)
    assert res.C == pytest.approx(-math.log(2) + res.offset)


def test_phi_empty_orbit(example, field):
    res = phi_orbit(example, field, Point2(0, -2), 0)
    assert len(res.phi) == 0 and res.C == 0


def test_phi_without_julia_critical_points():
    f = SkewMap.from_poly(0.5, [0, 0, 1], {})
    res = phi_orbit(f, vertical_field(f), Point2(0, 0.5), 10)
    assert res.empty_crit and np.all(res.phi == res.offset)


def test_shadow_unit_intervals_tile():
    cfg = shadow_membership(np.ones(50), 1.0, 1)
    assert np.all(cfg.counts[1:] == 1) and cfg.member.all() and cfg.holds


def test_shadow_tiny_K_and_huge_N():
    phi = np.random.default_rng(1).uniform(0, 5, 200)
    assert shadow_membership(phi, 1e-9, 0).member.all()
    assert shadow_membership(phi, 3.0, 10**6).member.all()


@given(st.lists(st.floats(0, 8), min_size=1, max_size=80), st.floats(0.05, 3), st.integers(0, 20))
def test_shadow_counts_match_direct_count(phi, K, N):
    cfg = shadow_membership(phi, K, N)
    n = len(phi)
    direct = [sum(1 for j in range(n) if j < m <= math.floor(j + K * phi[j] + 1e-12))
              for m in range(1, n + 1)]
    assert cfg.counts.tolist() == direct
    assert cfg.holds


# hyperbolic times

def test_pliss_uniform_expansion():
    rec = pliss_hyperbolic_times(np.full(100, math.log(2)), 1.5)
    assert rec.times.tolist() == list(range(1, 101)) and rec.density == 1


def test_pliss_alternating():
    # m = 1 meets the bound with equality (L_0 = 1 = log e); no later m does
    rec = pliss_hyperbolic_times(np.tile([1.0, -1.0], 50), math.e)
    assert rec.times.tolist() == [1]


def test_pliss_rejects_sigma_at_most_one():
    with pytest.raises(PreconditionError):
        pliss_hyperbolic_times([1.0], 1.0)


def test_pliss_matches_bruteforce_on_random_sequences():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        L = rng.normal(0.5, 1.5, rng.integers(1, 60))
        sigma = float(np.exp(rng.uniform(0.01, 1.0)))
        assert pliss_hyperbolic_times(L, sigma).times.tolist() == pliss_bruteforce(L, sigma).tolist()


@given(st.lists(st.integers(-4, 4), min_size=1, max_size=60))
def test_pliss_matches_bruteforce_exact_arithmetic(L):
    # log e == 1 exactly, so every partial sum is an exact integer and ties are decided exactly
    L = np.array(L, dtype=float)
    assert pliss_hyperbolic_times(L, math.e).times.tolist() == pliss_bruteforce(L, math.e).tolist()


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=60), st.floats(1.01, 5), st.floats(1.01, 5))
def test_pliss_monotone_in_sigma(L, s1, s2):
    lo, hi = min(s1, s2), max(s1, s2)
    assert set(pliss_hyperbolic_times(L, hi).times) <= set(pliss_hyperbolic_times(L, lo).times)


def test_expanding_horizon():
    assert expanding_horizon(math.exp(-100), 0.3, 2.0) == 30
    assert expanding_horizon(1.0, 0.3, 2.0) == 0
    assert expanding_horizon(0, 0.3, 2.0) == math.inf
    with pytest.raises(PreconditionError):
        expanding_horizon(0.1, 1 / math.log(2.0), 2.0)


# classification

def test_classify_examples(example, trap):
    assert classify_point(example, trap, Point2(0, 10), 10) == "escaping"
    for budget in (10, 100, 1000):
        assert classify_point(example, trap, Point2(0, 2), budget) == "julia-suspect"


def test_classify_basilica_captures_cycle(basilica):
    f, trap = basilica
    assert classify_point(f, trap, Point2(0.1, 0), 200).startswith("basin-")


def test_gray_levels():
    assert gray_level(np.array([1, 0, 2, 3, 8])).tolist() == [255, 0, 64, 96, 64]


def test_area_budget_zero_and_escape_window(example, trap):
    rows, _ = julia_area_estimate(example, trap, TZ, [32], [0])
    assert rows[0].suspect_area == pytest.approx(TZ.area)
    far = Window(-0.3, 0.3, 5.0, 6.0)
    rows, _ = julia_area_estimate(example, trap, far, [32], [0, 5])
    assert rows[1].suspect_area == 0


def test_budget_doubling_refines_one_way(basilica):
    f, trap = basilica
    w = Window(-1.6, 1.6, -1.6, 1.6, plane="z", t_fixed=0.05)
    for b in (10, 40, 160):
        small = classify_raster(f, trap, w, 64, b)
        big = classify_raster(f, trap, w, 64, 2 * b)
        changed = small.labels != big.labels
        assert np.all(small.labels[changed] == 0)
        assert np.array_equal(big.at_budget(b).labels, small.labels)


def test_raster_deterministic_across_threads(example, trap):
    a = classify_raster(example, trap, TZ, 96, 200, threads=1)
    b = classify_raster(example, trap, TZ, 96, 200, threads=4)
    assert np.array_equal(a.labels, b.labels) and np.array_equal(a.counts, b.counts)
