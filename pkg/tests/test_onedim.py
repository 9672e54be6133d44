from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skewlab import FiberPolynomial, NumericalError, PreconditionError
from skewlab.onedim import (
    Blaschke, TrappingRegion, blaschke_measure_check, box_dimension, build_trap, ce_report,
    check_trap, classify_crit, critical_points, dpu_sum, exp_shrink_estimate, green_distance,
    hyperbolic_away, julia_sample, km_measure, lyapunov_at_value, measure_ratio, poly_roots,
    przytycki_stat, roots_with_multiplicity, sr_alpha_from_wr, sr_check, wr_profile, wr_sum,
)
from skewlab.onedim.conditions import truncated_prefix_sums

BASILICA = FiberPolynomial([-1, 0, 1])
CUBIC = FiberPolynomial([0, -3, 0, 1])


def test_critical_points_examples(cheb, square):
    cs = critical_points(cheb)
    assert np.allclose(cs.points, [0]) and list(cs.multiplicity) == [1]
    assert np.allclose(np.sort_complex(critical_points(CUBIC).points), [-1, 1])
    assert np.allclose(critical_points(square).points, [0])


def test_roots_with_multiplicity_merges_clusters():
    a = np.poly([1, 1, 1, -2])[::-1]
    roots, mult = roots_with_multiplicity(a)
    order = np.argsort(roots.real)
    assert np.allclose(roots[order], [-2, 1], atol=1e-9)
    assert list(mult[order]) == [1, 3]
    assert np.allclose(np.sort_complex(poly_roots([-6, 11, -6, 1])), [1, 2, 3])


def test_classify_crit_examples(cheb, square):
    assert classify_crit(cheb).labels == ["inJulia"]
    cs = classify_crit(square)
    assert cs.labels == ["inFatou"] and len(cs.crit_prime) == 0
    assert classify_crit(BASILICA).labels == ["inFatou"]


@pytest.mark.parametrize("p", [FiberPolynomial([-2, 0, 1]), FiberPolynomial([0, 0, 1]),
                               BASILICA, CUBIC, FiberPolynomial([0.25, 0, 1])])
def test_classify_crit_stable_under_budget_doubling(p):
    assert classify_crit(p, budget=2000).labels == classify_crit(p, budget=4000).labels


def test_green_distance_examples(square, cheb):
    b = green_distance(square, 2 + 0j)
    assert b.lower <= 1.0 <= b.upper
    z = 1.0001 * np.exp(0.7j)
    b = green_distance(square, z)
    assert b.lower <= 1e-4 <= b.upper and b.upper / b.lower <= 16
    b = green_distance(cheb, 3 + 0j)
    assert b.lower <= 1.0 <= b.upper


def test_julia_sample_examples(square, cheb):
    s = julia_sample(square, 5000, seed=1)
    assert np.all(np.abs(np.abs(s.cloud) - 1) < 1e-3)
    s = julia_sample(cheb, 5000, seed=1)
    assert np.all(np.abs(s.cloud.imag) < 1e-3) and np.all(np.abs(s.cloud.real) <= 2 + 1e-3)
    with pytest.raises(PreconditionError):
        julia_sample(square, 0)


def test_julia_sample_reproducible_across_threads(cheb):
    a = julia_sample(cheb, 3000, seed=7, threads=1).cloud
    b = julia_sample(cheb, 3000, seed=7, threads=4).cloud
    assert np.array_equal(a, b)


def test_ce_examples(cheb, square):
    r = ce_report(cheb, 0, 100)
    assert abs(r.mu_ce - 4) <= 0.01 and abs(r.C - 1) < 0.05
    assert abs(r.moduli[0] - 4) < 1e-12
    with pytest.raises(PreconditionError):
        ce_report(square, 0, 100)


def test_lyapunov_examples(cheb, square):
    assert abs(lyapunov_at_value(cheb, -2, 100).value - math.log(4)) <= 1e-12
    assert lyapunov_at_value(square, 1j, 50).value == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(NumericalError) as e:
        lyapunov_at_value(cheb, math.sqrt(2), 10)
    assert e.value.code == "log-of-zero"


def test_wr_examples(cheb):
    assert wr_sum(cheb, -2, 5000, 1.0) == 0
    assert wr_sum(cheb, -2, 0, 1.0) == 0
    v = 0.3 + 0j
    full = -np.sum(np.log(np.abs(cheb.deriv(cheb.iterate(v, np.arange(200)) if False else _orbit(cheb, v, 200)))))
    assert abs(wr_sum(cheb, v, 200, 10.0) - full) < 1e-9


def _orbit(p, v, n):
    out = [complex(v)]
    for _ in range(n - 1):
        out.append(complex(p(out[-1])))
    return np.array(out)


@given(st.floats(-1.9, 1.9), st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_wr_sum_monotone_in_eta_where_contracting(x, e1, e2):
    p = FiberPolynomial([-2, 0, 1])
    lo, hi = sorted((e1, e2))
    # terms -log|p'| are non-negative exactly where |p'| <= 1, i.e. within 1/2 of Crit' = {0}
    lo, hi = min(lo, 0.5), min(hi, 0.5)
    assert wr_sum(p, x, 300, lo) <= wr_sum(p, x, 300, hi) + 1e-9


def test_sr_examples(cheb):
    assert sr_check(cheb, -2, 1000, 0.1) == []
    viol = sr_check(cheb, 0.3, 50, 0.0)
    orbit = _orbit(cheb, 0.3, 51)
    assert viol == [int(j) for j in np.flatnonzero(np.abs(orbit) < 1)]
    assert sr_check(cheb, 0, 10, 0.5)[0] == 0


@given(st.floats(-1.99, 1.99), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_sr_violations_shrink_with_alpha(x, a1, a2):
    p = FiberPolynomial([-2, 0, 1])
    lo, hi = sorted((a1, a2))
    assert set(sr_check(p, x, 200, hi)) <= set(sr_check(p, x, 200, lo))


def test_wr_implies_sr_on_test_maps():
    for p, v in ((FiberPolynomial([-2, 0, 1]), -2), (CUBIC, 2)):
        prof = wr_profile(p, v, 2000, [0.5])
        alpha = sr_alpha_from_wr(prof[0].iota)
        late = [j for j in sr_check(p, v, 2000, alpha) if j > 200]
        assert late == []


def test_przytycki_examples(cheb, square):
    assert przytycki_stat(cheb, 0, 0.1).nstar >= 2
    assert przytycki_stat(cheb, 0, 5.0).nstar == 1
    with pytest.raises(PreconditionError):
        przytycki_stat(square, 0, 0.1)


def test_dpu_examples(cheb, square):
    r = dpu_sum(cheb, -2, 100)
    const = -math.log(2) + r.offset
    # the largest term is discarded, so the best prefix average is reached at the end
    assert abs(r.total - 99 * const) < 1e-9 and abs(r.Q - 0.99 * const) < 1e-12
    assert dpu_sum(cheb, -2, 0).total == 0
    e = dpu_sum(square, 0.5, 10)
    assert e.total == 0 and e.empty_crit


def test_dpu_bounded_on_bounded_orbits(cheb):
    rng = np.random.default_rng(3)
    for x in rng.uniform(-2, 2, 5):
        r = dpu_sum(cheb, x, 10_000)
        assert r.Q < 60


@given(st.lists(st.floats(0, 10), max_size=40), st.integers(0, 5))
def test_truncated_prefix_sums_reference(vals, M):
    vals = np.array(vals)
    got = truncated_prefix_sums(vals, M)
    for i in range(len(vals)):
        pre = np.sort(vals[:i + 1])[::-1]
        assert abs(got[i] - pre[M:].sum()) < 1e-9


def test_hyperbolic_away_examples(square, cheb):
    assert hyperbolic_away(square, np.exp(0.4j), 12, 0.5) == pytest.approx(2.0 ** 12, rel=1e-12)
    assert hyperbolic_away(cheb, 2, 10, 1.0) == 4.0 ** 10
    with pytest.raises(PreconditionError):
        hyperbolic_away(cheb, 0.1, 5, 0.5)


def test_exp_shrink_examples(square, cheb):
    r = exp_shrink_estimate(square, 1 + 0j, 0.1, 20, seed=2)
    assert abs(r.mu_exp - 2) <= 0.05
    assert np.allclose(r.max_diam[:1], 0.2)
    k = np.arange(21)
    # Koebe distortion inflates the enclosures by a bounded factor; the rate is exactly 1/2
    assert np.all(r.max_diam * 2.0 ** k / 0.2 < 10)
    assert np.allclose(r.max_diam[16:] / r.max_diam[15:-1], 0.5, atol=2e-3)
    r0 = exp_shrink_estimate(square, 1 + 0j, 0.1, 0, seed=2)
    assert r0.diam[0, 0] == 0.2
    r = exp_shrink_estimate(cheb, 2 + 0j, 0.05, 15, seed=2)
    assert 1.8 <= r.mu_exp <= 2.2


def test_exp_shrink_diameters_non_increasing_on_expanding_map(square):
    r = exp_shrink_estimate(square, np.exp(0.9j), 0.05, 18, seed=4)
    assert not r.critical.any()
    assert np.all(np.diff(r.diam, axis=1) <= 0)


def test_box_dimension_examples(square, cheb):
    for p in (square, cheb):
        b = box_dimension(julia_sample(p, 100_000, seed=5).cloud)
        assert abs(b.dimension - 1) <= 0.05
    assert box_dimension(np.full(10, 0.3 + 0.1j)).dimension == 0


def test_km_examples(square, cheb):
    trap = TrappingRegion([(0j, 0.5)], 2.0, 0, [0])
    r = km_measure(square, trap, 10, grid=512, half_width=2.0)
    assert r.slope <= -math.log(2) + 0.2
    assert np.all(np.diff(r.area) <= 0)
    z = (np.arange(512) + 0.5) / 512 * 4 - 2
    X, Y = np.meshgrid(z, z)
    A = np.abs(X + 1j * Y)
    m0 = np.sum((A >= 0.5) & (A <= 2)) * (4 / 512) ** 2
    assert r.area[0] == pytest.approx(m0)
    far = TrappingRegion([], 4.0, 0, [])
    r = km_measure(cheb, far, 8, grid=256, half_width=4.0)
    assert r.slope < 0 and np.all(np.diff(r.area) <= 0)


def test_build_trap_period_two():
    trap = build_trap(BASILICA)
    assert len(trap.cycle_disks) == 2 and check_trap(BASILICA, trap)


def test_blaschke_examples():
    rot = Blaschke(np.array([0j]), np.exp(0.3j))
    assert measure_ratio(rot, [(0.1 + 0.1j, 0.2)], 0, 50_000, seed=1) == pytest.approx(1, abs=0.02)
    r = blaschke_measure_check(3, 5, seed=1, points=50_000)
    assert r.z2_analytic == pytest.approx(math.pi * 0.1) and r.z2_rel_error < 0.02
    assert measure_ratio(rot, [], 1) == 0
    assert blaschke_measure_check(0, 10, seed=2, points=100_000).worst_ratio == pytest.approx(1, abs=0.02)
