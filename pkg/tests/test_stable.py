from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skewlab import PreconditionError, SkewMap, builtin_map
from skewlab.stable import (
    beta_from, bidisks_along, block_schedule, critical_branch, escape_fraction, graph_transform,
    henon_check, j_of_s, modulus_lower_bound, radii_pl, radii_tce_wr, renorm_scale, select_r0,
    shadow_rate, verify_schedule, winding_number,
)
from skewlab.twodim import build_trap2d

EPS = 0.05
derivs_st = st.lists(st.floats(0.05, 20.0, allow_subnormal=False), min_size=1, max_size=60)


@pytest.fixture(scope="module")
def example_bidisks(example):
    r0, _, recs = select_r0(example, -2, EPS, 30, start=1e-3)
    return r0, bidisks_along(example, -2, r0, EPS, 60), recs


@pytest.fixture(scope="module")
def example_graph(example, example_bidisks):
    return graph_transform(example, example_bidisks[1], 30)


# block schedules

def test_schedule_uniform_expansion_is_first_type():
    s = block_schedule(np.full(20, 4.0), 5, EPS)
    assert set(s.types) == {"first"}
    assert np.allclose(s.mu, 1.05 * 4, rtol=1e-14)


@pytest.mark.parametrize("N", [1, 3, 7])
def test_schedule_neutral_is_second_type(N):
    s = block_schedule(np.ones(21), N, EPS)
    assert set(s.types) == {"second"}
    assert np.allclose(s.mu, 1.05**2, rtol=1e-14)


def test_schedule_block_length_one_types_each_index():
    a = np.array([1.0, 1.06, 2.0, 1.04, 1.05])
    s = block_schedule(a, 1, EPS)
    assert s.types == tuple("first" if x >= 1.05 else "second" for x in a)


def test_schedule_rejects_eps0_above_admissible_range():
    with pytest.raises(PreconditionError) as e:
        block_schedule(np.full(5, 4.0), 1, 0.3, lam=0.5)
    assert e.value.code == "eps0-out-of-range"


@given(derivs_st, st.integers(1, 8))
def test_schedule_verifier_finds_no_violations(a, N):
    s = block_schedule(a, N, EPS)
    assert verify_schedule(s) == []
    assert np.all(s.mu >= 1 + EPS - 1e-12)


# radii

def test_radii_tce_wr_chebyshev_geometric():
    s = block_schedule(np.full(40, 4.0), 5, EPS)
    bd = radii_tce_wr(s, 1e-3, 40)
    assert np.allclose(bd.vert, 1e-3 * 1.05 ** -np.arange(41.0), rtol=1e-12)
    assert bd.violations == 0


def test_radii_tce_wr_depth_zero():
    bd = radii_tce_wr(block_schedule(np.full(3, 4.0), 1, EPS), 2e-3, 0)
    assert bd.vert.tolist() == [2e-3]


def test_radii_tce_wr_second_type_matches_lower_exponent():
    bd = radii_tce_wr(block_schedule(np.ones(30), 4, EPS), 1e-3, 30)
    assert np.allclose(bd.vert, 1e-3 * 1.05 ** (-2 * np.arange(31.0)), rtol=1e-12)
    assert bd.exponent == pytest.approx(0.0, abs=1e-12)


@given(derivs_st, st.integers(1, 6))
def test_radii_recurrence_exact_and_upper_bound(a, N):
    s = block_schedule(a, N, EPS)
    depth = len(a)
    bd = radii_tce_wr(s, 1e-3, depth)
    r = bd.vert
    assert np.allclose(r[1:] * s.mu[:depth], r[:-1] * s.derivs[:depth], rtol=1e-13, atol=0)
    n = np.arange(depth + 1)
    assert np.all(r <= bd.C2 * 1e-3 * 1.05 ** -n.astype(float) * (1 + 1e-12))
    assert bd.violations == 0


def test_radii_pl_chebyshev_exact():
    bd = radii_pl(math.log(4), EPS, 1e-3, np.full(30, 4.0), 30)
    assert np.allclose(bd.vert, 1e-3 * 1.05 ** -np.arange(31.0), rtol=1e-12)
    assert bd.violations == 0


def test_radii_pl_depth_zero_and_errors():
    assert radii_pl(1.0, EPS, 1e-3, [], 0).vert.tolist() == [1e-3]
    with pytest.raises(PreconditionError) as e:
        radii_pl(0.0, EPS, 1e-3, [4.0], 1)
    assert e.value.code == "nonpositive-exponent"


@given(st.lists(st.floats(-0.02, 0.02), min_size=40, max_size=40))
def test_radii_pl_bounded_fluctuation_stays_in_bands(noise):
    a = 4.0 * np.exp(noise)
    bd = radii_pl(math.log(4), EPS, 1e-3, a, 40)
    assert bd.violations == 0


# Henon-like checks

def test_modulus_lower_bound():
    assert modulus_lower_bound(math.exp(4 * math.pi) - 1) == pytest.approx(1.0, rel=1e-12)
    assert modulus_lower_bound(0.05) == pytest.approx(0.003882, abs=1e-6)
    vals = [modulus_lower_bound(e) for e in (1e-1, 1e-3, 1e-6, 1e-9)]
    assert all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-10


def test_henon_checks_pass_along_example(example_bidisks):
    r0, bd, recs = example_bidisks
    assert r0 <= 1e-3 and len(recs) == 30
    for rec in recs:
        assert rec.passed
        assert rec.horizontal_margin >= 10 * rec.sampling_error
        assert set(rec.windings) == {1}


def test_henon_vertical_condition_is_arithmetic(example_bidisks):
    bd = example_bidisks[1]
    assert 0.5 < 1.05**-3
    assert np.all(0.5 * bd.horiz[:-1] < bd.horiz[1:])


def test_winding_about_outside_point_is_zero(example, example_bidisks):
    bd = example_bidisks[1]
    z = bd.centers[0] + bd.vert[0] * np.exp(2j * np.pi * np.arange(512) / 512)
    img = example.h(np.zeros_like(z), z)
    assert winding_number(img, bd.centers[1]) == 1
    assert winding_number(img, bd.centers[1] + 10 * bd.vert[1]) == 0


def test_henon_check_index_out_of_range(example, example_bidisks):
    bd = example_bidisks[1]
    with pytest.raises(PreconditionError):
        henon_check(example, bd, bd.depth)


# stable graphs

def test_graph_passes_through_fixed_point(example_graph):
    g0 = example_graph.g[np.flatnonzero(example_graph.t == 0)[0]]
    assert g0 == -2
    assert example_graph.residual < 1e-10
    assert example_graph.certificate < 1e-8


def test_graph_of_product_map_is_horizontal(product):
    bd = bidisks_along(product, -2, 1e-3, EPS, 40)
    g = graph_transform(product, bd, 30)
    assert np.max(np.abs(g.g + 2)) < 1e-14


def test_graph_idempotent_under_extra_depth(example, example_bidisks, example_graph):
    deeper = graph_transform(example, example_bidisks[1], 31)
    assert np.max(np.abs(deeper.g - example_graph.g)) < 1e-8


def test_shadow_rate_contracts(example, example_graph):
    fit = shadow_rate(example_graph, example, 30)
    assert not fit.insufficient
    assert fit.lam1 <= 0.6


def test_shadow_rate_on_invariant_fiber_and_short_depth(example, example_graph):
    fit0 = shadow_rate(example_graph, example, 30, u=[0j])
    assert np.all(fit0.distances == 0)
    assert shadow_rate(example_graph, example, 1).insufficient


# critical branches and renormalization

def test_critical_branch_example(example):
    br = critical_branch(example, 0)
    assert np.max(np.abs(br.c)) < 1e-14
    assert br.l == 1
    assert br.psi_prime0 == pytest.approx(0.1, abs=1e-9)
    assert br.v == -2
    u = np.array([0.3, -0.2j])
    assert np.allclose(br.psi_at(example, u), -2 + 0.1 * u, atol=1e-14)


def test_critical_branch_product_map_not_vertical(product):
    br = critical_branch(product, 0)
    assert not br.vertical_ok
    assert abs(br.psi_prime0) < 1e-12


def test_critical_branches_of_cubic():
    f = builtin_map("cubic")
    plus, minus = critical_branch(f, 1), critical_branch(f, -1)
    assert np.max(np.abs(plus.c - 1)) < 1e-10 and np.max(np.abs(minus.c + 1)) < 1e-10
    assert plus.v == pytest.approx(-2) and minus.v == pytest.approx(2)


def test_critical_branch_requires_critical_point(example):
    with pytest.raises(PreconditionError):
        critical_branch(example, 1.0)


def test_renorm_scale_zero_is_affine(example, example_bidisks):
    bd = example_bidisks[1]
    sc = renorm_scale(example, critical_branch(example, 0), bd, 0)
    assert sc.rho == pytest.approx(bd.vert[0] / 2 / 0.1, rel=1e-4)
    assert sc.degree == 1


def test_renorm_scale_leading_order(example, example_bidisks):
    bd = example_bidisks[1]
    br = critical_branch(example, 0)
    for n in (2, 5, 8):
        sc = renorm_scale(example, br, bd, n)
        assert sc.rho / (bd.vert[n] / (2 * 0.1 * 4**n)) == pytest.approx(1.0, rel=0.3)
        assert sc.degree == 1
        assert sc.diamD >= 1


def test_renorm_scale_degenerate_branch(product):
    bd = bidisks_along(product, -2, 1e-3, EPS, 10)
    with pytest.raises(PreconditionError) as e:
        renorm_scale(product, critical_branch(product, 0), bd, 1)
    assert e.value.code == "degenerate-branch"


def test_j_of_s_examples():
    rho = 4.0 ** -np.arange(30)
    for s in range(40):
        assert j_of_s(rho, 0.5, s) == s // 2
    assert j_of_s([2.0, 1.0, 0.5], 0.5, 0) == 1
    assert j_of_s([1e-3, 1e-4], 0.5, 2) == -1
    with pytest.raises(PreconditionError):
        j_of_s([1.0, 2.0], 0.5, 1)


def test_beta_formula():
    assert beta_from(0.5, 6.6) == pytest.approx(0.1836, abs=1e-4)


def test_escape_fraction_rejects_zero_samples(example):
    f = example
    with pytest.raises(PreconditionError):
        escape_fraction(f, critical_branch(f, 0), build_trap2d(f), 10, 0, 1, 4.0 ** -np.arange(30))


def test_blocks_reject_bad_input():
    with pytest.raises(PreconditionError):
        block_schedule([1.0, 0.0], 1, EPS)
    with pytest.raises(PreconditionError):
        block_schedule([1.0], 0, EPS)


def test_from_poly_product_has_no_t_dependence(product: SkewMap):
    assert product.h(0.3, 1.5) == product.h(-0.7j, 1.5)
