from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skewlab import (
    FiberPolynomial, InputError, Point2, PreconditionError, Region, SkewMap, builtin_map,
    eval_skew, format_map, load_map, orbit, parse_map, sup_partials, vertical_cocycle,
    vertical_derivative,
)
from skewlab.dyncore import BUILTIN_MAPS, log_cocycle


def test_eval_skew_examples(example):
    assert eval_skew(example, Point2(0, -2)) == Point2(0, 2)
    assert eval_skew(example, Point2(0, 0)) == Point2(0, -2)
    y = eval_skew(example, Point2(1, 0))
    assert y.t == 0.5 and abs(y.z - (-1.9)) < 1e-15


def test_vertical_derivative_examples(example):
    assert vertical_derivative(example, Point2(0, 3)) == 6
    assert vertical_derivative(example, Point2(0.4, 0)) == 0
    cubic = SkewMap.from_poly(0.5, [0, 0, 0, 1], {(1, 1): 1.0})
    assert vertical_derivative(cubic, Point2(1, 1)) == 4


def test_domain_exceeded(example):
    with pytest.raises(PreconditionError) as e:
        eval_skew(example, Point2(1.5, 0))
    assert e.value.code == "domain-exceeded"


def test_orbit_examples(example):
    tr = orbit(example, Point2(0, -2), 3)
    assert list(tr.z) == [-2, 2, 2, 2]
    assert not tr.escaped
    assert orbit(example, Point2(0, 10), 5).escaped
    tr = orbit(example, Point2(0.01, -2), 2)
    M = 6.6
    assert np.all(np.abs(tr.z - np.array([-2, 2, 2])) <= 0.01 * M ** 2)


def test_cocycle_examples(example, square):
    tr = orbit(example, Point2(0, -2), 20)
    assert abs(vertical_cocycle(tr, 0, 20)) == 4.0 ** 20
    assert vertical_cocycle(tr, 3, 0) == 1
    circ = SkewMap.from_poly(0.5, [0, 0, 1], {})
    tr = orbit(circ, Point2(0, np.exp(0.3j)), 15)
    assert abs(abs(vertical_cocycle(tr, 0, 15)) - 2.0 ** 15) < 1e-9 * 2.0 ** 15
    assert abs(log_cocycle(tr, 0, 15) - 15 * math.log(2)) < 1e-10


def test_sup_partials_examples(example):
    assert abs(sup_partials(example, Region(1.0, 3.0)).M - 6.6) < 1e-9
    z2 = SkewMap.from_poly(0.5, [0, 0, 1], {})
    assert abs(sup_partials(z2, Region(1.0, 1.0)).M - 2.2) < 1e-9
    single = sup_partials(SkewMap.from_poly(0.5, [-2, 0, 1], {}), Region(0.0, 0.0))
    assert single.M == 0.5


def test_map_validation():
    with pytest.raises(PreconditionError):
        SkewMap.from_poly(1.0, [-2, 0, 1], {})
    with pytest.raises(PreconditionError):
        SkewMap.from_poly(0.5, [1, 1], {})


def test_map_file_round_trip(tmp_path):
    for name in BUILTIN_MAPS:
        f = builtin_map(name)
        g = parse_map(format_map(f))
        assert np.array_equal(f.coeffs, g.coeffs) and f.lam == g.lam and f.r_delta == g.r_delta
    path = tmp_path / "m.map"
    path.write_text(format_map(builtin_map("cubic")))
    assert load_map(path).degree == 3


def test_map_file_errors(tmp_path):
    with pytest.raises(InputError) as e:
        load_map(tmp_path / "missing.map")
    assert e.value.code == "io-not-found" and e.value.exit_code == 2
    with pytest.raises(InputError) as e:
        parse_map("lambda_re = 0.5\nfiber_degree = 2\nwhat is this\n")
    assert e.value.code == "io-parse"
    with pytest.raises(InputError):
        parse_map("lambda_re = 0.5\nfiber_degree = 2\nbogus = 1\n")


def test_fiber_polynomial_basics(cheb):
    assert cheb.degree == 2 and cheb(0) == -2
    assert cheb.deriv(3) == 6
    assert cheb.iterate(0, 3) == 2


coords = st.floats(-0.9, 0.9, allow_subnormal=False)


@given(coords, coords, st.integers(0, 30), st.integers(0, 30))
def test_semigroup_law(t, z, m, n):
    f = builtin_map("example")
    x = Point2(t, z)
    a = orbit(f, x, m + n)
    b = orbit(f, x, m)
    if a.escaped or b.escaped:
        return
    c = orbit(f, Point2(b.t[-1], b.z[-1]), n)
    joined = np.concatenate([b.z, c.z[1:]])
    assert np.allclose(a.z, joined, rtol=1e-10, atol=1e-10)


@given(coords, coords, st.integers(0, 20), st.integers(0, 20))
def test_cocycle_multiplicativity(t, z, m, n):
    tr = orbit(builtin_map("example"), Point2(t, z), m + n)
    if tr.escaped:
        return
    whole = vertical_cocycle(tr, 0, m + n)
    split = vertical_cocycle(tr, 0, m) * vertical_cocycle(tr, m, n)
    assert abs(whole - split) <= 1e-12 * max(abs(whole), 1e-300)


@given(st.complex_numbers(max_magnitude=3))
def test_fiber_consistency(z):
    f = builtin_map("example")
    assert eval_skew(f, Point2(0, z)).z == f.fiber(z)


@given(coords, coords, st.integers(0, 40))
def test_horizontal_contraction(t, z, n):
    tr = orbit(builtin_map("example"), Point2(t, z), n)
    k = np.arange(len(tr.t))
    assert np.allclose(np.abs(tr.t), 0.5 ** k * abs(t), rtol=1e-12, atol=0)
