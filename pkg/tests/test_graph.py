import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, quad, exp as mexp, erfc as merfc, inf

from nlslog.errors import DimensionError
from nlslog.graph import (
    GraphDomain, GraphFunction, VertexCondition, inner_product, norms, random_smooth_field,
    vertex_residuals,
)

mp.dps = 30


def const(d, value=1.0):
    return GraphFunction(np.full(d.n_ring + 1, value), np.full(d.n_tail + 1, value))


def gausson_tail(d, c, a):
    t = d.x_tail - d.L + a
    return GraphFunction(np.zeros(d.n_ring + 1), math.exp(0.5 * (c + 1)) * np.exp(-0.5 * t * t))


def test_domain_validation():
    with pytest.raises(ValueError):
        GraphDomain(-1.0, 3.0, 10, 10)
    with pytest.raises(ValueError):
        GraphDomain(1.0, 3.0, 1, 10)
    d = GraphDomain.from_spacing(1.0, 3.0, 1e-2)
    assert d.n_ring == 200 and d.n_tail == 300
    assert d.x_ring[0] == -1.0 and d.x_ring[-1] == 1.0 and d.x_tail[-1] == 4.0


def test_vertex_condition_invariant():
    with pytest.raises(ValueError):
        VertexCondition("neumann-kirchhoff", 1.0)
    assert VertexCondition.delta(2).Z == 2.0


def test_constant_inner_product():
    d = GraphDomain(1.0, 3.0, 40, 60)
    assert inner_product(const(d), const(d), d) == pytest.approx(5.0, abs=1e-13)


def test_odd_even_orthogonal():
    d = GraphDomain(1.0, 3.0, 40, 60)
    x = d.x_ring
    u = GraphFunction(x, np.zeros(d.n_tail + 1))
    v = GraphFunction(np.cos(x), np.zeros(d.n_tail + 1))
    assert abs(inner_product(u, v, d)) < 1e-15


def test_dimension_error():
    d = GraphDomain(1.0, 3.0, 40, 60)
    e = GraphDomain(1.0, 3.0, 20, 60)
    with pytest.raises(DimensionError):
        inner_product(const(d), const(e), d)


@pytest.mark.parametrize("c,a", [(0.0, 1.0), (1.5, 0.4), (-1.0, 2.2)])
def test_gausson_tail_mass_against_quadrature(c, a):
    L = 1.3
    d = GraphDomain.from_spacing(L, a + 8.0, 1e-3)
    u = gausson_tail(d, c, a)
    oracle = mp.e ** (c + 1) * quad(lambda t: mexp(-(t + a) ** 2), [0, inf])
    closed = math.exp(c + 1) * math.sqrt(math.pi) / 2 * math.erfc(a)
    assert float(oracle) == pytest.approx(closed, rel=1e-14)
    # trapezoid end error h^2/12 |f'(L)| = h^2 a u(L)^2 / 6, large relative to erfc(a) for big a
    bound = d.h_tail**2 * a * u.tail[0] ** 2 / 6
    assert abs(inner_product(u, u, d) - closed) <= 1.1 * bound
    assert float(merfc(a)) == pytest.approx(math.erfc(a), rel=1e-14)


def test_gausson_weighted_norm_against_quadrature():
    c, a, L = 0.0, 1.0, 1.0
    d = GraphDomain.from_spacing(L, a + 8.0, 1e-3)
    oracle = float(mp.e ** (c + 1) * quad(lambda t: (t + L) ** 2 * mexp(-(t + a) ** 2), [0, inf]))
    assert norms(gausson_tail(d, c, a), d).weighted_x ** 2 == pytest.approx(oracle, rel=1e-6)


def test_zero_norms():
    d = GraphDomain(1.0, 3.0, 40, 60)
    n = norms(GraphFunction.zeros(d), d)
    assert (n.l2, n.h1_seminorm, n.weighted_x) == (0.0, 0.0, 0.0)


def test_linear_tail_norm_rate():
    # u(t) = t on a tail of unit length in the local coordinate t = x - L, zero ring
    errs = []
    for n in (16, 32, 64):
        d = GraphDomain(1.0, 1.0, 8, n)
        u = GraphFunction(np.zeros(9), d.x_tail - d.L)
        errs.append(abs(norms(u, d).l2 - 1 / math.sqrt(3)))
    assert errs[-1] < 1e-3
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine == pytest.approx(4.0, rel=0.1)


def test_trapezoid_quadratic_rate():
    # int_{-1}^{1} x^2 dx + int_1^3 (x - 1)^2 dx = 2/3 + 8/3
    errs = []
    for n in (20, 40, 80):
        d = GraphDomain(1.0, 2.0, n, n)
        u = GraphFunction(d.x_ring, d.x_tail - 1.0)
        errs.append(abs(inner_product(u, u, d) - 10.0 / 3.0))
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine == pytest.approx(4.0, rel=0.1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inner_product_conjugate_symmetric_and_positive(seed):
    d = GraphDomain(1.0, 4.0, 30, 60)
    rng = np.random.Generator(np.random.PCG64(seed))
    u = random_smooth_field(d, rng)
    v = random_smooth_field(d, rng)
    uv, vu = inner_product(u, v, d), inner_product(v, u, d)
    assert abs(uv - np.conj(vu)) <= 1e-14 * (1 + abs(uv))
    assert inner_product(u.scale(2 - 1j), v, d) == pytest.approx((2 - 1j) * uv, rel=1e-13, abs=1e-14)
    uu = inner_product(u, u, d)
    assert abs(uu.imag) < 1e-14 and uu.real > 0


def test_constant_vertex_residuals():
    d = GraphDomain(1.0, 3.0, 40, 60)
    r = vertex_residuals(const(d), VertexCondition(), d)
    assert r.max_abs() == pytest.approx(0.0, abs=1e-12)
    r = vertex_residuals(const(d), VertexCondition.delta(2.0), d)
    assert r.flux == pytest.approx(-2.0, abs=1e-12)
    assert r.continuity_ring == 0 and r.continuity_vertex == 0


def test_random_field_is_vertex_continuous():
    d = GraphDomain(1.0, 4.0, 30, 60)
    u = random_smooth_field(d, np.random.Generator(np.random.PCG64(3)))
    r = vertex_residuals(u, VertexCondition(), d)
    assert r.continuity_ring == 0 and r.continuity_vertex == 0


def test_csv_schema_and_round_trip():
    d = GraphDomain(1.0, 2.0, 8, 8)
    u = GraphFunction(np.linspace(0, 1, 9) + 0.1j, np.linspace(1, 0, 9) * (1 - 1j))
    text = u.to_csv(d)
    lines = text.splitlines()
    assert lines[0] == "edge_id,x,re,im"
    assert {ln.split(",")[0] for ln in lines[1:]} == {"ring", "tail"}
    back = GraphFunction.from_csv(text)
    np.testing.assert_array_equal(back.ring, u.ring)
    np.testing.assert_array_equal(back.tail, u.tail)
