from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feod.basis import (
    DEFAULT_QUADRATURE_DEGREE,
    MAX_DEGREE,
    build_basis,
    lagrange_nodes,
    physical_gradients,
    quadrature_rule,
)


def monomial_integral(a, b, c):
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)


def monomials(degree):
    return [(a, b, d - a - b) for d in range(degree + 1) for a in range(d + 1) for b in range(d + 1 - a)]


def test_monomial_oracle_values():
    # frozen: int x^2 y over the reference tet
    assert monomial_integral(2, 1, 0) == pytest.approx(1.0 / 360.0, rel=1e-15)
    assert monomial_integral(0, 0, 0) == pytest.approx(1.0 / 6.0)


@pytest.mark.parametrize("degree", list(range(0, 13)) + [MAX_DEGREE])
def test_quadrature_exactness(degree):
    pts, w = quadrature_rule(degree)
    assert np.all(w > 0)
    for a, b, c in monomials(degree):
        q = np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c)
        assert abs(q - monomial_integral(a, b, c)) <= 1e-12, (a, b, c)


def test_centroid_rule():
    pts, w = quadrature_rule(1)
    np.testing.assert_array_equal(pts, [[0.25, 0.25, 0.25]])
    assert w[0] == pytest.approx(1.0 / 6.0)


def test_unsupported_degree():
    with pytest.raises(ValueError):
        quadrature_rule(MAX_DEGREE + 1)
    with pytest.raises(ValueError):
        quadrature_rule(-1)


@pytest.mark.parametrize("order,ndof", [(1, 4), (2, 10), (3, 20)])
def test_basis_invariants(order, ndof):
    b = build_basis(order)
    assert b.ndof == ndof == (order + 1) * (order + 2) * (order + 3) // 6
    assert abs(b.weights.sum() - 1.0 / 6.0) <= 1e-12
    np.testing.assert_allclose(b.shape.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(b.dshape.sum(axis=1), 0.0, atol=1e-12)
    val, _ = b.tabulate(b.nodes)
    np.testing.assert_allclose(val, np.eye(ndof), atol=1e-12)


def test_default_quadrature_sizes():
    assert build_basis(1).nq == 4
    assert build_basis(2).nq >= 11
    assert build_basis(3).nq >= 24
    assert DEFAULT_QUADRATURE_DEGREE == {1: 2, 2: 4, 3: 6}


def test_p1_is_barycentric():
    b = build_basis(1)
    val, grad = b.tabulate(np.array([[0.25, 0.25, 0.25]]))
    np.testing.assert_allclose(val, 0.25, atol=1e-15)
    np.testing.assert_allclose(grad[0], [[-1, -1, -1], [1, 0, 0], [0, 1, 0], [0, 0, 1]], atol=1e-14)


def test_node_layout():
    nodes = lagrange_nodes(3)
    np.testing.assert_allclose(nodes[:4], [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert len(np.unique(np.round(nodes, 12), axis=0)) == 20


def test_unsupported_order():
    for order in (0, 4):
        with pytest.raises(ValueError):
            build_basis(order)


def test_physical_gradients_identity_and_scaling():
    b = build_basis(2)
    np.testing.assert_allclose(physical_gradients(b, np.eye(3)), b.dshape, atol=1e-15)
    np.testing.assert_allclose(physical_gradients(b, 2.0 * np.eye(3)), 0.5 * b.dshape, atol=1e-15)
    with pytest.raises(np.linalg.LinAlgError):
        physical_gradients(b, np.zeros((3, 3)))


def _random_affine(seed):
    r = np.random.default_rng(seed)
    while True:
        J = r.normal(size=(3, 3))
        if abs(np.linalg.det(J)) > 0.2:
            return J, r.normal(size=3)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10_000))
def test_polynomial_reproduction(order, seed):
    b = build_basis(order)
    J, x0 = _random_affine(seed)
    r = np.random.default_rng(seed + 1)
    coef = r.normal(size=(len(monomials(order)),))

    def poly(x):
        return sum(c * x[:, 0] ** i * x[:, 1] ** j * x[:, 2] ** k
                   for c, (i, j, k) in zip(coef, monomials(order)))

    def grad(x, h=1e-6):
        e = np.eye(3) * h
        return np.stack([(poly(x + e[d]) - poly(x - e[d])) / (2 * h) for d in range(3)], axis=-1)

    phys_nodes = x0 + b.nodes @ J.T
    phys_q = x0 + b.qpoints @ J.T
    u = poly(phys_nodes)
    np.testing.assert_allclose(b.shape @ u, poly(phys_q), atol=1e-10 * (1 + np.abs(u).max()))
    G = physical_gradients(b, J)
    gq = np.einsum("qjk,j->qk", G, u)
    np.testing.assert_allclose(gq, grad(phys_q), atol=1e-6 * (1 + np.abs(gq).max()))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10_000))
def test_linear_field_gradient_exact(order, seed):
    b = build_basis(order)
    J, x0 = _random_affine(seed)
    a = np.random.default_rng(seed).normal(size=3)
    u = (x0 + b.nodes @ J.T) @ a
    gq = np.einsum("qjk,j->qk", physical_gradients(b, J), u)
    np.testing.assert_allclose(gq, np.broadcast_to(a, gq.shape), atol=1e-12 * (1 + np.abs(u).max()) * np.linalg.cond(J))
