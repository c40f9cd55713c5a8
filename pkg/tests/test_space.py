import numpy as np
import pytest

from feod.mesh import build_cube_tet_mesh
from feod.space import (
    build_space,
    gather,
    gather_all,
    prolong_true,
    restrict_true,
    scatter_add,
    scatter_all,
)


def brute_force_nodes(space, basis_nodes):
    # independent dedup: O(N^2) comparison of physical node coordinates
    pts = []
    for tet in space.mesh.tets:
        X = space.mesh.vertices[tet]
        for r in basis_nodes:
            p = X[0] + (X[1:] - X[0]).T @ r
            if not any(np.max(np.abs(p - q)) < 1e-10 for q in pts):
                pts.append(p)
    return np.array(pts)


def test_n1_order1():
    s = build_space(build_cube_tet_mesh(1), 1)
    assert s.ndof_global == 8
    assert len(s.essential_dofs) == 8
    assert s.ndof_true == 0


def test_n2_order1_one_free_dof():
    s = build_space(build_cube_tet_mesh(2), 1)
    assert s.ndof_global == 27
    assert s.ndof_true == 1
    np.testing.assert_allclose(s.dof_coords[s.free_dofs[0]], [0.5, 0.5, 0.5])


@pytest.mark.parametrize("order", [2, 3])
def test_dedup_matches_brute_force(spaces, order):
    s, b = spaces(2, order)
    pts = brute_force_nodes(s, b.nodes)
    assert s.ndof_global == len(pts)
    if order == 2:
        m = s.mesh
        faces, _ = m.facets()
        edges = {tuple(sorted((t[i], t[j]))) for t in m.tets for i in range(4) for j in range(i + 1, 4)}
        assert s.ndof_global == m.num_vertices + len(edges)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_numbering_invariants(spaces, order):
    s, b = spaces(2, order)
    assert set(np.unique(s.elem_dofs)) == set(range(s.ndof_global))
    assert np.all((s.essential_dofs >= 0) & (s.essential_dofs < s.ndof_global))
    x = s.dof_coords
    on_bnd = np.any((np.abs(x) < 1e-12) | (np.abs(x - 1) < 1e-12), axis=1)
    np.testing.assert_array_equal(np.flatnonzero(on_bnd), s.essential_dofs)
    # every element's dofs sit where its reference nodes map to
    for e in (0, 23, 47):
        X = s.mesh.vertices[s.mesh.tets[e]]
        phys = X[0] + b.nodes @ (X[1:] - X[0])
        np.testing.assert_allclose(x[s.elem_dofs[e]], phys, atol=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_conformity(spaces, order):
    s, b = spaces(2, order)
    f = lambda p: np.sin(p[:, 0]) + p[:, 1] * p[:, 2] ** 2
    u = f(s.dof_coords)
    for e in range(s.num_elements):
        X = s.mesh.vertices[s.mesh.tets[e]]
        np.testing.assert_allclose(gather(s, e, u), f(X[0] + b.nodes @ (X[1:] - X[0])), atol=1e-12)


def test_gather_basic(spaces):
    s, _ = spaces(2, 2)
    np.testing.assert_array_equal(gather(s, 3, np.ones(s.ndof_global)), np.ones(10))
    k = s.elem_dofs[5, 4]
    onehot = np.zeros(s.ndof_global)
    onehot[k] = 1.0
    for e in range(s.num_elements):
        g = gather(s, e, onehot)
        assert (g.sum() == 1.0) == (k in s.elem_dofs[e])


@pytest.mark.parametrize("trial", range(3))
def test_gather_scatter_adjoint(spaces, trial):
    s, _ = spaces(2, 3)
    r = np.random.default_rng(trial)
    x = r.normal(size=s.ndof_global)
    y = r.normal(size=(s.num_elements, 20))
    lhs = np.sum(gather_all(s, x) * y)
    rhs = x @ scatter_all(s, y)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
    e = int(r.integers(s.num_elements))
    assert gather(s, e, x) @ y[e] == pytest.approx(x @ scatter_add(s, e, y[e]), rel=1e-12)


def test_scatter_all_equals_loop(spaces):
    s, _ = spaces(2, 2)
    y = np.random.default_rng(0).normal(size=(s.num_elements, 10))
    acc = np.zeros(s.ndof_global)
    for e in range(s.num_elements):
        scatter_add(s, e, y[e], acc)
    np.testing.assert_allclose(acc, scatter_all(s, y), atol=1e-13)


def test_true_dof_maps(spaces):
    s, _ = spaces(2, 2)
    r = np.random.default_rng(2)
    y = r.normal(size=s.ndof_true)
    np.testing.assert_array_equal(restrict_true(s, prolong_true(s, y)), y)
    x = r.normal(size=s.ndof_global)
    assert restrict_true(s, x) @ y == pytest.approx(x @ prolong_true(s, y), rel=1e-12)
    full = prolong_true(s, y, bc_value=2.0)
    assert np.all(full[s.essential_dofs] == 2.0)
    s1, _ = spaces(2, 1)
    assert restrict_true(s1, np.arange(27.0)).shape == (1,)
