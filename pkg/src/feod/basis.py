"""Lagrange bases of order 1-3 on the reference tetrahedron and quadrature rules.

Reference tet: vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1); volume 1/6.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.special import roots_jacobi

# quadrature degree used for each element order
DEFAULT_QUADRATURE_DEGREE = {1: 2, 2: 4, 3: 6}
MAX_TABULATED_DEGREE = 6
MAX_DEGREE = 20


def _orbit(*bary):
    """All distinct permutations of barycentric coords -> xyz points."""
    pts = sorted(set(permutations(bary)))
    return np.array([p[1:] for p in pts], dtype=float)


def _symmetric_rule(orbits):
    xs, ws = [], []
    for bary, weight in orbits:
        pts = _orbit(*bary)
        xs.append(pts)
        ws.append(np.full(len(pts), weight))
    return np.vstack(xs), np.concatenate(ws)


def _tabulated(degree):
    if degree <= 1:
        return np.array([[0.25, 0.25, 0.25]]), np.array([1.0 / 6.0])
    if degree == 2:
        a = (5.0 + 3.0 * np.sqrt(5.0)) / 20.0
        b = (5.0 - np.sqrt(5.0)) / 20.0
        return _symmetric_rule([((a, b, b, b), 1.0 / 24.0)])
    if degree <= 4:
        # Keast, 14 points, positive weights
        return _symmetric_rule([
            ((0.0, 0.0, 0.5, 0.5), 0.0190476190476190 / 6.0),
            ((0.6984197043243866, 0.1005267652252045, 0.1005267652252045, 0.1005267652252045),
             0.0885898247429807 / 6.0),
            ((0.0568813795204234, 0.3143728734931922, 0.3143728734931922, 0.3143728734931922),
             0.1328387466855907 / 6.0),
        ])
    # Keast, 24 points, degree 6
    return _symmetric_rule([
        ((0.3561913862225449, 0.2146028712591517, 0.2146028712591517, 0.2146028712591517),
         0.0399227502581679 / 6.0),
        ((0.8779781243961660, 0.0406739585346113, 0.0406739585346113, 0.0406739585346113),
         0.0100772110553207 / 6.0),
        ((0.0329863295731731, 0.3223378901422757, 0.3223378901422757, 0.3223378901422757),
         0.0553571815436544 / 6.0),
        ((0.2696723314583159, 0.6030056647916491, 0.0636610018750175, 0.0636610018750175),
         0.0482142857142857 / 6.0),
    ])


def _conical_product(degree):
    # collapsed Gauss-Jacobi (Stroud) rule, exact for total degree <= 2m-1
    m = degree // 2 + 1
    a2, w2 = roots_jacobi(m, 2.0, 0.0)
    a1, w1 = roots_jacobi(m, 1.0, 0.0)
    a0, w0 = roots_jacobi(m, 0.0, 0.0)
    s2, s1, s0 = (a2 + 1) / 2, (a1 + 1) / 2, (a0 + 1) / 2
    w2, w1, w0 = w2 / 8.0, w1 / 4.0, w0 / 2.0
    t, r, q = np.meshgrid(s2, s1, s0, indexing="ij")
    z = t
    y = (1 - t) * r
    x = (1 - t) * (1 - r) * q
    w = (w2[:, None, None] * w1[None, :, None] * w0[None, None, :]).ravel()
    return np.column_stack([x.ravel(), y.ravel(), z.ravel()]), w


def quadrature_rule(degree):
    """Points (nq, 3) and weights (nq,) exact for total degree <= ``degree``."""
    degree = int(degree)
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree} (0..{MAX_DEGREE})")
    if degree <= MAX_TABULATED_DEGREE:
        return _tabulated(degree)
    return _conical_product(degree)


def lagrange_nodes(order):
    """Equispaced nodes, ordered vertices, edges, faces, interior."""
    lam = []
    for i in range(order + 1):
        for j in range(order + 1 - i):
            for k in range(order + 1 - i - j):
                lam.append((order - i - j - k, i, j, k))
    lam = np.array(lam, dtype=float) / order

    def entity_key(b):
        support = tuple(np.flatnonzero(b > 1e-12))
        return (len(support), support, tuple(-b))

    lam = np.array(sorted(lam, key=entity_key))
    return lam[:, 1:].copy()


def _monomials(order):
    return [(a, b, c) for d in range(order + 1) for a in range(d + 1)
            for b in range(d + 1 - a) for c in [d - a - b]]


def _eval_monomials(exps, pts):
    x, y, z = pts[:, 0:1], pts[:, 1:2], pts[:, 2:3]
    e = np.array(exps, dtype=float)
    val = x ** e[:, 0] * y ** e[:, 1] * z ** e[:, 2]

    def d(p, ex):
        # d/dp p**ex, 0 for ex == 0
        return np.where(ex > 0, ex * p ** np.maximum(ex - 1, 0), 0.0)

    dx = d(x, e[:, 0]) * y ** e[:, 1] * z ** e[:, 2]
    dy = x ** e[:, 0] * d(y, e[:, 1]) * z ** e[:, 2]
    dz = x ** e[:, 0] * y ** e[:, 1] * d(z, e[:, 2])
    return val, np.stack([dx, dy, dz], axis=-1)


@dataclass(frozen=True, eq=False)
class ElementBasis:
    order: int
    ndof: int
    nodes: np.ndarray  # (ndof, 3) reference coordinates
    qpoints: np.ndarray  # (nq, 3)
    weights: np.ndarray  # (nq,)
    shape: np.ndarray  # (nq, ndof)
    dshape: np.ndarray  # (nq, ndof, 3) reference gradients
    coeffs: np.ndarray  # monomial coefficients, (nmono, ndof)

    @property
    def nq(self):
        return len(self.weights)

    def tabulate(self, pts):
        """Shape values (npts, ndof) and reference gradients (npts, ndof, 3)."""
        val, grad = _eval_monomials(_monomials(self.order), np.atleast_2d(pts))
        return val @ self.coeffs, np.einsum("pmk,mj->pjk", grad, self.coeffs)


def build_basis(order, quad_degree=None):
    order = int(order)
    if order not in (1, 2, 3):
        raise ValueError(f"unsupported element order {order}; expected 1, 2 or 3")
    nodes = lagrange_nodes(order)
    exps = _monomials(order)
    vand, _ = _eval_monomials(exps, nodes)
    coeffs = np.linalg.inv(vand)
    degree = DEFAULT_QUADRATURE_DEGREE[order] if quad_degree is None else quad_degree
    qpts, qw = quadrature_rule(degree)
    val, grad = _eval_monomials(exps, qpts)
    shape = val @ coeffs
    dshape = np.einsum("qmk,mj->qjk", grad, coeffs)
    return ElementBasis(order, len(nodes), nodes, qpts, qw, shape, dshape, coeffs)


def physical_gradients(basis, jacobian):
    """Basis gradients in physical space, J^{-T} applied to every reference gradient.

    ``jacobian`` is one 3x3 map or a batch (ne, 3, 3); the result is
    (nq, ndof, 3) or (ne, nq, ndof, 3).
    """
    jacobian = np.asarray(jacobian, dtype=float)
    det = np.linalg.det(jacobian)
    if np.any(det == 0.0):
        raise np.linalg.LinAlgError("singular element jacobian")
    jinv = np.linalg.inv(jacobian)
    # row-vector form: grad_phys = grad_ref @ J^{-1}
    if jinv.ndim == 2:
        return basis.dshape @ jinv
    return np.einsum("qjk,ekl->eqjl", basis.dshape, jinv)
