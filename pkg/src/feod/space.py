"""Continuous Lagrange DOF numbering plus the element restriction (G) and
true-DOF restriction (P) operators.

P is realised single-process as the essential boundary restriction: true
DOFs are all DOFs not on the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import build_basis
from .mesh import _LOCAL_FACES, mesh_geometry

HASH_TOL = 1e-10


@dataclass(eq=False)
class FESpace:
    mesh: object
    order: int
    ndof_global: int
    elem_dofs: np.ndarray  # (ne, ndof)
    essential_dofs: np.ndarray  # sorted indices
    dof_coords: np.ndarray  # (ndof_global, 3)
    free_dofs: np.ndarray = field(init=False)

    def __post_init__(self):
        mask = np.ones(self.ndof_global, dtype=bool)
        mask[self.essential_dofs] = False
        self.free_dofs = np.flatnonzero(mask)

    @property
    def num_elements(self):
        return len(self.elem_dofs)

    @property
    def ndof_true(self):
        return len(self.free_dofs)

    @cached_property
    def geometry(self):
        return mesh_geometry(self.mesh)


def build_space(mesh, order):
    basis = build_basis(order)
    coords = mesh.vertices[mesh.tets]  # (ne, 4, 3)
    jac = (coords[:, 1:, :] - coords[:, :1, :]).swapaxes(1, 2)
    phys = coords[:, None, 0, :] + np.einsum("ekl,jl->ejk", jac, basis.nodes)
    keys = np.round(phys.reshape(-1, 3) / HASH_TOL).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    elem_dofs = inverse.reshape(len(mesh.tets), basis.ndof)
    dof_coords = np.zeros((len(uniq), 3))
    dof_coords[elem_dofs.ravel()] = phys.reshape(-1, 3)

    # a node is essential iff it sits on a boundary facet
    faces, counts = mesh.facets()
    bnd = {tuple(f) for f in faces[counts == 1]}
    lam0 = 1.0 - basis.nodes.sum(axis=1)
    bary = np.column_stack([lam0, basis.nodes])  # (ndof, 4)
    on_face = np.abs(bary) < 1e-12  # node j lies on local face f
    essential = np.zeros(len(uniq), dtype=bool)
    for e, tet in enumerate(mesh.tets):
        for f in range(4):
            if tuple(sorted(tet[_LOCAL_FACES[f]])) in bnd:
                essential[elem_dofs[e, on_face[:, f]]] = True
    return FESpace(mesh, basis.order, len(uniq), elem_dofs, np.flatnonzero(essential), dof_coords)


def gather(space, e, x):
    """Element values G x for element(s) ``e`` (an index, slice or index array)."""
    return np.asarray(x)[space.elem_dofs[e]]


def scatter_add(space, e, y_elem, out=None):
    """Accumulate element vector(s) into a global vector: out += G^T y."""
    if out is None:
        out = np.zeros(space.ndof_global)
    np.add.at(out, space.elem_dofs[e], y_elem)
    return out


def gather_all(space, x):
    return np.asarray(x)[space.elem_dofs]


def scatter_all(space, y_elem):
    return np.bincount(space.elem_dofs.ravel(), weights=np.ravel(y_elem),
                       minlength=space.ndof_global)


def restrict_true(space, x):
    return np.asarray(x)[space.free_dofs]


def prolong_true(space, y, bc_value=0.0):
    x = np.full(space.ndof_global, float(bc_value))
    x[space.free_dofs] = y
    return x
