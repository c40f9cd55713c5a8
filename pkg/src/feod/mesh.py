"""Structured tetrahedral meshes of the unit cube."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np


class DegenerateElementError(ValueError):
    def __init__(self, index, detj):
        super().__init__(f"element {index}: degenerate or negatively oriented (detJ={detj:.3e})")
        self.index = index
        self.detj = detj


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (nv, 3)
    tets: np.ndarray  # (ne, 4)
    boundary_vertices: np.ndarray  # sorted vertex indices on the boundary

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_elements(self):
        return len(self.tets)

    def facets(self):
        """Unique triangular facets and how many tets share each."""
        faces = np.sort(self.tets[:, _LOCAL_FACES].reshape(-1, 3), axis=1)
        return np.unique(faces, axis=0, return_counts=True)


# local face f is the one opposite local vertex f
_LOCAL_FACES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])


def _kuhn_tets():
    corner = np.array([0.0, 0.0, 0.0])
    out = []
    for perm in permutations(range(3)):
        pts = [corner.copy()]
        for axis in perm:
            nxt = pts[-1].copy()
            nxt[axis] = 1.0
            pts.append(nxt)
        local = [int(p[0]) + 2 * int(p[1]) + 4 * int(p[2]) for p in pts]
        if np.linalg.det(np.array(pts[1:]) - pts[0]) < 0:
            local[1], local[2] = local[2], local[1]
        out.append(local)
    return np.array(out)


def build_cube_tet_mesh(n):
    """Unit cube split into n^3 hexahedral cells, each cut into 6 Kuhn tets."""
    n = int(n)
    if n < 1:
        raise ValueError(f"need at least one subdivision per edge, got n={n}")
    m = n + 1
    ax = np.linspace(0.0, 1.0, m)
    z, y, x = np.meshgrid(ax, ax, ax, indexing="ij")
    vertices = np.column_stack([x.ravel(), y.ravel(), z.ravel()])

    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    base = (i + m * (j + m * k)).ravel()
    # corner bit b -> offset of that corner of the cell
    offsets = np.array([(b & 1) + m * ((b >> 1) & 1) + m * m * ((b >> 2) & 1) for b in range(8)])
    local = offsets[_kuhn_tets()]  # (6, 4)
    tets = (base[:, None, None] + local[None]).reshape(-1, 4)

    on_bnd = np.any((np.abs(vertices) < 1e-12) | (np.abs(vertices - 1.0) < 1e-12), axis=1)
    return Mesh(vertices, tets, np.flatnonzero(on_bnd))


def tet_jacobian(coords):
    """Reference-to-physical map of an affine tet: x = v0 + J xi."""
    coords = np.asarray(coords, dtype=float)
    return (coords[..., 1:, :] - coords[..., :1, :]).swapaxes(-1, -2)


def element_geometry(mesh, e):
    """Vertex coordinates, jacobian and detJ of element ``e``."""
    coords = mesh.vertices[mesh.tets[e]]
    jac = tet_jacobian(coords)
    detj = float(np.linalg.det(jac))
    if not detj > 0.0:
        raise DegenerateElementError(e, detj)
    return coords, jac, detj


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Per-element affine maps, batched along the leading axis."""

    jac: np.ndarray  # (ne, 3, 3)
    jinv: np.ndarray  # (ne, 3, 3)
    detj: np.ndarray  # (ne,)

    def __len__(self):
        return len(self.detj)

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            idx = slice(idx, idx + 1 or None)  # keep the batch axis
        return ElementGeometry(self.jac[idx], self.jinv[idx], self.detj[idx])

    @classmethod
    def from_coords(cls, coords):
        jac = tet_jacobian(coords)
        if jac.ndim == 2:
            jac = jac[None]
        detj = np.linalg.det(jac)
        bad = np.flatnonzero(~(detj > 0.0))
        if bad.size:
            raise DegenerateElementError(int(bad[0]), float(detj[bad[0]]))
        return cls(jac, np.linalg.inv(jac), detj)


def mesh_geometry(mesh):
    return ElementGeometry.from_coords(mesh.vertices[mesh.tets])


def write_vtk(path, mesh, point_data=None, cell_data=None, title="feod"):
    """Legacy ASCII VTK unstructured grid (cell type 10, linear tet)."""
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.num_vertices} double"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    ne = mesh.num_elements
    lines.append(f"CELLS {ne} {5 * ne}")
    lines += [f"4 {a} {b} {c} {d}" for a, b, c, d in mesh.tets]
    lines.append(f"CELL_TYPES {ne}")
    lines += ["10"] * ne
    for header, size, fields in (("POINT_DATA", mesh.num_vertices, point_data),
                                 ("CELL_DATA", ne, cell_data)):
        if not fields:
            continue
        lines.append(f"{header} {size}")
        for name, values in fields.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (size,):
                raise ValueError(f"{name}: expected {size} values, got shape {values.shape}")
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [f"{v:.17g}" for v in values]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
