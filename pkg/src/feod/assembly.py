"""Operator action, partial assembly and element tangent matrices.

The nonlinear residual and the matrix-free Jacobian are applied through
the factorisation

    r(u)   = P^T G^T B^T D(B G P u) - load
    J(u) v = P^T G^T B^T J_D(u_q) B G P v

where only the pointwise operator D (and its Jacobian J_D) ever sees an AD
number type.  Element tangent matrices are produced by three strategies:

* ``res``  J_D from quadrature-point AD, then the plain B^T J_D B contraction
* ``elm``  AD of the whole element residual with respect to the element DOFs
* ``hnd``  hand-coded J_D, then the same contraction as ``res``

The element kernels are written once against generic scalars with one lane
per element, so the same code is timed on float lanes and counted on
``CountingScalar`` lanes.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .ad import CountingScalar, DualScalar, DualVecScalar, Tape, constant_like, counting
from .ad import pack_nested
from .basis import physical_gradients
from .mesh import ElementGeometry
from .qfunction import MODE_TO_VARIANT, flux, flux_jacobian
from .space import gather_all, prolong_true, restrict_true, scatter_all

STRATEGIES = ("res", "elm", "hnd")
MODES = ("forward", "reverse", "dual")
DEFAULT_CHUNK = 2048


@dataclass(eq=False)
class QuadratureData:
    """Stored pointwise Jacobians: everything a matrix-free J(u) v needs."""

    jd: np.ndarray  # (ne, nq, 3, 3)
    w: np.ndarray  # (ne, nq) quadrature weight * detJ
    jinv: np.ndarray  # (ne, 3, 3)

    def __len__(self):
        return len(self.w)

    def __getitem__(self, idx):
        return QuadratureData(self.jd[idx], self.w[idx], self.jinv[idx])


def _rho_elements(params, ne):
    rho = np.asarray(params.rho, dtype=float)
    if rho.ndim == 0:
        return float(rho)
    if rho.shape != (ne,):
        raise ValueError(f"rho must be a scalar or one value per element ({ne}), got {rho.shape}")
    return rho


def _chunks(n, size):
    size = max(1, int(size))
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def _map_chunks(fn, n, chunk, threads):
    parts = _chunks(n, chunk)
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, parts))
    return [fn(s) for s in parts]


def qpoint_weights(basis, geom):
    return geom.detj[:, None] * basis.weights[None, :]


def qpoint_coords(space, basis):
    """Physical quadrature points, (ne, nq, 3)."""
    x0 = space.mesh.vertices[space.mesh.tets[:, 0]]
    return x0[:, None, :] + np.einsum("ekl,ql->eqk", space.geometry.jac, basis.qpoints)


def load_vector(space, basis, source=1.0):
    """Full-length load vector b_j = sum_q w_q f(x_q) phi_j(x_q).

    ``source`` is a constant or a callable taking points (..., 3).
    """
    w = qpoint_weights(basis, space.geometry)
    if callable(source):
        w = w * source(qpoint_coords(space, basis))
    else:
        w = source * w
    return scatter_all(space, w @ basis.shape)


def _dshape_matrix(basis):
    # (ndof, nq*3) so that reference gradients of all elements are one matmul
    return basis.dshape.transpose(1, 0, 2).reshape(basis.ndof, -1)


def _element_gradients(basis, ue, jinv):
    ne = len(ue)
    gref = (ue @ _dshape_matrix(basis)).reshape(ne, basis.nq, 3)
    return gref @ jinv


def state_gradients(space, basis, u_full):
    """Physical solution gradients at every quadrature point, (ne, nq, 3)."""
    return _element_gradients(basis, gather_all(space, u_full), space.geometry.jinv)


def _apply_btw(space, basis, jinv, w, flux_q):
    """P-free part of the transpose chain: G^T B^T (w * flux), full length."""
    fref = (flux_q * w[..., None]) @ jinv.transpose(0, 2, 1)
    re = fref.reshape(len(fref), -1) @ _dshape_matrix(basis).T
    return scatter_all(space, re)


def apply_operator(space, basis, params, u, source=1.0):
    """Nonlinear residual on true DOFs, computed element-by-element."""
    u_full = prolong_true(space, u)
    g = state_gradients(space, basis, u_full)
    ne, nq = g.shape[:2]
    rho = _rho_elements(params, ne)
    rho_q = rho if np.ndim(rho) == 0 else np.repeat(rho, nq)
    comps = [g[..., k].ravel() for k in range(3)]
    f = np.stack(flux(params, comps, rho_q), axis=-1).reshape(ne, nq, 3)
    geom = space.geometry
    r = _apply_btw(space, basis, geom.jinv, qpoint_weights(basis, geom), f)
    if callable(source) or source != 0.0:
        r = r - load_vector(space, basis, source)
    return restrict_true(space, r)


def compute_qdata(space, basis, params, u, variant="fwd"):
    """Evaluate and store J_D at every quadrature point (partial assembly)."""
    variant = MODE_TO_VARIANT.get(variant, variant)
    u_full = prolong_true(space, u)
    g = state_gradients(space, basis, u_full)
    ne, nq = g.shape[:2]
    rho = _rho_elements(params, ne)
    rho_q = rho if np.ndim(rho) == 0 else np.repeat(rho, nq)
    comps = [g[..., k].ravel() for k in range(3)]
    jd = np.asarray(flux_jacobian(params, comps, variant, rho_q))  # (3, 3, ne*nq)
    jd = np.moveaxis(jd, -1, 0).reshape(ne, nq, 3, 3)
    geom = space.geometry
    return QuadratureData(jd, qpoint_weights(basis, geom), geom.jinv)


def apply_jacobian(space, basis, qdata, v):
    """J(u) v matrix-free from stored quadrature data."""
    v_full = prolong_true(space, v)
    gphys = _element_gradients(basis, gather_all(space, v_full), qdata.jinv)
    lin = (qdata.jd @ gphys[..., None])[..., 0]
    return restrict_true(space, _apply_btw(space, basis, qdata.jinv, qdata.w, lin))


def jacobian_diagonal(space, basis, qdata):
    """Diagonal of J(u) on true DOFs (Jacobi preconditioner)."""
    gphys = np.einsum("qjk,ekl->eqjl", basis.dshape, qdata.jinv)
    de = np.einsum("eq,eqjk,eqkl,eqjl->ej", qdata.w, gphys, qdata.jd, gphys)
    return restrict_true(space, scatter_all(space, de))


# ---------------------------------------------------------------------------
# element kernels (lane-last, generic scalars)


def _lanes(G, w):
    """(ne, nq, ndof, 3), (ne, nq) -> nested lists of per-element lane arrays."""
    Gl = np.ascontiguousarray(np.moveaxis(G, 0, -1))
    wl = np.ascontiguousarray(w.T)
    nq, ndof = Gl.shape[:2]
    return [[[Gl[q, j, k] for k in range(3)] for j in range(ndof)] for q in range(nq)], list(wl)


def _interp_gradient(Gq, u):
    g = []
    for k in range(3):
        acc = Gq[0][k] * u[0]
        for j in range(1, len(u)):
            acc = acc + Gq[j][k] * u[j]
        g.append(acc)
    return g


def _accumulate_btdb(K, Gq, wq, J):
    """K += B_q^T (w_q J) B_q, upper triangle only (J is symmetric)."""
    ndof = len(Gq)
    wj = [[None] * 3 for _ in range(3)]
    for k in range(3):
        for l in range(k, 3):
            wj[k][l] = wj[l][k] = wq * J[k][l]
    t = [[wj[k][0] * Gq[j][0] + wj[k][1] * Gq[j][1] + wj[k][2] * Gq[j][2]
          for j in range(ndof)] for k in range(3)]
    for i in range(ndof):
        gi = Gq[i]
        Ki = K[i]
        for j in range(i, ndof):
            v = gi[0] * t[0][j] + gi[1] * t[1][j] + gi[2] * t[2][j]
            Ki[j] = v if Ki[j] is None else Ki[j] + v


def _mirror(K):
    for i in range(len(K)):
        for j in range(i):
            K[i][j] = K[j][i]
    return K


def _kernel_contract(Gl, wl, J):
    ndof = len(Gl[0])
    K = [[None] * ndof for _ in range(ndof)]
    for q in range(len(Gl)):
        _accumulate_btdb(K, Gl[q], wl[q], J[q])
    return _mirror(K)


def _kernel_qpoint(params, Gl, wl, u, rho, variant, tape):
    ndof = len(u)
    K = [[None] * ndof for _ in range(ndof)]
    for q in range(len(Gl)):
        g = _interp_gradient(Gl[q], u)
        J = flux_jacobian(params, g, variant, rho, tape)
        _accumulate_btdb(K, Gl[q], wl[q], J)
    return _mirror(K)


def element_residual(params, Gl, wl, u, rho):
    """r_e(u_e) = B^T (w * D(B u_e)) for generic scalar DOF values ``u``."""
    r = [None] * len(u)
    for q in range(len(Gl)):
        Gq = Gl[q]
        F = flux(params, _interp_gradient(Gq, u), rho)
        Fw = [wl[q] * F[k] for k in range(3)]
        for j in range(len(u)):
            v = Gq[j][0] * Fw[0] + Gq[j][1] * Fw[1] + Gq[j][2] * Fw[2]
            r[j] = v if r[j] is None else r[j] + v
    return r


def _kernel_elm(params, Gl, wl, u, rho, mode, tape):
    n = len(u)
    if mode == "forward":
        xs = [DualVecScalar(u[j], [constant_like(u[j], 1.0 if i == j else 0.0) for i in range(n)])
              for j in range(n)]
        return [list(r.grad) for r in element_residual(params, Gl, wl, xs, rho)]
    if mode == "reverse":
        tape.reset()
        xs = [tape.variable(uj) for uj in u]
        rows = []
        for r in element_residual(params, Gl, wl, xs, rho):
            adj = tape.sweep(r)
            rows.append([adj[x.index] for x in xs])
        return rows
    if mode == "dual":
        cols = []
        for j in range(n):
            xs = [DualScalar(u[i], constant_like(u[i], 1.0 if i == j else 0.0)) for i in range(n)]
            cols.append([r.deriv for r in element_residual(params, Gl, wl, xs, rho)])
        return [[cols[j][i] for j in range(n)] for i in range(n)]
    raise ValueError(f"unknown AD mode {mode!r}")


def _run_kernel(basis, params, ue_lanes, geom, strategy, mode, rho, tape):
    strategy = strategy.lower()
    G = physical_gradients(basis, geom.jac)
    w = qpoint_weights(basis, geom)
    Gl, wl = _lanes(G, w)
    if strategy == "res":
        return _kernel_qpoint(params, Gl, wl, ue_lanes, rho, MODE_TO_VARIANT[mode], tape)
    if strategy == "hnd":
        return _kernel_qpoint(params, Gl, wl, ue_lanes, rho, "hnd", tape)
    if strategy == "elm":
        return _kernel_elm(params, Gl, wl, ue_lanes, rho, mode, tape)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def _to_matrices(K, ne):
    arr = np.asarray(pack_nested(K))  # (ndof, ndof, ne)
    return np.moveaxis(np.broadcast_to(arr, arr.shape[:2] + (ne,)), -1, 0)


def _as_batch(u_e, geom):
    u_e = np.asarray(u_e, dtype=float)
    single = u_e.ndim == 1
    if single:
        u_e = u_e[None]
    if not isinstance(geom, ElementGeometry):
        geom = ElementGeometry.from_coords(geom)
    if len(geom) != len(u_e):
        raise ValueError(f"{len(u_e)} element states but {len(geom)} geometries")
    return u_e, geom, single


def element_matrices(basis, params, u_e, geom, strategy="res", mode="forward", rho=None,
                     tape=None):
    """Tangent matrices K_e = dr_e/du_e for a batch of elements.

    ``u_e`` is (ne, ndof) or (ndof,); ``geom`` an ElementGeometry or vertex
    coordinates (ne, 4, 3).  Returns (ne, ndof, ndof) or (ndof, ndof).
    """
    u_e, geom, single = _as_batch(u_e, geom)
    ne = len(u_e)
    if rho is None:
        rho = _rho_elements(params, ne)
    tape = Tape() if tape is None else tape
    K = _run_kernel(basis, params, [u_e[:, j] for j in range(basis.ndof)], geom,
                    strategy, mode, rho, tape)
    out = _to_matrices(K, ne)
    return out[0] if single else out


def count_element_ops(basis, params, u_e, geom, strategy="res", mode="forward", rho=None):
    """Counted scalar operations per element and peak tape nodes per element.

    The kernel runs on ``CountingScalar`` lanes, one lane per element; a
    tick counts one operation in every lane.
    """
    u_e, geom, _ = _as_batch(u_e, geom)
    if rho is None:
        rho = _rho_elements(params, len(u_e))
    tape = Tape()
    lanes = [CountingScalar(u_e[:, j]) for j in range(basis.ndof)]
    with counting() as counter:
        _run_kernel(basis, params, lanes, geom, strategy, mode, rho, tape)
    return counter.count, tape.peak


def assemble_element_matrix_res(basis, qdata_e):
    """K_e = sum_q w_q B_q^T J_D,q B_q from stored quadrature data."""
    single = qdata_e.w.ndim == 1
    if single:
        qdata_e = QuadratureData(qdata_e.jd[None], qdata_e.w[None], qdata_e.jinv[None])
    ne = len(qdata_e)
    G = np.einsum("qjk,ekl->eqjl", basis.dshape, qdata_e.jinv)
    Gl, wl = _lanes(G, qdata_e.w)
    jd = np.moveaxis(qdata_e.jd, 0, -1)  # (nq, 3, 3, ne)
    out = _to_matrices(_kernel_contract(Gl, wl, jd), ne)
    return out[0] if single else out


def assemble_element_matrix_elm(basis, params, u_e, geom, mode="forward", rho=None, tape=None):
    return element_matrices(basis, params, u_e, geom, "elm", mode, rho, tape)


def assemble_element_matrix_hnd(basis, params, u_e, geom, rho=None):
    return element_matrices(basis, params, u_e, geom, "hnd", "none", rho)


def all_element_matrices(space, basis, params, u, strategy="res", mode="forward",
                         chunk=DEFAULT_CHUNK, threads=1):
    """Element matrices for every element of ``space`` at true-DOF state ``u``."""
    strategy = strategy.lower()
    ne = space.num_elements
    if strategy == "res":
        qdata = compute_qdata(space, basis, params, u, MODE_TO_VARIANT[mode])
        parts = _map_chunks(lambda s: assemble_element_matrix_res(basis, qdata[s]),
                            ne, chunk, threads)
        return np.concatenate(parts)
    ue = gather_all(space, prolong_true(space, u))
    rho = _rho_elements(params, ne)
    geom = space.geometry

    def work(s):
        r = rho if np.ndim(rho) == 0 else rho[s]
        return element_matrices(basis, params, ue[s], geom[s], strategy, mode, r)

    return np.concatenate(_map_chunks(work, ne, chunk, threads))


def assemble_global(space, basis, params, u, strategy="res", mode="forward",
                    eliminate=True, chunk=DEFAULT_CHUNK, threads=1):
    """Global tangent as CSR; essential rows/columns removed when ``eliminate``."""
    Ke = all_element_matrices(space, basis, params, u, strategy, mode, chunk, threads)
    dofs = space.elem_dofs
    nd = basis.ndof
    rows = np.repeat(dofs, nd, axis=1).ravel()
    cols = np.tile(dofs, (1, nd)).ravel()
    n = space.ndof_global
    A = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    if eliminate:
        free = space.free_dofs
        A = A[free][:, free].tocsr()
    A.sort_indices()
    return A
