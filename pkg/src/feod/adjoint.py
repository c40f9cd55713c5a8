"""Adjoint design sensitivities of the compliance F(u) = b^T u.

The design is a per-element coefficient rho multiplying the flux. With
r(u; rho) = 0 and J^T lam = b,

    dF/drho_e = -lam^T dr/drho_e = -sum_q w_q grad(lam)_q . dflux/drho(g_q)

where the flux parameter derivative comes from forward AD at each
quadrature point.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .assembly import (
    _map_chunks,
    load_vector,
    qpoint_weights,
    state_gradients,
    DEFAULT_CHUNK,
)
from .mesh import write_vtk
from .qfunction import flux_drho
from .solver import JacobianOperator, SolverError, cg_solve, newton_solve
from .space import prolong_true, restrict_true


@dataclass(frozen=True, eq=False)
class DesignField:
    """Piecewise-constant design coefficients, one per element."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        if rho.ndim != 1:
            raise ValueError("rho must be one-dimensional")
        if not np.all(np.isfinite(rho)) or np.any(rho <= 0.0):
            raise ValueError("rho must be finite and strictly positive")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def uniform(cls, space, value=1.0):
        return cls(np.full(space.num_elements, float(value)))

    def check(self, space):
        if len(self.rho) != space.num_elements:
            raise ValueError(f"design has {len(self.rho)} entries, mesh has "
                             f"{space.num_elements} elements")
        return self

    def perturbed(self, e, h):
        rho = self.rho.copy()
        rho[e] += h
        return DesignField(rho)


def load_true(space, basis, source=1.0):
    return restrict_true(space, load_vector(space, basis, source))


def objective_value(space, basis, u, source=1.0):
    """Compliance F(u) = b^T u on true DOFs."""
    return float(load_true(space, basis, source) @ np.asarray(u, dtype=float))


def adjoint_solve(space, basis, params, u, source=1.0, strategy="res", mode="forward",
                  rtol=1e-10, maxit=2000):
    """Solve J(u)^T lam = dF/du = b. J is symmetric, so the forward operator is reused."""
    rhs = load_true(space, basis, source)
    op = JacobianOperator(space, basis, params, u, strategy, mode)
    res = cg_solve(op.matvec, rhs, rtol, maxit, op.diagonal)
    if not res.converged:
        raise SolverError(f"adjoint CG did not converge ({res.iterations} iterations, "
                          f"|res| = {res.residual_norm:.3e})")
    return res.x


def sensitivity(space, basis, params, u, lam, rho=None, chunk=DEFAULT_CHUNK, threads=1):
    """dF/drho_e for every element."""
    rho = params.rho if rho is None else rho
    ne, nq = space.num_elements, basis.nq
    rho_e = np.broadcast_to(np.asarray(rho, dtype=float), (ne,))
    g = state_gradients(space, basis, prolong_true(space, u))
    gl = state_gradients(space, basis, prolong_true(space, lam))
    w = qpoint_weights(basis, space.geometry)
    out = np.empty(ne)

    def work(s):
        m = len(range(*s.indices(ne)))
        comps = [g[s, :, k].ravel() for k in range(3)]
        dflux = np.asarray(flux_drho(params, comps, np.repeat(rho_e[s], nq)))
        dflux = np.moveaxis(dflux, 0, -1).reshape(m, nq, 3)
        # each chunk owns its slice of the output
        out[s] = 0.0 - np.einsum("eq,eqk,eqk->e", w[s], gl[s], dflux)

    _map_chunks(work, ne, chunk, threads)
    return out


@dataclass
class SensitivityResult:
    u: np.ndarray
    lam: np.ndarray
    objective: float
    dF_drho: np.ndarray
    newton: object


def compliance_sensitivity(space, basis, params, design=None, source=1.0, strategy="res",
                           mode="forward", rtol=1e-10, atol=1e-14, u0=None, threads=1):
    """State solve, adjoint solve and sensitivities in one call."""
    design = DesignField.uniform(space) if design is None else design.check(space)
    prm = params.with_rho(design.rho)
    u, report = newton_solve(space, basis, prm, u0, strategy, mode, source=source,
                             rtol=rtol, atol=atol, threads=threads)
    lam = adjoint_solve(space, basis, prm, u, source, strategy, mode)
    sens = sensitivity(space, basis, prm, u, lam, threads=threads)
    return SensitivityResult(u, lam, objective_value(space, basis, u, source), sens, report)


def fd_sensitivity(space, basis, params, design=None, source=1.0, h=1e-6, elements=None,
                   u_ref=None):
    """Central differences of F with a full re-solve per perturbation."""
    design = DesignField.uniform(space) if design is None else design.check(space)
    elements = range(space.num_elements) if elements is None else elements
    out = []
    for e in elements:
        vals = []
        for sgn in (1.0, -1.0):
            prm = params.with_rho(design.perturbed(e, sgn * h).rho)
            u, _ = newton_solve(space, basis, prm, u_ref, source=source, rtol=1e-13,
                                atol=1e-15)
            vals.append(objective_value(space, basis, u, source))
        out.append((vals[0] - vals[1]) / (2.0 * h))
    return np.array(out)


def write_sensitivity_csv(path, values):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element", "dF_drho"])
        for e, v in enumerate(values):
            writer.writerow([e, repr(float(v))])


def read_sensitivity_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["dF_drho"]) for r in rows])


def write_sensitivity_vtk(path, space, values, design=None):
    cells = {"dF_drho": values}
    if design is not None:
        cells["rho"] = design.rho
    write_vtk(path, space.mesh, cell_data=cells, title="compliance sensitivity")
