"""Newton's method with a Jacobi-preconditioned conjugate-gradient inner solve."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    apply_jacobian,
    apply_operator,
    assemble_global,
    compute_qdata,
    jacobian_diagonal,
)
from .qfunction import MODE_TO_VARIANT, PLaplacianParams

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual_norm: float


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    inner_iterations: list = field(default_factory=list)

    def ratios(self):
        h = self.residual_history
        return [h[k + 1] / h[k] for k in range(len(h) - 1)]


def cg_solve(matvec, b, rtol=1e-10, maxit=2000, precond=None, x0=None):
    """Preconditioned CG; ``precond`` is the operator diagonal (Jacobi) or None."""
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, True, 0.0)
    inv_diag = None if precond is None else 1.0 / np.asarray(precond, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    z = r if inv_diag is None else inv_diag * r
    d = z.copy()
    rz = r @ z
    tol = rtol * bnorm
    rnorm = np.linalg.norm(r)
    it = 0
    while rnorm > tol and it < maxit:
        Ad = matvec(d)
        dAd = d @ Ad
        if not np.isfinite(dAd) or not np.isfinite(rz):
            raise SolverError(f"CG: non-finite value at iteration {it}")
        if dAd <= 0.0:
            raise SolverError(f"CG: operator not positive definite (d^T A d = {dAd:.3e})")
        alpha = rz / dAd
        x += alpha * d
        r -= alpha * Ad
        z = r if inv_diag is None else inv_diag * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
        rnorm = np.linalg.norm(r)
        it += 1
    if not np.isfinite(rnorm):
        raise SolverError("CG: non-finite residual")
    return CGResult(x, it, bool(rnorm <= tol), float(rnorm))


class JacobianOperator:
    """Linearisation at ``u`` in one of the three strategies.

    ``res`` stays matrix-free (stored qpoint J_D); ``elm`` and ``hnd``
    assemble a CSR matrix from element tangents.
    """

    def __init__(self, space, basis, params, u, strategy="res", mode="forward", threads=1):
        self.strategy = strategy.lower()
        if self.strategy == "res":
            qdata = compute_qdata(space, basis, params, u, MODE_TO_VARIANT[mode])
            self.matvec = lambda v: apply_jacobian(space, basis, qdata, v)
            self.diagonal = jacobian_diagonal(space, basis, qdata)
        else:
            A = assemble_global(space, basis, params, u, self.strategy, mode, threads=threads)
            self.matvec = A.dot
            self.diagonal = A.diagonal()


def _linear_start(space, basis, params, source, cg_rtol, cg_maxit):
    lin = PLaplacianParams(2.0, 0.0, params.rho)
    u0 = np.zeros(space.ndof_true)
    op = JacobianOperator(space, basis, lin, u0, "res", "forward")
    res = cg_solve(op.matvec, -apply_operator(space, basis, lin, u0, source),
                   cg_rtol, cg_maxit, op.diagonal)
    if not res.converged:
        raise SolverError("CG failed on the p=2 starting problem")
    return res.x


def newton_solve(space, basis, params, u0=None, strategy="res", mode="forward", *,
                 source=1.0, rtol=1e-8, atol=1e-12, maxit=50, cg_rtol=1e-10,
                 cg_maxit=2000, damping=False, threads=1):
    """Solve r(u) = 0.

    ``u0=None`` starts from the p=2 solution for p > 2 and from zero for
    p = 2, where that start would already be the answer.
    """
    if u0 is None and params.p == 2.0:
        u = np.zeros(space.ndof_true)
    elif u0 is None:
        u = _linear_start(space, basis, params, source, cg_rtol, cg_maxit)
    else:
        u = np.array(u0, dtype=float)
        if u.shape != (space.ndof_true,):
            raise ValueError(f"u0 must have {space.ndof_true} entries, got {u.shape}")
    report = NewtonReport()
    r = apply_operator(space, basis, params, u, source)
    rnorm = float(np.linalg.norm(r))
    report.residual_history.append(rnorm)
    target = max(atol, rtol * rnorm)
    while rnorm > target:
        if report.iterations >= maxit:
            raise SolverError(f"Newton did not converge in {maxit} iterations "
                              f"(|r| = {rnorm:.3e}, target {target:.3e})")
        op = JacobianOperator(space, basis, params, u, strategy, mode, threads)
        cg = cg_solve(op.matvec, -r, cg_rtol, cg_maxit, op.diagonal)
        if not cg.converged:
            raise SolverError(f"CG did not converge at Newton step {report.iterations} "
                              f"({cg.iterations} iterations, |res| = {cg.residual_norm:.3e})")
        step = 1.0
        u_new = u + cg.x
        r_new = apply_operator(space, basis, params, u_new, source)
        if damping:
            while np.linalg.norm(r_new) >= rnorm and step > 1e-4:
                step *= 0.5
                u_new = u + step * cg.x
                r_new = apply_operator(space, basis, params, u_new, source)
        u, r = u_new, r_new
        rnorm = float(np.linalg.norm(r))
        if not np.isfinite(rnorm):
            raise SolverError(f"non-finite residual at Newton step {report.iterations}")
        report.iterations += 1
        report.residual_history.append(rnorm)
        report.inner_iterations.append(cg.iterations)
        log.info("newton %d: |r| = %.3e (cg %d, step %g)", report.iterations, rnorm,
                 cg.iterations, step)
    report.converged = True
    return u, report
