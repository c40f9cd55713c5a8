"""Self-checks run by ``feod verify``: strategy equivalence, Jacobian
consistency and adjoint sensitivities against finite differences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adjoint import DesignField, compliance_sensitivity, fd_sensitivity
from .assembly import (
    apply_jacobian,
    apply_operator,
    assemble_element_matrix_res,
    assemble_global,
    compute_qdata,
    element_matrices,
)
from .space import gather_all, prolong_true


@dataclass
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.error) and self.error <= self.tol)

    def line(self):
        status = "ok  " if self.passed else "FAIL"
        return f"{status} {self.name:<22} max err {self.error:.3e} (tol {self.tol:.0e})"


def _qdata(space, basis, params, u, fault):
    qdata = compute_qdata(space, basis, params, u)
    if fault:
        # test hook: corrupt a single stored pointwise Jacobian entry
        qdata.jd[0, 0, 0, 1] += 1.0 + abs(qdata.jd[0, 0, 0, 1])
    return qdata


def check_strategy_equivalence(space, basis, params, u, fault=False, tol=1e-10):
    ue = gather_all(space, prolong_true(space, u))
    geom = space.geometry
    ref = assemble_element_matrix_res(basis, _qdata(space, basis, params, u, fault))
    err = 0.0
    for strategy, mode in (("elm", "forward"), ("elm", "reverse"), ("elm", "dual"),
                           ("hnd", "none"), ("res", "reverse"), ("res", "dual")):
        K = element_matrices(basis, params, ue, geom, strategy, mode)
        err = max(err, float(np.max(np.abs(K - ref))))
    return CheckResult("strategy equivalence", err, tol)


def check_jacobian_fd(space, basis, params, u, v, fault=False, tol=1e-5, h=1e-6):
    Jv = apply_jacobian(space, basis, _qdata(space, basis, params, u, fault), v)
    rp = apply_operator(space, basis, params, u + h * v)
    rm = apply_operator(space, basis, params, u - h * v)
    fd = (rp - rm) / (2.0 * h)
    return CheckResult("jacobian vs FD", float(np.linalg.norm(Jv - fd) / np.linalg.norm(fd)), tol)


def check_jacobian_csr(space, basis, params, u, v, fault=False, tol=1e-12):
    Jv = apply_jacobian(space, basis, _qdata(space, basis, params, u, fault), v)
    Av = assemble_global(space, basis, params, u, "res") @ v
    return CheckResult("jacobian vs CSR", float(np.linalg.norm(Jv - Av) / np.linalg.norm(Av)), tol)


def check_adjoint_fd(space, basis, params, rng, tol=1e-4, h=1e-6, max_elements=48):
    design = DesignField(rng.uniform(0.5, 1.5, space.num_elements))
    res = compliance_sensitivity(space, basis, params, design)
    ne = space.num_elements
    elems = np.arange(ne) if ne <= max_elements else np.sort(
        rng.choice(ne, max_elements, replace=False))
    fd = fd_sensitivity(space, basis, params, design, h=h, elements=elems, u_ref=res.u)
    ad = res.dF_drho[elems]
    # elements whose state gradient vanishes have an exactly zero sensitivity
    scale = np.maximum(np.abs(ad), 1e-12 * np.max(np.abs(ad)))
    return CheckResult("adjoint vs FD", float(np.max(np.abs(fd - ad) / scale)), tol)


def run_checks(space, basis, params, seed=0, fault=False, adjoint=True):
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, space.ndof_true)
    v = rng.uniform(-1.0, 1.0, space.ndof_true)
    results = [
        check_strategy_equivalence(space, basis, params, u, fault),
        check_jacobian_fd(space, basis, params, u, v, fault),
        check_jacobian_csr(space, basis, params, u, v, fault),
    ]
    if adjoint:
        results.append(check_adjoint_fd(space, basis, params, rng))
    return results
