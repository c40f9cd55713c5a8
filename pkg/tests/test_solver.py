import numpy as np
import pytest

from feod.assembly import assemble_global
from feod.qfunction import PLaplacianParams
from feod.solver import SolverError, cg_solve, newton_solve


def test_cg_identity():
    b = np.array([1.0, -2.0, 3.0])
    res = cg_solve(lambda x: x, b, precond=np.ones(3))
    np.testing.assert_array_equal(res.x, b)
    assert res.iterations == 1 and res.converged


def test_cg_one_by_one(spaces):
    s, b = spaces(2, 1)
    A = assemble_global(s, b, PLaplacianParams(2.0, 0.0), np.zeros(1))
    res = cg_solve(A.dot, np.array([0.125]), precond=A.diagonal())
    assert res.iterations == 1
    assert res.x[0] == pytest.approx(0.125 / 3.0, rel=1e-14)


def test_cg_matches_dense(spaces):
    s, b = spaces(4, 1)
    A = assemble_global(s, b, PLaplacianParams(2.0, 0.0), np.zeros(s.ndof_true))
    assert s.ndof_true <= 125
    rhs = np.random.default_rng(0).normal(size=s.ndof_true)
    res = cg_solve(A.dot, rhs, 1e-12, precond=A.diagonal())
    np.testing.assert_allclose(res.x, np.linalg.solve(A.toarray(), rhs), atol=1e-8)
    assert np.linalg.norm(rhs - A @ res.x) <= 1e-12 * np.linalg.norm(rhs)


def test_cg_zero_rhs_and_failures():
    assert cg_solve(lambda x: x, np.zeros(4)).iterations == 0
    A = np.diag([1.0, 2.0, 3.0, 4.0, 5.0])
    res = cg_solve(A.dot, np.ones(5), 1e-14, maxit=2)
    assert not res.converged and res.iterations == 2
    with pytest.raises(SolverError):
        cg_solve(lambda x: np.full_like(x, np.nan), np.ones(3))
    with pytest.raises(SolverError):
        cg_solve(lambda x: -x, np.ones(3))


def test_newton_linear_one_step(spaces):
    s, b = spaces(4, 2)
    u, rep = newton_solve(s, b, PLaplacianParams(p=2.0))
    assert rep.iterations == 1 and rep.converged
    assert len(rep.residual_history) == rep.iterations + 1
    assert rep.residual_history[-1] <= 1e-8 * rep.residual_history[0]


def test_newton_p4_superlinear(spaces):
    s, b = spaces(4, 2)
    u, rep = newton_solve(s, b, PLaplacianParams())
    h = rep.residual_history
    assert all(x > 0 for x in h[:-1])
    assert h[-1] <= 1e-8 * h[0]
    r = rep.ratios()
    assert r[-1] < r[-2] < r[-3]
    assert len(rep.inner_iterations) == rep.iterations


def test_damping_gives_monotone_residual(spaces):
    s, b = spaces(4, 2)
    _, rep = newton_solve(s, b, PLaplacianParams(), damping=True)
    h = rep.residual_history
    assert all(h[k + 1] < h[k] for k in range(len(h) - 1))


@pytest.mark.parametrize("strategy,mode", [("elm", "forward"), ("hnd", "none"), ("res", "reverse")])
def test_strategy_independent_iterates(spaces, strategy, mode):
    s, b = spaces(2, 2)
    prm = PLaplacianParams()
    u_ref, rep_ref = newton_solve(s, b, prm)
    u, rep = newton_solve(s, b, prm, strategy=strategy, mode=mode)
    assert rep.iterations == rep_ref.iterations
    np.testing.assert_allclose(u, u_ref, atol=1e-8 * np.abs(u_ref).max())
    np.testing.assert_allclose(rep.residual_history[:3], rep_ref.residual_history[:3], rtol=1e-6)


def test_newton_errors(spaces):
    s, b = spaces(4, 2)
    with pytest.raises(ValueError):
        newton_solve(s, b, PLaplacianParams(), u0=np.zeros(3))
    with pytest.raises(SolverError):
        newton_solve(s, b, PLaplacianParams(), maxit=2)
