import numpy as np
import pytest

from feod.adjoint import (
    DesignField,
    adjoint_solve,
    compliance_sensitivity,
    fd_sensitivity,
    load_true,
    objective_value,
    read_sensitivity_csv,
    sensitivity,
    write_sensitivity_csv,
    write_sensitivity_vtk,
)
from feod.assembly import apply_jacobian, compute_qdata
from feod.qfunction import PLaplacianParams
from feod.solver import newton_solve


def test_design_field_validation(spaces):
    s, _ = spaces(2, 1)
    with pytest.raises(ValueError):
        DesignField(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        DesignField(np.ones((2, 2)))
    with pytest.raises(ValueError):
        DesignField(np.ones(5)).check(s)
    d = DesignField.uniform(s, 2.0)
    assert len(d.rho) == 48 and np.all(d.rho == 2.0)


def test_objective_trivial(spaces):
    s, b = spaces(2, 2)
    assert objective_value(s, b, np.zeros(s.ndof_true)) == 0.0
    u = np.random.default_rng(0).normal(size=s.ndof_true)
    assert objective_value(s, b, u, source=0.0) == 0.0


def test_objective_one_dof_closed_form(spaces):
    # K = 6h = 3, b = h^3 = 1/8 for the centre vertex of the n = 2 mesh
    s, b = spaces(2, 1)
    u, _ = newton_solve(s, b, PLaplacianParams(p=2.0))
    assert load_true(s, b)[0] == pytest.approx(0.125, rel=1e-14)
    assert objective_value(s, b, u) == pytest.approx(0.125 ** 2 / 3.0, rel=1e-12)


def test_self_adjoint_linear_case(spaces):
    s, b = spaces(2, 2)
    prm = PLaplacianParams(p=2.0)
    u, _ = newton_solve(s, b, prm, rtol=1e-12)
    lam = adjoint_solve(s, b, prm, u)
    np.testing.assert_allclose(lam, u, atol=1e-9 * np.abs(u).max())


def test_adjoint_residual_and_strategy(spaces):
    s, b = spaces(2, 2)
    prm = PLaplacianParams()
    u, _ = newton_solve(s, b, prm)
    lam = adjoint_solve(s, b, prm, u)
    rhs = load_true(s, b)
    qd = compute_qdata(s, b, prm, u)
    assert np.linalg.norm(apply_jacobian(s, b, qd, lam) - rhs) <= 1e-8 * np.linalg.norm(rhs)
    for strategy, mode in (("elm", "forward"), ("hnd", "none")):
        np.testing.assert_allclose(adjoint_solve(s, b, prm, u, strategy=strategy, mode=mode), lam,
                                   atol=1e-8 * np.abs(lam).max())


def test_euler_identity_p2(spaces):
    s, b = spaces(2, 2)
    d = DesignField(np.random.default_rng(3).uniform(0.5, 1.5, s.num_elements))
    res = compliance_sensitivity(s, b, PLaplacianParams(p=2.0), d)
    assert d.rho @ res.dF_drho == pytest.approx(-res.objective, rel=1e-6)


def test_sign_and_zero_source(spaces):
    s, b = spaces(2, 2)
    res = compliance_sensitivity(s, b, PLaplacianParams())
    assert np.all(res.dF_drho <= 1e-10)
    zero = compliance_sensitivity(s, b, PLaplacianParams(), source=0.0)
    np.testing.assert_array_equal(zero.dF_drho, 0.0)


@pytest.mark.parametrize("p", [2.0, 4.0])
def test_fd_with_resolve(spaces, p):
    s, b = spaces(2, 2)
    d = DesignField(np.random.default_rng(1).uniform(0.5, 1.5, s.num_elements))
    prm = PLaplacianParams(p=p)
    res = compliance_sensitivity(s, b, prm, d)
    elems = [0, 5, 17, 30, 47]
    fd = fd_sensitivity(s, b, prm, d, elements=elems, u_ref=res.u)
    np.testing.assert_allclose(fd, res.dF_drho[elems], rtol=1e-4)


def test_sensitivity_threads_match(spaces):
    s, b = spaces(2, 2)
    prm = PLaplacianParams()
    u, _ = newton_solve(s, b, prm)
    lam = adjoint_solve(s, b, prm, u)
    a = sensitivity(s, b, prm, u, lam)
    c = sensitivity(s, b, prm, u, lam, chunk=5, threads=3)
    np.testing.assert_array_equal(a, c)


def test_exports(spaces, tmp_path):
    s, b = spaces(2, 1)
    res = compliance_sensitivity(s, b, PLaplacianParams())
    write_sensitivity_csv(tmp_path / "s.csv", res.dF_drho)
    back = read_sensitivity_csv(tmp_path / "s.csv")
    assert len(back) == s.num_elements
    np.testing.assert_array_equal(back, res.dF_drho)
    write_sensitivity_vtk(tmp_path / "s.vtk", s, res.dF_drho, DesignField.uniform(s))
    text = (tmp_path / "s.vtk").read_text()
    assert "CELL_DATA 48" in text and "SCALARS dF_drho" in text and "SCALARS rho" in text
