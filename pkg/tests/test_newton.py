import numpy as np
import pytest

from upwind_sav import (Field, NewtonParams, NoConvergence, ParameterError, RowSystem,
                        SingularJacobian, jacobian_fd, random_field, row_system_1d, solve_row)
from upwind_sav.errors import DomainError

from conftest import line, params


def affine_system(c):
    n = len(c)

    def residual(u, xi):
        return np.append(u - c, xi - 1.0)

    def jacobian(u, xi):
        return np.eye(n + 1)
    return RowSystem(n=n, residual=residual, jacobian=jacobian)


def test_affine_system_converges_in_one_iteration():
    c = np.array([0.3, -0.2, 5.0])
    phi, xi, stats = solve_row(affine_system(c), np.zeros(3), 7.0)
    assert stats.iterations == 1 and stats.converged
    assert np.allclose(phi, c, atol=1e-15) and xi == 1.0


def test_affine_system_with_fd_jacobian():
    c = np.array([0.1, 0.2])
    sys = affine_system(c)
    sys = RowSystem(n=2, residual=sys.residual)
    phi, xi, stats = solve_row(sys, np.zeros(2), 0.0)
    assert stats.iterations <= 2
    assert np.allclose(phi, c, atol=1e-12) and abs(xi - 1) < 1e-12


def test_stationary_field_returns_unchanged_with_xi_convention():
    f = Field(line(16), np.full(16, 0.2))
    p = params()
    phi, xi, stats = solve_row(row_system_1d(f, p), f.values, 0.93, p.newton)
    assert np.array_equal(phi, f.values)
    assert xi == 0.93
    # the initial iterate already satisfies the tolerance, so no update is taken
    assert stats.iterations == 0 and stats.converged


def test_no_convergence_reports_best_iterate():
    # x^2 + 1 = 0 has no real root
    def residual(u, xi):
        return np.array([u[0] ** 2 + 1.0, xi])
    sys = RowSystem(1, residual, lambda u, xi: np.array([[2 * u[0], 0.0], [0.0, 1.0]]))
    with pytest.raises(NoConvergence) as info:
        solve_row(sys, np.array([0.5]), 0.0, NewtonParams(max_iter=10))
    assert info.value.stats.iterations == 10
    assert info.value.phi is not None


def test_singular_jacobian():
    sys = RowSystem(1, lambda u, xi: np.array([1.0, 1.0]), lambda u, xi: np.zeros((2, 2)))
    with pytest.raises(SingularJacobian):
        solve_row(sys, np.array([0.0]), 1.0)


def test_initial_point_outside_bound():
    sys = RowSystem(1, lambda u, xi: np.array([u[0], xi]), bound=1.0)
    with pytest.raises(DomainError):
        solve_row(sys, np.array([1.0]), 0.0)


def test_damping_keeps_iterates_in_bound():
    # root at 0.9 but the undamped first step from -0.9 overshoots past 1
    seen = []

    def residual(u, xi):
        seen.append(u.copy())
        return np.array([np.tanh(8 * (u[0] - 0.9)), xi - 1.0])
    sys = RowSystem(1, residual, bound=1.0)
    phi, xi, _ = solve_row(sys, np.array([0.5]), 1.0)
    assert abs(phi[0] - 0.9) < 1e-10
    # every evaluated point passed the bound filter before evaluation
    assert all(abs(u[0]) < 1.0 for u in seen)


@pytest.mark.parametrize("window", [1, 5])
def test_scheme_solve_with_window(window):
    f = random_field(line(16), 0.1, 0.4, 3)
    p = params(dt=1e-4)
    nw = NewtonParams(nonmonotone_window=window)
    phi, xi, stats = solve_row(row_system_1d(f, p), f.values, 1.0, nw)
    assert stats.converged and stats.final_residual <= nw.tol_residual
    assert stats.final_residual <= stats.initial_residual
    assert np.max(np.abs(phi)) < 1


def test_newton_params_validation():
    for bad in [dict(tol_residual=0), dict(max_iter=0), dict(damping_max_halvings=-1),
                dict(nonmonotone_window=0)]:
        with pytest.raises(ParameterError):
            NewtonParams(**bad)


def test_wrong_shape_rejected():
    with pytest.raises(ParameterError):
        solve_row(affine_system(np.zeros(3)), np.zeros(2), 1.0)


def test_jacobian_fd_affine_exact():
    a = np.array([[2.0, -1.0, 0.5], [0.0, 3.0, 1.0], [1.0, 1.0, -4.0]])
    b = np.array([0.3, -0.1, 0.7])

    def residual(u, xi):
        return a @ np.append(u, xi) + b
    sys = RowSystem(2, residual)
    # truncation error vanishes for affine data; rounding noise scales as
    # eps / h, so the tight bound needs a step well above the default
    jac = jacobian_fd(sys, np.array([0.1, -0.4]), 0.8, h=1e-2)
    assert np.max(np.abs(jac - a)) < 1e-12
    assert np.max(np.abs(jacobian_fd(sys, np.array([0.1, -0.4]), 0.8) - a)) < 1e-7


def test_jacobian_fd_one_sided_near_bound():
    sys = RowSystem(1, lambda u, xi: np.array([u[0] ** 2, xi]), bound=1.0)
    jac = jacobian_fd(sys, np.array([1.0 - 1e-9]), 0.0, h=1e-6)
    assert jac[0, 0] == pytest.approx(2.0, rel=1e-5)
    with pytest.raises(DomainError):
        jacobian_fd(RowSystem(1, lambda u, xi: np.array([u[0], xi]), bound=1e-9),
                    np.array([0.0]), 0.0, h=1.0)
    with pytest.raises(ParameterError):
        jacobian_fd(sys, np.array([0.0]), 0.0, h=-1.0)
