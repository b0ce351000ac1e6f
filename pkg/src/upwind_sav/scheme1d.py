"""Fully implicit upwind finite-volume step with a Lagrange-multiplier SAV in 1D."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import _kernels as K
from .core import Field, SchemeParams, mobility_pair, potential_derivative, potential_value
from .errors import CertificateViolation, ParameterError
from .newton import RowSystem, SolveStats, solve_row


@dataclass
class StepResult:
    field: Field
    xi: float
    stats: Any
    info: dict = field(default_factory=dict)


def certificate_tolerance(n_cells: int, params: SchemeParams) -> float:
    return 10.0 * n_cells * params.newton.tol_residual


def _scalars(params: SchemeParams):
    pot = params.potential
    return (params.dt, params.epsilon ** 2, pot.code, pot.theta, pot.theta_c,
            params.mobility.k, params.mobility.beta)


def _check_1d(field: Field):
    if field.grid.dim != 1:
        raise ParameterError("expected a 1D field")


def laplacian_1d(field: Field) -> np.ndarray:
    """Central second difference with the homogeneous Neumann end stencils."""
    _check_1d(field)
    u = field.values
    h2 = field.grid.dx ** 2
    lap = np.empty_like(u)
    lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h2
    lap[0] = (u[1] - u[0]) / h2
    lap[-1] = (u[-2] - u[-1]) / h2
    return lap


def chemical_potential(field: Field, xi: float, params: SchemeParams) -> np.ndarray:
    return -params.epsilon ** 2 * laplacian_1d(field) \
        + xi * potential_derivative(params.potential, field.values)


def upwind_flux(mu, field: Field, params: SchemeParams):
    """Face velocities (n - 1) and upwind fluxes (n + 1, zero on the boundary)."""
    _check_1d(field)
    mu = np.asarray(mu, dtype=float)
    u = field.values
    v = -(mu[1:] - mu[:-1]) / field.grid.dx
    flux = np.zeros(u.size + 1)
    spec = params.mobility
    for f in range(u.size - 1):
        plus, minus = max(v[f], 0.0), min(v[f], 0.0)
        flux[f + 1] = plus * mobility_pair(spec, u[f], u[f + 1]) \
            + minus * mobility_pair(spec, u[f + 1], u[f])
    return v, flux


def _line_args(n: int):
    return np.zeros(n), np.zeros(n)


def residual_1d(phi_new, xi_new: float, phi_old: Field, params: SchemeParams) -> np.ndarray:
    """Scheme residual: n flux-balance rows followed by the multiplier constraint."""
    _check_1d(phi_old)
    u = np.ascontiguousarray(phi_new, dtype=float)
    # domain check through the potential (raises DomainError)
    potential_value(params.potential, u)
    n = u.size
    res = np.empty(n + 1)
    td, tc = _line_args(n)
    dt, eps2, pk, th, thc, km, beta = _scalars(params)
    K.line_residual(u, float(xi_new), phi_old.values, td, tc, phi_old.grid.dx, dt, eps2,
                    pk, th, thc, km, beta, res)
    return res


def line_system(u0: np.ndarray, h: float, params: SchemeParams,
                tdiag: Optional[np.ndarray] = None, tconst: Optional[np.ndarray] = None) -> RowSystem:
    """RowSystem for one implicit line with optional frozen transverse terms."""
    u0 = np.ascontiguousarray(u0, dtype=float)
    n = u0.size
    td = np.zeros(n) if tdiag is None else np.ascontiguousarray(tdiag, dtype=float)
    tc = np.zeros(n) if tconst is None else np.ascontiguousarray(tconst, dtype=float)
    dt, eps2, pk, th, thc, km, beta = _scalars(params)
    pot = params.potential

    def residual(u, xi):
        u = np.ascontiguousarray(u, dtype=float)
        potential_value(pot, u)
        res = np.empty(n + 1)
        K.line_residual(u, float(xi), u0, td, tc, h, dt, eps2, pk, th, thc, km, beta, res)
        return res

    def jacobian(u, xi):
        u = np.ascontiguousarray(u, dtype=float)
        band = np.empty((n, 5))
        col = np.empty(n)
        row = np.empty(n)
        corner = K.line_jacobian(u, float(xi), u0, td, tc, h, dt, eps2, pk, th, thc,
                                 km, beta, band, col, row)
        jac = np.zeros((n + 1, n + 1))
        for o in range(5):
            off = o - 2
            i = np.arange(max(0, -off), min(n, n - off))
            jac[i, i + off] = band[i, o]
        jac[:n, n] = col
        jac[n, :n] = row
        jac[n, n] = corner
        return jac

    def freeze_xi(u, xi):
        return bool(np.array_equal(u, u0))

    return RowSystem(n=n, residual=residual, jacobian=jacobian, bound=params.bound,
                     freeze_xi=freeze_xi)


def row_system_1d(phi_old: Field, params: SchemeParams) -> RowSystem:
    _check_1d(phi_old)
    return line_system(phi_old.values, phi_old.grid.dx, params)


def dissipation_terms(field: Field, xi: float, params: SchemeParams):
    """Return ``(-dt * sum J V, -dt * sum min(M+, M-) V^2)`` at ``field``.

    Along an exact step the first bounds the energy change divided by the
    cell width from above, and never exceeds the second, which is <= 0.
    """
    mu = chemical_potential(field, xi, params)
    v, flux = upwind_flux(mu, field, params)
    u = field.values
    spec = params.mobility
    mmin = np.array([min(mobility_pair(spec, u[f], u[f + 1]), mobility_pair(spec, u[f + 1], u[f]))
                     for f in range(u.size - 1)])
    work = -params.dt * float(np.sum(flux[1:-1] * v))
    bound = -params.dt * float(np.sum(mmin * v * v))
    return work, bound


def _bound_ok(values: np.ndarray, beta: float) -> bool:
    m = float(np.max(np.abs(values)))
    return m < beta if beta >= 1.0 else m <= beta


def certify(phi_old: Field, phi_new: Field, params: SchemeParams, tol: float,
            energy_old: Optional[float] = None):
    """Raise :class:`CertificateViolation` unless bound, mass and energy hold."""
    from .diagnostics import discrete_energy

    beta = params.mobility.beta
    if not _bound_ok(phi_new.values, beta):
        raise CertificateViolation("Bound", phi_new.max_abs() - beta)
    dm = abs(float(np.sum(phi_new.values) - np.sum(phi_old.values)))
    if dm > tol:
        raise CertificateViolation("Mass", dm)
    e_old = discrete_energy(phi_old, params) if energy_old is None else energy_old
    e_new = discrete_energy(phi_new, params)
    if e_new > e_old + tol:
        raise CertificateViolation("Energy", e_new - e_old)
    return e_old, e_new


def step_1d(phi_old: Field, xi_old: float, params: SchemeParams) -> StepResult:
    """Advance one backward-Euler step and certify bound, mass and energy.

    The Newton iteration starts from the previous state and multiplier.
    """
    _check_1d(phi_old)
    beta = params.mobility.beta
    if not phi_old.is_admissible(beta):
        raise ParameterError("phi_old must satisfy |phi| < beta")
    system = row_system_1d(phi_old, params)
    phi, xi, stats = solve_row(system, phi_old.values, xi_old, params.newton)
    phi_new = phi_old.with_values(phi)
    tol = certificate_tolerance(phi_old.grid.nx, params)
    e_old, e_new = certify(phi_old, phi_new, params, tol)
    return StepResult(phi_new, xi, stats, {"energy_old": e_old, "energy": e_new, "cert_tol": tol})
