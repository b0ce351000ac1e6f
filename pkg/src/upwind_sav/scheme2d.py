"""Dimensional splitting: x-sweeps row by row, then y-sweeps column by column.

Every inner solve is a 1D implicit line problem whose chemical potential uses
the full five-point Laplacian; the neighbouring lines enter as frozen data.
Rows and columns are 0-based here (row ``q`` is ``values[:, q]``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .core import Field, SchemeParams
from .diagnostics import discrete_energy
from .errors import CertificateViolation, NoConvergence, ParameterError, SingularJacobian
from .newton import SolveStats, solve_row
from .scheme1d import StepResult, _bound_ok, certificate_tolerance, line_system


@dataclass
class SplitState:
    """Working copy of the field during one splitting step, updated in place."""

    grid: object
    values: np.ndarray
    xi_tilde: np.ndarray = None
    xi_hat: np.ndarray = None
    sweep_energies: Optional[list] = None

    @classmethod
    def start(cls, phi: Field, record_energy: bool = False, params: Optional[SchemeParams] = None):
        g = phi.grid
        st = cls(g, np.array(phi.values, dtype=float), np.full(g.ny, np.nan), np.full(g.nx, np.nan))
        if record_energy:
            st.sweep_energies = [discrete_energy(phi, params)]
        return st

    def field(self) -> Field:
        return Field(self.grid, self.values)


@dataclass
class SplitStats:
    """Per-sweep solver statistics of one splitting step (x-sweeps first)."""

    iterations: np.ndarray
    residuals: np.ndarray
    halvings: np.ndarray
    energy_changes: np.ndarray
    mass_changes: np.ndarray

    @property
    def total_iterations(self) -> int:
        return int(np.sum(self.iterations))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def laplacian_2d(field: Field) -> np.ndarray:
    """Five-point Laplacian; at edges and corners the missing neighbour drops out."""
    if field.grid.dim != 2:
        raise ParameterError("expected a 2D field")
    u = field.values
    gx = np.zeros_like(u)
    d = np.diff(u, axis=0)
    gx[:-1] += d
    gx[1:] -= d
    gy = np.zeros_like(u)
    d = np.diff(u, axis=1)
    gy[:, :-1] += d
    gy[:, 1:] -= d
    return gx / field.grid.dx ** 2 + gy / field.grid.dy ** 2


def _line_data(values: np.ndarray, axis: int, idx: int, grid):
    if axis == 0:
        n, h, ht = grid.nx, grid.dx, grid.dy
        u0 = np.ascontiguousarray(values[:, idx])
    else:
        n, h, ht = grid.ny, grid.dy, grid.dx
        u0 = np.ascontiguousarray(values[idx, :])
    td = np.empty(n)
    tc = np.empty(n)
    K.transverse_terms(values, axis, idx, ht, td, tc)
    return u0, h, ht, td, tc


def _sweep(state: SplitState, axis: int, idx: int, xi_prev: float, params: SchemeParams,
           certify_energy: bool = True):
    g = state.grid
    limit = g.ny if axis == 0 else g.nx
    if not 0 <= idx < limit:
        raise ParameterError(f"line index {idx} out of range")
    u0, h, ht, td, tc = _line_data(state.values, axis, idx, g)
    system = line_system(u0, h, params, td, tc)
    label = ("x", idx) if axis == 0 else ("y", idx)
    try:
        u, xi, stats = solve_row(system, u0, xi_prev, params.newton)
    except NoConvergence as exc:
        exc.sweep = label
        raise
    pot = params.potential
    de = K.line_energy_change(u, u0, state.values, axis, idx, h, ht, g.dx * g.dy,
                              params.epsilon ** 2, pot.code, pot.theta, pot.theta_c)
    if axis == 0:
        state.values[:, idx] = u
        state.xi_tilde[idx] = xi
    else:
        state.values[idx, :] = u
        state.xi_hat[idx] = xi
    tol = certificate_tolerance(g.size, params)
    if not _bound_ok(u, params.mobility.beta):
        raise CertificateViolation("Bound", float(np.max(np.abs(u))) - params.mobility.beta, label)
    if certify_energy and de > tol:
        raise CertificateViolation("Energy", de, label)
    if state.sweep_energies is not None:
        state.sweep_energies.append(state.sweep_energies[-1] + de)
    stats.energy_change = de
    return state, xi, stats


def sweep_x(state: SplitState, q: int, xi_prev: float, params: SchemeParams, certify_energy: bool = True):
    """Implicit x-direction update of row ``q``; other rows are untouched."""
    return _sweep(state, 0, q, xi_prev, params, certify_energy)


def sweep_y(state: SplitState, p: int, xi_prev: float, params: SchemeParams, certify_energy: bool = True):
    """Implicit y-direction update of column ``p``."""
    return _sweep(state, 1, p, xi_prev, params, certify_energy)


def _step_python(phi_old: Field, xi_old: float, params: SchemeParams, per_sweep_energy: bool):
    g = phi_old.grid
    state = SplitState.start(phi_old)
    ns = g.ny + g.nx
    it = np.zeros(ns, dtype=np.int64)
    res = np.zeros(ns)
    hv = np.zeros(ns, dtype=np.int64)
    dE = np.zeros(ns)
    dM = np.zeros(ns)
    xi = xi_old
    before = np.sum(state.values)
    for s in range(ns):
        if s < g.ny:
            _, xi, st = sweep_x(state, s, xi, params, per_sweep_energy)
        else:
            _, xi, st = sweep_y(state, s - g.ny, xi, params, per_sweep_energy)
        it[s], res[s], hv[s], dE[s] = st.iterations, st.final_residual, st.halvings_total, st.energy_change
        after = np.sum(state.values)
        dM[s] = after - before
        before = after
    return state, SplitStats(it, res, hv, dE, dM)


def _step_kernel(phi_old: Field, xi_old: float, params: SchemeParams):
    g = phi_old.grid
    ns = g.ny + g.nx
    values = np.array(phi_old.values, dtype=float)
    xis = np.zeros(ns)
    it = np.zeros(ns, dtype=np.int64)
    res = np.zeros(ns)
    hv = np.zeros(ns, dtype=np.int64)
    dE = np.zeros(ns)
    dM = np.zeros(ns)
    umax = np.zeros(ns)
    pot = params.potential
    nw = params.newton
    status, fail = K.split_step(
        values, float(xi_old), g.dx, g.dy, params.dt, params.epsilon ** 2,
        pot.code, pot.theta, pot.theta_c, params.mobility.k, params.mobility.beta,
        params.bound, nw.tol_residual, nw.max_iter, nw.damping_max_halvings, nw.nonmonotone_window,
        xis, it, res, hv, dE, dM, umax)
    if status != K.OK:
        label = ("x", fail) if fail < g.ny else ("y", fail - g.ny)
        stats = SolveStats(int(it[fail]), float(res[fail]), int(hv[fail]), False)
        if status == K.SINGULAR:
            raise SingularJacobian(f"singular line Jacobian in sweep {label}")
        raise NoConvergence(f"Newton failed in sweep {label} (residual {res[fail]:.3e})",
                            phi=values, xi=float(xis[fail]), stats=stats, sweep=label)
    beta = params.mobility.beta
    for s in range(ns):
        if not (umax[s] < beta if beta >= 1.0 else umax[s] <= beta):
            label = ("x", s) if s < g.ny else ("y", s - g.ny)
            raise CertificateViolation("Bound", float(umax[s] - beta), label)
    state = SplitState(g, values, xis[:g.ny].copy(), xis[g.ny:].copy())
    return state, SplitStats(it, res, hv, dE, dM)


def step_2d(phi_old: Field, xi_old: float, params: SchemeParams, per_sweep_energy: bool = True,
            record_sweeps: bool = False, engine: str = "kernel") -> StepResult:
    """One splitting step with bound, mass and energy certificates.

    ``engine="kernel"`` runs all sweeps in compiled code; ``"python"`` drives
    :func:`sweep_x`/:func:`sweep_y` through the generic Newton solver and is
    used automatically when a finite-difference Jacobian is requested.
    """
    g = phi_old.grid
    if g.dim != 2:
        raise ParameterError("expected a 2D field")
    beta = params.mobility.beta
    if not phi_old.is_admissible(beta):
        raise ParameterError("phi_old must satisfy |phi| < beta")
    if params.newton.fd_jacobian:
        engine = "python"
    e_old = discrete_energy(phi_old, params)
    if engine == "python":
        state, stats = _step_python(phi_old, xi_old, params, per_sweep_energy)
    elif engine == "kernel":
        state, stats = _step_kernel(phi_old, xi_old, params)
    else:
        raise ParameterError(f"unknown engine {engine!r}")

    tol = certificate_tolerance(g.size, params)
    if per_sweep_energy:
        worst = int(np.argmax(stats.energy_changes))
        if stats.energy_changes[worst] > tol:
            label = ("x", worst) if worst < g.ny else ("y", worst - g.ny)
            raise CertificateViolation("Energy", float(stats.energy_changes[worst]), label)
        for s, dm in enumerate(stats.mass_changes):
            if abs(dm) > tol:
                label = ("x", s) if s < g.ny else ("y", s - g.ny)
                raise CertificateViolation("Mass", abs(float(dm)), label)
    phi_new = state.field()
    if not _bound_ok(phi_new.values, beta):
        raise CertificateViolation("Bound", phi_new.max_abs() - beta)
    dm = abs(float(np.sum(phi_new.values) - np.sum(phi_old.values)))
    if dm > tol:
        raise CertificateViolation("Mass", dm)
    e_new = discrete_energy(phi_new, params)
    if e_new > e_old + tol:
        raise CertificateViolation("Energy", e_new - e_old)
    xi_new = (float(np.sum(state.xi_tilde)) + float(np.sum(state.xi_hat))) / (g.nx + g.ny)
    info = {"energy_old": e_old, "energy": e_new, "cert_tol": tol,
            "xi_tilde": state.xi_tilde, "xi_hat": state.xi_hat}
    if record_sweeps:
        info["sweep_energies"] = e_old + np.concatenate(([0.0], np.cumsum(stats.energy_changes)))
    return StepResult(phi_new, xi_new, stats, info)
