"""Damped semismooth Newton iteration for one implicit line update.

The unknowns of every implicit solve in the scheme are the cell averages of a
single line plus the scalar multiplier ``xi``.  This module treats such a
system abstractly through :class:`RowSystem`; the scheme modules supply the
residual and Jacobian.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NoConvergence, ParameterError, SingularJacobian


@dataclass(frozen=True)
class NewtonParams:
    tol_residual: float = 1e-12
    max_iter: int = 50
    damping_max_halvings: int = 30
    fd_jacobian: bool = False
    # a trial is accepted once it beats the largest of this many recent
    # accepted residual norms; 1 gives the strictly monotone rule
    nonmonotone_window: int = 5

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ParameterError("tol_residual must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.damping_max_halvings < 0:
            raise ParameterError("damping_max_halvings must be >= 0")
        if self.nonmonotone_window < 1:
            raise ParameterError("nonmonotone_window must be >= 1")


@dataclass(frozen=True)
class RowSystem:
    """Nonlinear system in ``n`` line unknowns plus one scalar.

    ``residual(phi, xi)`` returns ``n + 1`` values and ``jacobian(phi, xi)`` the
    dense ``(n + 1, n + 1)`` derivative.  Iterates must satisfy
    ``|phi_i| < bound``.  ``freeze_xi(phi, xi)`` may flag points where the
    scalar row carries no information (the multiplier constraint reads
    ``0 = xi * 0`` when ``phi`` equals the previous state); the solver then
    keeps ``xi`` fixed for that iteration.
    """

    n: int
    residual: Callable[[np.ndarray, float], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    bound: float = np.inf
    freeze_xi: Optional[Callable[[np.ndarray, float], bool]] = None


@dataclass
class SolveStats:
    iterations: int = 0
    final_residual: float = np.inf
    halvings_total: int = 0
    converged: bool = False
    initial_residual: float = np.inf


def _max_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r))) if r.size else 0.0


def _eval(system: RowSystem, phi: np.ndarray, xi: float):
    """Residual and its max-norm; ``inf`` when outside the admissible set."""
    if phi.size and np.max(np.abs(phi)) >= system.bound:
        return None, np.inf
    try:
        r = np.asarray(system.residual(phi, xi), dtype=float)
    except DomainError:
        return None, np.inf
    rn = _max_norm(r)
    if not np.isfinite(rn):
        return None, np.inf
    return r, rn


def jacobian_fd(system: RowSystem, phi, xi: float, h: Optional[float] = None) -> np.ndarray:
    """Centered finite-difference Jacobian of ``system.residual``.

    The step for component ``j`` is ``h * (1 + |x_j|)`` with ``h = 1e-7`` by
    default.  A perturbation that would leave the admissible set falls back to
    a one-sided difference; if both sides are inadmissible a
    :class:`DomainError` is raised.
    """
    h = 1e-7 if h is None else h
    if not h > 0:
        raise ParameterError("finite-difference step must be positive")
    phi = np.asarray(phi, dtype=float)
    n = system.n
    x0 = np.append(phi, xi)
    r0 = None
    jac = np.empty((n + 1, n + 1))

    def feval(x):
        r, _ = _eval(system, x[:n], x[n])
        return r

    for j in range(n + 1):
        step = h * (1.0 + abs(x0[j]))
        xp = x0.copy()
        xm = x0.copy()
        xp[j] += step
        xm[j] -= step
        rp = feval(xp)
        rm = feval(xm)
        if rp is not None and rm is not None:
            jac[:, j] = (rp - rm) / (2.0 * step)
            continue
        if r0 is None:
            r0 = feval(x0)
            if r0 is None:
                raise DomainError("base point outside the residual's domain")
        if rp is not None:
            jac[:, j] = (rp - r0) / step
        elif rm is not None:
            jac[:, j] = (r0 - rm) / step
        else:
            raise DomainError(f"both perturbations of component {j} leave the domain")
    return jac


def _newton_direction(jac: np.ndarray, r: np.ndarray, freeze: bool):
    n = jac.shape[0] - 1
    if not freeze:
        try:
            delta = np.linalg.solve(jac, -r)
            if np.all(np.isfinite(delta)):
                return delta[:n], float(delta[n])
        except np.linalg.LinAlgError:
            pass
    # multiplier row degenerate or full system singular: keep xi fixed
    try:
        du = np.linalg.solve(jac[:n, :n], -r[:n])
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian("line Jacobian is singular") from exc
    if not np.all(np.isfinite(du)):
        raise SingularJacobian("line Jacobian is singular")
    return du, 0.0


def solve_row(system: RowSystem, phi_init, xi_init: float, params: NewtonParams = NewtonParams()):
    """Solve ``system.residual(phi, xi) = 0`` by damped Newton iteration.

    Each Newton step is halved until the trial point stays strictly inside
    ``system.bound`` and its residual max-norm is below the largest of the
    last ``params.nonmonotone_window`` accepted norms.  The window lets a full
    step through when the upwind switches make the merit function briefly
    rise.  When the halving budget is spent the best admissible trial is
    accepted anyway.

    Returns
    -------
    phi : ndarray
    xi : float
    stats : SolveStats

    Raises
    ------
    NoConvergence
        Tolerance not met within ``params.max_iter`` iterations.
    SingularJacobian
        The linearised system could not be solved.
    """
    phi = np.array(phi_init, dtype=float)
    xi = float(xi_init)
    if phi.shape != (system.n,):
        raise ParameterError(f"expected {system.n} line unknowns, got shape {phi.shape}")
    r, rn = _eval(system, phi, xi)
    if r is None:
        raise DomainError("initial iterate is outside the admissible set")
    stats = SolveStats(final_residual=rn, initial_residual=rn)
    jac_fn = system.jacobian
    if params.fd_jacobian or jac_fn is None:
        def jac_fn(p, x):
            return jacobian_fd(system, p, x)

    history = deque([rn], maxlen=params.nonmonotone_window)
    while rn > params.tol_residual and stats.iterations < params.max_iter:
        stats.iterations += 1
        ref = max(history)
        jac = np.asarray(jac_fn(phi, xi), dtype=float)
        freeze = bool(system.freeze_xi(phi, xi)) if system.freeze_xi is not None else False
        du, dxi = _newton_direction(jac, r, freeze)

        lam = 1.0
        best = None
        accepted = None
        for _ in range(params.damping_max_halvings + 1):
            trial_phi = phi + lam * du
            trial_xi = xi + lam * dxi
            rt, rtn = _eval(system, trial_phi, trial_xi)
            if rt is not None:
                if best is None or rtn < best[3]:
                    best = (trial_phi, trial_xi, rt, rtn)
                if rtn < ref:
                    accepted = (trial_phi, trial_xi, rt, rtn)
                    break
            lam *= 0.5
            stats.halvings_total += 1
        if accepted is None:
            accepted = best
        if accepted is None:
            break
        phi, xi, r, rn = accepted
        history.append(rn)
        stats.final_residual = rn

    stats.final_residual = rn
    stats.converged = rn <= params.tol_residual
    if not stats.converged:
        raise NoConvergence(
            f"Newton stopped after {stats.iterations} iterations with residual {rn:.3e}",
            phi=phi, xi=xi, stats=stats,
        )
    return phi, xi, stats
