"""Independent reference implementations for testing.

Everything here is transcribed directly from the scheme's defining formulas
with plain loops in multiple-precision arithmetic (mpmath).  No numerics are
shared with the production modules; only the parameter dataclasses are read.
This file was written from the formulas alone, before the scheme code was
consulted, and should stay that way.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np

from .errors import DomainError, NoConvergence, ParameterError
from .newton import RowSystem

DEFAULT_DPS = 40


def _mp(x):
    return mpmath.mpf(float(x)) if not isinstance(x, mpmath.mpf) else x


class _Physics:
    """Potential, mobility and the upwind flux in mpmath."""

    def __init__(self, params):
        pot = params.potential
        self.log = pot.kind.value == "logarithmic"
        self.theta = _mp(pot.theta)
        self.theta_c = _mp(pot.theta_c)
        self.k = int(params.mobility.k)
        self.beta = _mp(params.mobility.beta)
        self.eps2 = _mp(params.epsilon) ** 2
        self.dt = _mp(params.dt)

    def F(self, p):
        if self.log:
            if abs(p) >= 1:
                raise DomainError("logarithmic potential needs |phi| < 1")
            return self.theta / 2 * ((1 + p) * mpmath.log(1 + p) + (1 - p) * mpmath.log(1 - p)) \
                + self.theta_c / 2 * (1 - p * p)
        return (1 - p * p) ** 2 / 4

    def dF(self, p):
        if self.log:
            if abs(p) >= 1:
                raise DomainError("logarithmic potential needs |phi| < 1")
            return self.theta / 2 * (mpmath.log(1 + p) - mpmath.log(1 - p)) - self.theta_c * p
        return p ** 3 - p

    def M(self, c1, c2):
        a = self.beta + c1
        b = self.beta - c2
        a = a if a > 0 else mpmath.mpf(0)
        b = b if b > 0 else mpmath.mpf(0)
        return (a * b) ** self.k

    def flux(self, v, left, right):
        plus = v if v > 0 else mpmath.mpf(0)
        minus = v if v < 0 else mpmath.mpf(0)
        return plus * self.M(left, right) + minus * self.M(right, left)


def _as_list(values, dps):
    with mpmath.workdps(dps):
        return [mpmath.mpf(float(v)) for v in np.asarray(values, dtype=float).ravel()]


def _line_residual(ph, u, u0, xi, lap, h):
    """Rows of one implicit line: flux balance plus the multiplier constraint.

    ``lap[i]`` is the discrete Laplacian at cell ``i`` of the line.
    """
    n = len(u)
    mu = [-ph.eps2 * lap[i] + xi * ph.dF(u[i]) for i in range(n)]
    J = [mpmath.mpf(0)] * (n + 1)
    for i in range(n - 1):
        V = -(mu[i + 1] - mu[i]) / h
        J[i + 1] = ph.flux(V, u[i], u[i + 1])
    rows = [u[i] - u0[i] + ph.dt / h * (J[i + 1] - J[i]) for i in range(n)]
    lhs = mpmath.fsum(ph.F(u[i]) - ph.F(u0[i]) for i in range(n))
    rhs = xi * mpmath.fsum(ph.dF(u[i]) * (u[i] - u0[i]) for i in range(n))
    rows.append(lhs - rhs)
    return rows


def _lap_1d(u, h):
    n = len(u)
    out = []
    for i in range(n):
        if i == 0:
            out.append((u[1] - u[0]) / h ** 2)
        elif i == n - 1:
            out.append((-u[n - 1] + u[n - 2]) / h ** 2)
        else:
            out.append((u[i + 1] - 2 * u[i] + u[i - 1]) / h ** 2)
    return out


def _lap_2d(P, i, j, dx, dy):
    """Laplacian at cell (i, j) with the corner, edge and interior cases written out."""
    nx, ny = len(P), len(P[0])
    first_i, last_i = i == 0, i == nx - 1
    first_j, last_j = j == 0, j == ny - 1
    if first_i:
        ax = (P[1][j] - P[0][j]) / dx ** 2
    elif last_i:
        ax = (-P[nx - 1][j] + P[nx - 2][j]) / dx ** 2
    else:
        ax = (P[i + 1][j] - 2 * P[i][j] + P[i - 1][j]) / dx ** 2
    if first_j:
        ay = (P[i][1] - P[i][0]) / dy ** 2
    elif last_j:
        ay = (-P[i][ny - 1] + P[i][ny - 2]) / dy ** 2
    else:
        ay = (P[i][j + 1] - 2 * P[i][j] + P[i][j - 1]) / dy ** 2
    return ax + ay


def oracle_residual_1d(phi_new, xi_new, phi_old, params, dps: int = DEFAULT_DPS) -> np.ndarray:
    """Scheme residual (``n`` balance rows, then the constraint) by naive loops."""
    if phi_old.grid.dim != 1:
        raise ParameterError("expected a 1D field")
    with mpmath.workdps(dps):
        ph = _Physics(params)
        u = _as_list(phi_new, dps)
        u0 = _as_list(phi_old.values, dps)
        if len(u) != len(u0):
            raise ParameterError("phi_new has the wrong length")
        h = _mp(phi_old.grid.dx)
        rows = _line_residual(ph, u, u0, _mp(xi_new), _lap_1d(u, h), h)
        return np.array([float(r) for r in rows])


def oracle_sweep_residual(line_new, xi, state, axis: int, index: int, grid, params,
                          dps: int = DEFAULT_DPS) -> np.ndarray:
    """Residual of one splitting sweep computed on the whole grid.

    ``state`` holds the field before the sweep (shape ``(nx, ny)``);
    ``axis = 0`` updates row ``state[:, index]`` along x, ``axis = 1`` column
    ``state[index, :]`` along y.  The constraint sums over every cell, so the
    untouched lines contribute exactly zero.
    """
    with mpmath.workdps(dps):
        ph = _Physics(params)
        old = [_as_list(row, dps) for row in np.asarray(state, dtype=float)]
        new = [list(r) for r in old]
        vals = _as_list(line_new, dps)
        nx, ny = len(old), len(old[0])
        if axis == 0:
            for i in range(nx):
                new[i][index] = vals[i]
            cells = [(i, index) for i in range(nx)]
            h = _mp(grid.dx)
        else:
            for j in range(ny):
                new[index][j] = vals[j]
            cells = [(index, j) for j in range(ny)]
            h = _mp(grid.dy)
        dx, dy = _mp(grid.dx), _mp(grid.dy)
        lap = [_lap_2d(new, i, j, dx, dy) for (i, j) in cells]
        u = [new[i][j] for (i, j) in cells]
        u0 = [old[i][j] for (i, j) in cells]
        rows = _line_residual(ph, u, u0, _mp(xi), lap, h)
        # the constraint over the full grid; off-line cells cancel term by term
        lhs = mpmath.fsum(ph.F(new[i][j]) - ph.F(old[i][j]) for i in range(nx) for j in range(ny))
        rhs = _mp(xi) * mpmath.fsum(ph.dF(new[i][j]) * (new[i][j] - old[i][j])
                                    for i in range(nx) for j in range(ny))
        rows[-1] = lhs - rhs
        return np.array([float(r) for r in rows])


def oracle_row_system_1d(phi_old, params, dps: int = DEFAULT_DPS) -> RowSystem:
    """RowSystem backed by :func:`oracle_residual_1d`, for :func:`oracle_solve`."""
    def residual(u, xi):
        return oracle_residual_1d(u, xi, phi_old, params, dps)
    return RowSystem(n=phi_old.grid.nx, residual=residual, bound=params.mobility.beta)


def oracle_sweep_system(state, axis: int, index: int, grid, params, dps: int = DEFAULT_DPS) -> RowSystem:
    n = grid.nx if axis == 0 else grid.ny

    def residual(u, xi):
        return oracle_sweep_residual(u, xi, state, axis, index, grid, params, dps)
    return RowSystem(n=n, residual=residual, bound=params.mobility.beta)


def _fd_jacobian(res, x, r0, step):
    n = len(x)
    jac = np.empty((len(r0), n))
    for j in range(n):
        xp = x.copy()
        xp[j] += step * (1 + abs(x[j]))
        rp = res(xp)
        if rp is None:
            xp[j] = x[j] - step * (1 + abs(x[j]))
            rp = res(xp)
            if rp is None:
                raise DomainError("finite-difference probe left the domain")
        jac[:, j] = (rp - r0) / (xp[j] - x[j])
    return jac


def _newton(system: RowSystem, x0: np.ndarray, tol: float, max_iter: int):
    n = system.n

    def res(x):
        if np.any(np.abs(x[:n]) >= system.bound):
            return None
        try:
            r = np.asarray(system.residual(x[:n], x[n]), dtype=float)
        except DomainError:
            return None
        return r if np.all(np.isfinite(r)) else None

    x = x0.copy()
    r = res(x)
    if r is None:
        return None
    for _ in range(max_iter):
        rn = np.max(np.abs(r))
        if rn <= tol:
            return x, rn
        jac = _fd_jacobian(res, x, r, 1e-8)
        try:
            d = np.linalg.lstsq(jac, -r, rcond=None)[0]
        except np.linalg.LinAlgError:
            return x, rn
        lam = 1.0
        while lam > 1e-12:
            xt = x + lam * d
            rt = res(xt)
            if rt is not None and np.max(np.abs(rt)) < rn:
                break
            lam *= 0.5
        else:
            return x, rn
        x, r = xt, rt
    return x, float(np.max(np.abs(r)))


def oracle_solve(system: RowSystem, seeds: Sequence, tol: float = 1e-14, max_iter: int = 100):
    """Multistart damped Newton with a finite-difference Jacobian.

    ``seeds`` are ``(phi, xi)`` pairs.  Returns ``(phi, xi, residual)`` for the
    best converged seed together with the list of all converged roots, so
    callers can probe uniqueness.
    """
    roots = []
    best = None
    for phi, xi in seeds:
        x0 = np.append(np.asarray(phi, dtype=float), float(xi))
        out = _newton(system, x0, tol, max_iter)
        if out is None:
            continue
        x, rn = out
        if rn <= tol:
            roots.append((x[:-1], x[-1], rn))
        if best is None or rn < best[2]:
            best = (x[:-1], x[-1], rn)
    if not roots:
        raise NoConvergence("no seed reached the oracle tolerance",
                            phi=None if best is None else best[0],
                            xi=None if best is None else best[1])
    phi, xi, rn = min(roots, key=lambda t: t[2])
    return phi, xi, rn, roots


def default_seeds(u0: np.ndarray, xi0: float = 1.0, spread: Iterable[float] = (0.0, 0.5, -0.5),
                  jitter: Iterable[float] = (0.0, 1e-4), seed: int = 0):
    """Starting points: the previous state, optionally jittered, with multiplier offsets.

    At ``phi = u0`` the constraint row is degenerate (``0 = xi * 0``) and a
    least-squares step may jump to a distant root; a small deterministic
    jitter lets the multistart search also reach the roots near ``xi0``.
    """
    u0 = np.asarray(u0, dtype=float)
    rng = np.random.default_rng(seed)
    seeds = []
    for j in jitter:
        base = u0 + j * rng.standard_normal(u0.shape) if j else u0.copy()
        seeds.extend((base.copy(), xi0 + s) for s in spread)
    return seeds


def compensated_sum(values) -> float:
    """Exactly rounded sum (Shewchuk via math.fsum)."""
    import math
    return math.fsum(float(v) for v in np.asarray(values, dtype=float).ravel())
