"""Compiled kernels for one implicit line of the upwind-SAV scheme.

A "line" is a 1D problem, or one row or column of a 2D field during a
splitting sweep.  Its chemical potential uses the line Laplacian with
homogeneous Neumann ends plus a transverse part ``tdiag * u + tconst`` that
carries the frozen neighbouring lines.  All kernels take the potential as
``(pkind, theta, theta_c)`` with ``pkind`` 0 = polynomial, 1 = logarithmic,
and the mobility as ``(kmob, beta)``.

Status codes returned by the Newton kernels: 0 converged, 1 no convergence,
2 singular Jacobian, 3 inadmissible start.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

OK = 0
NO_CONVERGENCE = 1
SINGULAR = 2
BAD_START = 3


@njit(cache=True)
def pot_f(pkind, th, thc, u):
    if pkind == 0:
        w = 1.0 - u * u
        return 0.25 * w * w
    return 0.5 * th * ((1.0 + u) * math.log1p(u) + (1.0 - u) * math.log1p(-u)) \
        + 0.5 * thc * (1.0 - u * u)


@njit(cache=True)
def pot_df(pkind, th, thc, u):
    if pkind == 0:
        return u * u * u - u
    return 0.5 * th * (math.log1p(u) - math.log1p(-u)) - thc * u


@njit(cache=True)
def pot_d2f(pkind, th, thc, u):
    if pkind == 0:
        return 3.0 * u * u - 1.0
    return th / (1.0 - u * u) - thc


@njit(cache=True)
def mob(a, b, kmob, beta):
    p = max(beta + a, 0.0) * max(beta - b, 0.0)
    return p ** kmob


@njit(cache=True)
def mob_d1(a, b, kmob, beta):
    """Derivative in the first argument (plus-branch convention at kinks)."""
    pa = beta + a
    pb = max(beta - b, 0.0)
    if pa <= 0.0:
        return 0.0
    return kmob * (pa * pb) ** (kmob - 1) * pb


@njit(cache=True)
def mob_d2(a, b, kmob, beta):
    pa = max(beta + a, 0.0)
    pb = beta - b
    if pb <= 0.0:
        return 0.0
    return -kmob * (pa * pb) ** (kmob - 1) * pa


@njit(cache=True)
def line_mu(u, xi, tdiag, tconst, h, eps2, pkind, th, thc, mu):
    n = u.shape[0]
    ih2 = 1.0 / (h * h)
    for i in range(n):
        if i == 0:
            lap = (u[1] - u[0]) * ih2
        elif i == n - 1:
            lap = (u[n - 2] - u[n - 1]) * ih2
        else:
            lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * ih2
        lap += tdiag[i] * u[i] + tconst[i]
        mu[i] = -eps2 * lap + xi * pot_df(pkind, th, thc, u[i])


@njit(cache=True)
def line_flux(u, mu, h, kmob, beta, vel, flux):
    """Face velocities (n-1) and fluxes (n+1, zero at both ends)."""
    n = u.shape[0]
    flux[0] = 0.0
    flux[n] = 0.0
    for f in range(n - 1):
        v = -(mu[f + 1] - mu[f]) / h
        vel[f] = v
        flux[f + 1] = max(v, 0.0) * mob(u[f], u[f + 1], kmob, beta) \
            + min(v, 0.0) * mob(u[f + 1], u[f], kmob, beta)


@njit(cache=True)
def line_residual(u, xi, u0, tdiag, tconst, h, dt, eps2, pkind, th, thc, kmob, beta, res):
    n = u.shape[0]
    mu = np.empty(n)
    vel = np.empty(n - 1)
    flux = np.empty(n + 1)
    line_mu(u, xi, tdiag, tconst, h, eps2, pkind, th, thc, mu)
    line_flux(u, mu, h, kmob, beta, vel, flux)
    r = dt / h
    dF = 0.0
    s = 0.0
    for i in range(n):
        res[i] = u[i] - u0[i] + r * (flux[i + 1] - flux[i])
        dF += pot_f(pkind, th, thc, u[i]) - pot_f(pkind, th, thc, u0[i])
        s += pot_df(pkind, th, thc, u[i]) * (u[i] - u0[i])
    res[n] = dF - xi * s


@njit(cache=True)
def line_jacobian(u, xi, u0, tdiag, tconst, h, dt, eps2, pkind, th, thc, kmob, beta,
                  band, col, row):
    """Analytic Jacobian split into blocks.

    ``band[i, k - i + 2]`` holds d r_i / d u_k (pentadiagonal), ``col`` the
    multiplier column d r_i / d xi, ``row`` the gradient of the multiplier
    constraint in u.  Returns the corner entry d g / d xi.
    """
    n = u.shape[0]
    ih2 = 1.0 / (h * h)
    mu = np.empty(n)
    vel = np.empty(n - 1)
    flux = np.empty(n + 1)
    line_mu(u, xi, tdiag, tconst, h, eps2, pkind, th, thc, mu)
    line_flux(u, mu, h, kmob, beta, vel, flux)

    mu_off = -eps2 * ih2
    mu_diag = np.empty(n)
    dfv = np.empty(n)
    for i in range(n):
        if i == 0 or i == n - 1:
            ld = -ih2
        else:
            ld = -2.0 * ih2
        mu_diag[i] = -eps2 * (ld + tdiag[i]) + xi * pot_d2f(pkind, th, thc, u[i])
        dfv[i] = pot_df(pkind, th, thc, u[i])

    band[:, :] = 0.0
    for i in range(n):
        band[i, 2] = 1.0
        col[i] = 0.0
    r = dt / h
    gv = np.zeros(4)
    for f in range(n - 1):
        v = vel[f]
        m_fw = mob(u[f], u[f + 1], kmob, beta)
        m_bw = mob(u[f + 1], u[f], kmob, beta)
        if v > 0.0:
            s = m_fw
            a = v * mob_d1(u[f], u[f + 1], kmob, beta)
            b = v * mob_d2(u[f], u[f + 1], kmob, beta)
        elif v < 0.0:
            s = m_bw
            a = v * mob_d2(u[f + 1], u[f], kmob, beta)
            b = v * mob_d1(u[f + 1], u[f], kmob, beta)
        else:
            s = 0.0
            a = 0.0
            b = 0.0
        # dJ_f / du_k for k = f-1, f, f+1, f+2
        gv[0] = s * mu_off / h
        gv[1] = s * (-(mu_off - mu_diag[f]) / h) + a
        gv[2] = s * (-(mu_diag[f + 1] - mu_off) / h) + b
        gv[3] = s * (-mu_off / h)
        dj_dxi = s * (-(dfv[f + 1] - dfv[f]) / h)
        for m in range(4):
            k = f - 1 + m
            if k < 0 or k > n - 1:
                continue
            # row f gains +J_f, row f+1 gains -J_f
            band[f, k - f + 2] += r * gv[m]
            band[f + 1, k - f + 1] -= r * gv[m]
        col[f] += r * dj_dxi
        col[f + 1] -= r * dj_dxi

    corner = 0.0
    for j in range(n):
        du = u[j] - u0[j]
        row[j] = dfv[j] - xi * (pot_d2f(pkind, th, thc, u[j]) * du + dfv[j])
        corner -= dfv[j] * du
    return corner


@njit(cache=True)
def band_solve2(band, rhs):
    """Solve a pentadiagonal system for the columns of ``rhs`` (n x 2).

    Gaussian elimination with partial pivoting; the upper bandwidth grows to
    4 through row interchanges.  Returns False on a zero pivot.
    """
    n = band.shape[0]
    w = np.zeros((n, 7))
    scale = 0.0
    for i in range(n):
        for o in range(5):
            w[i, o] = band[i, o]
            scale = max(scale, abs(band[i, o]))
    if scale == 0.0:
        return False
    tiny = 1e-300 + 1e-15 * scale
    for k in range(n):
        p = k
        best = abs(w[k, 2])
        for rr in range(k + 1, min(k + 3, n)):
            val = abs(w[rr, k - rr + 2])
            if val > best:
                best = val
                p = rr
        if best <= tiny:
            return False
        jmax = min(k + 4, n - 1)
        if p != k:
            for j in range(k, jmax + 1):
                t = w[k, j - k + 2]
                w[k, j - k + 2] = w[p, j - p + 2]
                w[p, j - p + 2] = t
            for c in range(rhs.shape[1]):
                t = rhs[k, c]
                rhs[k, c] = rhs[p, c]
                rhs[p, c] = t
        piv = w[k, 2]
        for rr in range(k + 1, min(k + 3, n)):
            lij = w[rr, k - rr + 2] / piv
            if lij == 0.0:
                continue
            w[rr, k - rr + 2] = 0.0
            for j in range(k + 1, jmax + 1):
                w[rr, j - rr + 2] -= lij * w[k, j - k + 2]
            for c in range(rhs.shape[1]):
                rhs[rr, c] -= lij * rhs[k, c]
    for i in range(n - 1, -1, -1):
        jmax = min(i + 4, n - 1)
        for c in range(rhs.shape[1]):
            s = rhs[i, c]
            for j in range(i + 1, jmax + 1):
                s -= w[i, j - i + 2] * rhs[j, c]
            rhs[i, c] = s / w[i, 2]
    return True


@njit(cache=True)
def dense_solve(a, b):
    """Gaussian elimination with partial pivoting; fallback for the bordered system."""
    n = a.shape[0]
    m = a.copy()
    x = b.copy()
    scale = np.max(np.abs(m))
    if scale == 0.0:
        return False
    for k in range(n):
        p = k
        for rr in range(k + 1, n):
            if abs(m[rr, k]) > abs(m[p, k]):
                p = rr
        if abs(m[p, k]) <= 1e-300 + 1e-15 * scale:
            return False
        if p != k:
            for j in range(n):
                t = m[k, j]
                m[k, j] = m[p, j]
                m[p, j] = t
            t = x[k]
            x[k] = x[p]
            x[p] = t
        for rr in range(k + 1, n):
            lij = m[rr, k] / m[k, k]
            if lij != 0.0:
                for j in range(k, n):
                    m[rr, j] -= lij * m[k, j]
                x[rr] -= lij * x[k]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, n):
            s -= m[i, j] * x[j]
        x[i] = s / m[i, i]
    b[:] = x
    return True


@njit(cache=True)
def bordered_solve(band, col, row, corner, res, freeze, du):
    """Newton direction for the bordered system; returns (ok, dxi).

    ``res`` is the residual (n + 1); the direction solves J d = -res.  With
    ``freeze`` the multiplier is held fixed and only the line block is used.
    """
    n = band.shape[0]
    rhs = np.empty((n, 2))
    for i in range(n):
        rhs[i, 0] = -res[i]
        rhs[i, 1] = col[i]
    ok = band_solve2(band, rhs)
    if ok:
        if freeze:
            for i in range(n):
                du[i] = rhs[i, 0]
            return True, 0.0
        dx = 0.0
        dy = 0.0
        mag = abs(corner)
        for i in range(n):
            dx += row[i] * rhs[i, 0]
            dy += row[i] * rhs[i, 1]
            mag += abs(row[i] * rhs[i, 1])
        schur = corner - dy
        if abs(schur) > 1e-14 * mag and math.isfinite(schur):
            dxi = (-res[n] - dx) / schur
            for i in range(n):
                du[i] = rhs[i, 0] - rhs[i, 1] * dxi
            return True, dxi
    # line block singular or Schur complement degenerate: full dense solve
    full = np.zeros((n + 1, n + 1))
    for i in range(n):
        for o in range(5):
            k = i + o - 2
            if 0 <= k < n:
                full[i, k] = band[i, o]
        full[i, n] = col[i]
        full[n, i] = row[i]
    full[n, n] = corner
    b = np.empty(n + 1)
    for i in range(n + 1):
        b[i] = -res[i]
    if not freeze and dense_solve(full, b):
        for i in range(n):
            du[i] = b[i]
        return True, b[n]
    if ok:
        # block solvable but bordered system degenerate: keep xi fixed
        for i in range(n):
            du[i] = rhs[i, 0]
        return True, 0.0
    sub = full[:n, :n].copy()
    b = np.empty(n)
    for i in range(n):
        b[i] = -res[i]
    if dense_solve(sub, b):
        for i in range(n):
            du[i] = b[i]
        return True, 0.0
    return False, 0.0


@njit(cache=True)
def _maxabs(a):
    m = 0.0
    for i in range(a.shape[0]):
        v = abs(a[i])
        if not v <= m:
            m = v
    return m


@njit(cache=True)
def newton_line(u, xi, u0, tdiag, tconst, h, dt, eps2, pkind, th, thc, kmob, beta,
                bound, tol, max_iter, max_halv, window):
    """Damped semismooth Newton for one line, updating ``u`` in place.

    Same policy as :func:`upwind_sav.newton.solve_row`: halve until the trial
    is strictly inside ``bound`` and the residual max-norm drops below the
    largest of the last ``window`` accepted norms, accept
    the best admissible trial when the halving budget runs out, and hold
    ``xi`` fixed while ``u`` still equals the previous line.

    Returns (status, xi, iterations, final_residual, halvings, initial_residual).
    """
    n = u.shape[0]
    res = np.empty(n + 1)
    if _maxabs(u) >= bound:
        return BAD_START, xi, 0, np.inf, 0, np.inf
    line_residual(u, xi, u0, tdiag, tconst, h, dt, eps2, pkind, th, thc, kmob, beta, res)
    rn = _maxabs(res)
    if not math.isfinite(rn):
        return BAD_START, xi, 0, np.inf, 0, np.inf
    rn0 = rn
    hist = np.full(max(window, 1), rn)
    band = np.empty((n, 5))
    col = np.empty(n)
    row = np.empty(n)
    du = np.empty(n)
    ut = np.empty(n)
    rt = np.empty(n + 1)
    ubest = np.empty(n)
    rbest = np.empty(n + 1)
    iters = 0
    halv = 0
    while rn > tol and iters < max_iter:
        iters += 1
        corner = line_jacobian(u, xi, u0, tdiag, tconst, h, dt, eps2, pkind, th, thc,
                               kmob, beta, band, col, row)
        freeze = True
        for i in range(n):
            if u[i] != u0[i]:
                freeze = False
                break
        ok, dxi = bordered_solve(band, col, row, corner, res, freeze, du)
        if not ok:
            return SINGULAR, xi, iters, rn, halv, rn0
        ref = hist.max()
        lam = 1.0
        have_best = False
        best_rn = np.inf
        best_xi = xi
        accepted = False
        for _ in range(max_halv + 1):
            inside = True
            for i in range(n):
                ut[i] = u[i] + lam * du[i]
                if not abs(ut[i]) < bound:
                    inside = False
            xt = xi + lam * dxi
            if inside:
                line_residual(ut, xt, u0, tdiag, tconst, h, dt, eps2, pkind, th, thc,
                              kmob, beta, rt)
                rtn = _maxabs(rt)
                if math.isfinite(rtn):
                    if rtn < best_rn:
                        have_best = True
                        best_rn = rtn
                        best_xi = xt
                        ubest[:] = ut
                        rbest[:] = rt
                    if rtn < ref:
                        accepted = True
                        break
            lam *= 0.5
            halv += 1
        if not accepted and not have_best:
            break
        if accepted:
            u[:] = ut
            res[:] = rt
            xi = xt
            rn = rtn
        else:
            u[:] = ubest
            res[:] = rbest
            xi = best_xi
            rn = best_rn
        hist[iters % hist.shape[0]] = rn
    status = OK if rn <= tol else NO_CONVERGENCE
    return status, xi, iters, rn, halv, rn0


@njit(cache=True)
def transverse_terms(phi, axis, idx, ht, tdiag, tconst):
    """Frozen-neighbour part of the 2D Laplacian for line ``idx``.

    ``axis == 0`` is an x-sweep (line ``phi[:, idx]``), ``axis == 1`` a
    y-sweep (line ``phi[idx, :]``).  ``ht`` is the spacing across lines.
    """
    nt = phi.shape[1] if axis == 0 else phi.shape[0]
    n = tdiag.shape[0]
    ih2 = 1.0 / (ht * ht)
    for i in range(n):
        tdiag[i] = 0.0
        tconst[i] = 0.0
        if nt < 2:
            continue
        if idx > 0:
            nb = phi[i, idx - 1] if axis == 0 else phi[idx - 1, i]
            tdiag[i] -= ih2
            tconst[i] += nb * ih2
        if idx < nt - 1:
            nb = phi[i, idx + 1] if axis == 0 else phi[idx + 1, i]
            tdiag[i] -= ih2
            tconst[i] += nb * ih2


@njit(cache=True)
def line_energy_change(u, u0, phi, axis, idx, h, ht, area, eps2, pkind, th, thc):
    """Change of the 2D discrete energy when line ``idx`` goes from u0 to u."""
    n = u.shape[0]
    nt = phi.shape[1] if axis == 0 else phi.shape[0]
    de = 0.0
    for i in range(n):
        de += pot_f(pkind, th, thc, u[i]) - pot_f(pkind, th, thc, u0[i])
    g = 0.0
    for i in range(n - 1):
        a = (u[i + 1] - u[i]) / h
        b = (u0[i + 1] - u0[i]) / h
        g += a * a - b * b
    for i in range(n):
        for nbi in (idx - 1, idx + 1):
            if nbi < 0 or nbi > nt - 1:
                continue
            nb = phi[i, nbi] if axis == 0 else phi[nbi, i]
            a = (nb - u[i]) / ht
            b = (nb - u0[i]) / ht
            g += a * a - b * b
    return area * (de + 0.5 * eps2 * g)


@njit(cache=True)
def sweep_line(phi, axis, idx, xi_prev, dx, dy, dt, eps2, pkind, th, thc, kmob, beta,
               bound, tol, max_iter, max_halv, window):
    """Implicit update of one row (axis 0) or column (axis 1) of ``phi`` in place.

    Returns (status, xi, iterations, residual, halvings, dE, dmass, maxabs).
    """
    if axis == 0:
        n = phi.shape[0]
        h = dx
        ht = dy
    else:
        n = phi.shape[1]
        h = dy
        ht = dx
    u0 = np.empty(n)
    for i in range(n):
        u0[i] = phi[i, idx] if axis == 0 else phi[idx, i]
    tdiag = np.empty(n)
    tconst = np.empty(n)
    transverse_terms(phi, axis, idx, ht, tdiag, tconst)
    u = u0.copy()
    status, xi, iters, rn, halv, rn0 = newton_line(
        u, xi_prev, u0, tdiag, tconst, h, dt, eps2, pkind, th, thc, kmob, beta,
        bound, tol, max_iter, max_halv, window)
    de = 0.0
    dm = 0.0
    if status == OK:
        de = line_energy_change(u, u0, phi, axis, idx, h, ht, dx * dy, eps2, pkind, th, thc)
        for i in range(n):
            dm += u[i] - u0[i]
            if axis == 0:
                phi[i, idx] = u[i]
            else:
                phi[idx, i] = u[i]
    return status, xi, iters, rn, halv, de, dm, _maxabs(u)


@njit(cache=True)
def split_step(phi, xi_old, dx, dy, dt, eps2, pkind, th, thc, kmob, beta,
               bound, tol, max_iter, max_halv, window,
               xis, iters, resid, halvs, dE, dM, umax):
    """All ``ny + nx`` sweeps of one splitting step, x-sweeps first.

    Per-sweep outputs are written to the arrays (length ny + nx).  Returns
    (status, index of the failing sweep or -1).
    """
    nx = phi.shape[0]
    ny = phi.shape[1]
    xi = xi_old
    for s in range(ny + nx):
        if s < ny:
            axis = 0
            idx = s
        else:
            axis = 1
            idx = s - ny
        status, xi_s, it, rn, hv, de, dm, um = sweep_line(
            phi, axis, idx, xi, dx, dy, dt, eps2, pkind, th, thc, kmob, beta,
            bound, tol, max_iter, max_halv, window)
        xis[s] = xi_s
        iters[s] = it
        resid[s] = rn
        halvs[s] = hv
        dE[s] = de
        dM[s] = dm
        umax[s] = um
        if status != OK:
            return status, s
        xi = xi_s
    return OK, -1
