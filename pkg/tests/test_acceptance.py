"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest -v tests/test_acceptance.py``; the lines are repeated in the
terminal summary.  A criterion that fails here fails honestly: the checks use
the stated tolerances and nothing is retried or relaxed.
"""

import time

import numpy as np
import pytest

from upwind_sav import (Circle, Field, Grid, Interval, NoConvergence, PotentialSpec, Rose,
                        SchemeParams, SplitState, Union, discrete_energy, jacobian_fd,
                        potential_derivative, random_field, residual_1d, row_system_1d, step_1d,
                        step_2d, sweep_x, sweep_y, tanh_profile, zero_contour_area)
from upwind_sav import config as cfgmod
from upwind_sav.errors import CertificateViolation, SingularJacobian
from upwind_sav.oracle import (default_seeds, oracle_residual_1d, oracle_row_system_1d,
                               oracle_solve, oracle_sweep_system)
from upwind_sav.runner import run
from upwind_sav.scheme1d import certificate_tolerance, line_system
from upwind_sav.scheme2d import _line_data

REPORT = []
FAILURES = (NoConvergence, CertificateViolation, SingularJacobian)
EPS = 0.02


def report(key, ok, detail):
    line = f"CRITERION {key}: {'PASS' if ok else 'FAIL'} - {detail}"
    REPORT.append(line)
    print(line)
    return ok


def pots():
    return [("polynomial", PotentialSpec.polynomial())] + \
        [(f"log{t}", PotentialSpec.logarithmic(t)) for t in (0.15, 0.3, 0.45)]


# ------------------------------------------------------------ criterion 1

def _initial(dim, kind):
    if dim == 1:
        g = Grid.line(64)
        shape = Interval(0.25, 0.75)
    else:
        g = Grid.rect(32, 32)
        shape = Circle(0.5, 0.5, 0.25)
    if kind == "tanh":
        return tanh_profile(g, shape, EPS)
    return random_field(g, 0.2, 0.05, 0)


def _certified_run(f, params, steps=50):
    """Advance ``steps`` steps and check bound, mass, energy and sweep traces independently."""
    g = f.grid
    tol = certificate_tolerance(g.size, params)
    m0 = float(np.sum(f.values))
    xi = 1.0
    for n in range(steps):
        e_old = discrete_energy(f, params)
        try:
            if g.dim == 1:
                res = step_1d(f, xi, params)
            else:
                res = step_2d(f, xi, params, record_sweeps=True)
        except FAILURES as exc:
            return False, f"step {n}: {type(exc).__name__}: {exc}"
        f, xi = res.field, res.xi
        if not f.max_abs() < 1:
            return False, f"step {n}: bound"
        if abs(float(np.sum(f.values)) - m0) > tol:
            return False, f"step {n}: mass drift"
        if discrete_energy(f, params) > e_old + tol:
            return False, f"step {n}: energy"
        if g.dim == 2 and np.any(np.diff(res.info["sweep_energies"]) > tol):
            return False, f"step {n}: sweep energy"
    return True, f"ok xi={xi:.4f}"


def test_criterion_1_certification():
    t0 = time.perf_counter()
    cases, failed = 0, []
    for dim in (1, 2):
        for kind in ("tanh", "random"):
            for name, pot in pots():
                for dt in (1e-5, 1e-4, 1e-3, 1e-2):
                    ok, msg = _certified_run(_initial(dim, kind), SchemeParams(EPS, dt, pot))
                    cases += 1
                    label = f"{dim}D {kind} {name} dt={dt:g}"
                    print(f"  {label}: {msg}")
                    if not ok:
                        failed.append(label)
    elapsed = time.perf_counter() - t0
    ok = not failed and elapsed < 600
    report(1, ok, f"{cases - len(failed)}/{cases} cases certified over 50 steps in {elapsed:.0f}s"
           + (f"; failing: {', '.join(failed)}" if failed else ""))
    assert ok


# ------------------------------------------------------------ criterion 2

def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    plist = [p for _, p in pots()]
    worst_res = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 17))
        g = Grid.line(n)
        p = SchemeParams(float(rng.uniform(0.01, 0.1)), float(10 ** rng.uniform(-5, -2)),
                         plist[int(rng.integers(4))])
        old = Field(g, rng.uniform(-0.95, 0.95, n))
        new = np.clip(old.values + rng.uniform(-0.1, 0.1, n), -0.99, 0.99)
        xi = float(rng.uniform(0.5, 1.5))
        worst_res = max(worst_res, float(np.max(np.abs(residual_1d(new, xi, old, p)
                                                       - oracle_residual_1d(new, xi, old, p)))))

    def nearest(roots, phi, xi):
        r = min(roots, key=lambda r: max(np.max(np.abs(r[0] - phi)), abs(r[1] - xi)))
        return max(float(np.max(np.abs(r[0] - phi))), abs(r[1] - xi))

    worst_solve, solves = 0.0, 0
    for seed in range(4):
        for pot in (PotentialSpec.polynomial(), PotentialSpec.logarithmic(0.3)):
            p = SchemeParams(EPS, 1e-4, pot)
            f = random_field(Grid.line(8), 0.1, 0.5, seed)
            res = step_1d(f, 1.0, p)
            roots = oracle_solve(oracle_row_system_1d(f, p), default_seeds(f.values))[3]
            worst_solve = max(worst_solve, nearest(roots, res.field.values, res.xi))
            solves += 1
            g = Grid.rect(4, 4)
            f2 = random_field(g, 0.1, 0.5, seed)
            for axis, sweep in ((0, sweep_x), (1, sweep_y)):
                st = SplitState.start(f2)
                _, xi, _ = sweep(st, 2, 1.0, p)
                new = st.values[:, 2] if axis == 0 else st.values[2, :]
                old = f2.values[:, 2] if axis == 0 else f2.values[2, :]
                roots = oracle_solve(oracle_sweep_system(f2.values, axis, 2, g, p), default_seeds(old))[3]
                worst_solve = max(worst_solve, nearest(roots, new, xi))
                solves += 1
    elapsed = time.perf_counter() - t0
    ok = worst_res < 1e-13 and worst_solve < 1e-10 and elapsed < 120
    report(2, ok, f"residual gap {worst_res:.2e} over 1000 instances; solve gap {worst_solve:.2e} "
           f"over {solves} systems; {elapsed:.0f}s")
    assert ok


# ------------------------------------------------------------ criterion 3

def test_criterion_3_jacobian_validation():
    rng = np.random.default_rng(3)
    worst = {}
    for kind in ("row-1d", "sweep-x", "sweep-y"):
        for name, pot in pots():
            count, w = 0, 0.0
            while count < 20:
                p = SchemeParams(float(rng.uniform(0.02, 0.1)), float(10 ** rng.uniform(-5, -2)), pot)
                if kind == "row-1d":
                    n = int(rng.integers(3, 16))
                    old = Field(Grid.line(n), rng.uniform(-0.8, 0.8, n))
                    sys_ = row_system_1d(old, p)
                    u0, h = old.values, old.grid.dx
                    td = tc = np.zeros(n)
                else:
                    nx, ny = (int(v) for v in rng.integers(3, 10, 2))
                    g = Grid.rect(nx, ny)
                    state = rng.uniform(-0.8, 0.8, (nx, ny))
                    axis = 0 if kind == "sweep-x" else 1
                    idx = int(rng.integers(ny if axis == 0 else nx))
                    u0, h, _, td, tc = _line_data(state, axis, idx, g)
                    sys_ = line_system(u0, h, p, td, tc)
                u = u0 + rng.uniform(-0.05, 0.05, u0.size)
                xi = float(rng.uniform(0.5, 1.5))
                # skip points on an upwind kink: every face velocity must be clear of 0
                lap = np.zeros_like(u)
                lap[1:-1] = u[2:] - 2 * u[1:-1] + u[:-2]
                lap[0], lap[-1] = u[1] - u[0], u[-2] - u[-1]
                lap = lap / h ** 2 + td * u + tc
                mu = -p.epsilon ** 2 * lap + xi * potential_derivative(pot, u)
                if np.min(np.abs(np.diff(mu))) / h < 1e-6:
                    continue
                ja = sys_.jacobian(u, xi)
                jf = jacobian_fd(sys_, u, xi)
                w = max(w, float(np.max(np.abs(ja - jf)) / np.max(np.abs(ja))))
                count += 1
            worst[f"{kind}/{name}"] = w
    top = max(worst.values())
    ok = top < 1e-6
    report(3, ok, f"max relative discrepancy {top:.2e} over 20 smooth points x {len(worst)} system types")
    assert ok


# ------------------------------------------------------------ criterion 4

def _rose_delta_s(dt):
    g = Grid.rect(128, 128)
    p = SchemeParams(EPS, dt, PotentialSpec.logarithmic(0.3))
    f = tanh_profile(g, Rose(), EPS)
    s0 = zero_contour_area(f)
    xi = 1.0
    steps = int(round(1.0 / dt))
    for n in range(steps):
        try:
            res = step_2d(f, xi, p)
        except FAILURES as exc:
            return None, f"dt={dt:g} stopped at step {n} ({type(exc).__name__}: {exc})"
        f, xi = res.field, res.xi
    ds = (zero_contour_area(f) - s0) / s0
    return ds, f"dt={dt:g} dS={100 * ds:.4f}%"


def test_criterion_4_rose_area_trend():
    out = [_rose_delta_s(dt) for dt in (1e-3, 5e-4, 1e-4)]
    vals = [v for v, _ in out]
    detail = "; ".join(m for _, m in out)
    ok = all(v is not None for v in vals)
    if ok:
        mags = [abs(v) for v in vals]
        ok = mags[0] >= mags[1] >= mags[2] and mags[2] < 0.01
    report(4, ok, detail)
    assert ok


# ------------------------------------------------------ criteria 5 and 6

SMALL_WINDOW = (0.6, 1.0, 0.6, 1.0)
_RUNS = {}


def _two_circles(name, pot):
    if name in _RUNS:
        return _RUNS[name]
    g = Grid.rect(96, 96)
    p = SchemeParams(EPS, 1e-4, pot)
    f = tanh_profile(g, Union((Circle(0.4, 0.4, 0.2), Circle(0.75, 0.75, 0.1))), EPS)
    s0 = zero_contour_area(f)
    small = [zero_contour_area(f, SMALL_WINDOW)]
    energy = [discrete_energy(f, p)]
    xis = []
    xi, err = 1.0, None
    for n in range(int(round(0.5 / 1e-4))):
        try:
            res = step_2d(f, xi, p)
        except FAILURES as exc:
            err = f"stopped at step {n} ({type(exc).__name__}: {exc})"
            break
        f, xi = res.field, res.xi
        xis.append(xi)
        energy.append(res.info["energy"])
        small.append(zero_contour_area(f, SMALL_WINDOW))
    ds = (zero_contour_area(f) - s0) / s0 if err is None else None
    _RUNS[name] = dict(ds=ds, small=np.array(small), energy=np.array(energy), xi=np.array(xis), err=err)
    return _RUNS[name]


C5 = [("log0.15", PotentialSpec.logarithmic(0.15)), ("log0.3", PotentialSpec.logarithmic(0.3)),
      ("log0.6", PotentialSpec.logarithmic(0.6)), ("polynomial", PotentialSpec.polynomial())]


def test_criterion_5_two_circles():
    runs = {name: _two_circles(name, pot) for name, pot in C5}
    parts, ok = [], True
    for name, _ in C5:
        r = runs[name]
        if r["err"]:
            parts.append(f"{name} {r['err']}")
            ok = False
        else:
            parts.append(f"{name} dS={100 * r['ds']:.3f}%")
    if ok:
        ok = (abs(runs["log0.15"]["ds"]) < 0.02 and abs(runs["log0.3"]["ds"]) < 0.02
              and abs(runs["log0.6"]["ds"]) > 0.03)
        grow = np.all(np.diff(runs["log0.15"]["small"]) >= -1e-12)
        shrink = np.all(np.diff(runs["polynomial"]["small"]) < 0)
        parts.append(f"small circle non-decreasing (log0.15): {grow}; strictly decreasing (polynomial): {shrink}")
        ok = ok and grow and shrink
    report(5, ok, "; ".join(parts))
    assert ok


def test_criterion_6_xi_tracking():
    runs = {name: _two_circles(name, pot) for name, pot in C5}
    parts, ok = [], True
    for name, _ in C5:
        r = runs[name]
        e = r["energy"]
        if len(r["xi"]) == 0:
            parts.append(f"{name}: no accepted steps ({r['err']})")
            ok = False
            continue
        drop = (e[:-1] - e[1:]) / np.abs(e[:-1])
        keep = drop <= 0.05
        dev = float(np.max(np.abs(r["xi"][keep] - 1))) if np.any(keep) else 0.0
        complete = r["err"] is None
        parts.append(f"{name}: max|xi-1|={dev:.4f} over {int(keep.sum())} steps"
                     + ("" if complete else " (run incomplete)"))
        ok = ok and complete and dev < 0.05
    report(6, ok, "; ".join(parts))
    assert ok


# ------------------------------------------------------------ criterion 7

def test_criterion_7_determinism(tmp_path):
    same = []
    for name in cfgmod.RECIPES:
        cfg = cfgmod.recipe(name, ["nx=32", "ny=32", "t_end=0.001"])
        blobs = []
        for k in range(2):
            out = tmp_path / f"{name}-{k}"
            run(cfg, str(out))
            blobs.append((out / "diagnostics.csv").read_bytes())
        same.append((name, blobs[0] == blobs[1]))
    ok = all(s for _, s in same)
    report(7, ok, ", ".join(f"{n}: {'identical' if s else 'DIFFERENT'}" for n, s in same))
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
