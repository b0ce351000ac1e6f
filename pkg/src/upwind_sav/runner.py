"""Outer time loop: advance a configuration and write diagnostics and snapshots."""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig, dumps
from .core import Field
from .diagnostics import CSV_COLUMNS, record
from .errors import CertificateViolation, ConfigError, NoConvergence, SingularJacobian
from .scheme1d import step_1d
from .scheme2d import step_2d

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "UPWIND_SAV_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CERTIFICATE = 4


@dataclass
class RunOutcome:
    status: int
    steps: int
    t: float
    xi: float
    field: Field
    error: Optional[BaseException] = None


def output_root(base: Optional[str] = None) -> Path:
    """Directory for relative output paths: ``base``, else the env var, else cwd."""
    if base is not None:
        return Path(base)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path.cwd()


def write_snapshot(path: Path, field: Field, t: float, binary: bool = False) -> Path:
    """Header ``nx ny dx dy t`` then one line per y-index holding the x-values.

    With ``binary`` the header is followed by the same values as raw
    little-endian float64 in the same order.
    """
    g = field.grid
    header = f"{g.nx} {g.ny} {g.dx!r} {g.dy!r} {float(t)!r}\n"
    rows = np.asarray(field.values, dtype=float).reshape(g.nx, g.ny).T
    if binary:
        path = path.with_suffix(".bin")
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(np.ascontiguousarray(rows, dtype="<f8").tobytes())
    else:
        path = path.with_suffix(".txt")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(header)
            for row in rows:
                fh.write(" ".join(repr(float(v)) for v in row))
                fh.write("\n")
    return path


def read_snapshot(path) -> tuple:
    """Inverse of :func:`write_snapshot`; returns ``(values[nx, ny], dx, dy, t)``."""
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        nx, ny = int(header[0]), int(header[1])
        dx, dy, t = (float(v) for v in header[2:5])
        if path.suffix == ".bin":
            rows = np.frombuffer(fh.read(), dtype="<f8").reshape(ny, nx)
        else:
            rows = np.loadtxt(fh, ndmin=2).reshape(ny, nx)
    return rows.T.copy(), dx, dy, t


def _dump_failure(root: Path, field: Field, xi: float, t: float, err: BaseException):
    path = root / "failure_dump.txt"
    lines = [f"error: {type(err).__name__}: {err}", f"t: {t!r}", f"xi: {xi!r}"]
    sweep = getattr(err, "sweep", None)
    if sweep is not None:
        lines.append(f"sweep: {sweep[0]} {sweep[1]}")
    stats = getattr(err, "stats", None)
    if stats is not None:
        lines.append(f"iterations: {stats.iterations}")
        if np.isfinite(stats.initial_residual):
            lines.append(f"initial_residual: {stats.initial_residual!r}")
        lines.append(f"final_residual: {stats.final_residual!r}")
    if isinstance(err, CertificateViolation):
        lines.append(f"certificate: {err.which} magnitude {err.magnitude!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    write_snapshot(root / "failure_field", field, t)
    phi = getattr(err, "phi", None)
    if phi is not None and np.shape(phi) == field.grid.shape and np.all(np.isfinite(phi)):
        # the solver's best iterate for the failed step (2D: partially swept)
        write_snapshot(root / "failure_iterate", Field(field.grid, phi), t)
    return path


def run(config: RunConfig, out_dir: Optional[str] = None, progress: bool = False) -> RunOutcome:
    """Advance ``config`` to ``t_end``; one CSV row per time level.

    The first row is the initial state.  Solver failures and certificate
    violations stop the run, leave a dump next to the CSV and set the exit
    status (3 and 4 respectively).
    """
    root = output_root(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    out = config.output
    csv_path = root / out.csv_path
    snap_dir = root / out.snapshot_dir
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    snap_dir.mkdir(parents=True, exist_ok=True)
    (root / "config.ini").write_text(dumps(config), encoding="ascii")

    params = config.params
    dt = params.dt
    n_steps = config.n_steps
    field = config.initial_field()
    xi = float(config.xi0)
    two_d = config.grid.dim == 2
    window = config.area_window

    first = record(0.0, field, xi, None, params, window)
    s0 = first.area
    status, err, n = EXIT_OK, None, 0
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        fh.write(first.csv_line() + "\n")
        write_snapshot(snap_dir / f"snap_{0:07d}", field, 0.0, out.snapshot_binary)
        for n in range(1, n_steps + 1):
            t = n * dt
            try:
                if two_d:
                    res = step_2d(field, xi, params, per_sweep_energy=config.per_sweep_energy)
                else:
                    res = step_1d(field, xi, params)
            except (NoConvergence, SingularJacobian) as exc:
                status, err = EXIT_SOLVER, exc
            except CertificateViolation as exc:
                status, err = EXIT_CERTIFICATE, exc
            if err is not None:
                path = _dump_failure(root, field, xi, (n - 1) * dt, err)
                log.error("step %d failed (%s); dump written to %s", n, err, path)
                n -= 1
                break
            field, xi = res.field, res.xi
            fh.write(record(t, field, xi, s0, params, window).csv_line() + "\n")
            if n % out.snapshot_every == 0 or n == n_steps:
                write_snapshot(snap_dir / f"snap_{n:07d}", field, t, out.snapshot_binary)
            if progress and n % max(1, n_steps // 20) == 0:
                print(f"step {n}/{n_steps} t={t:.6g} xi={xi:.6f}", file=sys.stderr)
    return RunOutcome(status, n, n * dt, xi, field, err)


def run_status(config: RunConfig, out_dir: Optional[str] = None, progress: bool = False) -> int:
    try:
        return run(config, out_dir, progress).status
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
