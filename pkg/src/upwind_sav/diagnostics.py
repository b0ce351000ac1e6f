"""Certified observables: discrete energy, mass, extrema and interface area."""

from __future__ import annotations

from dataclasses import dataclass, astuple, fields
from typing import Optional

import numpy as np

from .core import Field, SchemeParams, potential_value

CSV_COLUMNS = ("t", "mass", "energy", "phi_min", "phi_max", "xi", "area", "delta_s")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    phi_min: float
    phi_max: float
    xi: float
    area: float
    delta_s: float

    def as_row(self) -> tuple:
        return astuple(self)

    def csv_line(self) -> str:
        # repr keeps the output exact and platform independent
        return ",".join(repr(float(v)) for v in astuple(self))


assert tuple(f.name for f in fields(DiagnosticsRecord)) == CSV_COLUMNS


def discrete_energy(field: Field, params: SchemeParams) -> float:
    """Gradient energy on interior faces plus the summed potential, times the cell measure."""
    g = field.grid
    u = field.values
    eps2 = params.epsilon ** 2
    bulk = float(np.sum(potential_value(params.potential, u)))
    if g.dim == 1:
        grad = float(np.sum(np.diff(u) ** 2)) / g.dx ** 2
    else:
        grad = float(np.sum(np.diff(u, axis=0) ** 2)) / g.dx ** 2 \
            + float(np.sum(np.diff(u, axis=1) ** 2)) / g.dy ** 2
    return g.cell_measure * (0.5 * eps2 * grad + bulk)


def total_mass(field: Field) -> float:
    return float(np.sum(field.values)) * field.grid.cell_measure


def _node_coords(n: int, h: float, x0: float) -> np.ndarray:
    # boundary nodes carry the adjacent cell value (Neumann extension)
    return np.concatenate(([x0], x0 + (np.arange(n) + 0.5) * h, [x0 + n * h]))


def _edge_cut(a, b):
    """Fraction along an edge from value a to value b where the zero lies."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a != b, a / (a - b), 0.5)


def _poly_area(xs, ys):
    """Shoelace area for polygons given as (k, m) vertex arrays, NaN-padded."""
    x = np.where(np.isnan(xs), 0.0, xs)
    y = np.where(np.isnan(ys), 0.0, ys)
    valid = ~np.isnan(xs)
    # compact each polygon's valid vertices to the front, keeping order
    order = np.argsort(~valid, axis=1, kind="stable")
    x = np.take_along_axis(x, order, axis=1)
    y = np.take_along_axis(y, order, axis=1)
    cnt = valid.sum(axis=1)
    idx = np.arange(xs.shape[1])[None, :]
    nxt = np.where(idx + 1 < cnt[:, None], idx + 1, 0)
    x2 = np.take_along_axis(x, nxt, axis=1)
    y2 = np.take_along_axis(y, nxt, axis=1)
    term = np.where(idx < cnt[:, None], x * y2 - x2 * y, 0.0)
    return 0.5 * np.abs(term.sum(axis=1))


def zero_contour_area(field: Field, window: Optional[tuple] = None) -> float:
    """Measure of ``{phi >= 0}`` from marching squares on cell-centre values.

    The dual grid joins cell centres; a half-cell strip along the boundary
    reuses the edge values, so a positive field returns the whole domain.
    Zero crossings are linearly interpolated along edges and saddle squares
    are resolved by the mean of their corners.  In 1D the result is the
    length of ``{phi >= 0}``.  ``window = (xmin, xmax, ymin, ymax)`` restricts
    the sum to squares whose centre lies inside it.
    """
    g = field.grid
    if g.dim == 1:
        return _zero_length_1d(field, window)
    u = np.pad(field.values, 1, mode="edge")
    xs = _node_coords(g.nx, g.dx, g.origin[0])
    ys = _node_coords(g.ny, g.dy, g.origin[1])

    # corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
    c = [u[:-1, :-1], u[1:, :-1], u[1:, 1:], u[:-1, 1:]]
    x0 = xs[:-1][:, None] * np.ones(len(ys) - 1)[None, :]
    x1 = xs[1:][:, None] * np.ones(len(ys) - 1)[None, :]
    y0 = np.ones(len(xs) - 1)[:, None] * ys[:-1][None, :]
    y1 = np.ones(len(xs) - 1)[:, None] * ys[1:][None, :]
    px = [x0, x1, x1, x0]
    py = [y0, y0, y1, y1]

    inside = [ci >= 0 for ci in c]
    n_in = sum(i.astype(int) for i in inside)
    cell_area = (x1 - x0) * (y1 - y0)
    area = np.where(n_in == 4, cell_area, 0.0)

    mixed = (n_in > 0) & (n_in < 4)
    if window is not None:
        xm, xM, ym, yM = window
        cx = 0.5 * (x0 + x1)
        cy = 0.5 * (y0 + y1)
        keep = (cx >= xm) & (cx <= xM) & (cy >= ym) & (cy <= yM)
    else:
        keep = np.ones_like(mixed)

    if np.any(mixed):
        sel = np.nonzero(mixed)
        cs = [ci[sel] for ci in c]
        ins = [ii[sel] for ii in inside]
        pxs = [p[sel] for p in px]
        pys = [p[sel] for p in py]
        m = cs[0].size
        vx = np.full((m, 8), np.nan)
        vy = np.full((m, 8), np.nan)
        cut_x = []
        cut_y = []
        for k in range(4):
            k2 = (k + 1) % 4
            vx[:, 2 * k] = np.where(ins[k], pxs[k], np.nan)
            vy[:, 2 * k] = np.where(ins[k], pys[k], np.nan)
            crosses = ins[k] != ins[k2]
            t = _edge_cut(cs[k], cs[k2])
            ex = pxs[k] + t * (pxs[k2] - pxs[k])
            ey = pys[k] + t * (pys[k2] - pys[k])
            vx[:, 2 * k + 1] = np.where(crosses, ex, np.nan)
            vy[:, 2 * k + 1] = np.where(crosses, ey, np.nan)
            cut_x.append(ex)
            cut_y.append(ey)
        part = _poly_area(vx, vy)
        # saddles whose centre is outside split into two corner triangles
        saddle = (ins[0] == ins[2]) & (ins[1] == ins[3]) & (ins[0] != ins[1])
        centre_out = (cs[0] + cs[1] + cs[2] + cs[3]) < 0
        split = saddle & centre_out
        if np.any(split):
            qx = np.stack(cut_x, axis=1)[split]
            qy = np.stack(cut_y, axis=1)[split]
            part[split] -= _poly_area(qx, qy)
        area[sel] = part
    return float(np.sum(np.where(keep, area, 0.0)))


def _zero_length_1d(field: Field, window=None) -> float:
    g = field.grid
    u = np.concatenate(([field.values[0]], field.values, [field.values[-1]]))
    xs = _node_coords(g.nx, g.dx, g.origin[0])
    a, b = u[:-1], u[1:]
    w = np.diff(xs)
    ia, ib = a >= 0, b >= 0
    t = _edge_cut(a, b)
    seg = np.where(ia & ib, w, 0.0)
    seg = np.where(ia & ~ib, t * w, seg)
    seg = np.where(~ia & ib, (1 - t) * w, seg)
    if window is not None:
        c = 0.5 * (xs[:-1] + xs[1:])
        seg = np.where((c >= window[0]) & (c <= window[1]), seg, 0.0)
    return float(np.sum(seg))


def record(t: float, field: Field, xi: float, s0: Optional[float], params: SchemeParams,
           window: Optional[tuple] = None) -> DiagnosticsRecord:
    """Assemble every observable for one time level.

    Without ``s0`` the record is treated as the first one and ``delta_s`` is 0.
    """
    area = zero_contour_area(field, window)
    if s0 is None:
        delta_s = 0.0
    elif s0 == 0:
        delta_s = float("nan")
    else:
        delta_s = (area - s0) / s0
    v = field.values
    return DiagnosticsRecord(
        t=float(t),
        mass=total_mass(field),
        energy=discrete_energy(field, params),
        phi_min=float(np.min(v)),
        phi_max=float(np.max(v)),
        xi=float(xi),
        area=area,
        delta_s=float(delta_s),
    )
