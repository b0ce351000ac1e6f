"""Initial fields: tanh profiles around closed curves and uniform-plus-noise data.

Shapes use the convention that the signed distance is positive inside, so the
shape itself is the ``phi > 0`` phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple, Union as _U

import numpy as np
from scipy.spatial import cKDTree

from .core import Field, Grid
from .errors import ParameterError

BOUNDARY_SAMPLES = 8192
DEFAULT_LAMBDA = 1.0 - 1e-4


def _positive(name, *values):
    for v in values:
        if not v > 0:
            raise ParameterError(f"{name} needs positive sizes, got {values}")


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        _positive("Circle", self.r)

    def sdf(self, x, y):
        return self.r - np.hypot(x - self.cx, y - self.cy)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle of width ``w`` and height ``h``."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        _positive("Rectangle", self.w, self.h)

    def sdf(self, x, y):
        qx = np.abs(x - self.cx) - 0.5 * self.w
        qy = np.abs(y - self.cy) - 0.5 * self.h
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return -(outside + inside)


@dataclass(frozen=True)
class Interval:
    """The segment ``[a, b]`` of a one-dimensional domain (``y`` is ignored)."""

    a: float
    b: float

    def __post_init__(self):
        _positive("Interval", self.b - self.a)

    def sdf(self, x, y=None):
        x = np.asarray(x, dtype=float)
        return np.minimum(x - self.a, self.b - x)


class _Sampled:
    """Distance to a densely sampled closed boundary, sign from ``contains``.

    The nearest sample is refined by projecting onto its two adjacent chords.
    """

    def _boundary(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, y):
        raise NotImplementedError

    @cached_property
    def _tree(self):
        pts = self._boundary(BOUNDARY_SAMPLES)
        return pts, cKDTree(pts)

    def sdf(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        q = np.column_stack([np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()])
        pts, tree = self._tree
        _, k = tree.query(q)
        m = len(pts)
        best = np.full(len(q), np.inf)
        for nb in (k - 1, k + 1):
            a = pts[k]
            b = pts[nb % m]
            ab = b - a
            t = np.clip(np.einsum("ij,ij->i", q - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
            d = np.hypot(*(q - a - t[:, None] * ab).T)
            best = np.minimum(best, d)
        inside = self.contains(q[:, 0], q[:, 1])
        return np.where(inside, best, -best).reshape(shape)


@dataclass(frozen=True)
class Ellipse(_Sampled):
    """Ellipse with semi-axes ``ra`` (along ``angle``) and ``rb``; angle in degrees."""

    cx: float
    cy: float
    ra: float
    rb: float
    angle: float = 0.0

    def __post_init__(self):
        _positive("Ellipse", self.ra, self.rb)

    def _local(self, x, y):
        c, s = math.cos(math.radians(self.angle)), math.sin(math.radians(self.angle))
        dx, dy = np.asarray(x) - self.cx, np.asarray(y) - self.cy
        return c * dx + s * dy, -s * dx + c * dy

    def contains(self, x, y):
        u, v = self._local(x, y)
        return (u / self.ra) ** 2 + (v / self.rb) ** 2 <= 1.0

    def _boundary(self, n):
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        c, s = math.cos(math.radians(self.angle)), math.sin(math.radians(self.angle))
        u, v = self.ra * np.cos(t), self.rb * np.sin(t)
        return np.column_stack([self.cx + c * u - s * v, self.cy + s * u + c * v])


@dataclass(frozen=True)
class Rose(_Sampled):
    """Polar curve ``rho = scale * (base + cos(petals * alpha))`` about the centre.

    The defaults give the four-leaved curve ``rho = (2 + cos 4 alpha) / 8``.
    """

    cx: float = 0.5
    cy: float = 0.5
    base: float = 2.0
    petals: int = 4
    scale: float = 0.125

    def __post_init__(self):
        _positive("Rose", self.scale, self.base - 1.0)

    def radius(self, alpha):
        return self.scale * (self.base + np.cos(self.petals * alpha))

    def contains(self, x, y):
        dx, dy = np.asarray(x) - self.cx, np.asarray(y) - self.cy
        return np.hypot(dx, dy) <= self.radius(np.arctan2(dy, dx))

    def _boundary(self, n):
        a = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        r = self.radius(a)
        return np.column_stack([self.cx + r * np.cos(a), self.cy + r * np.sin(a)])


@dataclass(frozen=True)
class Union:
    members: Tuple

    def __post_init__(self):
        if not self.members:
            raise ParameterError("Union needs at least one member")
        object.__setattr__(self, "members", tuple(self.members))

    def sdf(self, x, y):
        return np.maximum.reduce([m.sdf(x, y) for m in self.members])


ShapeSpec = _U[Circle, Ellipse, Rose, Rectangle, Interval, Union]


def signed_distance(shape: ShapeSpec, x, y=0.0):
    """Signed distance to the shape boundary, positive inside.

    Circles, rectangles and intervals are exact; ellipses and roses use
    boundary sampling, accurate to a few 1e-6 for unit-size shapes.
    """
    out = shape.sdf(x, y)
    return float(out) if np.ndim(out) == 0 else out


def tanh_profile(grid: Grid, shape: ShapeSpec, epsilon: float, lam: float = DEFAULT_LAMBDA) -> Field:
    """``lam * tanh(d / (sqrt(2) epsilon))`` at the cell centres."""
    if not 0 < lam < 1:
        raise ParameterError("lambda must lie in (0, 1)")
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    x, y = grid.mesh()
    d = np.asarray(shape.sdf(x, y), dtype=float)
    field = Field(grid, lam * np.tanh(d / (math.sqrt(2.0) * epsilon)))
    assert field.is_admissible()
    return field


def random_field(grid: Grid, mean: float, amplitude: float, seed: int) -> Field:
    """``mean + amplitude * U[-1, 1]`` per cell from a seeded PCG64 stream."""
    if not abs(mean) + abs(amplitude) < 1:
        raise ParameterError("need |mean| + amplitude < 1")
    if amplitude < 0:
        raise ParameterError("amplitude must be non-negative")
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=grid.shape)
    field = Field(grid, mean + amplitude * u)
    assert field.is_admissible()
    return field
