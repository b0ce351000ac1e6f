"""Grids, fields, potentials and the degenerate upwind mobility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, ParameterError
from .newton import NewtonParams

# |phi| at or above this is outside the logarithmic potential's domain
LOG_GUARD = 1.0 - 1e-15


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid; ``ny == 1`` for one-dimensional problems."""

    dim: int
    nx: int
    ny: int = 1
    dx: float = 1.0
    dy: float = 1.0
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError("dim must be 1 or 2")
        if self.nx < 2 or self.ny < 1:
            raise ParameterError("need nx >= 2 and ny >= 1")
        if self.dim == 2 and self.ny < 2:
            raise ParameterError("2D grids need ny >= 2")
        if self.dim == 1 and self.ny != 1:
            raise ParameterError("1D grids have ny == 1")
        if not (self.dx > 0 and self.dy > 0):
            raise ParameterError("cell widths must be positive")
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @classmethod
    def line(cls, nx: int, length: float = 1.0, x0: float = 0.0) -> "Grid":
        return cls(1, nx, 1, length / nx, 1.0, (x0, 0.0))

    @classmethod
    def rect(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0, origin=(0.0, 0.0)) -> "Grid":
        return cls(2, nx, ny, lx / nx, ly / ny, origin)

    @property
    def shape(self) -> tuple:
        return (self.nx,) if self.dim == 1 else (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_measure(self) -> float:
        return self.dx if self.dim == 1 else self.dx * self.dy

    @property
    def extent(self) -> tuple:
        return (self.nx * self.dx, self.ny * self.dy)

    def x_centers(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.dy

    def mesh(self):
        """Cell-centre coordinates broadcast to ``shape`` (``ij`` indexing)."""
        if self.dim == 1:
            return self.x_centers(), np.zeros(self.nx)
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing="ij")


@dataclass(frozen=True)
class Field:
    """Cell averages on a grid, stored read-only with shape ``grid.shape``.

    Two-dimensional values are indexed ``values[i, j]`` with ``i`` along x,
    so row ``j`` of the documentation is ``values[:, j]``.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ParameterError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_admissible(self, bound: float = 1.0) -> bool:
        return self.max_abs() < bound


class PotentialKind(str, Enum):
    LOGARITHMIC = "logarithmic"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class PotentialSpec:
    kind: PotentialKind = PotentialKind.POLYNOMIAL
    theta: float = 0.3
    theta_c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        if self.kind is PotentialKind.LOGARITHMIC and not (0 < self.theta < self.theta_c):
            raise ParameterError("logarithmic potential needs 0 < theta < theta_c")

    @classmethod
    def logarithmic(cls, theta: float, theta_c: float = 1.0) -> "PotentialSpec":
        return cls(PotentialKind.LOGARITHMIC, theta, theta_c)

    @classmethod
    def polynomial(cls) -> "PotentialSpec":
        return cls(PotentialKind.POLYNOMIAL)

    @property
    def code(self) -> int:
        """Integer tag used by the compiled kernels (0 polynomial, 1 logarithmic)."""
        return 1 if self.kind is PotentialKind.LOGARITHMIC else 0


@dataclass(frozen=True)
class MobilitySpec:
    """``M(phi) = (beta**2 - phi**2)**k``; ``beta < 1`` degenerates inside (-1, 1)."""

    k: int = 1
    beta: float = 1.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError("mobility exponent k must be a positive integer")
        if not (0 < self.beta <= 1):
            raise ParameterError("mobility beta must lie in (0, 1]")
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class SchemeParams:
    epsilon: float
    dt: float
    potential: PotentialSpec = PotentialSpec()
    mobility: MobilitySpec = MobilitySpec()
    newton: NewtonParams = NewtonParams()

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")

    @property
    def bound(self) -> float:
        """Open interval the iterates must stay in: the mobility's zero."""
        return self.mobility.beta


def split_sign(x: float):
    """Return ``(max(x, 0), min(x, 0))``."""
    return max(x, 0.0), min(x, 0.0)


def mobility_pair(spec: MobilitySpec, chi1: float, chi2: float) -> float:
    """Upwind mobility ``[(beta + chi1)^+ (beta - chi2)^+]^k``."""
    a = max(spec.beta + chi1, 0.0)
    b = max(spec.beta - chi2, 0.0)
    return (a * b) ** spec.k


def _check_log_domain(phi):
    if np.any(np.abs(phi) >= LOG_GUARD):
        raise DomainError("logarithmic potential needs |phi| < 1")


def potential_value(spec: PotentialSpec, phi):
    """Free-energy density F(phi); works on scalars and arrays."""
    phi = np.asarray(phi, dtype=float)
    if spec.kind is PotentialKind.POLYNOMIAL:
        out = 0.25 * (1.0 - phi * phi) ** 2
    else:
        _check_log_domain(phi)
        out = 0.5 * spec.theta * ((1 + phi) * np.log1p(phi) + (1 - phi) * np.log1p(-phi)) \
            + 0.5 * spec.theta_c * (1 - phi * phi)
    return out[()] if out.ndim == 0 else out


def potential_derivative(spec: PotentialSpec, phi):
    phi = np.asarray(phi, dtype=float)
    if spec.kind is PotentialKind.POLYNOMIAL:
        out = phi ** 3 - phi
    else:
        _check_log_domain(phi)
        out = 0.5 * spec.theta * (np.log1p(phi) - np.log1p(-phi)) - spec.theta_c * phi
    return out[()] if out.ndim == 0 else out


def potential_second_derivative(spec: PotentialSpec, phi):
    phi = np.asarray(phi, dtype=float)
    if spec.kind is PotentialKind.POLYNOMIAL:
        out = 3.0 * phi * phi - 1.0
    else:
        _check_log_domain(phi)
        out = spec.theta / (1.0 - phi * phi) - spec.theta_c
    return out[()] if out.ndim == 0 else out


def potential_minimum(spec: PotentialSpec, tol: float = 0.0) -> float:
    """Positive minimiser of the double well.

    For the logarithmic potential this bisects
    ``(theta/2) ln((1+b)/(1-b)) = theta_c b`` on ``(0, 1)`` until the bracket
    is narrower than ``tol`` or cannot shrink further in floating point, and
    returns the end with the smaller residual.  Near ``b = 1`` the curvature
    is large, so the default runs to full resolution.
    """
    if spec.kind is PotentialKind.POLYNOMIAL:
        return 1.0

    def g(b):
        return 0.5 * spec.theta * (math.log1p(b) - math.log1p(-b)) - spec.theta_c * b

    lo, hi = 0.5 * (1 - spec.theta / spec.theta_c) ** 0.5 * 1e-3, 1.0 - 2.0 ** -53
    # g < 0 just right of 0 because theta < theta_c; g -> +inf as b -> 1
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo if abs(g(lo)) <= abs(g(hi)) else hi
