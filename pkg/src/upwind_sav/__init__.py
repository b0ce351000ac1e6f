"""Bound-, mass- and energy-certified upwind SAV solver for degenerate Cahn-Hilliard."""

from .core import (Field, Grid, MobilitySpec, PotentialKind, PotentialSpec, SchemeParams,
                   mobility_pair, potential_derivative, potential_minimum,
                   potential_second_derivative, potential_value)
from .diagnostics import DiagnosticsRecord, discrete_energy, record, total_mass, zero_contour_area
from .errors import (CertificateViolation, ConfigError, DomainError, NoConvergence,
                     ParameterError, SingularJacobian, UnknownRecipe, UpwindSAVError)
from .initializers import (Circle, Ellipse, Interval, Rectangle, Rose, Union, random_field,
                           signed_distance, tanh_profile)
from .newton import NewtonParams, RowSystem, SolveStats, jacobian_fd, solve_row
from .scheme1d import chemical_potential, laplacian_1d, residual_1d, row_system_1d, step_1d, upwind_flux
from .scheme2d import SplitState, laplacian_2d, step_2d, sweep_x, sweep_y

__version__ = "0.1.0"
