"""Exception hierarchy shared by the solver, the scheme modules and the CLI."""

from __future__ import annotations


class UpwindSAVError(Exception):
    """Base class for every error raised by this package."""


class DomainError(UpwindSAVError, ValueError):
    """A potential was evaluated outside its domain (|phi| >= 1 for the log potential)."""


class ParameterError(UpwindSAVError, ValueError):
    """Invalid physical or numerical parameter."""


class SingularJacobian(UpwindSAVError):
    """The Newton linear system could not be solved."""


class NoConvergence(UpwindSAVError):
    """Newton iteration exhausted its budget without meeting the tolerance.

    ``phi``/``xi`` hold the best iterate, ``stats`` the solver statistics and
    ``sweep`` the inner-sweep label when raised from the 2D splitting loop.
    """

    def __init__(self, message, phi=None, xi=None, stats=None, sweep=None):
        super().__init__(message)
        self.phi = phi
        self.xi = xi
        self.stats = stats
        self.sweep = sweep


class CertificateViolation(UpwindSAVError):
    """A post-step structure certificate (bound, mass or energy) failed."""

    def __init__(self, which: str, magnitude: float, sweep=None):
        where = f" (sweep {sweep})" if sweep is not None else ""
        super().__init__(f"{which} certificate violated by {magnitude:.3e}{where}")
        self.which = which
        self.magnitude = magnitude
        self.sweep = sweep


class ConfigError(UpwindSAVError, ValueError):
    """Malformed or inconsistent run configuration."""


class UnknownRecipe(ConfigError):
    """Requested experiment recipe does not exist."""
