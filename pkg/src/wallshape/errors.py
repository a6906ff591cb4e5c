"""Exception types raised across the package."""


class WallshapeError(Exception):
    """Base class for all package errors."""


class MalformedShapeError(WallshapeError, ValueError):
    """Shape parameter vector is structurally invalid (e.g. fewer than two heights)."""


class GeometryError(WallshapeError):
    """Shape cannot be meshed (degenerate mapping)."""


class SingularConfigurationError(WallshapeError, ZeroDivisionError):
    """A closed-form mode expression has a vanishing denominator."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class ResonanceError(WallshapeError):
    """The discrete Helmholtz operator could not be factorized."""

    def __init__(self, omega, message="singular Helmholtz system"):
        super().__init__(f"{message} at omega={omega!r}")
        self.omega = omega


class ContractError(WallshapeError, ValueError):
    """A documented precondition was violated by the caller."""


class ConfigError(WallshapeError):
    """Invalid run configuration."""
