"""Exception hierarchy shared by all splitwalk modules.

Each error class carries the process exit code the CLI reports for it.
"""


class SplitWalkError(Exception):
    exit_code = 1


class ConfigError(SplitWalkError, ValueError):
    """Invalid parameters, coin fields or run configuration."""

    exit_code = 2


class BoundaryTouchError(SplitWalkError, RuntimeError):
    """Amplitude reached the edge of the finite lattice window."""

    exit_code = 3


class NonConvergenceError(SplitWalkError, RuntimeError):
    """An iterative limit (wave operator, quadrature) did not settle.

    ``result`` holds whatever partial result was produced so callers can
    still inspect the diagnostics.
    """

    exit_code = 4

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DegenerateBandError(SplitWalkError, ValueError):
    """Group velocity requested where the two bands touch (tau = +-1)."""

    exit_code = 5


class DomainError(SplitWalkError, ValueError):
    """A closed-form expression was evaluated outside its domain."""

    exit_code = 5


class WindowSensitivityError(SplitWalkError, RuntimeError):
    """Bound-state mass moved when the diagonalization window was doubled."""

    exit_code = 6
