"""Exception hierarchy for the logdiff package.

Classes:
    LogDiffError: Base class of every domain error raised by logdiff
    DivergentTailError: Far-field integral diverges or cannot be certified
    GridMismatchError: Two profiles do not share one grid
    NewtonConvergenceError: Damped Newton iteration exhausted its budget
    NearExtinctionError: The evolved solution fell below the positivity floor
    InvariantViolationError: A monitor declared a fatal invariant violation
    CoefficientBoundError: Frozen coefficient violates its growth bounds
    ConfigError: Run configuration could not be parsed or validated
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .diagnostics import DiagnosticsSeries


class LogDiffError(Exception):
    """Base class of every domain error raised by logdiff."""


class DivergentTailError(LogDiffError, ValueError):
    """Raised when the far-field contribution of an integral is infinite."""


class GridMismatchError(LogDiffError, ValueError):
    """Raised when two profiles that must share a grid do not."""


class NewtonConvergenceError(LogDiffError, RuntimeError):
    """Raised when the damped Newton iteration fails to converge.

    Attributes:
        residual (float): Scaled max-norm residual of the last iterate.
        iterations (int): Number of iterations performed.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NearExtinctionError(LogDiffError):
    """Raised when a step would drive the solution below the positivity floor.

    Attributes:
        clock (float): Clock of the last accepted state.
        target (float): Clock the rejected step was aiming for.
    """

    def __init__(self, message: str, clock: float, target: float):
        super().__init__(message)
        self.clock = clock
        self.target = target


class InvariantViolationError(LogDiffError):
    """Raised by a monitor when a monitored invariant is violated beyond tolerance.

    Attributes:
        series (DiagnosticsSeries | None): Diagnostics accumulated up to the
            violating step, attached by the evolution driver.
    """

    def __init__(self, message: str):
        super().__init__(message)
        self.series: DiagnosticsSeries | None = None


class CoefficientBoundError(LogDiffError, ValueError):
    """Raised when a frozen coefficient violates C1(1+r^2) <= a <= C2(1+r^2)."""


class ConfigError(LogDiffError, ValueError):
    """Raised for malformed or invalid run configurations."""
