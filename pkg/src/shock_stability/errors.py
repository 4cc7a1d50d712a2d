"""Exception hierarchy for shocklab.

Problems with inputs (states outside the domain, bad configs, degenerate
jumps) are ``ValueError`` subclasses; numerical breakdowns are
``RuntimeError`` subclasses.
"""


class ShockLabError(Exception):
    """Base class for every error raised by shocklab."""


class DomainError(ShockLabError, ValueError):
    """A state lies where the requested quantity is undefined (vacuum, e <= 0, outside the box)."""


class ConfigError(ShockLabError, ValueError):
    """A system or experiment configuration is invalid."""


class RangeError(ShockLabError, ValueError):
    """A curve parameter exceeds the admissible range of the shock curve."""


class DegenerateInput(ShockLabError, ValueError):
    """Sample sets are empty or reveal a non-convex entropy."""


class NotADiscontinuity(ShockLabError, ValueError):
    """A pair of states is not a Rankine-Hugoniot discontinuity."""


class OutOfDomain(ShockLabError, ValueError):
    """A position or averaging window leaves the computational domain."""


class QuadratureFailure(ShockLabError, RuntimeError):
    """Adaptive quadrature hit its depth limit before reaching tolerance."""


class ContinuationStall(ShockLabError, RuntimeError):
    """Newton correction failed even after step halving below the minimum step."""


class EigenvalueCollision(ShockLabError, RuntimeError):
    """The extreme eigenvalue lost simplicity along a continued shock curve."""


class BlowUp(ShockLabError, RuntimeError):
    """The solver produced states outside the closed state domain."""

    def __init__(self, message: str, time: float | None = None):
        self.time = time
        if time is not None:
            message = f"{message} (t={time:.6g})"
        super().__init__(message)


class BoundaryReached(BlowUp):
    """A wave reached the pinned ghost states at the domain boundary."""
