"""Exception hierarchy shared by all modules."""


class PipeWFTError(Exception):
    """Base class for every error raised by the package."""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = dict(context)

    def __str__(self):
        base = super().__str__()
        if not self.context:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in sorted(self.context.items()))
        return f"{base} [{extra}]"


class DomainError(PipeWFTError, ValueError):
    """Input outside the domain of a state function (e.g. non-positive density)."""


class UsageError(PipeWFTError, ValueError):
    """Operation called with arguments it does not accept."""


class VacuumError(PipeWFTError):
    """A wave curve or Riemann problem would drive the density to vacuum."""


class SolverError(PipeWFTError):
    """An iterative solve failed to converge."""


class SonicError(PipeWFTError):
    """A stationary path reached the sonic line."""


class IntegrationError(PipeWFTError):
    """Step-size underflow in an ODE integration."""


class NeighborhoodError(PipeWFTError):
    """Inputs outside the admissible box around the reference state."""


class RegimeError(PipeWFTError):
    """Wave speeds incompatible with the subsonic junction picture."""


class ProfileError(PipeWFTError, ValueError):
    """Malformed or inadmissible pipe profile."""


class InvariantViolation(PipeWFTError):
    """A monitored invariant (e.g. Glimm functional decrease) was violated."""


class EventCapExceeded(PipeWFTError):
    """The front-tracking event loop exceeded its configured cap."""
