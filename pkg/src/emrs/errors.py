"""Exception types shared across the locomotion stack."""


class EmrsError(Exception):
    """Base class for all package errors."""


class SteeringLimitExceeded(EmrsError):
    """A required steering angle falls outside the mechanical limit."""


class NonConvergence(EmrsError):
    """The offset-steering solve failed to converge, grid fallback included."""


class DegenerateGeometry(EmrsError):
    """The odometry normal matrix is singular."""


class TipOver(EmrsError):
    """Static load balance produced a negative wheel load."""


class OutOfBounds(EmrsError):
    """A query or a wheel contact left the terrain bounds."""


class ParseError(EmrsError):
    """A scenario or campaign file could not be parsed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class SchemaViolation(EmrsError):
    """A configuration file parsed but violated the schema."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class MalformedMessage(EmrsError):
    """A client message failed strict protocol validation."""
