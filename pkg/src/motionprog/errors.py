"""Exception types shared across the package."""


class MotionProgError(Exception):
    """Base class for all library errors."""


class ParseError(MotionProgError):
    """Malformed input; carries the offending line/record index when known."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} (record {index})"
        super().__init__(message)
        self.index = index


class StructuralError(MotionProgError):
    """Input is well-formed but violates a structural invariant."""


class UnrecoverableTrackError(MotionProgError):
    """A joint track has no confident detections left to repair from."""


class DegenerateGeometryError(MotionProgError):
    """Circle fit rejected: collinear/coincident points or unstable solution."""


class NoLoopError(MotionProgError):
    """Abstract program contains no for-loop to extend."""


class NumericError(MotionProgError):
    """A numeric precondition failed (e.g. covariance not PSD)."""
