"""Exception types shared across the package."""


class OsteomorphError(Exception):
    """Base class for all osteomorph-specific errors."""


class MaskError(OsteomorphError):
    """A mask file is missing, unreadable, or carries invalid labels."""


class ProbMapError(OsteomorphError):
    """A probability-map file is malformed or violates its invariants."""


class ManifestError(OsteomorphError):
    """A dataset manifest fails to parse or validate."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingClassError(OsteomorphError):
    """The requested class has no pixels in the mask."""


class DegenerateShapeError(OsteomorphError):
    """The pixel set is too small or collinear for an ellipse fit."""
