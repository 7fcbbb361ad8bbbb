"""Exception types shared across the package."""


class GradelineError(Exception):
    """Base class for all gradeline errors."""


class ImageFormatError(GradelineError):
    """Unreadable, unsupported or corrupt image data."""


class DimensionMismatchError(GradelineError):
    """Rasters or masks with incompatible dimensions."""


class DegenerateImageError(GradelineError):
    """Input too uniform to segment (e.g. a single-colour frame)."""


class ModelFormatError(GradelineError):
    """Corrupt or incompatible model file."""


class VariantMismatchError(GradelineError):
    """Feature-vector variant does not match what a model expects."""


class ProtocolError(GradelineError):
    """Malformed or oversized wire message."""
