"""Exception types shared across the package."""


class LumbarFatError(Exception):
    """Base class for all package errors."""


class ValidationError(LumbarFatError):
    """Input violates a documented precondition."""


class DecodeError(LumbarFatError):
    """Image bytes could not be decoded."""


class DetectionFailedError(LumbarFatError):
    """Automatic spine detection found nothing usable.

    Carries the best score seen (may be None for the intensity method) so a
    caller can report it before falling back to manual placement.
    """

    def __init__(self, message: str, best_score: float | None = None):
        super().__init__(message)
        self.best_score = best_score


class DegenerateGeometryError(LumbarFatError):
    """Mask geometry collapsed (zero length or centroid on the pivot)."""


class StorageError(LumbarFatError):
    """Record could not be persisted."""


class DuplicateRecordError(StorageError):
    """Record with identical content already stored."""
