"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class OscarError(Exception):
    """Base class for every domain error raised by this package."""


class EmptyInput(OscarError):
    """Raw recipe text contained no parseable steps."""


class ProviderViolation(OscarError):
    """External provider output failed re-validation against domain invariants."""


class ProviderUnavailable(OscarError):
    """An embedding provider failed; carries the frame/step context it failed on."""


class EmptyWindow(OscarError):
    """No frame timestamp falls inside the requested segment window."""


class DegenerateImage(OscarError):
    """Image raster too small for a Laplacian response (needs at least 3x3)."""


class DimensionMismatch(OscarError):
    """Vectors of different dimensions were compared."""


class ZeroVector(OscarError):
    """Cosine similarity is undefined for an all-zero vector."""


class LengthMismatch(OscarError):
    """Score vectors of different lengths were fused."""


class EmptyBatch(OscarError):
    """A frame batch average was requested over zero frames."""


class WrongArity(OscarError):
    """Step accuracy needs exactly the three trials of one (video, step)."""


class EmptyCorpus(OscarError):
    """Aggregation was requested over an empty result set."""


class UnknownStep(OscarError):
    """A query referenced a step index outside 1..N."""


class MalformedDocument(OscarError):
    """A document failed schema validation; carries the violation list."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or []
