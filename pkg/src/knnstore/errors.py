"""Exception hierarchy with machine-readable error codes.

Every error that can cross the CLI or HTTP boundary carries a stable
``code`` string so callers can dispatch without parsing messages.
"""

from __future__ import annotations


class KnnStoreError(Exception):
    """Base class for all errors raised by this package."""

    code = "INTERNAL"

    def __init__(self, message: str, *, offending_field: str | None = None):
        super().__init__(message)
        self.message = message
        self.offending_field = offending_field

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "offending_field": self.offending_field,
        }


class DimensionMismatchError(KnnStoreError):
    code = "DIMENSION_MISMATCH"


class UnknownIdError(KnnStoreError):
    code = "UNKNOWN_ID"


class EmptyCollectionError(KnnStoreError):
    code = "EMPTY_COLLECTION"


class ZeroNormError(KnnStoreError):
    code = "ZERO_NORM"


class LabelInvalidError(KnnStoreError):
    code = "LABEL_INVALID"


class ChecksumError(KnnStoreError):
    code = "CHECKSUM_FAILED"


class DuplicateIdError(KnnStoreError):
    code = "DUPLICATE_ID"


class InvalidVectorError(KnnStoreError):
    """Vector contains NaN or infinite components."""

    code = "INVALID_VECTOR"


class RecordInvalidError(KnnStoreError):
    """Record field outside its representable range (e.g. id wider than u64)."""

    code = "RECORD_INVALID"


class FormatError(KnnStoreError):
    """Persistent file violates the EMBV1 layout or manifest schema.

    ``offset`` is the byte position of the first violation when known.
    """

    code = "FORMAT_INVALID"

    def __init__(self, message: str, *, offset: int | None = None,
                 offending_field: str | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message, offending_field=offending_field)
        self.offset = offset


class CollectionExistsError(KnnStoreError):
    code = "COLLECTION_EXISTS"


class UnknownCollectionError(KnnStoreError):
    code = "UNKNOWN_COLLECTION"


class ScheduleError(KnnStoreError):
    """Protocol schedule configuration is invalid."""

    code = "SCHEDULE_INVALID"
