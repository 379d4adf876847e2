"""Error vocabulary for the extraction pipeline."""


class BridgeError(Exception):
    """Base class; message plus an optional offending field name."""

    def __init__(self, message, *, offending_field=None):
        super().__init__(message)
        self.offending_field = offending_field


class CheckpointUnavailableError(BridgeError):
    """The named backbone checkpoint cannot be resolved here."""


class DatasetUnavailableError(BridgeError):
    """The named dataset is not present under the data root."""


class DatasetInvalidError(BridgeError):
    """Local data does not match what the registry promises."""
