"""Shared exception types.

Every error raised by this package derives from CapfuseError so callers can
catch pipeline problems without also swallowing programming errors.
"""

from __future__ import annotations


class CapfuseError(Exception):
    """Base class for all package errors."""


class ManifestError(CapfuseError):
    """Malformed manifest content; the message names the offending line."""


class DuplicateClipIdError(ManifestError):
    """The same clip_id appears on two manifest lines."""

    def __init__(self, clip_id: str, first_line: int, second_line: int):
        self.clip_id = clip_id
        self.first_line = first_line
        self.second_line = second_line
        super().__init__(
            f"duplicate clip_id {clip_id!r} on lines {first_line} and {second_line}"
        )


class CacheError(CapfuseError):
    """Stage-cache storage failure.

    ``retryable`` is True for transient filesystem conditions; the caller may
    retry the put.
    """

    def __init__(self, message: str, retryable: bool = True):
        self.retryable = retryable
        super().__init__(message)


class ConfigError(CapfuseError):
    """Invalid run configuration; ``field`` is a dotted path into the config."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class BackendError(CapfuseError):
    """Base class for backend-call failures."""


class TransportFailure(BackendError):
    """Timeout, connection failure, or 5xx; retryable up to the retry budget."""


class BackendRejected(BackendError):
    """4xx response; the request is wrong and retrying will not help."""

    def __init__(self, status_code: int, message: str):
        self.status_code = status_code
        super().__init__(f"backend rejected request ({status_code}): {message}")


class ProtocolError(BackendError):
    """Response violates the wire schema or the handshake contract."""


class FusionParseError(CapfuseError):
    """Synthesizer output contains neither the uncertainty sentinel nor JSON."""


class FusionSchemaError(CapfuseError):
    """Synthesizer output parsed as JSON but misses required keys or types."""


class ExtractionSchemaError(CapfuseError):
    """Semantic-extraction JSON misses one of the required list keys."""


class ModalityParseError(CapfuseError):
    """Modality-check reply contains none of the canonical source keys."""


class StageFailure(CapfuseError):
    """A pipeline stage failed for one clip; carries the stage name and cause."""

    def __init__(self, stage: str, cause: str | Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
