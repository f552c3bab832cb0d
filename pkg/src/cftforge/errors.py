"""Exception hierarchy shared across the package."""
from __future__ import annotations


class ValidationError(ValueError):
    """An invariant or precondition on a domain value was violated."""


class SchemaError(ValidationError):
    """A serialized record is missing a field or carries an unknown tag.

    Always names the offending field so corpus-scale failures are actionable.
    """

    def __init__(self, field: str, message: str = "") -> None:
        self.field = field
        detail = f": {message}" if message else ""
        super().__init__(f"schema error on field '{field}'{detail}")


class UsageError(ValidationError):
    """An operation was called with arguments its contract forbids."""


class ClientError(Exception):
    """Base class for endpoint client failures."""


class TransportError(ClientError):
    """Retries were exhausted on transient failures (429/5xx/timeouts)."""

    def __init__(self, message: str, last_status: int | None = None) -> None:
        self.last_status = last_status
        super().__init__(message)


class RequestError(ClientError):
    """The endpoint rejected the request with a non-retryable 4xx status."""

    def __init__(self, message: str, status: int) -> None:
        self.status = status
        super().__init__(message)


class ProtocolError(ClientError):
    """The endpoint answered 200 but the body is not a chat completion."""
