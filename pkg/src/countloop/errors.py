"""Exception hierarchy shared across the pipeline."""


class CountLoopError(Exception):
    """Base class for all countloop errors."""


class ParseError(CountLoopError):
    """Prompt grammar could not ground any countable noun clause."""


class JsonError(CountLoopError):
    """No parseable JSON object found in a reply."""


class SchemaError(CountLoopError):
    """A JSON object was found but does not match the expected schema."""


class CapacityError(CountLoopError):
    """Requested instances cannot fit on the canvas at minimum size."""


class EditError(CountLoopError):
    """A graph edit references an id that no longer exists."""


class DimError(CountLoopError):
    """Array dimensions do not match the operation's contract."""


class ConfigError(CountLoopError):
    """Invalid run or scoring configuration."""


class BackendError(CountLoopError):
    """A generator/detector/aesthetic backend call failed mid-run."""

    def __init__(self, message, partial_report=None):
        super().__init__(message)
        self.partial_report = partial_report


class TransportError(CountLoopError):
    """HTTP transport failed after retries."""


class RateLimitError(TransportError):
    """Remote endpoint kept returning 429 after retries."""


class EmptyReplyError(CountLoopError):
    """Chat endpoint returned a syntactically valid but empty reply."""


class ProtocolError(CountLoopError):
    """Remote bridge response does not match the wire schema."""
