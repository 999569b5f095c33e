"""Error taxonomy.

Every failure surfaced to callers is a subclass of FzipError with a stable
``category`` string, so the CLI can print one-line diagnostics and tests can
assert on failure classes instead of message text.
"""


class FzipError(Exception):
    category = "error"


class ConfigurationError(FzipError):
    """Bad user-supplied configuration: unknown ids, invalid parameters."""

    category = "configuration"


class TransportError(FzipError):
    """External predictor unreachable, hung up, or timed out."""

    category = "transport"


class RemotePredictorError(FzipError):
    """External predictor answered with an ERROR frame."""

    category = "remote-predictor"


class CorruptStreamError(FzipError):
    """Coded payload is internally inconsistent (bad rank, truncated coder data)."""

    category = "corrupt-stream"


class NotAnArchiveError(FzipError):
    """Input does not start with the archive magic."""

    category = "not-an-archive"


class CorruptArchiveError(FzipError):
    """Archive is damaged: CRC mismatch, truncation, or length inconsistency."""

    category = "corrupt-archive"


class UnsupportedVersionError(FzipError):
    category = "unsupported-version"


class ModelMismatchError(FzipError):
    """Archive requires a predictor state we cannot reproduce (fingerprint/vocab)."""

    category = "model-mismatch"


class ExternalToolError(FzipError):
    """An external secondary-compression command failed."""

    category = "external-tool"


class UndefinedRatioError(FzipError):
    category = "undefined-ratio"
