"""Exception types shared across the package."""


class FlymationError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FlymationError):
    """Domain data violates an invariant (bad quaternion, empty scene, ...)."""


class ParseError(ValidationError):
    """Malformed input file. Carries the source name and a 1-based line number."""

    def __init__(self, source: str, line, message: str):
        self.source = source
        self.line = line
        self.reason = message
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {message}")


class ConfigError(ValidationError):
    """Scene configuration is missing, malformed, or inconsistent."""


class BundleError(ValidationError):
    """Scene bundle manifest or binary blob fails validation."""
