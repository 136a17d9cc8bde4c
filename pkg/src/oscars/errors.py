"""Exception hierarchy. The CLI maps these onto distinct exit codes."""


class OscarsError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(OscarsError):
    """Malformed input or configuration that violates a precondition (exit 2)."""


class DataError(OscarsError):
    """Structurally valid input that is unusable: missing classes, unresolvable
    ids, checksum mismatches (exit 3)."""


class NumericError(OscarsError):
    """Non-finite values produced where finite ones are required (exit 4)."""
