"""Exception hierarchy shared across the toolkit.

The CLI maps these onto distinct exit codes, so raise the most specific
class available.
"""


class QpufError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(QpufError):
    """Operands have incompatible dimensions, or a size guard was exceeded."""


class FormatError(QpufError):
    """Malformed serialized input (JSON descriptor, CRP record, config)."""


class UnknownVersionError(FormatError):
    """Serialized payload declares a format version this build cannot read."""


class ValidationError(QpufError):
    """A constructed object violates one of its invariants."""
