"""Exception hierarchy shared by the whole package.

The CLI maps these onto exit codes: usage problems exit 2, data problems
exit 3, broken internal invariants exit 4.
"""


class ModlError(Exception):
    """Base class for all errors raised by this package."""

    category = "internal"


class InvalidArgument(ModlError):
    """A caller violated an operation's contract (bad count, k > n, ...)."""

    category = "usage"


class SchemaError(ModlError):
    """The multi-table schema document is malformed or inconsistent."""

    category = "data"


class DataError(ModlError):
    """A data file does not match its declared schema."""

    category = "data"
