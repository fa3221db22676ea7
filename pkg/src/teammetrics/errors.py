"""Exception types shared across the package.

``DataError`` and its subclasses signal problems with user-supplied data or
on-disk artifacts (CLI exit code 2). Programming/contract violations raise
plain ``ValueError``/``KeyError`` and surface as internal errors (exit 3).
"""


class DataError(Exception):
    """Bad or missing input data (catalog rows, dumps, stage artifacts)."""


class UnreadableSourceError(DataError):
    """A repository path or dump file cannot be read."""


class CyclicHistoryError(DataError):
    """A commit stream contains a parent cycle (corrupt input)."""


class MissingUpstreamError(DataError):
    """A pipeline stage was started before its upstream artifacts exist."""


class ConfigMismatchError(DataError):
    """Stage artifacts on disk were produced under a different config."""
