"""Exception hierarchy.

Archive problems get distinct types so callers can tell a wrong file
from a wrong version from a damaged payload.
"""

from __future__ import annotations


class CmxError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(CmxError):
    """Arguments violate a documented precondition (empty class, N=0, ...)."""


class InvalidDistributionError(CmxError):
    """A symbol distribution does not sum to one or codes a zero-mass symbol."""


class CoderStateError(CmxError):
    """Coder misuse: flushing twice or encoding after flush."""


class ArchiveError(CmxError):
    """Base for anything wrong with a serialized archive."""


class BadMagicError(ArchiveError):
    """The input does not start with the expected magic bytes."""


class VersionMismatchError(ArchiveError):
    """The archive was written by an unsupported format version."""


class ConfigMismatchError(ArchiveError):
    """The archive was produced under a different model configuration."""


class CorruptArchiveError(ArchiveError):
    """The payload is inconsistent with the declared content."""


class TruncatedArchiveError(CorruptArchiveError):
    """The input ends before the declared content is complete."""


class SnapshotVersionError(CmxError):
    """A snapshot was produced by an incompatible package version."""


class NumericalError(CmxError):
    """An update produced a numerically impossible quantity."""
