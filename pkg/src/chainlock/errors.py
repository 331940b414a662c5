"""Exception hierarchy shared by every chainlock module.

All domain errors derive from :class:`ChainlockError` so callers (notably the
CLI) can distinguish toolkit failures from programming errors with a single
except clause.
"""

from __future__ import annotations


class ChainlockError(Exception):
    """Base class for all toolkit errors."""


# -- canonical serialization -------------------------------------------------


class NonCanonicalizable(ChainlockError):
    """Value has no canonical byte form (non-finite number, bad key type)."""


# -- lineage ------------------------------------------------------------------


class KindConflict(ChainlockError):
    """Artifact re-registered with a different kind."""


class UnknownArtifact(ChainlockError):
    """Referenced artifact or policy node is not registered."""


class CycleDetected(ChainlockError):
    """Accepting the derivation would make its output an ancestor of an input."""


# -- lockfile -----------------------------------------------------------------


class IncompleteAssembly(ChainlockError):
    """Observed assembly lacks the coupling metadata needed to derive contracts."""


class CorruptLockfile(ChainlockError):
    """Lockfile digest does not verify or the document is malformed."""


# -- attestation --------------------------------------------------------------


class UnknownSigner(ChainlockError):
    """Signer id cannot be resolved in the key registry."""


class EmptySamples(ChainlockError):
    """Statistical consistency check invoked with no samples."""


# -- scanner ------------------------------------------------------------------


class ParseFailure(ChainlockError):
    """Manifest or version text violates its dialect grammar."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" at line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{message}{where}")


class UnresolvablePackage(ChainlockError):
    """No indexed version satisfies a requirement; carries the requirement chain."""

    def __init__(self, message: str, chain: tuple[str, ...] = ()):
        self.chain = chain
        if chain:
            message = f"{message} (via {' -> '.join(chain)})"
        super().__init__(message)


class IoFailure(ChainlockError):
    """Filesystem tree could not be read."""


# -- drift --------------------------------------------------------------------


class OutOfOrder(ChainlockError):
    """Response record sequence number is not strictly increasing."""


class MissingTag(ChainlockError):
    """Response record lacks one of the required artifact role tags."""


class InsufficientData(ChainlockError):
    """Stream or range too short for the requested computation."""


# -- cli ----------------------------------------------------------------------


class UnsupportedFormat(ChainlockError):
    """Requested output format does not apply to this result shape."""
