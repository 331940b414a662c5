"""chainlock: supply-chain integrity toolkit for compound AI systems.

Four properties, one toolkit: traceability (hash-chained lineage DAG with
taint queries), versioning (lockfile plus coupling-contract resolver),
verifiability (signed attestations with compositional pipeline verification),
and observability (artifact-tagged telemetry with drift detection) — plus a
dependency scanner that measures how much code a stack really pulls in.
"""

from chainlock.model import (
    ArtifactId,
    ArtifactKind,
    Digest,
    Layer,
    Nature,
    PinMode,
    TransformationKind,
    compute_digest,
    layer_of,
    nature_of,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactId",
    "ArtifactKind",
    "Digest",
    "Layer",
    "Nature",
    "PinMode",
    "TransformationKind",
    "compute_digest",
    "layer_of",
    "nature_of",
    "__version__",
]
