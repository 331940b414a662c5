"""Shared vocabulary: artifact identity, taxonomy, digests, timestamps.

Every other module builds on these types. The canonical textual name of each
enum variant (lower_snake_case) is its wire form and is used identically in
the event log, lockfile, attestation envelopes, and CLI output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping

_HASHERS = {"sha-256": hashlib.sha256}
_DIGEST_HEX_LEN = {"sha-256": 64}


class Nature(Enum):
    SYMBOLIC = "symbolic"
    TRAINED = "trained"


class Layer(Enum):
    DATA_ACQUISITION = "data_acquisition"
    TRAINING = "training"
    INFERENCE_INTEGRATION = "inference_integration"
    CROSS_CUTTING = "cross_cutting"


class PinMode(Enum):
    BLOB_HASH = "blob_hash"
    SNAPSHOT_REF = "snapshot_ref"
    REMOTE_UNPINNED = "remote_unpinned"


@dataclass(frozen=True)
class Digest:
    """Content identity: an algorithm name plus the lowercase hex hash.

    Comparison is case-insensitive because construction folds to lowercase;
    storage is always lowercase.
    """

    hex: str
    algorithm: str = "sha-256"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hex", self.hex.lower())
        expected = _DIGEST_HEX_LEN.get(self.algorithm)
        if expected is None:
            raise ValueError(f"unknown digest algorithm: {self.algorithm!r}")
        if len(self.hex) != expected or any(c not in "0123456789abcdef" for c in self.hex):
            raise ValueError(
                f"{self.algorithm} digest must be {expected} hex chars, got {self.hex!r}"
            )

    def __str__(self) -> str:
        return f"{self.algorithm}:{self.hex}"

    @classmethod
    def parse(cls, text: str) -> "Digest":
        """Accepts ``algorithm:hex`` or bare hex (assumed sha-256)."""
        if ":" in text:
            algorithm, _, hexpart = text.partition(":")
            return cls(hexpart, algorithm)
        return cls(text)

    @classmethod
    def zero(cls, algorithm: str = "sha-256") -> "Digest":
        return cls("0" * _DIGEST_HEX_LEN[algorithm], algorithm)


def compute_digest(content: bytes, algorithm: str = "sha-256") -> Digest:
    """Hash a byte sequence; identical bytes yield identical digests."""
    hasher = _HASHERS.get(algorithm)
    if hasher is None:
        raise ValueError(f"unknown digest algorithm: {algorithm!r}")
    return Digest(hasher(content).hexdigest(), algorithm)


_OTHER_PREFIX = "other:"

_ARTIFACT_LAYERS: dict[str, Layer] = {
    "dataset": Layer.DATA_ACQUISITION,
    "data_snapshot": Layer.DATA_ACQUISITION,
    "ingestion_metadata": Layer.DATA_ACQUISITION,
    "tokenizer": Layer.DATA_ACQUISITION,
    "retrieval_corpus": Layer.DATA_ACQUISITION,
    "vector_index": Layer.DATA_ACQUISITION,
    "inference_log": Layer.DATA_ACQUISITION,
    "feedback_trace": Layer.DATA_ACQUISITION,
    "base_checkpoint": Layer.TRAINING,
    "adapter": Layer.TRAINING,
    "student_checkpoint": Layer.TRAINING,
    "merged_checkpoint": Layer.TRAINING,
    "experiment_metadata": Layer.TRAINING,
    "evaluation_record": Layer.INFERENCE_INTEGRATION,
    "prompt_template": Layer.INFERENCE_INTEGRATION,
    "prompt_chain_definition": Layer.INFERENCE_INTEGRATION,
    "tool_schema": Layer.INFERENCE_INTEGRATION,
    "guardrail_config": Layer.INFERENCE_INTEGRATION,
    "serving_config": Layer.INFERENCE_INTEGRATION,
    "container_image": Layer.CROSS_CUTTING,
    "lockfile_artifact": Layer.CROSS_CUTTING,
}

# Behavior lives in learned parameters for exactly these four kinds.
_TRAINED_KINDS = frozenset(
    {"base_checkpoint", "adapter", "student_checkpoint", "merged_checkpoint"}
)

CHECKPOINT_KINDS = _TRAINED_KINDS

_TRANSFORMATION_LAYERS: dict[str, Layer] = {
    "data_ingestion": Layer.DATA_ACQUISITION,
    "data_preprocessing": Layer.DATA_ACQUISITION,
    "data_annotation": Layer.DATA_ACQUISITION,
    "chunking": Layer.DATA_ACQUISITION,
    "tokenization": Layer.DATA_ACQUISITION,
    "embedding_generation": Layer.DATA_ACQUISITION,
    "vector_index_construction": Layer.DATA_ACQUISITION,
    "model_training": Layer.TRAINING,
    "fine_tuning": Layer.TRAINING,
    "distillation": Layer.TRAINING,
    "checkpoint_merging": Layer.TRAINING,
    "preference_alignment": Layer.TRAINING,
    "evaluation": Layer.TRAINING,
    "prompt_engineering": Layer.INFERENCE_INTEGRATION,
    "prompt_chaining": Layer.INFERENCE_INTEGRATION,
    "compilation": Layer.INFERENCE_INTEGRATION,
    "guardrail_filtering": Layer.INFERENCE_INTEGRATION,
    "quantization": Layer.INFERENCE_INTEGRATION,
    "serialization": Layer.INFERENCE_INTEGRATION,
    "retrieval": Layer.INFERENCE_INTEGRATION,
    "tool_invocation": Layer.INFERENCE_INTEGRATION,
    "system_serving": Layer.INFERENCE_INTEGRATION,
    "containerization": Layer.CROSS_CUTTING,
    "log_aggregation": Layer.CROSS_CUTTING,
    "monitoring_feedback": Layer.CROSS_CUTTING,
}

# Training variants can never default to deterministic; the listed
# conversion-style steps always do. Everything else defaults true but a
# derivation may override true -> false.
_NONDETERMINISTIC_DEFAULTS = frozenset(
    {"model_training", "fine_tuning", "distillation", "preference_alignment"}
)


@dataclass(frozen=True)
class ArtifactKind:
    """One of the cataloged artifact kinds, or ``other:<name>`` for the rest."""

    value: str

    def __post_init__(self) -> None:
        if self.value in _ARTIFACT_LAYERS:
            return
        if self.value.startswith(_OTHER_PREFIX) and len(self.value) > len(_OTHER_PREFIX):
            return
        raise ValueError(f"unknown artifact kind: {self.value!r}")

    @classmethod
    def other(cls, name: str) -> "ArtifactKind":
        return cls(_OTHER_PREFIX + name)

    @classmethod
    def from_name(cls, name: str) -> "ArtifactKind":
        return cls(name)

    @property
    def canonical_name(self) -> str:
        return self.value

    @property
    def is_other(self) -> bool:
        return self.value.startswith(_OTHER_PREFIX)

    @classmethod
    def all_known(cls) -> tuple["ArtifactKind", ...]:
        return tuple(cls(v) for v in _ARTIFACT_LAYERS)

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TransformationKind:
    """One of the cataloged transformations, or ``other:<name>``."""

    value: str

    def __post_init__(self) -> None:
        if self.value in _TRANSFORMATION_LAYERS:
            return
        if self.value.startswith(_OTHER_PREFIX) and len(self.value) > len(_OTHER_PREFIX):
            return
        raise ValueError(f"unknown transformation kind: {self.value!r}")

    @classmethod
    def other(cls, name: str) -> "TransformationKind":
        return cls(_OTHER_PREFIX + name)

    @classmethod
    def from_name(cls, name: str) -> "TransformationKind":
        return cls(name)

    @property
    def canonical_name(self) -> str:
        return self.value

    @property
    def is_other(self) -> bool:
        return self.value.startswith(_OTHER_PREFIX)

    @property
    def default_deterministic(self) -> bool:
        return self.value not in _NONDETERMINISTIC_DEFAULTS

    @classmethod
    def all_known(cls) -> tuple["TransformationKind", ...]:
        return tuple(cls(v) for v in _TRANSFORMATION_LAYERS)

    def __str__(self) -> str:
        return self.value


def nature_of(kind: ArtifactKind) -> Nature:
    """Symbolic/trained split; unknown (other) kinds are conservatively symbolic."""
    return Nature.TRAINED if kind.value in _TRAINED_KINDS else Nature.SYMBOLIC


def layer_of(kind: ArtifactKind | TransformationKind) -> Layer:
    """Total mapping from artifact and transformation kinds to their layer."""
    if isinstance(kind, ArtifactKind):
        return _ARTIFACT_LAYERS.get(kind.value, Layer.CROSS_CUTTING)
    if isinstance(kind, TransformationKind):
        return _TRANSFORMATION_LAYERS.get(kind.value, Layer.CROSS_CUTTING)
    raise TypeError(f"layer_of expects a kind, got {type(kind).__name__}")


_UNPINNED_KEY_PREFIX = "unpinned:"


@dataclass(frozen=True, eq=False)
class ArtifactId:
    """Identity of a supply-chain object.

    The name is display-only for pinned artifacts: equality and hashing use
    (pin_mode, digest). Remote unpinned artifacts have no digest, so their
    name is their identity.
    """

    name: str
    digest: Digest | None
    pin_mode: PinMode = PinMode.BLOB_HASH

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("artifact name must be non-empty")
        if self.pin_mode is PinMode.REMOTE_UNPINNED:
            if self.digest is not None:
                raise ValueError("remote_unpinned artifacts carry no digest")
        elif self.digest is None:
            raise ValueError(f"{self.pin_mode.value} requires a digest")

    def _identity(self) -> tuple:
        if self.pin_mode is PinMode.REMOTE_UNPINNED:
            return (self.pin_mode.value, self.name)
        return (self.pin_mode.value, self.digest)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ArtifactId):
            return NotImplemented
        return self._identity() == other._identity()

    def __hash__(self) -> int:
        return hash(self._identity())

    @property
    def key(self) -> str:
        """Stable node key: the digest string, or ``unpinned:<name>``."""
        if self.digest is not None:
            return str(self.digest)
        return _UNPINNED_KEY_PREFIX + self.name

    def to_json_value(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "digest": str(self.digest) if self.digest is not None else None,
            "pin_mode": self.pin_mode.value,
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "ArtifactId":
        digest = value.get("digest")
        return cls(
            name=value["name"],
            digest=Digest.parse(digest) if digest else None,
            pin_mode=PinMode(value["pin_mode"]),
        )


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; a timezone offset is required."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"invalid RFC 3339 timestamp: {text!r}") from exc
    if parsed.tzinfo is None:
        raise ValueError(f"timestamp must carry a timezone offset: {text!r}")
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    """Render a timestamp in normalized RFC 3339 UTC form with a Z suffix."""
    if value.tzinfo is None:
        raise ValueError("naive datetimes are not representable")
    value = value.astimezone(timezone.utc)
    text = value.isoformat()
    return text[: -len("+00:00")] + "Z" if text.endswith("+00:00") else text
