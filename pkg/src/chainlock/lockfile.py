"""Declarative pinning of a compound AI system's artifact assembly.

A lockfile pins every component (checkpoint, adapter, tokenizer, index,
prompt, guardrail, ...) either by content hash, by snapshot reference, or as
an explicitly unverifiable remote, and declares the behavioral coupling
contracts between them: which adapter with which base, which index with which
embedding model, which prompt with which output format, which tokenizer with
which model. The resolver (verify_assembly) detects violations of both the
pins and the contracts against a deployment's self-report.

The file format is canonical JSON (extension ``.ailock.json``) so the lock
digest is well-defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from chainlock import canonical
from chainlock.attestation import ByteSigner, KeyRegistry
from chainlock.errors import CorruptLockfile, IncompleteAssembly, UnknownSigner
from chainlock.model import (
    CHECKPOINT_KINDS,
    ArtifactId,
    ArtifactKind,
    Digest,
    PinMode,
    compute_digest,
    format_timestamp,
    parse_timestamp,
)

LOCKFILE_SCHEMA_VERSION = 1
LOCKFILE_EXTENSION = ".ailock.json"


class ContractKind(Enum):
    ADAPTER_BASE = "adapter_base"
    INDEX_EMBEDDER = "index_embedder"
    PROMPT_OUTPUT_FORMAT = "prompt_output_format"
    TOKENIZER_MODEL = "tokenizer_model"


class ConstraintKind(Enum):
    EXACT_DIGEST = "exact_digest"
    SCHEMA_DIGEST = "schema_digest"


# subject kind -> allowed object kinds, per contract kind
_CONTRACT_KIND_RULES: dict[ContractKind, tuple[set[str], set[str]]] = {
    ContractKind.ADAPTER_BASE: ({"adapter"}, {"base_checkpoint"}),
    ContractKind.INDEX_EMBEDDER: ({"vector_index"}, set(CHECKPOINT_KINDS)),
    ContractKind.PROMPT_OUTPUT_FORMAT: ({"prompt_template"}, set(CHECKPOINT_KINDS)),
    ContractKind.TOKENIZER_MODEL: ({"tokenizer"}, set(CHECKPOINT_KINDS)),
}


@dataclass(frozen=True)
class Constraint:
    kind: ConstraintKind
    expected: Digest | None = None

    def __post_init__(self) -> None:
        if self.kind is ConstraintKind.SCHEMA_DIGEST and self.expected is None:
            raise ValueError("schema_digest constraint requires an expected digest")
        if self.kind is ConstraintKind.EXACT_DIGEST and self.expected is not None:
            raise ValueError("exact_digest constraint carries no expected digest")

    def to_json_value(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "expected": str(self.expected) if self.expected is not None else None,
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "Constraint":
        expected = value.get("expected")
        return cls(
            kind=ConstraintKind(value["kind"]),
            expected=Digest.parse(expected) if expected else None,
        )


@dataclass(frozen=True)
class SnapshotReceipt:
    """Signed record of a remote provider's served artifact state."""

    provider: str
    observed_digest: Digest
    observed_at: datetime
    signature: bytes

    def payload_bytes(self) -> bytes:
        return receipt_payload(self.provider, self.observed_digest, self.observed_at)

    def to_json_value(self) -> dict[str, Any]:
        return {
            "provider": self.provider,
            "observed_digest": str(self.observed_digest),
            "observed_at": format_timestamp(self.observed_at),
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "SnapshotReceipt":
        return cls(
            provider=value["provider"],
            observed_digest=Digest.parse(value["observed_digest"]),
            observed_at=parse_timestamp(value["observed_at"]),
            signature=bytes.fromhex(value["signature"]),
        )


def receipt_payload(provider: str, observed_digest: Digest, observed_at: datetime) -> bytes:
    return canonical.canonical_bytes(
        {
            "provider": provider,
            "observed_digest": str(observed_digest),
            "observed_at": format_timestamp(observed_at),
        }
    )


def make_receipt(
    provider: str, observed_digest: Digest, observed_at: datetime, key: ByteSigner
) -> SnapshotReceipt:
    """Sign a point-in-time snapshot of a provider's served artifact state."""
    payload = receipt_payload(provider, observed_digest, observed_at)
    return SnapshotReceipt(
        provider=provider,
        observed_digest=observed_digest,
        observed_at=observed_at,
        signature=key.sign(payload),
    )


def verify_receipt(receipt: SnapshotReceipt, registry: KeyRegistry) -> bool:
    """True iff the receipt verifies under the provider's registered key."""
    key = registry.resolve(receipt.provider)
    return key.verify(receipt.payload_bytes(), receipt.signature)


@dataclass(frozen=True)
class Pin:
    name: str
    artifact: ArtifactId
    kind: ArtifactKind
    snapshot_receipt: SnapshotReceipt | None = None
    unverifiable: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("pin name must be non-empty")
        if (
            self.artifact.pin_mode is PinMode.REMOTE_UNPINNED
            and self.snapshot_receipt is None
            and not self.unverifiable
        ):
            raise ValueError(
                f"remote pin {self.name!r} requires a snapshot receipt "
                "or the explicit unverifiable marker"
            )

    def to_json_value(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "artifact": self.artifact.to_json_value(),
            "kind": self.kind.canonical_name,
            "snapshot_receipt": (
                self.snapshot_receipt.to_json_value()
                if self.snapshot_receipt is not None
                else None
            ),
            "unverifiable": self.unverifiable,
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "Pin":
        receipt = value.get("snapshot_receipt")
        return cls(
            name=value["name"],
            artifact=ArtifactId.from_json_value(value["artifact"]),
            kind=ArtifactKind(value["kind"]),
            snapshot_receipt=SnapshotReceipt.from_json_value(receipt) if receipt else None,
            unverifiable=value.get("unverifiable", False),
        )


@dataclass(frozen=True)
class CouplingContract:
    kind: ContractKind
    subject: str
    object: str
    constraint: Constraint

    def __post_init__(self) -> None:
        if self.subject == self.object:
            raise ValueError("contract subject and object must differ")

    @property
    def name(self) -> str:
        return f"{self.kind.value}:{self.subject}"

    def to_json_value(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "subject": self.subject,
            "object": self.object,
            "constraint": self.constraint.to_json_value(),
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "CouplingContract":
        return cls(
            kind=ContractKind(value["kind"]),
            subject=value["subject"],
            object=value["object"],
            constraint=Constraint.from_json_value(value["constraint"]),
        )


@dataclass(frozen=True)
class ObservedComponent:
    """One component of a deployment's self-report, with coupling metadata."""

    artifact: ArtifactId
    kind: ArtifactKind
    trained_against: Digest | None = None  # adapters: base they were trained on
    embedder: Digest | None = None  # vector indexes: model that produced the vectors
    expects_output_schema: Digest | None = None  # prompt templates
    emits_output_schema: Digest | None = None  # checkpoints
    tokenizer: Digest | None = None  # checkpoints: vocabulary they round-trip with
    remote_self_report: Digest | None = None  # remote components: current served state
    receipt: SnapshotReceipt | None = None

    def to_json_value(self) -> dict[str, Any]:
        def opt(d: Digest | None) -> str | None:
            return str(d) if d is not None else None

        return {
            "artifact": self.artifact.to_json_value(),
            "kind": self.kind.canonical_name,
            "trained_against": opt(self.trained_against),
            "embedder": opt(self.embedder),
            "expects_output_schema": opt(self.expects_output_schema),
            "emits_output_schema": opt(self.emits_output_schema),
            "tokenizer": opt(self.tokenizer),
            "remote_self_report": opt(self.remote_self_report),
            "receipt": self.receipt.to_json_value() if self.receipt else None,
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "ObservedComponent":
        def opt(key: str) -> Digest | None:
            raw = value.get(key)
            return Digest.parse(raw) if raw else None

        receipt = value.get("receipt")
        return cls(
            artifact=ArtifactId.from_json_value(value["artifact"]),
            kind=ArtifactKind(value["kind"]),
            trained_against=opt("trained_against"),
            embedder=opt("embedder"),
            expects_output_schema=opt("expects_output_schema"),
            emits_output_schema=opt("emits_output_schema"),
            tokenizer=opt("tokenizer"),
            remote_self_report=opt("remote_self_report"),
            receipt=SnapshotReceipt.from_json_value(receipt) if receipt else None,
        )


@dataclass(frozen=True)
class ObservedAssembly:
    components: Mapping[str, ObservedComponent] = field(default_factory=dict)

    def to_json_value(self) -> dict[str, Any]:
        return {
            "components": {
                name: comp.to_json_value()
                for name, comp in sorted(self.components.items())
            }
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "ObservedAssembly":
        return cls(
            components={
                name: ObservedComponent.from_json_value(comp)
                for name, comp in value.get("components", {}).items()
            }
        )

    @classmethod
    def load(cls, path: str | Path) -> "ObservedAssembly":
        return cls.from_json_value(canonical.parse(Path(path).read_bytes()))


class ViolationKind(Enum):
    PIN_MISMATCH = "pin_mismatch"
    COUPLING_BROKEN = "coupling_broken"
    MISSING_COMPONENT = "missing_component"
    UNVERIFIABLE_REMOTE = "unverifiable_remote"
    RECEIPT_INVALID = "receipt_invalid"


SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    """Names exactly one pin or contract and what is wrong with it."""

    name: str
    kind: ViolationKind
    detail: str
    severity: str = SEVERITY_ERROR

    def __str__(self) -> str:
        return f"{self.severity.upper()} {self.kind.value} {self.name}: {self.detail}"

    def to_json_value(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "detail": self.detail,
            "severity": self.severity,
        }


@dataclass(frozen=True)
class Lockfile:
    schema_version: int
    system_name: str
    created_at: datetime
    pins: tuple[Pin, ...]
    contracts: tuple[CouplingContract, ...]
    lock_digest: Digest

    def __post_init__(self) -> None:
        names = [p.name for p in self.pins]
        if len(set(names)) != len(names):
            raise ValueError("pin names must be unique")
        pinned = set(names)
        for contract in self.contracts:
            for ref in (contract.subject, contract.object):
                if ref not in pinned:
                    raise ValueError(
                        f"contract {contract.name} references unpinned name {ref!r}"
                    )

    def body_json_value(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "system_name": self.system_name,
            "created_at": format_timestamp(self.created_at),
            "pins": [p.to_json_value() for p in sorted(self.pins, key=lambda p: p.name)],
            "contracts": [
                c.to_json_value()
                for c in sorted(self.contracts, key=lambda c: c.name)
            ],
        }

    def to_json_value(self) -> dict[str, Any]:
        body = self.body_json_value()
        body["lock_digest"] = str(self.lock_digest)
        return body

    def pin(self, name: str) -> Pin | None:
        for p in self.pins:
            if p.name == name:
                return p
        return None


def _lock_digest(body: Mapping[str, Any]) -> Digest:
    return compute_digest(canonical.canonical_bytes(dict(body)))


def _finish_lock(
    system_name: str,
    created_at: datetime,
    pins: list[Pin],
    contracts: list[CouplingContract],
) -> Lockfile:
    probe = Lockfile(
        schema_version=LOCKFILE_SCHEMA_VERSION,
        system_name=system_name,
        created_at=created_at,
        pins=tuple(sorted(pins, key=lambda p: p.name)),
        contracts=tuple(sorted(contracts, key=lambda c: c.name)),
        lock_digest=Digest.zero(),
    )
    digest = _lock_digest(probe.body_json_value())
    return Lockfile(
        schema_version=probe.schema_version,
        system_name=probe.system_name,
        created_at=probe.created_at,
        pins=probe.pins,
        contracts=probe.contracts,
        lock_digest=digest,
    )


def create_lock(
    assembly: ObservedAssembly, system_name: str, created_at: datetime
) -> Lockfile:
    """Pin an observed assembly, auto-deriving its coupling contracts.

    One adapter_base per adapter, one index_embedder per vector index, one
    tokenizer_model per tokenizer, one prompt_output_format per (prompt,
    schema-emitting checkpoint) pair. Missing coupling metadata, or coupling
    metadata that matches no pinned component, is an incomplete assembly.
    """
    components = dict(assembly.components)
    by_digest: dict[str, list[str]] = {}
    for name, comp in components.items():
        if comp.artifact.digest is not None:
            by_digest.setdefault(str(comp.artifact.digest), []).append(name)

    def pinned_name_for(digest: Digest, why: str) -> str:
        names = sorted(by_digest.get(str(digest), ()))
        if not names:
            raise IncompleteAssembly(f"{why}: digest {digest} is not pinned in the assembly")
        return names[0]

    pins: list[Pin] = []
    contracts: list[CouplingContract] = []
    for name in sorted(components):
        comp = components[name]
        pins.append(
            Pin(
                name=name,
                artifact=comp.artifact,
                kind=comp.kind,
                snapshot_receipt=comp.receipt,
                unverifiable=(
                    comp.artifact.pin_mode is PinMode.REMOTE_UNPINNED
                    and comp.receipt is None
                ),
            )
        )
        kind_name = comp.kind.canonical_name
        if kind_name == "adapter":
            if comp.trained_against is None:
                raise IncompleteAssembly(
                    f"adapter {name!r} does not declare the base it was trained against"
                )
            base = pinned_name_for(comp.trained_against, f"adapter {name!r} base")
            contracts.append(
                CouplingContract(
                    kind=ContractKind.ADAPTER_BASE,
                    subject=name,
                    object=base,
                    constraint=Constraint(ConstraintKind.EXACT_DIGEST),
                )
            )
        elif kind_name == "vector_index":
            if comp.embedder is None:
                raise IncompleteAssembly(
                    f"vector index {name!r} does not declare its embedding model"
                )
            embedder = pinned_name_for(comp.embedder, f"index {name!r} embedder")
            contracts.append(
                CouplingContract(
                    kind=ContractKind.INDEX_EMBEDDER,
                    subject=name,
                    object=embedder,
                    constraint=Constraint(ConstraintKind.EXACT_DIGEST),
                )
            )
        elif kind_name == "tokenizer":
            users = sorted(
                other_name
                for other_name, other in components.items()
                if other.kind.canonical_name in CHECKPOINT_KINDS
                and other.tokenizer is not None
                and comp.artifact.digest is not None
                and other.tokenizer == comp.artifact.digest
            )
            if not users:
                raise IncompleteAssembly(
                    f"tokenizer {name!r} is not declared by any pinned checkpoint"
                )
            contracts.append(
                CouplingContract(
                    kind=ContractKind.TOKENIZER_MODEL,
                    subject=name,
                    object=users[0],
                    constraint=Constraint(ConstraintKind.EXACT_DIGEST),
                )
            )
        elif kind_name == "prompt_template":
            if comp.expects_output_schema is None:
                raise IncompleteAssembly(
                    f"prompt {name!r} does not declare its expected output schema"
                )
            emitters = sorted(
                other_name
                for other_name, other in components.items()
                if other.kind.canonical_name in CHECKPOINT_KINDS
                and other.emits_output_schema is not None
            )
            if not emitters:
                raise IncompleteAssembly(
                    f"prompt {name!r} has no schema-emitting checkpoint to couple with"
                )
            for emitter in emitters:
                contracts.append(
                    CouplingContract(
                        kind=ContractKind.PROMPT_OUTPUT_FORMAT,
                        subject=name,
                        object=emitter,
                        constraint=Constraint(
                            ConstraintKind.SCHEMA_DIGEST,
                            expected=comp.expects_output_schema,
                        ),
                    )
                )
    return _finish_lock(system_name, created_at, pins, contracts)


def verify_assembly(
    lock: Lockfile,
    observed: ObservedAssembly,
    keys: KeyRegistry | None = None,
    remote_severity: str = SEVERITY_WARNING,
) -> list[Violation]:
    """Resolve the lock against a deployment self-report.

    Returns the ordered violation list: pin checks first (by pin name), then
    contract checks (by contract name). Empty means the deployed assembly is
    exactly the pinned one and every coupling contract holds.
    """
    recomputed = _lock_digest(lock.body_json_value())
    if recomputed != lock.lock_digest:
        raise CorruptLockfile(
            f"lock digest mismatch: stored {lock.lock_digest}, computed {recomputed}"
        )

    violations: list[Violation] = []
    components = dict(observed.components)

    for pin in sorted(lock.pins, key=lambda p: p.name):
        comp = components.get(pin.name)
        if comp is None:
            violations.append(
                Violation(
                    pin.name,
                    ViolationKind.MISSING_COMPONENT,
                    "component absent from observed assembly",
                )
            )
            continue
        if pin.artifact.pin_mode is PinMode.REMOTE_UNPINNED:
            violations.extend(_check_remote_pin(pin, comp, keys, remote_severity))
            continue
        if comp.artifact.digest is None:
            violations.append(
                Violation(
                    pin.name,
                    ViolationKind.PIN_MISMATCH,
                    f"pinned {pin.artifact.digest}, observed component reports no digest",
                )
            )
        elif comp.artifact.digest != pin.artifact.digest:
            violations.append(
                Violation(
                    pin.name,
                    ViolationKind.PIN_MISMATCH,
                    f"pinned {pin.artifact.digest}, observed {comp.artifact.digest}",
                )
            )

    for contract in sorted(lock.contracts, key=lambda c: c.name):
        violation = _check_contract(contract, components)
        if violation is not None:
            violations.append(violation)
    return violations


def _check_remote_pin(
    pin: Pin,
    comp: ObservedComponent,
    keys: KeyRegistry | None,
    remote_severity: str,
) -> list[Violation]:
    if pin.snapshot_receipt is None:
        return [
            Violation(
                pin.name,
                ViolationKind.UNVERIFIABLE_REMOTE,
                "remote pin carries no snapshot receipt",
                severity=remote_severity,
            )
        ]
    receipt = pin.snapshot_receipt
    if keys is not None:
        try:
            valid = verify_receipt(receipt, keys)
        except UnknownSigner:
            valid = False
        if not valid:
            return [
                Violation(
                    pin.name,
                    ViolationKind.RECEIPT_INVALID,
                    f"receipt signature does not verify under provider {receipt.provider!r}",
                )
            ]
    if comp.remote_self_report is None:
        return [
            Violation(
                pin.name,
                ViolationKind.UNVERIFIABLE_REMOTE,
                "observed assembly reports no current remote state",
                severity=remote_severity,
            )
        ]
    if comp.remote_self_report != receipt.observed_digest:
        return [
            Violation(
                pin.name,
                ViolationKind.PIN_MISMATCH,
                f"receipted {receipt.observed_digest}, remote now serves "
                f"{comp.remote_self_report}",
            )
        ]
    return []


def _check_contract(
    contract: CouplingContract, components: Mapping[str, ObservedComponent]
) -> Violation | None:
    subject = components.get(contract.subject)
    object_ = components.get(contract.object)
    if subject is None or object_ is None:
        # The missing-component pin violation already covers this side.
        return None

    def broken(detail: str) -> Violation:
        return Violation(contract.name, ViolationKind.COUPLING_BROKEN, detail)

    if contract.kind is ContractKind.ADAPTER_BASE:
        if subject.trained_against is None:
            return broken(f"adapter {contract.subject!r} reports no trained_against digest")
        if subject.trained_against != object_.artifact.digest:
            return broken(
                f"adapter trained against {subject.trained_against}, deployed base is "
                f"{object_.artifact.digest}"
            )
    elif contract.kind is ContractKind.INDEX_EMBEDDER:
        if subject.embedder is None:
            return broken(f"index {contract.subject!r} reports no embedder digest")
        if subject.embedder != object_.artifact.digest:
            return broken(
                f"index embedded with {subject.embedder}, deployed embedder is "
                f"{object_.artifact.digest}"
            )
    elif contract.kind is ContractKind.TOKENIZER_MODEL:
        if object_.tokenizer is None:
            return broken(f"checkpoint {contract.object!r} reports no tokenizer digest")
        if object_.tokenizer != subject.artifact.digest:
            return broken(
                f"checkpoint round-trips tokenizer {object_.tokenizer}, deployed "
                f"tokenizer is {subject.artifact.digest}"
            )
    elif contract.kind is ContractKind.PROMPT_OUTPUT_FORMAT:
        expected = contract.constraint.expected
        if subject.expects_output_schema != expected:
            return broken(
                f"prompt expects schema {subject.expects_output_schema}, contract pins "
                f"{expected}"
            )
        if object_.emits_output_schema != expected:
            return broken(
                f"checkpoint emits schema {object_.emits_output_schema}, contract pins "
                f"{expected}"
            )
    return None


@dataclass(frozen=True)
class LockDiff:
    added_pins: tuple[str, ...]
    removed_pins: tuple[str, ...]
    changed_pins: Mapping[str, tuple[ArtifactId, ArtifactId]]
    added_contracts: tuple[str, ...]
    removed_contracts: tuple[str, ...]

    @property
    def empty(self) -> bool:
        return not (
            self.added_pins
            or self.removed_pins
            or self.changed_pins
            or self.added_contracts
            or self.removed_contracts
        )

    def to_json_value(self) -> dict[str, Any]:
        return {
            "added_pins": list(self.added_pins),
            "removed_pins": list(self.removed_pins),
            "changed_pins": {
                name: {"old": old.to_json_value(), "new": new.to_json_value()}
                for name, (old, new) in sorted(self.changed_pins.items())
            },
            "added_contracts": list(self.added_contracts),
            "removed_contracts": list(self.removed_contracts),
        }


def diff_locks(a: Lockfile, b: Lockfile) -> LockDiff:
    """What changed between two verified locks, keyed by pin/contract name."""
    for lock in (a, b):
        recomputed = _lock_digest(lock.body_json_value())
        if recomputed != lock.lock_digest:
            raise CorruptLockfile(f"lock digest mismatch for {lock.system_name!r}")

    a_pins = {p.name: p for p in a.pins}
    b_pins = {p.name: p for p in b.pins}
    added = tuple(sorted(set(b_pins) - set(a_pins)))
    removed = tuple(sorted(set(a_pins) - set(b_pins)))
    changed: dict[str, tuple[ArtifactId, ArtifactId]] = {}
    for name in sorted(set(a_pins) & set(b_pins)):
        old, new = a_pins[name], b_pins[name]
        if old.artifact != new.artifact or old.kind != new.kind:
            changed[name] = (old.artifact, new.artifact)

    a_contracts = {c.name: c.to_json_value() for c in a.contracts}
    b_contracts = {c.name: c.to_json_value() for c in b.contracts}
    added_contracts = tuple(sorted(set(b_contracts) - set(a_contracts)))
    removed_contracts = tuple(sorted(set(a_contracts) - set(b_contracts)))
    return LockDiff(
        added_pins=added,
        removed_pins=removed,
        changed_pins=changed,
        added_contracts=added_contracts,
        removed_contracts=removed_contracts,
    )


def serialize_lockfile(lock: Lockfile) -> bytes:
    return canonical.canonical_bytes(lock.to_json_value()) + b"\n"


def parse_lockfile(data: bytes | str) -> Lockfile:
    """Parse and validate a lockfile document.

    Rejects unknown top-level keys, contracts referencing unpinned names
    (via the Lockfile invariant), and any document whose stored lock digest
    does not match its canonical body.
    """
    try:
        raw = canonical.parse(data)
    except Exception as exc:
        raise CorruptLockfile(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise CorruptLockfile("lockfile root must be an object")
    expected_keys = {
        "schema_version",
        "system_name",
        "created_at",
        "pins",
        "contracts",
        "lock_digest",
    }
    if set(raw) != expected_keys:
        raise CorruptLockfile(
            f"lockfile keys must be exactly {sorted(expected_keys)}, got {sorted(raw)}"
        )
    if raw["schema_version"] != LOCKFILE_SCHEMA_VERSION:
        raise CorruptLockfile(f"unsupported schema_version {raw['schema_version']!r}")
    try:
        lock = Lockfile(
            schema_version=raw["schema_version"],
            system_name=raw["system_name"],
            created_at=parse_timestamp(raw["created_at"]),
            pins=tuple(Pin.from_json_value(p) for p in raw["pins"]),
            contracts=tuple(CouplingContract.from_json_value(c) for c in raw["contracts"]),
            lock_digest=Digest.parse(raw["lock_digest"]),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptLockfile(f"malformed lockfile: {exc}") from exc
    recomputed = _lock_digest(lock.body_json_value())
    if recomputed != lock.lock_digest:
        raise CorruptLockfile(
            f"lock digest mismatch: stored {lock.lock_digest}, computed {recomputed}"
        )
    for contract in lock.contracts:
        subject_pin = lock.pin(contract.subject)
        object_pin = lock.pin(contract.object)
        subject_kinds, object_kinds = _CONTRACT_KIND_RULES[contract.kind]
        if subject_pin is not None and subject_pin.kind.canonical_name not in subject_kinds:
            raise CorruptLockfile(
                f"contract {contract.name}: subject kind "
                f"{subject_pin.kind.canonical_name} not allowed"
            )
        if object_pin is not None and object_pin.kind.canonical_name not in object_kinds:
            raise CorruptLockfile(
                f"contract {contract.name}: object kind "
                f"{object_pin.kind.canonical_name} not allowed"
            )
    return lock


def load_lockfile(path: str | Path) -> Lockfile:
    return parse_lockfile(Path(path).read_bytes())
