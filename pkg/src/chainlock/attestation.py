"""Signed claims about artifacts, and compositional pipeline verification.

Deterministic pipeline segments are checked by hash equality; the irreducibly
stochastic steps carry process-execution attestations instead, because a hash
mismatch on a re-run of a stochastic step proves nothing. Statistical-bound
claims let re-executions be checked for distributional rather than bit-level
consistency.

The signature scheme is pluggable behind a two-operation interface (sign
bytes, verify bytes). The reference scheme is a deterministic keyed hash
(HMAC-SHA-256) so the whole suite runs without key infrastructure.
"""

from __future__ import annotations

import hmac
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Protocol, Sequence

from chainlock import canonical
from chainlock.errors import EmptySamples, UnknownSigner
from chainlock.model import Digest, TransformationKind
from chainlock.lineage import LineageStore
from chainlock.model import ArtifactId

canonical_serialize = canonical.canonical_bytes


class ByteSigner(Protocol):
    """Anything that can sign bytes and verify a signature over bytes."""

    key_id: str

    def sign(self, data: bytes) -> bytes: ...

    def verify(self, data: bytes, signature: bytes) -> bool: ...


@dataclass(frozen=True)
class SigningKey:
    """Reference signer: deterministic HMAC-SHA-256 under a shared secret."""

    key_id: str
    secret: bytes

    def sign(self, data: bytes) -> bytes:
        return hmac.new(self.secret, data, hashlib.sha256).digest()

    def verify(self, data: bytes, signature: bytes) -> bool:
        return hmac.compare_digest(self.sign(data), signature)


class KeyRegistry:
    """Resolves signer ids to verification keys."""

    def __init__(self, keys: Iterable[ByteSigner] = ()):
        self._keys: dict[str, ByteSigner] = {k.key_id: k for k in keys}

    def add(self, key: ByteSigner) -> None:
        self._keys[key.key_id] = key

    def resolve(self, key_id: str) -> ByteSigner:
        key = self._keys.get(key_id)
        if key is None:
            raise UnknownSigner(f"no key registered for signer {key_id!r}")
        return key

    def __contains__(self, key_id: str) -> bool:
        return key_id in self._keys

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "KeyRegistry":
        reg = cls()
        for key_id, secret_hex in value.get("keys", {}).items():
            reg.add(SigningKey(key_id, bytes.fromhex(secret_hex)))
        return reg

    @classmethod
    def load(cls, path: str | Path) -> "KeyRegistry":
        return cls.from_json_value(canonical.parse(Path(path).read_bytes()))


# -- claims ---------------------------------------------------------------

CLAIM_DETERMINISTIC_STEP = "deterministic_step"
CLAIM_PROCESS_EXECUTION = "process_execution"
CLAIM_STATISTICAL_BOUND = "statistical_bound"
CLAIM_ANCESTRY_EXCLUSION = "ancestry_exclusion"


@dataclass(frozen=True)
class DeterministicStep:
    step_name: str
    input_digests: tuple[Digest, ...]
    output_digest: Digest

    def to_json_value(self) -> dict[str, Any]:
        return {
            "type": CLAIM_DETERMINISTIC_STEP,
            "step_name": self.step_name,
            "input_digests": [str(d) for d in self.input_digests],
            "output_digest": str(self.output_digest),
        }


@dataclass(frozen=True)
class ProcessExecution:
    step_name: str
    transformation: TransformationKind
    parameters_digest: Digest
    environment_digest: Digest

    def to_json_value(self) -> dict[str, Any]:
        return {
            "type": CLAIM_PROCESS_EXECUTION,
            "step_name": self.step_name,
            "transformation": self.transformation.canonical_name,
            "parameters_digest": str(self.parameters_digest),
            "environment_digest": str(self.environment_digest),
        }


@dataclass(frozen=True)
class StatisticalBound:
    metric_name: str
    mean: float
    std: float
    tolerance_sigmas: float = 3.0  # conventional three-sigma default

    def __post_init__(self) -> None:
        if self.std < 0:
            raise ValueError("std must be >= 0")
        if self.tolerance_sigmas <= 0:
            raise ValueError("tolerance_sigmas must be > 0")

    def to_json_value(self) -> dict[str, Any]:
        return {
            "type": CLAIM_STATISTICAL_BOUND,
            "metric_name": self.metric_name,
            "mean": self.mean,
            "std": self.std,
            "tolerance_sigmas": self.tolerance_sigmas,
        }


@dataclass(frozen=True)
class AncestryExclusion:
    """Claims that none of the listed digests is an ancestor of the subject."""

    excluded: frozenset[Digest]

    def to_json_value(self) -> dict[str, Any]:
        return {
            "type": CLAIM_ANCESTRY_EXCLUSION,
            "excluded": sorted(str(d) for d in self.excluded),
        }


Claim = DeterministicStep | ProcessExecution | StatisticalBound | AncestryExclusion


def claim_from_json_value(value: Mapping[str, Any]) -> Claim:
    ctype = value.get("type")
    if ctype == CLAIM_DETERMINISTIC_STEP:
        return DeterministicStep(
            step_name=value["step_name"],
            input_digests=tuple(Digest.parse(d) for d in value["input_digests"]),
            output_digest=Digest.parse(value["output_digest"]),
        )
    if ctype == CLAIM_PROCESS_EXECUTION:
        return ProcessExecution(
            step_name=value["step_name"],
            transformation=TransformationKind(value["transformation"]),
            parameters_digest=Digest.parse(value["parameters_digest"]),
            environment_digest=Digest.parse(value["environment_digest"]),
        )
    if ctype == CLAIM_STATISTICAL_BOUND:
        return StatisticalBound(
            metric_name=value["metric_name"],
            mean=value["mean"],
            std=value["std"],
            tolerance_sigmas=value.get("tolerance_sigmas", 3.0),
        )
    if ctype == CLAIM_ANCESTRY_EXCLUSION:
        return AncestryExclusion(
            excluded=frozenset(Digest.parse(d) for d in value["excluded"])
        )
    raise ValueError(f"unknown claim type: {ctype!r}")


@dataclass(frozen=True)
class Attestation:
    subject: Digest
    claim: Claim
    signer: str
    signature: bytes

    def payload_bytes(self) -> bytes:
        return attestation_payload(self.subject, self.claim, self.signer)

    def to_json_value(self) -> dict[str, Any]:
        return {
            "subject": str(self.subject),
            "claim": self.claim.to_json_value(),
            "signer": self.signer,
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "Attestation":
        return cls(
            subject=Digest.parse(value["subject"]),
            claim=claim_from_json_value(value["claim"]),
            signer=value["signer"],
            signature=bytes.fromhex(value["signature"]),
        )


def attestation_payload(subject: Digest, claim: Claim, signer: str) -> bytes:
    return canonical.canonical_bytes(
        {"subject": str(subject), "claim": claim.to_json_value(), "signer": signer}
    )


def attestation_from_bytes(data: bytes) -> Attestation:
    """Parse a serialized envelope, insisting on canonical bytes.

    Signed envelopes have exactly one valid byte form; anything else (case
    changes, whitespace, re-ordered keys) is treated as tampering even when
    it would parse to an equivalent value.
    """
    stripped = data.strip(b"\n")
    att = Attestation.from_json_value(canonical.parse(stripped))
    if canonical.canonical_bytes(att.to_json_value()) != stripped:
        raise ValueError("attestation envelope is not in canonical form")
    return att


def load_attestations(path: str | Path) -> list[Attestation]:
    """Read a single-envelope file or a JSONL bundle."""
    return [
        attestation_from_bytes(line)
        for line in Path(path).read_bytes().split(b"\n")
        if line
    ]


def sign(claim: Claim, subject: Digest, key: ByteSigner) -> Attestation:
    """Produce a signed attestation binding the claim to the subject."""
    payload = attestation_payload(subject, claim, key.key_id)
    return Attestation(
        subject=subject, claim=claim, signer=key.key_id, signature=key.sign(payload)
    )


def verify(att: Attestation, registry: KeyRegistry) -> bool:
    """True iff the signature verifies under the signer's registered key.

    Raises UnknownSigner when the signer id is not in the registry.
    """
    key = registry.resolve(att.signer)
    return key.verify(att.payload_bytes(), att.signature)


# -- pipelines --------------------------------------------------------------


@dataclass(frozen=True)
class PipelineStep:
    name: str
    transformation: TransformationKind
    deterministic: bool
    declared_output: Digest | None = None

    def __post_init__(self) -> None:
        if self.deterministic and self.declared_output is None:
            raise ValueError(f"deterministic step {self.name!r} must declare its output")

    def to_json_value(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "transformation": self.transformation.canonical_name,
            "deterministic": self.deterministic,
            "declared_output": (
                str(self.declared_output) if self.declared_output is not None else None
            ),
        }


@dataclass(frozen=True)
class PipelineSpec:
    steps: tuple[PipelineStep, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        names = [s.name for s in self.steps]
        if len(set(names)) != len(names):
            raise ValueError("pipeline step names must be unique")

    def to_json_value(self) -> dict[str, Any]:
        return {"steps": [s.to_json_value() for s in self.steps]}

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "PipelineSpec":
        steps = []
        for raw in value["steps"]:
            declared = raw.get("declared_output")
            steps.append(
                PipelineStep(
                    name=raw["name"],
                    transformation=TransformationKind(raw["transformation"]),
                    deterministic=raw["deterministic"],
                    declared_output=Digest.parse(declared) if declared else None,
                )
            )
        return cls(steps=tuple(steps))


STATUS_HASH_VERIFIED = "hash_verified"
STATUS_ATTESTED_PROCESS = "attested_process"
STATUS_STAT_BOUND_SATISFIED = "stat_bound_satisfied"
STATUS_FAILED = "failed"
STATUS_UNVERIFIABLE = "unverifiable"


@dataclass(frozen=True)
class StepResult:
    name: str
    status: str
    reason: str | None = None

    def to_json_value(self) -> dict[str, Any]:
        return {"name": self.name, "status": self.status, "reason": self.reason}


@dataclass(frozen=True)
class PipelineVerdict:
    steps: tuple[StepResult, ...]
    overall: bool

    def to_json_value(self) -> dict[str, Any]:
        return {"overall": self.overall, "steps": [s.to_json_value() for s in self.steps]}


def verify_pipeline(
    spec: PipelineSpec,
    recomputed: Mapping[str, Digest],
    attestations: Sequence[Attestation],
    registry: KeyRegistry,
) -> PipelineVerdict:
    """Compositional verification of a mixed deterministic/stochastic pipeline.

    Deterministic steps: hash-verified when the recomputed digest equals the
    declared output, failed when present but unequal, unverifiable when no
    recomputation is supplied. Stochastic steps: attested when a valid
    process-execution attestation for the step exists; no hash comparison is
    attempted.
    """
    results: list[StepResult] = []
    for step in spec.steps:
        if step.deterministic:
            got = recomputed.get(step.name)
            if got is None:
                results.append(
                    StepResult(step.name, STATUS_UNVERIFIABLE, "no recomputed digest")
                )
            elif got == step.declared_output:
                results.append(StepResult(step.name, STATUS_HASH_VERIFIED))
            else:
                results.append(
                    StepResult(
                        step.name,
                        STATUS_FAILED,
                        f"digest mismatch: declared {step.declared_output}, recomputed {got}",
                    )
                )
        else:
            attested = False
            for att in attestations:
                claim = att.claim
                if not isinstance(claim, ProcessExecution):
                    continue
                if claim.step_name != step.name:
                    continue
                if claim.transformation != step.transformation:
                    continue
                try:
                    if verify(att, registry):
                        attested = True
                        break
                except UnknownSigner:
                    continue
            if attested:
                results.append(StepResult(step.name, STATUS_ATTESTED_PROCESS))
            else:
                results.append(StepResult(step.name, STATUS_FAILED, "no attestation"))

    overall = all(
        r.status not in (STATUS_FAILED,)
        and not (r.status == STATUS_UNVERIFIABLE and det)
        for r, det in zip(results, (s.deterministic for s in spec.steps))
    )
    return PipelineVerdict(steps=tuple(results), overall=overall)


# -- statistical consistency --------------------------------------------------


@dataclass(frozen=True)
class SampleCheck:
    value: float
    passed: bool

    def to_json_value(self) -> dict[str, Any]:
        return {"value": self.value, "passed": self.passed}


@dataclass(frozen=True)
class StatCheckResult:
    samples: tuple[SampleCheck, ...]
    overall: bool

    def to_json_value(self) -> dict[str, Any]:
        return {
            "overall": self.overall,
            "samples": [s.to_json_value() for s in self.samples],
        }


def check_statistical_consistency(
    bound: StatisticalBound, samples: Sequence[float]
) -> StatCheckResult:
    """A sample passes iff |x - mean| <= tolerance_sigmas * std.

    With std = 0 the envelope degenerates to exact equality.
    """
    if not samples:
        raise EmptySamples("statistical consistency check requires samples")
    limit = bound.tolerance_sigmas * bound.std
    checks = tuple(
        SampleCheck(value=x, passed=abs(x - bound.mean) <= limit) for x in samples
    )
    return StatCheckResult(samples=checks, overall=all(c.passed for c in checks))


def check_ancestry_exclusion(
    claim: AncestryExclusion, store: LineageStore, subject: ArtifactId | Digest | str
) -> bool:
    """True iff no excluded digest appears among the subject's ancestors.

    A local holder of the lineage can check the claim directly; a remote
    verifier can only trust the signature.
    """
    ancestors = store.ancestors(subject)
    excluded_keys = {str(d) for d in claim.excluded}
    return not (ancestors & excluded_keys)
