"""Shared fixture builders for the chainlock test suite."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from chainlock.attestation import KeyRegistry, SigningKey
from chainlock.drift import (
    REQUIRED_TAGS,
    ChangeEvent,
    ChangeLog,
    Decoding,
    ResponseMetrics,
    ResponseRecord,
    ResponseStream,
)
from chainlock.lineage import ArtifactRecord, DerivationRecord, LineageStore
from chainlock.lockfile import ObservedAssembly, ObservedComponent
from chainlock.model import (
    ArtifactId,
    ArtifactKind,
    Digest,
    PinMode,
    TransformationKind,
    compute_digest,
)

FIXTURES = Path(__file__).parent / "fixtures"

TS = datetime(2026, 1, 1, tzinfo=timezone.utc)


def ts(offset_seconds: float = 0.0) -> datetime:
    return TS + timedelta(seconds=offset_seconds)


def digest_of(label: str) -> Digest:
    return compute_digest(label.encode())


def artifact_id(name: str) -> ArtifactId:
    return ArtifactId(name=name, digest=digest_of(name))


def artifact_record(name: str, kind: str, **annotations: str) -> ArtifactRecord:
    return ArtifactRecord(
        id=artifact_id(name),
        kind=ArtifactKind(kind),
        created_at=TS,
        annotations=annotations,
    )


def derivation(
    output: str, inputs: list[str], transformation: str, **kwargs
) -> DerivationRecord:
    return DerivationRecord(
        output=artifact_id(output),
        inputs=tuple(artifact_id(name) for name in inputs),
        transformation=TransformationKind(transformation),
        parameters_digest=digest_of("params"),
        environment_digest=digest_of("env"),
        actor="ci",
        recorded_at=TS,
        **kwargs,
    )


@pytest.fixture
def four_node_store() -> LineageStore:
    """D -> C1, {C1, C2} -> M, M -> Q."""
    store = LineageStore()
    store.record_artifact(artifact_record("D", "dataset"))
    store.record_artifact(artifact_record("C1", "base_checkpoint"))
    store.record_artifact(artifact_record("C2", "base_checkpoint"))
    store.record_artifact(artifact_record("M", "merged_checkpoint"))
    store.record_artifact(artifact_record("Q", "merged_checkpoint"))
    store.record_derivation(derivation("C1", ["D"], "model_training"))
    store.record_derivation(derivation("M", ["C1", "C2"], "checkpoint_merging"))
    store.record_derivation(derivation("Q", ["M"], "quantization"))
    return store


LAION_NODES = {
    "laion": "dataset",
    "clean": "dataset",
    "base": "base_checkpoint",
    "teacher": "base_checkpoint",
    "student": "student_checkpoint",
    "merged": "merged_checkpoint",
    "quantized": "merged_checkpoint",
    "index": "vector_index",
    "image": "container_image",
    "prompt": "prompt_template",
    "guardrail": "guardrail_config",
    "evalrec": "evaluation_record",
}

# Everything downstream of the tainted dataset, by hand:
# laion -> base -> merged -> quantized -> evalrec
# laion -> teacher -> student -> merged
LAION_EXPECTED_DESCENDANTS = {
    "base",
    "teacher",
    "student",
    "merged",
    "quantized",
    "evalrec",
}


@pytest.fixture
def laion_store() -> LineageStore:
    """12-node dataset -> {pretrain, distill-teacher} -> merge -> quantize."""
    store = LineageStore()
    for name, kind in LAION_NODES.items():
        store.record_artifact(artifact_record(name, kind))
    store.record_derivation(derivation("base", ["laion"], "model_training"))
    store.record_derivation(derivation("teacher", ["laion"], "model_training"))
    store.record_derivation(derivation("student", ["teacher", "clean"], "distillation"))
    store.record_derivation(derivation("merged", ["base", "student"], "checkpoint_merging"))
    store.record_derivation(derivation("quantized", ["merged"], "quantization"))
    store.record_derivation(derivation("index", ["clean"], "vector_index_construction"))
    store.record_derivation(derivation("evalrec", ["quantized"], "evaluation"))
    return store


@pytest.fixture
def keys() -> KeyRegistry:
    registry = KeyRegistry()
    registry.add(SigningKey("release-bot", b"release-secret"))
    registry.add(SigningKey("provider-x", b"provider-secret"))
    return registry


def six_pin_assembly() -> ObservedAssembly:
    """base + adapter + tokenizer + embedder + index + prompt, coherent."""
    base = artifact_id("base-ckpt")
    adapter = artifact_id("task-adapter")
    tokenizer = artifact_id("bpe-tokenizer")
    embedder = artifact_id("embed-ckpt")
    index = artifact_id("docs-index")
    prompt = artifact_id("system-prompt")
    schema = digest_of("output-schema-v1")
    return ObservedAssembly(
        components={
            "base_model": ObservedComponent(
                artifact=base,
                kind=ArtifactKind("base_checkpoint"),
                emits_output_schema=schema,
                tokenizer=tokenizer.digest,
            ),
            "adapter": ObservedComponent(
                artifact=adapter,
                kind=ArtifactKind("adapter"),
                trained_against=base.digest,
            ),
            "tokenizer": ObservedComponent(
                artifact=tokenizer, kind=ArtifactKind("tokenizer")
            ),
            "embedder": ObservedComponent(
                artifact=embedder, kind=ArtifactKind("student_checkpoint")
            ),
            "doc_index": ObservedComponent(
                artifact=index,
                kind=ArtifactKind("vector_index"),
                embedder=embedder.digest,
            ),
            "prompt": ObservedComponent(
                artifact=prompt,
                kind=ArtifactKind("prompt_template"),
                expects_output_schema=schema,
            ),
        }
    )


DEFAULT_TAGS = {role: artifact_id(f"tag-{role}") for role in REQUIRED_TAGS}


def response_record(
    seq: int,
    refusal: bool = False,
    token_length: int = 100,
    retrieval_hits: int = 1,
    feature: tuple[float, ...] | None = None,
    tags: dict | None = None,
) -> ResponseRecord:
    return ResponseRecord(
        seq=seq,
        at=ts(float(seq)),
        tags=tags or DEFAULT_TAGS,
        decoding=Decoding(temperature=0.7, top_k=40),
        metrics=ResponseMetrics(
            refusal=refusal,
            token_length=token_length,
            retrieval_hits=retrieval_hits,
            feature=feature,
        ),
    )


def refusal_shift_stream(
    seed: int,
    rate_before: float = 0.05,
    rate_after: float = 0.20,
    shift_at: int = 500,
    total: int = 1000,
) -> ResponseStream:
    rng = random.Random(seed)
    stream = ResponseStream()
    for i in range(total):
        rate = rate_before if i < shift_at else rate_after
        stream.ingest(response_record(i, refusal=rng.random() < rate))
    return stream


def constant_stream(total: int = 1000) -> ResponseStream:
    stream = ResponseStream()
    for i in range(total):
        stream.ingest(response_record(i))
    return stream


def change_event(at_seconds: float, role: str, suffix: str = "") -> ChangeEvent:
    return ChangeEvent(
        at=ts(at_seconds),
        role=role,
        from_id=artifact_id(f"{role}-old{suffix}"),
        to_id=artifact_id(f"{role}-new{suffix}"),
    )


def rag_scenario_log() -> ChangeLog:
    """The three-upstream-changes window: index re-embed, guardrail
    tightened, prompt edited."""
    log = ChangeLog()
    log.ingest_change(change_event(100.0, "prompt_template"))
    log.ingest_change(change_event(200.0, "guardrail_config"))
    log.ingest_change(change_event(300.0, "index_snapshot"))
    return log
