import itertools
import random

import pytest

from chainlock import canonical
from chainlock.attestation import (
    AncestryExclusion,
    Attestation,
    attestation_from_bytes,
    DeterministicStep,
    KeyRegistry,
    PipelineSpec,
    PipelineStep,
    ProcessExecution,
    SigningKey,
    StatisticalBound,
    STATUS_ATTESTED_PROCESS,
    STATUS_FAILED,
    STATUS_HASH_VERIFIED,
    STATUS_UNVERIFIABLE,
    check_ancestry_exclusion,
    check_statistical_consistency,
    claim_from_json_value,
    sign,
    verify,
    verify_pipeline,
)
from chainlock.errors import EmptySamples, UnknownSigner
from chainlock.model import TransformationKind

from conftest import artifact_id, digest_of


def process_claim(step: str = "train") -> ProcessExecution:
    return ProcessExecution(
        step_name=step,
        transformation=TransformationKind("model_training"),
        parameters_digest=digest_of("hyperparams"),
        environment_digest=digest_of("cuda-image"),
    )


def test_sign_verify_round_trip(keys):
    att = sign(process_claim(), digest_of("ckpt"), keys.resolve("release-bot"))
    assert verify(att, keys) is True


def test_verify_unknown_signer(keys):
    att = sign(process_claim(), digest_of("ckpt"), SigningKey("rogue", b"rogue"))
    with pytest.raises(UnknownSigner):
        verify(att, keys)


def test_single_byte_claim_tamper_detected(keys):
    key = keys.resolve("release-bot")
    att = sign(process_claim(), digest_of("ckpt"), key)
    tampered = Attestation(
        subject=att.subject,
        claim=process_claim("trair"),
        signer=att.signer,
        signature=att.signature,
    )
    assert verify(tampered, keys) is False


def test_signature_tamper_detected(keys):
    key = keys.resolve("release-bot")
    att = sign(process_claim(), digest_of("ckpt"), key)
    bad_sig = bytearray(att.signature)
    bad_sig[0] ^= 0x01
    tampered = Attestation(att.subject, att.claim, att.signer, bytes(bad_sig))
    assert verify(tampered, keys) is False


def test_claim_json_round_trip():
    claims = [
        DeterministicStep("preprocess", (digest_of("in1"), digest_of("in2")), digest_of("out")),
        process_claim(),
        StatisticalBound("accuracy", 0.8, 0.01, 3.0),
        AncestryExclusion(frozenset({digest_of("laion")})),
    ]
    for claim in claims:
        assert claim_from_json_value(claim.to_json_value()) == claim


def test_statistical_bound_defaults_and_validation():
    bound = claim_from_json_value(
        {"type": "statistical_bound", "metric_name": "m", "mean": 1.0, "std": 0.1}
    )
    assert bound.tolerance_sigmas == 3.0
    with pytest.raises(ValueError):
        StatisticalBound("m", 0.0, -0.1)
    with pytest.raises(ValueError):
        StatisticalBound("m", 0.0, 0.1, tolerance_sigmas=0.0)


# -- pipeline verification ------------------------------------------------------


def three_step_spec() -> PipelineSpec:
    return PipelineSpec(
        steps=(
            PipelineStep(
                "preprocess",
                TransformationKind("data_preprocessing"),
                deterministic=True,
                declared_output=digest_of("clean-data"),
            ),
            PipelineStep(
                "train", TransformationKind("model_training"), deterministic=False
            ),
            PipelineStep(
                "quantize",
                TransformationKind("quantization"),
                deterministic=True,
                declared_output=digest_of("int8-ckpt"),
            ),
        )
    )


def test_pipeline_spec_requires_declared_outputs():
    with pytest.raises(ValueError):
        PipelineStep("s", TransformationKind("serialization"), deterministic=True)


def test_pipeline_verdict_enumeration(keys):
    """All combinations of digest match/mismatch x attestation present/absent."""
    spec = three_step_spec()
    key = keys.resolve("release-bot")
    train_att = sign(process_claim("train"), digest_of("ckpt"), key)
    for pre_ok, quant_ok, attested in itertools.product([True, False], repeat=3):
        recomputed = {
            "preprocess": digest_of("clean-data") if pre_ok else digest_of("dirty"),
            "quantize": digest_of("int8-ckpt") if quant_ok else digest_of("fp16"),
        }
        attestations = [train_att] if attested else []
        verdict = verify_pipeline(spec, recomputed, attestations, keys)
        by_name = {s.name: s.status for s in verdict.steps}
        assert by_name["preprocess"] == (STATUS_HASH_VERIFIED if pre_ok else STATUS_FAILED)
        assert by_name["quantize"] == (STATUS_HASH_VERIFIED if quant_ok else STATUS_FAILED)
        assert by_name["train"] == (STATUS_ATTESTED_PROCESS if attested else STATUS_FAILED)
        assert verdict.overall is (pre_ok and quant_ok and attested)


def test_stochastic_step_never_hash_checked(keys):
    # A recomputed digest for the stochastic step is ignored entirely; the
    # valid process attestation carries it.
    spec = three_step_spec()
    key = keys.resolve("release-bot")
    recomputed = {
        "preprocess": digest_of("clean-data"),
        "train": digest_of("something-else-entirely"),
        "quantize": digest_of("int8-ckpt"),
    }
    verdict = verify_pipeline(
        spec, recomputed, [sign(process_claim("train"), digest_of("ckpt"), key)], keys
    )
    assert verdict.overall is True


def test_missing_recomputation_is_unverifiable(keys):
    spec = three_step_spec()
    key = keys.resolve("release-bot")
    recomputed = {"preprocess": digest_of("clean-data")}
    verdict = verify_pipeline(
        spec, recomputed, [sign(process_claim("train"), digest_of("ckpt"), key)], keys
    )
    by_name = {s.name: s.status for s in verdict.steps}
    assert by_name["quantize"] == STATUS_UNVERIFIABLE
    assert verdict.overall is False


def test_attestation_with_unregistered_signer_does_not_count(keys):
    spec = three_step_spec()
    rogue = SigningKey("rogue", b"rogue")
    recomputed = {
        "preprocess": digest_of("clean-data"),
        "quantize": digest_of("int8-ckpt"),
    }
    verdict = verify_pipeline(
        spec, recomputed, [sign(process_claim("train"), digest_of("ckpt"), rogue)], keys
    )
    assert verdict.overall is False


def test_envelope_mutation_rejected_in_bulk(keys):
    """Random single-byte mutations of the canonical envelope never verify."""
    rng = random.Random(1337)
    key = keys.resolve("release-bot")
    rejected = 0
    trials = 300
    for i in range(trials):
        att = sign(process_claim(f"step-{i}"), digest_of(f"subject-{i}"), key)
        raw = bytearray(canonical.canonical_bytes(att.to_json_value()))
        pos = rng.randrange(len(raw))
        old = raw[pos]
        new = rng.randrange(256)
        while new == old:
            new = rng.randrange(256)
        raw[pos] = new
        try:
            mutated = attestation_from_bytes(bytes(raw))
        except Exception:
            rejected += 1  # mutation broke the canonical envelope itself
            continue
        try:
            if not verify(mutated, keys):
                rejected += 1
        except UnknownSigner:
            rejected += 1
    assert rejected == trials


# -- statistical consistency ------------------------------------------------------


def test_statcheck_examples():
    bound = StatisticalBound("accuracy", 0.80, 0.01, 3.0)
    assert check_statistical_consistency(bound, [0.79]).overall is True
    assert check_statistical_consistency(bound, [0.70]).overall is False
    degenerate = StatisticalBound("accuracy", 0.80, 0.0, 3.0)
    assert check_statistical_consistency(degenerate, [0.80]).overall is True
    assert check_statistical_consistency(degenerate, [0.8000001]).overall is False


def test_statcheck_empty_samples():
    with pytest.raises(EmptySamples):
        check_statistical_consistency(StatisticalBound("m", 0.0, 1.0), [])


def test_statcheck_scale_covariance():
    rng = random.Random(99)
    for _ in range(200):
        mean = rng.uniform(-10, 10)
        std = rng.uniform(0, 2)
        tol = rng.uniform(0.5, 4)
        samples = [rng.uniform(-15, 15) for _ in range(5)]
        factor = rng.uniform(0.1, 50)
        base = check_statistical_consistency(
            StatisticalBound("m", mean, std, tol), samples
        )
        scaled = check_statistical_consistency(
            StatisticalBound("m", mean * factor, std * factor, tol),
            [x * factor for x in samples],
        )
        assert [c.passed for c in base.samples] == [c.passed for c in scaled.samples]


# -- ancestry exclusion --------------------------------------------------------------


def test_ancestry_exclusion_against_fixture(four_node_store):
    claim = AncestryExclusion(frozenset({artifact_id("D").digest}))
    assert check_ancestry_exclusion(claim, four_node_store, artifact_id("Q")) is False
    absent = AncestryExclusion(frozenset({digest_of("never-registered")}))
    assert check_ancestry_exclusion(absent, four_node_store, artifact_id("Q")) is True
    empty = AncestryExclusion(frozenset())
    assert check_ancestry_exclusion(empty, four_node_store, artifact_id("Q")) is True
