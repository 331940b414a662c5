import io
import json
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import pytest

from chainlock import canonical
from chainlock.cli import run
from chainlock.lockfile import ObservedAssembly, serialize_lockfile, create_lock

from conftest import FIXTURES, TS, digest_of, rag_scenario_log, refusal_shift_stream, six_pin_assembly


def run_cli(*argv: str):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = run(list(argv))
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def store_path(tmp_path):
    return str(tmp_path / "lineage.jsonl")


def seed_store(store_path: str):
    """Four artifacts and a chain D -> C1 -> Q via the CLI itself."""
    zeros = "0" * 64
    for name, kind in [("D", "dataset"), ("C1", "base_checkpoint"), ("Q", "merged_checkpoint")]:
        code, _, err = run_cli(
            "lineage", "add-artifact", "--store", store_path,
            "--name", name, "--kind", kind,
            "--digest", digest_of(name).hex,
            "--created-at", "2026-01-01T00:00:00Z",
        )
        assert code == 0, err
    for output, inputs, transformation in [
        ("C1", ["D"], "model_training"),
        ("Q", ["C1"], "quantization"),
    ]:
        argv = [
            "lineage", "add-derivation", "--store", store_path,
            "--output", digest_of(output).hex,
            "--transformation", transformation,
            "--parameters-digest", zeros, "--environment-digest", zeros,
            "--actor", "ci", "--recorded-at", "2026-01-01T00:00:00Z",
        ]
        for inp in inputs:
            argv += ["--input", digest_of(inp).hex]
        code, _, err = run_cli(*argv)
        assert code == 0, err


def test_store_env_var_default(store_path, monkeypatch):
    seed_store(store_path)
    monkeypatch.setenv("CHAINLOCK_STORE", store_path)
    code, out, _ = run_cli("lineage", "ancestors", str(digest_of("Q")))
    assert code == 0
    assert len(json.loads(out)["ancestors"]) == 2


def test_unknown_subcommand_exits_2():
    code, _, _ = run_cli("frobnicate")
    assert code == 2
    code, _, _ = run_cli("lineage", "frobnicate")
    assert code == 2


def test_usage_error_missing_required():
    code, _, _ = run_cli("lineage", "impact")
    assert code == 2


def test_lineage_cli_round_trip(store_path):
    seed_store(store_path)
    code, out, _ = run_cli("lineage", "ancestors", str(digest_of("Q")), "--store", store_path)
    assert code == 0
    payload = json.loads(out)
    assert len(payload["ancestors"]) == 2

    code, out, _ = run_cli("lineage", "descendants", str(digest_of("D")), "--store", store_path)
    assert code == 0
    assert len(json.loads(out)["descendants"]) == 2


def test_lineage_impact_exit_codes(store_path):
    seed_store(store_path)
    code, out, _ = run_cli(
        "lineage", "impact", "--taint", digest_of("D").hex, "--store", store_path
    )
    assert code == 1  # findings present
    report = json.loads(out)
    assert report["total_affected"] == 2

    code, out, _ = run_cli(
        "lineage", "impact", "--taint", digest_of("Q").hex, "--store", store_path
    )
    assert code == 0
    assert json.loads(out)["total_affected"] == 0


def test_lineage_impact_dot_tainted_attribute(store_path):
    seed_store(store_path)
    code, out, _ = run_cli(
        "lineage", "impact", "--taint", digest_of("D").hex,
        "--store", store_path, "--format", "dot",
    )
    assert code == 1
    assert out.startswith("digraph impact {")
    assert out.count('tainted="true"') == 2
    assert out.count('taint_source="true"') == 1


def test_lineage_verify_log_cli(store_path, tmp_path):
    seed_store(store_path)
    code, out, _ = run_cli("lineage", "verify-log", "--store", store_path)
    assert code == 0
    assert json.loads(out)["valid"] is True

    raw = bytearray(Path(store_path).read_bytes())
    raw[len(raw) // 3] ^= 0x01
    corrupt = tmp_path / "corrupt.jsonl"
    corrupt.write_bytes(bytes(raw))
    code, out, _ = run_cli("lineage", "verify-log", "--store", str(corrupt))
    assert code == 1
    assert json.loads(out)["valid"] is False


def test_lineage_export_dot(store_path):
    seed_store(store_path)
    code, out, _ = run_cli("lineage", "export-dot", "--store", store_path)
    assert code == 0
    assert out.startswith("digraph lineage {")


def test_add_policy_and_policy_in_ancestors(store_path):
    seed_store(store_path)
    code, out, _ = run_cli(
        "lineage", "add-policy", "--store", store_path,
        "--description", "release gate", "--decision", "promote",
        "--threshold", "accuracy=0.9", "--recorded-at", "2026-01-01T00:00:00Z",
    )
    assert code == 0
    policy_key = json.loads(out)["node"]

    zeros = "0" * 64
    run_cli(
        "lineage", "add-artifact", "--store", store_path,
        "--name", "R", "--kind", "evaluation_record",
        "--digest", digest_of("R").hex, "--created-at", "2026-01-01T00:00:00Z",
    )
    code, _, err = run_cli(
        "lineage", "add-derivation", "--store", store_path,
        "--output", digest_of("R").hex, "--input", digest_of("Q").hex,
        "--transformation", "evaluation",
        "--policy", policy_key,
        "--parameters-digest", zeros, "--environment-digest", zeros,
        "--actor", "gatekeeper", "--recorded-at", "2026-01-01T00:00:00Z",
    )
    assert code == 0, err
    code, out, _ = run_cli("lineage", "ancestors", digest_of("R").hex, "--store", store_path)
    assert policy_key in json.loads(out)["ancestors"]


# -- lock ------------------------------------------------------------------------


@pytest.fixture
def lock_files(tmp_path):
    assembly = six_pin_assembly()
    observed = tmp_path / "observed.json"
    observed.write_bytes(canonical.canonical_bytes(assembly.to_json_value()))
    lock = create_lock(assembly, system_name="rag-prod", created_at=TS)
    lock_path = tmp_path / "system.ailock.json"
    lock_path.write_bytes(serialize_lockfile(lock))
    return str(lock_path), str(observed)


def test_lock_verify_clean(lock_files):
    lock_path, observed = lock_files
    code, out, _ = run_cli("lock", "verify", lock_path, "--observed", observed)
    assert code == 0
    assert json.loads(out) == {"violations": []}


def test_lock_verify_violation_exit_1(tmp_path, lock_files):
    import dataclasses

    lock_path, _ = lock_files
    assembly = six_pin_assembly()
    components = dict(assembly.components)
    components["base_model"] = dataclasses.replace(
        components["base_model"], artifact=__import__("conftest").artifact_id("base-v2")
    )
    drifted = tmp_path / "drifted.json"
    drifted.write_bytes(
        canonical.canonical_bytes(ObservedAssembly(components=components).to_json_value())
    )
    code, out, _ = run_cli("lock", "verify", lock_path, "--observed", str(drifted))
    assert code == 1
    violations = json.loads(out)["violations"]
    assert any(v["kind"] == "pin_mismatch" for v in violations)

    code, out, _ = run_cli(
        "lock", "verify", lock_path, "--observed", str(drifted), "--format", "table"
    )
    assert code == 1
    assert out.splitlines()[0].startswith("ERROR pin_mismatch base_model:")


def test_lock_create_cli(tmp_path, lock_files):
    _, observed = lock_files
    out_path = tmp_path / "created.ailock.json"
    code, out, _ = run_cli(
        "lock", "create", "--assembly", observed,
        "--system-name", "rag-prod", "--created-at", "2026-01-01T00:00:00Z",
        "--out", str(out_path),
    )
    assert code == 0
    assert out_path.exists()
    code, _, _ = run_cli("lock", "verify", str(out_path), "--observed", observed)
    assert code == 0


def test_lock_diff_cli(tmp_path, lock_files):
    lock_path, _ = lock_files
    code, out, _ = run_cli("lock", "diff", lock_path, lock_path)
    assert code == 0
    diff = json.loads(out)
    assert diff["added_pins"] == [] and diff["changed_pins"] == {}


def test_lock_receipt_cli(tmp_path):
    keys = tmp_path / "keys.json"
    keys.write_text(json.dumps({"keys": {"provider-x": b"provider-secret".hex()}}))
    code, out, _ = run_cli(
        "lock", "receipt", "--provider", "provider-x",
        "--digest", digest_of("served").hex,
        "--observed-at", "2026-01-01T00:00:00Z", "--keys", str(keys),
    )
    assert code == 0
    receipt = json.loads(out)
    assert receipt["provider"] == "provider-x"
    assert len(receipt["signature"]) == 64


# -- attest -----------------------------------------------------------------------


@pytest.fixture
def keys_file(tmp_path):
    path = tmp_path / "keys.json"
    path.write_text(
        json.dumps({"keys": {"release-bot": b"release-secret".hex()}})
    )
    return str(path)


def test_attest_sign_verify_cli(tmp_path, keys_file):
    claim = tmp_path / "claim.json"
    claim.write_text(json.dumps({
        "type": "process_execution", "step_name": "train",
        "transformation": "model_training",
        "parameters_digest": digest_of("hp").hex,
        "environment_digest": digest_of("env").hex,
    }))
    code, out, _ = run_cli(
        "attest", "sign", "--subject", digest_of("ckpt").hex,
        "--claim", str(claim), "--signer", "release-bot", "--keys", keys_file,
    )
    assert code == 0
    att_path = tmp_path / "att.json"
    att_path.write_text(out)
    code, out, _ = run_cli("attest", "verify", str(att_path), "--keys", keys_file)
    assert code == 0
    assert json.loads(out)["signature_valid"] is True

    # semantically tampered but canonically re-serialized: signature fails
    doc = json.loads(att_path.read_text())
    doc["claim"]["step_name"] = "trained"
    tampered = tmp_path / "tampered.json"
    tampered.write_bytes(canonical.canonical_bytes(doc) + b"\n")
    code, out, _ = run_cli("attest", "verify", str(tampered), "--keys", keys_file)
    assert code == 1
    assert json.loads(out)["signature_valid"] is False

    # byte-level tampering that breaks canonical form: rejected outright
    mangled = tmp_path / "mangled.json"
    mangled.write_text(json.dumps(doc, indent=2))
    code, out, err = run_cli("attest", "verify", str(mangled), "--keys", keys_file)
    assert code == 1
    assert out == ""
    assert "canonical" in err


def test_attest_pipeline_cli(tmp_path, keys_file):
    pipeline = tmp_path / "pipeline.json"
    pipeline.write_text(json.dumps({"steps": [
        {"name": "preprocess", "transformation": "data_preprocessing",
         "deterministic": True, "declared_output": digest_of("clean").hex},
        {"name": "train", "transformation": "model_training",
         "deterministic": False, "declared_output": None},
    ]}))
    recomputed = tmp_path / "recomputed.json"
    recomputed.write_text(json.dumps({"preprocess": digest_of("clean").hex}))

    claim = tmp_path / "claim.json"
    claim.write_text(json.dumps({
        "type": "process_execution", "step_name": "train",
        "transformation": "model_training",
        "parameters_digest": digest_of("hp").hex,
        "environment_digest": digest_of("env").hex,
    }))
    code, att_json, _ = run_cli(
        "attest", "sign", "--subject", digest_of("ckpt").hex,
        "--claim", str(claim), "--signer", "release-bot", "--keys", keys_file,
    )
    bundle = tmp_path / "atts.jsonl"
    bundle.write_text(att_json)

    code, out, _ = run_cli(
        "attest", "pipeline", "--pipeline", str(pipeline),
        "--recomputed", str(recomputed), "--attestations", str(bundle),
        "--keys", keys_file,
    )
    assert code == 0
    assert json.loads(out)["overall"] is True

    code, out, _ = run_cli(
        "attest", "pipeline", "--pipeline", str(pipeline),
        "--recomputed", str(recomputed), "--keys", keys_file,
    )
    assert code == 1
    assert json.loads(out)["overall"] is False


def test_attest_statcheck_cli(tmp_path):
    bound = tmp_path / "bound.json"
    bound.write_text(json.dumps({
        "type": "statistical_bound", "metric_name": "accuracy",
        "mean": 0.8, "std": 0.01, "tolerance_sigmas": 3.0,
    }))
    samples = tmp_path / "samples.json"
    samples.write_text("[0.79, 0.81]")
    code, out, _ = run_cli("attest", "statcheck", "--bound", str(bound), "--samples", str(samples))
    assert code == 0
    assert json.loads(out)["overall"] is True

    samples.write_text("[0.70]")
    code, out, _ = run_cli("attest", "statcheck", "--bound", str(bound), "--samples", str(samples))
    assert code == 1


# -- scan --------------------------------------------------------------------------


def test_scan_manifests_cli():
    code, out, _ = run_cli("scan", "manifests", str(FIXTURES / "stack" / "alpha"))
    assert code == 0
    manifests = json.loads(out)["manifests"]
    assert manifests == [{"path": "requirements.txt", "ecosystem": "py_flat"}]


def test_scan_resolve_cli():
    code, out, _ = run_cli(
        "scan", "resolve", str(FIXTURES / "stack" / "alpha" / "requirements.txt"),
        "--ecosystem", "py_flat", "--index", str(FIXTURES / "index"),
    )
    assert code == 0
    graph = json.loads(out)
    assert len(graph["nodes"]) == 11


def test_scan_loc_cli():
    code, out, _ = run_cli("scan", "loc", str(FIXTURES / "stack" / "epsilon"))
    assert code == 0
    report = json.loads(out)
    assert report["total"] == {"code": 10, "comment": 1, "blank": 1}


def test_scan_stack_cli_and_schema():
    code, out, _ = run_cli(
        "scan", "stack", "--config", str(FIXTURES / "stack" / "stack.json"),
        "--index", str(FIXTURES / "index"),
    )
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"projects", "aggregates", "graph"}
    assert report["aggregates"]["total_transitive"] == 40

    code, out, _ = run_cli(
        "scan", "stack", "--config", str(FIXTURES / "stack" / "stack.json"),
        "--index", str(FIXTURES / "index"), "--format", "dot",
    )
    assert code == 0
    assert out.startswith("digraph stack {")


# -- drift -------------------------------------------------------------------------


@pytest.fixture
def drift_files(tmp_path):
    stream = refusal_shift_stream(seed=0)
    stream_path = tmp_path / "stream.jsonl"
    stream.save(stream_path)
    log_path = tmp_path / "changes.jsonl"
    rag_scenario_log().save(log_path)
    return str(stream_path), str(log_path)


def test_drift_ingest_cli(drift_files):
    stream_path, log_path = drift_files
    code, out, _ = run_cli("drift", "ingest", "--stream", stream_path, "--changes", log_path)
    assert code == 0
    assert json.loads(out) == {"records": 1000, "changes": 3}


def test_drift_detect_cli(drift_files):
    stream_path, _ = drift_files
    code, out, _ = run_cli(
        "drift", "detect", "--stream", stream_path, "--metric", "refusal_rate",
        "--threshold", "3.0",
    )
    assert code == 1
    points = json.loads(out)["change_points"]
    assert points and points[0]["metric"] == "refusal_rate"


def test_drift_detect_constant_exit_0(tmp_path):
    from conftest import constant_stream

    path = tmp_path / "flat.jsonl"
    constant_stream().save(path)
    code, out, _ = run_cli("drift", "detect", "--stream", str(path), "--metric", "refusal_rate")
    assert code == 0
    assert json.loads(out) == {"change_points": []}


def test_drift_attribute_cli(drift_files):
    stream_path, log_path = drift_files
    code, out, _ = run_cli(
        "drift", "attribute", "--stream", stream_path, "--metric", "refusal_rate",
        "--threshold", "3.0", "--log", log_path, "--lookback", "600",
    )
    assert code == 1
    report = json.loads(out)
    assert report[0]["attribution"]["verdict"] == "multiple_candidates"

    code, out, _ = run_cli(
        "drift", "attribute", "--stream", stream_path, "--metric", "refusal_rate",
        "--threshold", "3.0", "--log", log_path, "--lookback", "600",
        "--format", "table",
    )
    assert code == 1
    assert "multiple_candidates" in out


def test_drift_baseline_cli(drift_files):
    stream_path, _ = drift_files
    code, out, _ = run_cli(
        "drift", "baseline", "--stream", stream_path, "--metric", "refusal_rate",
        "--from-seq", "0", "--to-seq", "499",
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["count"] == 500
    assert 0.0 < summary["rate"] < 0.15


# -- stream discipline and determinism ------------------------------------------------


def test_json_stdout_parses_even_with_warnings(tmp_path):
    manifest = tmp_path / "requirements.txt"
    manifest.write_text("-r nested.txt\ntorch==2.1.0\n")
    (tmp_path / "index" / "py_flat").mkdir(parents=True)
    (tmp_path / "index" / "py_flat" / "torch.json").write_text(
        json.dumps({"versions": [{"version": "2.1.0", "deps": []}]})
    )
    code, out, err = run_cli(
        "scan", "resolve", str(manifest), "--ecosystem", "py_flat",
        "--index", str(tmp_path / "index"),
    )
    assert code == 0
    json.loads(out)  # single parseable document
    assert "warning" in err

    code, _, err = run_cli(
        "scan", "resolve", str(manifest), "--ecosystem", "py_flat",
        "--index", str(tmp_path / "index"), "--quiet",
    )
    assert code == 0
    assert err == ""


def test_dot_rejected_for_non_graph_results(lock_files):
    lock_path, observed = lock_files
    code, _, _ = run_cli(
        "lock", "verify", lock_path, "--observed", observed, "--format", "dot"
    )
    assert code == 2


def test_double_run_byte_identical(store_path, lock_files, drift_files):
    seed_store(store_path)
    lock_path, observed = lock_files
    stream_path, log_path = drift_files
    commands = [
        ("lineage", "ancestors", str(digest_of("Q")), "--store", store_path),
        ("lineage", "impact", "--taint", digest_of("D").hex, "--store", store_path),
        ("lineage", "export-dot", "--store", store_path),
        ("lock", "verify", lock_path, "--observed", observed),
        ("scan", "stack", "--config", str(FIXTURES / "stack" / "stack.json"),
         "--index", str(FIXTURES / "index")),
        ("drift", "detect", "--stream", stream_path, "--metric", "refusal_rate",
         "--threshold", "3.0"),
    ]
    for argv in commands:
        first = run_cli(*argv)
        second = run_cli(*argv)
        assert first == second, argv
