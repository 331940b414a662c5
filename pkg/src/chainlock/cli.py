"""One command-line entry point over every module.

Verb-noun subcommands (``chainlock lineage impact ...``), uniform global
flags (``--store``, ``--format``, ``--quiet``), canonical JSON on stdout,
diagnostics on stderr. Exit codes are part of the contract:

    0   success / no findings
    1   findings present (violations, change points, tainted descendants,
        failed verification)
    2   usage or input error

Every subcommand's stdout is byte-deterministic for identical inputs; no
wall-clock timestamps are ever emitted — timestamps appear only where the
caller supplied them.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

from chainlock import canonical, drift, lockfile, scanner
from chainlock import attestation as att
from chainlock import lineage as lin
from chainlock.dot import LAYER_COLORS, POLICY_COLOR, render_dot
from chainlock.errors import ChainlockError, UnsupportedFormat
from chainlock.model import (
    ArtifactId,
    ArtifactKind,
    Digest,
    PinMode,
    TransformationKind,
    parse_timestamp,
)

STORE_ENV_VAR = "CHAINLOCK_STORE"

FORMAT_JSON = "json"
FORMAT_TABLE = "table"
FORMAT_DOT = "dot"


class UsageError(ChainlockError):
    """Bad invocation (missing store, malformed argument value)."""


def _emit(text: str) -> None:
    sys.stdout.write(text)


def emit_json(value: Any) -> None:
    _emit(canonical.canonical_text(value) + "\n")


def emit_lines(lines: Iterable[str]) -> None:
    for line in lines:
        _emit(line + "\n")


def emit_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    emit_lines(
        ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
        + ["  ".join(str(c).ljust(widths[i]) for i, c in enumerate(row)) for row in rows]
    )


def _warn(args: argparse.Namespace, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(f"warning: {message}", file=sys.stderr)


def _require_store(args: argparse.Namespace) -> Path:
    if not args.store:
        raise UsageError("no lineage store given (use --store or CHAINLOCK_STORE)")
    return Path(args.store)


def _load_store(args: argparse.Namespace) -> lin.LineageStore:
    path = _require_store(args)
    if path.exists():
        return lin.LineageStore.load(path)
    return lin.LineageStore()


def _parse_kv(pairs: Iterable[str] | None, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in pairs or ():
        key, sep, value = raw.partition("=")
        if not sep or not key:
            raise UsageError(f"{what} must look like key=value, got {raw!r}")
        out[key] = value
    return out


def _load_json(path: str) -> Any:
    return canonical.parse(Path(path).read_bytes())


def _load_keys(path: str | None) -> att.KeyRegistry | None:
    if path is None:
        return None
    return att.KeyRegistry.load(path)


def _node_label(store: lin.LineageStore, key: str) -> str:
    try:
        return store.artifact(key).id.name
    except ChainlockError:
        return store.policy(key).description


# -- lineage ----------------------------------------------------------------


def _cmd_lineage_add_artifact(args: argparse.Namespace) -> int:
    store = _load_store(args)
    digest = Digest.parse(args.digest) if args.digest else None
    artifact = ArtifactId(name=args.name, digest=digest, pin_mode=PinMode(args.pin_mode))
    record = lin.ArtifactRecord(
        id=artifact,
        kind=ArtifactKind(args.kind),
        created_at=parse_timestamp(args.created_at),
        annotations=_parse_kv(args.annotation, "--annotation"),
    )
    registered = store.record_artifact(record)
    store.save(_require_store(args))
    emit_json({"node": registered.key})
    return 0


def _cmd_lineage_add_derivation(args: argparse.Namespace) -> int:
    store = _load_store(args)

    def resolve(key: str) -> ArtifactId:
        return store.artifact(store.resolve_key(key)).id

    transformation = TransformationKind(args.transformation)
    deterministic = None
    if args.non_deterministic:
        deterministic = False
    record = lin.DerivationRecord(
        output=resolve(args.output),
        inputs=tuple(resolve(key) for key in args.input),
        transformation=transformation,
        deterministic=deterministic,
        parameters_digest=Digest.parse(args.parameters_digest),
        environment_digest=Digest.parse(args.environment_digest),
        policy_inputs=tuple(Digest.parse(p) for p in args.policy or ()),
        actor=args.actor,
        recorded_at=parse_timestamp(args.recorded_at),
    )
    store.record_derivation(record)
    store.save(_require_store(args))
    emit_json({"output": record.output.key, "inputs": [i.key for i in record.inputs]})
    return 0


def _cmd_lineage_add_policy(args: argparse.Namespace) -> int:
    store = _load_store(args)
    thresholds = {
        key: float(value)
        for key, value in _parse_kv(args.threshold, "--threshold").items()
    }
    node = lin.PolicyNode.create(
        description=args.description,
        thresholds=thresholds,
        decision=lin.Decision(args.decision),
        recorded_at=parse_timestamp(args.recorded_at),
    )
    registered = store.record_policy(node)
    store.save(_require_store(args))
    emit_json({"node": str(registered)})
    return 0


def _cmd_lineage_ancestors(args: argparse.Namespace) -> int:
    store = _load_store(args)
    nodes = sorted(store.ancestors(args.node))
    if args.format == FORMAT_TABLE:
        emit_lines(nodes)
    elif args.format == FORMAT_DOT:
        raise UnsupportedFormat("ancestors is not a graph-shaped result")
    else:
        emit_json({"node": store.resolve_key(args.node), "ancestors": nodes})
    return 0


def _cmd_lineage_descendants(args: argparse.Namespace) -> int:
    store = _load_store(args)
    nodes = sorted(store.descendants(args.node))
    if args.format == FORMAT_TABLE:
        emit_lines(nodes)
    elif args.format == FORMAT_DOT:
        raise UnsupportedFormat("descendants is not a graph-shaped result")
    else:
        emit_json({"node": store.resolve_key(args.node), "descendants": nodes})
    return 0


def _cmd_lineage_impact(args: argparse.Namespace) -> int:
    store = _load_store(args)
    report = store.impact_report(args.taint)
    if args.format == FORMAT_DOT:
        _emit(_impact_dot(store, report))
    elif args.format == FORMAT_TABLE:
        emit_table(
            ["key", "name", "kind", "layer", "witness_path"],
            [
                [n.key, n.name, n.kind, n.layer, " -> ".join(n.witness_path)]
                for n in report.affected
            ],
        )
    else:
        emit_json(report.to_json_value())
    return 1 if report.affected else 0


def _impact_dot(store: lin.LineageStore, report: lin.ImpactReport) -> str:
    keep = set(report.taint) | {n.key for n in report.affected}
    affected = {n.key for n in report.affected}
    nodes = []
    for key in sorted(keep):
        attrs = {"label": _node_label(store, key)}
        try:
            layer = store.artifact(key).layer.value
            attrs["fillcolor"] = LAYER_COLORS[layer]
        except ChainlockError:
            attrs["fillcolor"] = POLICY_COLOR
            attrs["shape"] = "diamond"
        attrs["style"] = "filled"
        if key in affected:
            attrs["tainted"] = "true"
        if key in report.taint:
            attrs["taint_source"] = "true"
        nodes.append((key, attrs))
    edges = [(a, b) for a, b in store.edges if a in keep and b in keep]
    return render_dot("impact", nodes, edges)


def _cmd_lineage_verify_log(args: argparse.Namespace) -> int:
    path = _require_store(args)
    if path.exists():
        lines = [line for line in path.read_bytes().split(b"\n") if line]
    else:
        lines = []
    result = lin.verify_log_lines(lines)
    emit_json(result.to_json_value())
    return 0 if result.valid else 1


def _cmd_lineage_export_dot(args: argparse.Namespace) -> int:
    store = _load_store(args)
    _emit(store.export_dot())
    return 0


# -- lock ---------------------------------------------------------------------


def _cmd_lock_create(args: argparse.Namespace) -> int:
    assembly = lockfile.ObservedAssembly.from_json_value(_load_json(args.assembly))
    lock = lockfile.create_lock(
        assembly, system_name=args.system_name, created_at=parse_timestamp(args.created_at)
    )
    data = lockfile.serialize_lockfile(lock)
    if args.out:
        Path(args.out).write_bytes(data)
        emit_json({"lock_digest": str(lock.lock_digest), "path": args.out})
    else:
        _emit(data.decode("utf-8"))
    return 0


def _cmd_lock_verify(args: argparse.Namespace) -> int:
    lock = lockfile.load_lockfile(args.lockfile)
    observed = lockfile.ObservedAssembly.from_json_value(_load_json(args.observed))
    violations = lockfile.verify_assembly(lock, observed, keys=_load_keys(args.keys))
    if args.format == FORMAT_TABLE:
        emit_lines(str(v) for v in violations)
    elif args.format == FORMAT_DOT:
        raise UnsupportedFormat("violations are not a graph-shaped result")
    else:
        emit_json({"violations": [v.to_json_value() for v in violations]})
    return 1 if violations else 0


def _cmd_lock_diff(args: argparse.Namespace) -> int:
    diff = lockfile.diff_locks(
        lockfile.load_lockfile(args.old), lockfile.load_lockfile(args.new)
    )
    emit_json(diff.to_json_value())
    return 0


def _cmd_lock_receipt(args: argparse.Namespace) -> int:
    registry = _load_keys(args.keys)
    if registry is None:
        raise UsageError("--keys is required to sign a receipt")
    key = registry.resolve(args.provider)
    receipt = lockfile.make_receipt(
        provider=args.provider,
        observed_digest=Digest.parse(args.digest),
        observed_at=parse_timestamp(args.observed_at),
        key=key,
    )
    emit_json(receipt.to_json_value())
    return 0


# -- attest ---------------------------------------------------------------------


def _cmd_attest_sign(args: argparse.Namespace) -> int:
    registry = _load_keys(args.keys)
    if registry is None:
        raise UsageError("--keys is required to sign")
    key = registry.resolve(args.signer)
    claim = att.claim_from_json_value(_load_json(args.claim))
    signed = att.sign(claim, Digest.parse(args.subject), key)
    emit_json(signed.to_json_value())
    return 0


def _cmd_attest_verify(args: argparse.Namespace) -> int:
    registry = _load_keys(args.keys)
    if registry is None:
        raise UsageError("--keys is required to verify")
    try:
        attn = att.attestation_from_bytes(Path(args.attestation).read_bytes())
    except ValueError as exc:
        print(f"chainlock: error: {exc}", file=sys.stderr)
        return 1  # unverifiable envelope is a failed verification, not usage
    signature_valid = att.verify(attn, registry)
    claim_holds: bool | None = None
    if isinstance(attn.claim, att.AncestryExclusion) and args.store:
        store = _load_store(args)
        claim_holds = att.check_ancestry_exclusion(attn.claim, store, str(attn.subject))
    emit_json({"signature_valid": signature_valid, "claim_holds": claim_holds})
    return 0 if signature_valid and claim_holds is not False else 1


def _cmd_attest_pipeline(args: argparse.Namespace) -> int:
    registry = _load_keys(args.keys) or att.KeyRegistry()
    spec = att.PipelineSpec.from_json_value(_load_json(args.pipeline))
    recomputed = {
        name: Digest.parse(digest)
        for name, digest in _load_json(args.recomputed).items()
    }
    attestations = att.load_attestations(args.attestations) if args.attestations else []
    verdict = att.verify_pipeline(spec, recomputed, attestations, registry)
    if args.format == FORMAT_TABLE:
        emit_table(
            ["step", "status", "reason"],
            [[s.name, s.status, s.reason or ""] for s in verdict.steps]
            + [["overall", "true" if verdict.overall else "false", ""]],
        )
    else:
        emit_json(verdict.to_json_value())
    return 0 if verdict.overall else 1


def _cmd_attest_statcheck(args: argparse.Namespace) -> int:
    bound = att.claim_from_json_value(_load_json(args.bound))
    if not isinstance(bound, att.StatisticalBound):
        raise UsageError("--bound file must hold a statistical_bound claim")
    samples = _load_json(args.samples)
    if not isinstance(samples, list):
        raise UsageError("--samples file must hold a JSON array of numbers")
    result = att.check_statistical_consistency(bound, samples)
    emit_json(result.to_json_value())
    return 0 if result.overall else 1


# -- scan -----------------------------------------------------------------------


def _cmd_scan_manifests(args: argparse.Namespace) -> int:
    root = Path(args.root)
    found = scanner.detect_manifests(root)
    entries = [
        {"path": path.relative_to(root).as_posix(), "ecosystem": eco.value}
        for path, eco in found
    ]
    if args.format == FORMAT_TABLE:
        emit_table(
            ["path", "ecosystem"], [[e["path"], e["ecosystem"]] for e in entries]
        )
    else:
        emit_json({"manifests": entries})
    return 0


def _cmd_scan_resolve(args: argparse.Namespace) -> int:
    ecosystem = scanner.Ecosystem(args.ecosystem)
    refs, warnings = scanner.parse_manifest(Path(args.manifest).read_bytes(), ecosystem)
    for warning in warnings:
        _warn(args, warning)
    graph = scanner.resolve_transitive(refs, scanner.DirectoryRegistry(args.index))
    if args.format == FORMAT_DOT:
        nodes = [
            (node.key, {"label": f"{node.name} {scanner.format_version(node.version)}"})
            for node in graph.nodes
        ]
        _emit(render_dot("dependencies", nodes, list(graph.edges)))
    elif args.format == FORMAT_TABLE:
        emit_table(
            ["package", "version"],
            [[n.key, scanner.format_version(n.version)] for n in graph.nodes],
        )
    else:
        emit_json(graph.to_json_value())
    return 0


def _cmd_scan_loc(args: argparse.Namespace) -> int:
    path = Path(args.path)
    if path.is_file():
        profile = scanner.profile_for_path(path)
        if profile is None:
            raise UsageError(f"no comment profile for extension of {path.name!r}")
        entry = scanner.count_loc(path.read_bytes(), profile)
        report = scanner.LocReport(
            files={path.name: entry},
            total=entry.counts,
            by_profile={profile.value: entry.counts},
        )
    else:
        report = scanner.count_loc_tree(path)
    for rel, entry in sorted(report.files.items()):
        if entry.warning:
            _warn(args, f"{rel}: {entry.warning}")
    if args.format == FORMAT_TABLE:
        rows = [
            [rel, str(e.counts.code), str(e.counts.comment), str(e.counts.blank)]
            for rel, e in sorted(report.files.items())
        ]
        rows.append(
            ["total", str(report.total.code), str(report.total.comment), str(report.total.blank)]
        )
        emit_table(["file", "code", "comment", "blank"], rows)
    else:
        emit_json(report.to_json_value())
    return 0


def _cmd_scan_stack(args: argparse.Namespace) -> int:
    projects = scanner.load_stack_config(args.config)
    report = scanner.scan_stack(projects, scanner.DirectoryRegistry(args.index))
    for project in report.projects:
        for warning in project.warnings:
            _warn(args, f"{project.name}: {warning}")
        for error in project.errors:
            _warn(args, f"{project.name}: {error}")
    if args.format == FORMAT_DOT:
        _emit(report.to_dot())
    elif args.format == FORMAT_TABLE:
        emit_table(
            ["project", "layer", "direct", "transitive", "code", "comment", "blank"],
            [
                [
                    p.name,
                    p.layer.value,
                    str(p.direct_count),
                    str(p.transitive_count),
                    str(p.loc.code),
                    str(p.loc.comment),
                    str(p.loc.blank),
                ]
                for p in report.projects
            ],
        )
    else:
        emit_json(report.to_json_value())
    return 0


# -- drift ------------------------------------------------------------------------


def _detector_config(args: argparse.Namespace) -> drift.DetectorConfig:
    return drift.DetectorConfig(
        window=args.window, stride=args.stride, threshold=args.threshold
    )


def _cmd_drift_ingest(args: argparse.Namespace) -> int:
    stream = drift.ResponseStream.load(args.stream)
    changes = 0
    if args.changes:
        changes = len(drift.ChangeLog.load(args.changes).events)
    emit_json({"records": len(stream), "changes": changes})
    return 0


def _cmd_drift_detect(args: argparse.Namespace) -> int:
    stream = drift.ResponseStream.load(args.stream)
    metric = drift.DriftMetric(args.metric)
    points = drift.detect(stream, metric, _detector_config(args))
    if args.format == FORMAT_TABLE:
        emit_table(
            ["metric", "at_seq", "statistic", "threshold"],
            [
                [p.metric.value, str(p.at_seq), repr(p.statistic), repr(p.threshold)]
                for p in points
            ],
        )
    else:
        emit_json({"change_points": [p.to_json_value() for p in points]})
    return 1 if points else 0


def _cmd_drift_attribute(args: argparse.Namespace) -> int:
    stream = drift.ResponseStream.load(args.stream)
    log = drift.ChangeLog.load(args.log)
    metric = drift.DriftMetric(args.metric)
    points = drift.detect(stream, metric, _detector_config(args))
    report = []
    for cp in points:
        attribution = drift.attribute(cp, log, args.lookback)
        report.append(
            {
                "change_point": cp.to_json_value(),
                "attribution": {
                    "candidates": [c.to_json_value() for c in attribution.candidates],
                    "verdict": attribution.verdict,
                },
            }
        )
    if args.format == FORMAT_TABLE:
        rows = []
        for entry in report:
            cp = entry["change_point"]
            attribution = entry["attribution"]
            roles = ",".join(c["role"] for c in attribution["candidates"])
            rows.append(
                [
                    cp["metric"],
                    str(cp["at_seq"]),
                    repr(cp["statistic"]),
                    attribution["verdict"],
                    roles,
                ]
            )
        emit_table(["metric", "at_seq", "statistic", "verdict", "candidates"], rows)
    else:
        emit_json(report)
    return 1 if points else 0


def _cmd_drift_baseline(args: argparse.Namespace) -> int:
    stream = drift.ResponseStream.load(args.stream)
    summary = drift.baseline(
        stream,
        drift.DriftMetric(args.metric),
        start_seq=args.from_seq,
        end_seq=args.to_seq,
    )
    emit_json(summary.to_json_value())
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--store",
        default=os.environ.get(STORE_ENV_VAR),
        help=f"lineage store path (default: ${STORE_ENV_VAR})",
    )
    common.add_argument(
        "--format",
        choices=[FORMAT_JSON, FORMAT_TABLE, FORMAT_DOT],
        default=FORMAT_JSON,
        help="output format (default: json)",
    )
    common.add_argument("--quiet", action="store_true", help="suppress warnings")

    parser = argparse.ArgumentParser(
        prog="chainlock",
        description="Supply-chain integrity toolkit for compound AI systems.",
    )
    groups = parser.add_subparsers(dest="group", required=True)

    def verb(
        group: argparse._SubParsersAction, name: str, handler, help_text: str
    ) -> argparse.ArgumentParser:
        sub = group.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    # lineage
    lineage = groups.add_parser("lineage", help="lineage DAG store").add_subparsers(
        dest="verb", required=True
    )
    sub = verb(lineage, "add-artifact", _cmd_lineage_add_artifact, "register an artifact")
    sub.add_argument("--name", required=True)
    sub.add_argument("--kind", required=True)
    sub.add_argument("--digest", help="content digest (omit for remote_unpinned)")
    sub.add_argument(
        "--pin-mode",
        default=PinMode.BLOB_HASH.value,
        choices=[m.value for m in PinMode],
    )
    sub.add_argument("--created-at", required=True, help="RFC 3339 timestamp")
    sub.add_argument("--annotation", action="append", metavar="KEY=VALUE")

    sub = verb(
        lineage, "add-derivation", _cmd_lineage_add_derivation, "record a derivation edge"
    )
    sub.add_argument("--output", required=True, help="output node key")
    sub.add_argument("--input", action="append", required=True, help="input node key")
    sub.add_argument("--transformation", required=True)
    sub.add_argument("--non-deterministic", action="store_true")
    sub.add_argument("--parameters-digest", required=True)
    sub.add_argument("--environment-digest", required=True)
    sub.add_argument("--policy", action="append", help="policy node id")
    sub.add_argument("--actor", required=True)
    sub.add_argument("--recorded-at", required=True)

    sub = verb(lineage, "add-policy", _cmd_lineage_add_policy, "record a policy decision")
    sub.add_argument("--description", required=True)
    sub.add_argument("--threshold", action="append", metavar="KEY=NUMBER")
    sub.add_argument("--decision", required=True, choices=[d.value for d in lin.Decision])
    sub.add_argument("--recorded-at", required=True)

    sub = verb(lineage, "ancestors", _cmd_lineage_ancestors, "transitive inputs of a node")
    sub.add_argument("node")
    sub = verb(
        lineage, "descendants", _cmd_lineage_descendants, "everything derived from a node"
    )
    sub.add_argument("node")

    sub = verb(lineage, "impact", _cmd_lineage_impact, "forward taint report")
    sub.add_argument("--taint", action="append", required=True, help="tainted node key")

    verb(lineage, "verify-log", _cmd_lineage_verify_log, "recompute the event hash chain")
    verb(lineage, "export-dot", _cmd_lineage_export_dot, "emit the lineage graph as DOT")

    # lock
    lock = groups.add_parser("lock", help="artifact assembly lockfiles").add_subparsers(
        dest="verb", required=True
    )
    sub = verb(lock, "create", _cmd_lock_create, "pin an observed assembly")
    sub.add_argument("--assembly", required=True, help="observed assembly JSON file")
    sub.add_argument("--system-name", required=True)
    sub.add_argument("--created-at", required=True)
    sub.add_argument("--out", help="write lockfile here instead of stdout")

    sub = verb(lock, "verify", _cmd_lock_verify, "resolve a lock against a deployment")
    sub.add_argument("lockfile")
    sub.add_argument("--observed", required=True, help="observed assembly JSON file")
    sub.add_argument("--keys", help="provider key registry JSON file")

    sub = verb(lock, "diff", _cmd_lock_diff, "diff two lockfiles")
    sub.add_argument("old")
    sub.add_argument("new")

    sub = verb(lock, "receipt", _cmd_lock_receipt, "sign a remote snapshot receipt")
    sub.add_argument("--provider", required=True)
    sub.add_argument("--digest", required=True, help="provider-reported state digest")
    sub.add_argument("--observed-at", required=True)
    sub.add_argument("--keys", required=True)

    # attest
    attest = groups.add_parser("attest", help="signed claims and pipelines").add_subparsers(
        dest="verb", required=True
    )
    sub = verb(attest, "sign", _cmd_attest_sign, "sign a claim about a subject")
    sub.add_argument("--subject", required=True, help="subject digest")
    sub.add_argument("--claim", required=True, help="claim JSON file")
    sub.add_argument("--signer", required=True)
    sub.add_argument("--keys", required=True)

    sub = verb(attest, "verify", _cmd_attest_verify, "verify an attestation")
    sub.add_argument("attestation", help="attestation JSON file")
    sub.add_argument("--keys", required=True)

    sub = verb(attest, "pipeline", _cmd_attest_pipeline, "compositional pipeline verification")
    sub.add_argument("--pipeline", required=True, help="pipeline spec JSON file")
    sub.add_argument("--recomputed", required=True, help="step -> digest JSON file")
    sub.add_argument("--attestations", help="attestation JSONL bundle")
    sub.add_argument("--keys", help="key registry JSON file")

    sub = verb(attest, "statcheck", _cmd_attest_statcheck, "statistical consistency check")
    sub.add_argument("--bound", required=True, help="statistical_bound claim JSON file")
    sub.add_argument("--samples", required=True, help="JSON array of sample values")

    # scan
    scan = groups.add_parser("scan", help="dependency and LOC measurement").add_subparsers(
        dest="verb", required=True
    )
    sub = verb(scan, "manifests", _cmd_scan_manifests, "detect dependency manifests")
    sub.add_argument("root")

    sub = verb(scan, "resolve", _cmd_scan_resolve, "resolve a manifest's closure")
    sub.add_argument("manifest")
    sub.add_argument(
        "--ecosystem", required=True, choices=[e.value for e in scanner.Ecosystem]
    )
    sub.add_argument("--index", required=True, help="registry index directory")

    sub = verb(scan, "loc", _cmd_scan_loc, "count lines of code")
    sub.add_argument("path")

    sub = verb(scan, "stack", _cmd_scan_stack, "scan a project stack")
    sub.add_argument("--config", required=True, help="stack config JSON file")
    sub.add_argument("--index", required=True, help="registry index directory")

    # drift
    drift_group = groups.add_parser(
        "drift", help="telemetry drift detection"
    ).add_subparsers(dest="verb", required=True)
    sub = verb(drift_group, "ingest", _cmd_drift_ingest, "validate stream/change-log files")
    sub.add_argument("--stream", required=True, help="response record JSONL file")
    sub.add_argument("--changes", help="change event JSONL file")

    def add_detector_args(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--stream", required=True)
        sub.add_argument(
            "--metric", required=True, choices=[m.value for m in drift.DriftMetric]
        )
        sub.add_argument("--window", type=int, default=200)
        sub.add_argument("--stride", type=int, default=10)
        sub.add_argument("--threshold", type=float, default=4.0)

    sub = verb(drift_group, "detect", _cmd_drift_detect, "detect behavioral change points")
    add_detector_args(sub)

    sub = verb(
        drift_group, "attribute", _cmd_drift_attribute, "attribute shifts to artifact changes"
    )
    add_detector_args(sub)
    sub.add_argument("--log", required=True, help="change event JSONL file")
    sub.add_argument("--lookback", type=float, required=True, help="seconds before the shift")

    sub = verb(drift_group, "baseline", _cmd_drift_baseline, "summarize a metric over a range")
    sub.add_argument("--stream", required=True)
    sub.add_argument(
        "--metric", required=True, choices=[m.value for m in drift.DriftMetric]
    )
    sub.add_argument("--from-seq", type=int)
    sub.add_argument("--to-seq", type=int)

    return parser


def run(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        return args.handler(args)
    except ChainlockError as exc:
        print(f"chainlock: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"chainlock: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
