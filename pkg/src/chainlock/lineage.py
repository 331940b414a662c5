"""Append-only, hash-chained lineage store.

Artifacts, multi-parent derivations, and policy decisions are nodes in one
DAG. Derivation edges run input -> output; a policy node referenced by a
derivation gets an edge policy -> output, so policy decisions show up in the
ancestry of everything they gated while never acquiring ancestors of their
own.

The event log is the source of truth: one canonical-JSON event per line,
fields exactly {seq, prev_hash, type, payload}, each event's prev_hash being
the sha-256 of the previous line's bytes. Rebuilding a store from its log is
a pure replay and answers every query identically.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from chainlock import canonical
from chainlock.errors import CycleDetected, KindConflict, UnknownArtifact
from chainlock.model import (
    ArtifactId,
    ArtifactKind,
    Digest,
    Layer,
    PinMode,
    TransformationKind,
    compute_digest,
    format_timestamp,
    layer_of,
    parse_timestamp,
)


class Decision(Enum):
    PROMOTE = "promote"
    REJECT = "reject"
    GATE = "gate"


@dataclass(frozen=True)
class ArtifactRecord:
    id: ArtifactId
    kind: ArtifactKind
    created_at: datetime
    annotations: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.id.pin_mode is PinMode.REMOTE_UNPINNED and "provider" not in self.annotations:
            raise ValueError(
                f"remote artifact {self.id.name!r} must carry a 'provider' annotation"
            )
        for key, value in self.annotations.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise ValueError("annotations must map strings to strings")

    @property
    def layer(self) -> Layer:
        return layer_of(self.kind)

    def to_json_value(self) -> dict[str, Any]:
        return {
            "id": self.id.to_json_value(),
            "kind": self.kind.canonical_name,
            "layer": self.layer.value,
            "created_at": format_timestamp(self.created_at),
            "annotations": dict(sorted(self.annotations.items())),
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "ArtifactRecord":
        rec = cls(
            id=ArtifactId.from_json_value(value["id"]),
            kind=ArtifactKind(value["kind"]),
            created_at=parse_timestamp(value["created_at"]),
            annotations=dict(value.get("annotations", {})),
        )
        if value.get("layer") != rec.layer.value:
            raise ValueError(
                f"artifact {rec.id.name!r}: stored layer {value.get('layer')!r} "
                f"does not match kind {rec.kind.canonical_name}"
            )
        return rec


@dataclass(frozen=True)
class DerivationRecord:
    """A transformation edge: one output from one or more inputs."""

    output: ArtifactId
    inputs: tuple[ArtifactId, ...]
    transformation: TransformationKind
    parameters_digest: Digest
    environment_digest: Digest
    actor: str
    recorded_at: datetime
    deterministic: bool | None = None
    policy_inputs: tuple[Digest, ...] = ()

    def __post_init__(self) -> None:
        inputs = tuple(self.inputs)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "policy_inputs", tuple(self.policy_inputs))
        if not inputs:
            raise ValueError("derivation requires at least one input")
        if len(set(inputs)) != len(inputs):
            raise ValueError("derivation inputs contain duplicates")
        if self.output in inputs:
            raise ValueError("derivation output cannot be one of its inputs")
        default = self.transformation.default_deterministic
        if self.deterministic is None:
            object.__setattr__(self, "deterministic", default)
        elif self.deterministic and not default:
            # Only true -> false overrides are allowed: a stochastic
            # transformation cannot be declared deterministic.
            raise ValueError(
                f"{self.transformation.canonical_name} cannot be marked deterministic"
            )

    def to_json_value(self) -> dict[str, Any]:
        return {
            "output": self.output.to_json_value(),
            "inputs": [i.to_json_value() for i in self.inputs],
            "transformation": self.transformation.canonical_name,
            "deterministic": self.deterministic,
            "parameters_digest": str(self.parameters_digest),
            "environment_digest": str(self.environment_digest),
            "policy_inputs": [str(p) for p in self.policy_inputs],
            "actor": self.actor,
            "recorded_at": format_timestamp(self.recorded_at),
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "DerivationRecord":
        return cls(
            output=ArtifactId.from_json_value(value["output"]),
            inputs=tuple(ArtifactId.from_json_value(i) for i in value["inputs"]),
            transformation=TransformationKind(value["transformation"]),
            deterministic=value["deterministic"],
            parameters_digest=Digest.parse(value["parameters_digest"]),
            environment_digest=Digest.parse(value["environment_digest"]),
            policy_inputs=tuple(Digest.parse(p) for p in value.get("policy_inputs", [])),
            actor=value["actor"],
            recorded_at=parse_timestamp(value["recorded_at"]),
        )


@dataclass(frozen=True)
class PolicyNode:
    """A gate/promotion decision, content-addressed by its canonical body."""

    id: Digest
    description: str
    thresholds: Mapping[str, float]
    decision: Decision
    recorded_at: datetime

    def __post_init__(self) -> None:
        expected = policy_id(self.description, self.thresholds, self.decision)
        if self.id != expected:
            raise ValueError(
                f"policy id {self.id} does not match canonical body digest {expected}"
            )

    @classmethod
    def create(
        cls,
        description: str,
        thresholds: Mapping[str, float],
        decision: Decision,
        recorded_at: datetime,
    ) -> "PolicyNode":
        return cls(
            id=policy_id(description, thresholds, decision),
            description=description,
            thresholds=dict(thresholds),
            decision=decision,
            recorded_at=recorded_at,
        )

    def to_json_value(self) -> dict[str, Any]:
        return {
            "id": str(self.id),
            "description": self.description,
            "thresholds": dict(sorted(self.thresholds.items())),
            "decision": self.decision.value,
            "recorded_at": format_timestamp(self.recorded_at),
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "PolicyNode":
        return cls(
            id=Digest.parse(value["id"]),
            description=value["description"],
            thresholds=dict(value["thresholds"]),
            decision=Decision(value["decision"]),
            recorded_at=parse_timestamp(value["recorded_at"]),
        )


def policy_id(
    description: str, thresholds: Mapping[str, float], decision: Decision
) -> Digest:
    body = {
        "description": description,
        "thresholds": dict(sorted(thresholds.items())),
        "decision": decision.value,
    }
    return compute_digest(canonical.canonical_bytes(body))


EVENT_ARTIFACT = "artifact"
EVENT_DERIVATION = "derivation"
EVENT_POLICY = "policy"


@dataclass(frozen=True)
class LineageEvent:
    seq: int
    prev_hash: Digest
    type: str
    payload: Mapping[str, Any]

    def to_json_value(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "prev_hash": str(self.prev_hash),
            "type": self.type,
            "payload": dict(self.payload),
        }


@dataclass(frozen=True)
class VerificationResult:
    valid: bool
    first_bad_seq: int | None = None
    message: str = "ok"

    def to_json_value(self) -> dict[str, Any]:
        return {
            "valid": self.valid,
            "first_bad_seq": self.first_bad_seq,
            "message": self.message,
        }


@dataclass(frozen=True)
class AffectedNode:
    key: str
    name: str
    kind: str
    layer: str
    witness_path: tuple[str, ...]

    def to_json_value(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "name": self.name,
            "kind": self.kind,
            "layer": self.layer,
            "witness_path": list(self.witness_path),
        }


@dataclass(frozen=True)
class ImpactReport:
    """Forward-taint result: every descendant of the taint set, with one
    shortest witness path per affected node."""

    taint: tuple[str, ...]
    affected: tuple[AffectedNode, ...]
    by_layer: Mapping[str, int]
    by_kind: Mapping[str, int]

    @property
    def total_affected(self) -> int:
        return len(self.affected)

    def to_json_value(self) -> dict[str, Any]:
        return {
            "taint": list(self.taint),
            "total_affected": self.total_affected,
            "affected": [node.to_json_value() for node in self.affected],
            "by_layer": dict(sorted(self.by_layer.items())),
            "by_kind": dict(sorted(self.by_kind.items())),
        }


class LineageStore:
    """Single-writer, multi-reader lineage DAG backed by an event log."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._event_lines: list[bytes] = []
        self._artifacts: dict[str, ArtifactRecord] = {}
        self._policies: dict[str, PolicyNode] = {}
        self._derivations: list[DerivationRecord] = []
        self._derivation_keys: set[str] = set()
        self._forward: dict[str, set[str]] = {}
        self._reverse: dict[str, set[str]] = {}

    # -- write side -----------------------------------------------------------

    def record_artifact(self, rec: ArtifactRecord) -> ArtifactId:
        with self._lock:
            key = rec.id.key
            existing = self._artifacts.get(key)
            if existing is not None:
                if existing.kind != rec.kind:
                    raise KindConflict(
                        f"artifact {key} already registered as "
                        f"{existing.kind.canonical_name}, not {rec.kind.canonical_name}"
                    )
                return existing.id
            self._artifacts[key] = rec
            self._forward.setdefault(key, set())
            self._reverse.setdefault(key, set())
            self._append(EVENT_ARTIFACT, rec.to_json_value())
            return rec.id

    def record_policy(self, node: PolicyNode) -> Digest:
        with self._lock:
            key = str(node.id)
            if key in self._policies:
                return node.id
            self._policies[key] = node
            self._forward.setdefault(key, set())
            self._reverse.setdefault(key, set())
            self._append(EVENT_POLICY, node.to_json_value())
            return node.id

    def record_derivation(self, d: DerivationRecord) -> None:
        with self._lock:
            out_key = d.output.key
            if out_key not in self._artifacts:
                raise UnknownArtifact(f"derivation output not registered: {out_key}")
            input_keys = []
            for inp in d.inputs:
                if inp.key not in self._artifacts:
                    raise UnknownArtifact(f"derivation input not registered: {inp.key}")
                input_keys.append(inp.key)
            policy_keys = []
            for pol in d.policy_inputs:
                pkey = str(pol)
                if pkey not in self._policies:
                    raise UnknownArtifact(f"policy node not registered: {pkey}")
                policy_keys.append(pkey)

            dedup_key = canonical.canonical_text(d.to_json_value())
            if dedup_key in self._derivation_keys:
                return

            # Cycle test: the edge set input -> output closes a cycle exactly
            # when some input is already reachable forward from the output.
            reachable = self._closure(out_key, self._forward)
            for ikey in input_keys:
                if ikey in reachable:
                    raise CycleDetected(
                        f"derivation would make {out_key} an ancestor of its input {ikey}"
                    )

            self._derivations.append(d)
            self._derivation_keys.add(dedup_key)
            for key in input_keys + policy_keys:
                self._forward.setdefault(key, set()).add(out_key)
                self._reverse.setdefault(out_key, set()).add(key)
            self._append(EVENT_DERIVATION, d.to_json_value())

    def _append(self, event_type: str, payload: dict[str, Any]) -> None:
        prev = (
            compute_digest(self._event_lines[-1])
            if self._event_lines
            else Digest.zero()
        )
        event = LineageEvent(
            seq=len(self._event_lines), prev_hash=prev, type=event_type, payload=payload
        )
        self._event_lines.append(canonical.canonical_bytes(event.to_json_value()))

    # -- read side ------------------------------------------------------------

    def resolve_key(self, node: ArtifactId | Digest | str) -> str:
        """Normalize an id, digest, or key string to a registered node key."""
        return self._resolve_key(node)

    def _resolve_key(self, node: ArtifactId | Digest | str) -> str:
        if isinstance(node, ArtifactId):
            key = node.key
        elif isinstance(node, Digest):
            key = str(node)
        else:
            try:
                key = str(Digest.parse(node))
            except ValueError:
                key = node  # unpinned:<name> keys pass through
        if key not in self._artifacts and key not in self._policies:
            raise UnknownArtifact(f"node not registered: {key}")
        return key

    @staticmethod
    def _closure(start: str, edges: Mapping[str, set[str]]) -> set[str]:
        seen: set[str] = set()
        stack = list(edges.get(start, ()))
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(edges.get(node, ()))
        return seen

    def ancestors(self, node: ArtifactId | Digest | str) -> set[str]:
        """All node keys (artifacts and policy nodes) the node derives from."""
        key = self._resolve_key(node)
        return self._closure(key, self._reverse)

    def descendants(self, node: ArtifactId | Digest | str) -> set[str]:
        """All node keys reachable forward from the node."""
        key = self._resolve_key(node)
        return self._closure(key, self._forward)

    def artifact(self, key: str) -> ArtifactRecord:
        rec = self._artifacts.get(key)
        if rec is None:
            raise UnknownArtifact(f"artifact not registered: {key}")
        return rec

    def policy(self, key: str) -> PolicyNode:
        node = self._policies.get(key)
        if node is None:
            raise UnknownArtifact(f"policy node not registered: {key}")
        return node

    @property
    def artifact_keys(self) -> tuple[str, ...]:
        return tuple(sorted(self._artifacts))

    @property
    def policy_keys(self) -> tuple[str, ...]:
        return tuple(sorted(self._policies))

    @property
    def derivations(self) -> tuple[DerivationRecord, ...]:
        return tuple(self._derivations)

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(
            sorted((src, dst) for src, dsts in self._forward.items() for dst in dsts)
        )

    def impact_report(self, taint: Iterable[ArtifactId | Digest | str]) -> ImpactReport:
        taint_keys = sorted({self._resolve_key(t) for t in taint})

        # Level-by-level multi-source BFS over paths with at least one edge,
        # so a taint node tainted by another taint node still shows up as
        # affected. Among equal-length witness paths the lexicographically
        # smallest key sequence wins, keeping reports stable.
        dist: dict[str, int] = {}
        best: dict[str, tuple[str, ...]] = {}
        level = 0
        nxt: dict[str, tuple[str, ...]] = {}
        for source in taint_keys:
            for succ in self._forward.get(source, ()):
                cand = (source, succ)
                old = nxt.get(succ)
                if old is None or cand < old:
                    nxt[succ] = cand
        while nxt:
            level += 1
            for node, path in nxt.items():
                dist[node] = level
                best[node] = path
            following: dict[str, tuple[str, ...]] = {}
            for node in sorted(nxt):
                for succ in self._forward.get(node, ()):
                    if succ in dist:
                        continue
                    cand = best[node] + (succ,)
                    old = following.get(succ)
                    if old is None or cand < old:
                        following[succ] = cand
            nxt = following

        affected_keys = sorted(dist)
        affected: list[AffectedNode] = []
        by_layer: dict[str, int] = {}
        by_kind: dict[str, int] = {}
        for key in affected_keys:
            rec = self._artifacts[key]
            kind = rec.kind.canonical_name
            layer = rec.layer.value
            affected.append(
                AffectedNode(
                    key=key,
                    name=rec.id.name,
                    kind=kind,
                    layer=layer,
                    witness_path=best[key],
                )
            )
            by_layer[layer] = by_layer.get(layer, 0) + 1
            by_kind[kind] = by_kind.get(kind, 0) + 1
        return ImpactReport(
            taint=tuple(taint_keys),
            affected=tuple(affected),
            by_layer=by_layer,
            by_kind=by_kind,
        )

    # -- log ---------------------------------------------------------------

    def verify_log(self) -> VerificationResult:
        return verify_log_lines(self._event_lines)

    @property
    def event_lines(self) -> tuple[bytes, ...]:
        return tuple(self._event_lines)

    def save(self, path: str | Path) -> None:
        data = b"".join(line + b"\n" for line in self._event_lines)
        Path(path).write_bytes(data)

    @classmethod
    def load(cls, path: str | Path) -> "LineageStore":
        """Replay an event log; raises if the rebuilt chain does not match."""
        raw = Path(path).read_bytes()
        lines = [line for line in raw.split(b"\n") if line]
        store = cls()
        for seq, line in enumerate(lines):
            try:
                event = canonical.parse(line)
            except Exception as exc:
                raise ValueError(f"event {seq}: not valid JSON: {exc}") from exc
            etype = event.get("type")
            payload = event.get("payload", {})
            if etype == EVENT_ARTIFACT:
                store.record_artifact(ArtifactRecord.from_json_value(payload))
            elif etype == EVENT_DERIVATION:
                store.record_derivation(DerivationRecord.from_json_value(payload))
            elif etype == EVENT_POLICY:
                store.record_policy(PolicyNode.from_json_value(payload))
            else:
                raise ValueError(f"event {seq}: unknown type {etype!r}")
            if store._event_lines[-1] != line:
                raise ValueError(
                    f"event {seq}: stored bytes do not replay canonically "
                    "(log corrupted or tampered)"
                )
        return store

    def export_dot(self, nodes: Iterable[str] | None = None) -> str:
        """Deterministic DOT rendering of the lineage graph.

        ``nodes`` restricts output to the induced subgraph on those keys.
        """
        from chainlock.dot import LAYER_COLORS, POLICY_COLOR, render_dot

        keep = set(nodes) if nodes is not None else None

        def included(key: str) -> bool:
            return keep is None or key in keep

        dot_nodes = []
        for key in sorted(self._artifacts):
            if not included(key):
                continue
            rec = self._artifacts[key]
            dot_nodes.append(
                (
                    key,
                    {
                        "label": rec.id.name,
                        "fillcolor": LAYER_COLORS[rec.layer.value],
                        "style": "filled",
                    },
                )
            )
        for key in sorted(self._policies):
            if not included(key):
                continue
            node = self._policies[key]
            dot_nodes.append(
                (
                    key,
                    {
                        "label": node.description,
                        "fillcolor": POLICY_COLOR,
                        "style": "filled",
                        "shape": "diamond",
                    },
                )
            )
        edges = sorted(
            (src, dst)
            for src, dsts in self._forward.items()
            for dst in dsts
            if included(src) and included(dst)
        )
        return render_dot("lineage", dot_nodes, edges)


def verify_log_lines(lines: Iterable[bytes]) -> VerificationResult:
    """Recompute the hash chain over raw event lines.

    Corruption is a result, not an error: the first seq whose line fails to
    parse, link, or match its position is reported.
    """
    prev: Digest = Digest.zero()
    prev_line: bytes | None = None
    for seq, line in enumerate(lines):
        try:
            event = canonical.parse(line)
        except Exception:
            return VerificationResult(False, seq, f"event {seq}: invalid JSON")
        if not isinstance(event, dict) or set(event) != {"seq", "prev_hash", "type", "payload"}:
            return VerificationResult(False, seq, f"event {seq}: malformed envelope")
        if canonical.canonical_bytes(event) != bytes(line):
            return VerificationResult(False, seq, f"event {seq}: non-canonical bytes")
        if event["seq"] != seq:
            return VerificationResult(False, seq, f"event {seq}: seq field is {event['seq']}")
        if prev_line is not None:
            prev = compute_digest(prev_line)
        try:
            stored_prev = Digest.parse(event["prev_hash"])
        except Exception:
            return VerificationResult(False, seq, f"event {seq}: bad prev_hash")
        if stored_prev != prev:
            return VerificationResult(False, seq, f"event {seq}: hash chain broken")
        prev_line = bytes(line)
    return VerificationResult(True, None, "ok")
