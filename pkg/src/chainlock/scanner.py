"""Dependency-surface measurement: manifests, transitive closure, LOC.

Reproduces the measurement methodology on local trees and an offline
registry index: detect dependency manifests across four ecosystem dialects,
parse their declarations, resolve the transitive closure against the index,
count source lines of code, and emit the inter-project graph.

The registry client is an interface with a local-directory implementation
(one JSON file per package under ``index/<ecosystem>/<name>.json``); nothing
here talks to a live registry.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Protocol, Sequence

from chainlock import canonical
from chainlock.errors import IoFailure, ParseFailure, UnresolvablePackage
from chainlock.model import Layer

MANIFEST_SKIP_DIRS = frozenset({"test", "tests", "examples", "bench", "vendor"})
LOC_SKIP_DIRS = frozenset({"vendor"})


class Ecosystem(Enum):
    PY_FLAT = "py_flat"
    TOML_DEPS = "toml_deps"
    GO_MOD = "go_mod"
    JSON_DEPS = "json_deps"


_MANIFEST_NAMES: dict[str, Ecosystem] = {
    "requirements.txt": Ecosystem.PY_FLAT,
    "Cargo.toml": Ecosystem.TOML_DEPS,
    "go.mod": Ecosystem.GO_MOD,
    "package.json": Ecosystem.JSON_DEPS,
}

Version = tuple[int, int, int]

_VERSION_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)$")


def parse_version(text: str, line: int | None = None) -> Version:
    """Parse a dotted numeric triple; pre-release tags are rejected."""
    match = _VERSION_RE.match(text)
    if not match:
        raise ParseFailure(f"invalid version {text!r} (expected x.y.z)", line)
    return (int(match.group(1)), int(match.group(2)), int(match.group(3)))


def format_version(version: Version) -> str:
    return ".".join(str(part) for part in version)


class ReqOp(Enum):
    EXACT = "exact"
    AT_LEAST = "at_least"
    COMPATIBLE_WITHIN_MAJOR = "compatible_within_major"
    ANY = "any"


@dataclass(frozen=True)
class VersionReq:
    op: ReqOp
    version: Version | None = None

    def __post_init__(self) -> None:
        if self.op is ReqOp.ANY:
            if self.version is not None:
                raise ValueError("any-requirement carries no version")
        elif self.version is None:
            raise ValueError(f"{self.op.value} requirement needs a version")

    def satisfied_by(self, candidate: Version) -> bool:
        if self.op is ReqOp.ANY:
            return True
        assert self.version is not None
        if self.op is ReqOp.EXACT:
            return candidate == self.version
        if self.op is ReqOp.AT_LEAST:
            return candidate >= self.version
        return candidate[0] == self.version[0] and candidate >= self.version

    def __str__(self) -> str:
        if self.op is ReqOp.ANY:
            return "*"
        text = format_version(self.version)  # type: ignore[arg-type]
        if self.op is ReqOp.EXACT:
            return text
        if self.op is ReqOp.AT_LEAST:
            return f">={text}"
        return f"^{text}"

    @classmethod
    def parse(cls, text: str, line: int | None = None) -> "VersionReq":
        """Parse the index/report requirement notation: ``1.2.3``, ``>=1.2.3``,
        ``^1.2.3``, or ``*``."""
        text = text.strip()
        if text == "*":
            return cls(ReqOp.ANY)
        if text.startswith(">="):
            return cls(ReqOp.AT_LEAST, parse_version(text[2:], line))
        if text.startswith("^"):
            return cls(ReqOp.COMPATIBLE_WITHIN_MAJOR, parse_version(text[1:], line))
        return cls(ReqOp.EXACT, parse_version(text, line))


@dataclass(frozen=True)
class PackageRef:
    ecosystem: Ecosystem
    name: str
    requirement: VersionReq

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("package name must be non-empty")
        if self.ecosystem is Ecosystem.PY_FLAT:
            # That ecosystem's convention: names compare case-insensitively.
            object.__setattr__(self, "name", self.name.lower())

    @property
    def key(self) -> str:
        return f"{self.ecosystem.value}:{self.name}"


# -- manifest detection ------------------------------------------------------


def detect_manifests(root: str | Path) -> list[tuple[Path, Ecosystem]]:
    """Find every recognized manifest outside the skipped subtrees.

    Subdirectories named test, tests, examples, bench, or vendor are skipped
    at any depth. Output is sorted by path for determinism.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoFailure(f"not a readable directory: {root}")
    found: list[tuple[Path, Ecosystem]] = []
    try:
        for dirpath, dirnames, filenames in os.walk(root):
            dirnames[:] = sorted(d for d in dirnames if d not in MANIFEST_SKIP_DIRS)
            for filename in sorted(filenames):
                eco = _MANIFEST_NAMES.get(filename)
                if eco is not None:
                    found.append((Path(dirpath) / filename, eco))
    except OSError as exc:
        raise IoFailure(f"cannot walk {root}: {exc}") from exc
    found.sort(key=lambda item: str(item[0]))
    return found


# -- dialect parsers ---------------------------------------------------------

_PY_LINE_RE = re.compile(r"^([A-Za-z0-9][A-Za-z0-9._-]*)\s*(==|>=)?\s*(\S+)?$")
_TOML_SECTION_RE = re.compile(r"^\[(.+)\]$")
_TOML_DEP_RE = re.compile(r'^([A-Za-z0-9][A-Za-z0-9._-]*)\s*=\s*"([^"]*)"$')
_GO_REQUIRE_RE = re.compile(r"^require\s+(\S+)\s+v(\S+)$")
_GO_BLOCK_ENTRY_RE = re.compile(r"^(\S+)\s+v(\S+)$")
_GO_DIRECTIVES = ("module", "go", "toolchain", "replace", "exclude", "retract")


def parse_manifest(
    data: bytes, ecosystem: Ecosystem
) -> tuple[list[PackageRef], list[str]]:
    """Extract declared dependencies from manifest bytes.

    Returns (refs, warnings): lines outside the recognized constructs are
    skipped with a warning; recognized constructs that violate the grammar
    raise ParseFailure with their position.
    """
    if ecosystem is Ecosystem.PY_FLAT:
        return _parse_py_flat(data)
    if ecosystem is Ecosystem.TOML_DEPS:
        return _parse_toml_deps(data)
    if ecosystem is Ecosystem.GO_MOD:
        return _parse_go_mod(data)
    if ecosystem is Ecosystem.JSON_DEPS:
        return _parse_json_deps(data)
    raise ValueError(f"unknown ecosystem: {ecosystem!r}")


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseFailure(f"manifest is not UTF-8: {exc}") from exc


def _parse_py_flat(data: bytes) -> tuple[list[PackageRef], list[str]]:
    refs: list[PackageRef] = []
    warnings: list[str] = []
    for lineno, raw in enumerate(_decode(data).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _PY_LINE_RE.match(line)
        if not match:
            warnings.append(f"line {lineno}: unrecognized requirement {raw.strip()!r}")
            continue
        name, op, version = match.groups()
        if op is None:
            if version is not None:
                warnings.append(f"line {lineno}: unrecognized requirement {raw.strip()!r}")
                continue
            req = VersionReq(ReqOp.ANY)
        else:
            if version is None:
                raise ParseFailure(f"missing version after {op!r}", lineno)
            parsed = parse_version(version, lineno)
            req = VersionReq(
                ReqOp.EXACT if op == "==" else ReqOp.AT_LEAST, parsed
            )
        refs.append(PackageRef(Ecosystem.PY_FLAT, name, req))
    return refs, warnings


def format_py_flat(refs: Iterable[PackageRef]) -> str:
    """Render PyFlat refs back to requirement lines (the parse inverse)."""
    lines = []
    for ref in refs:
        if ref.requirement.op is ReqOp.ANY:
            lines.append(ref.name)
        elif ref.requirement.op is ReqOp.EXACT:
            lines.append(f"{ref.name}=={format_version(ref.requirement.version)}")
        elif ref.requirement.op is ReqOp.AT_LEAST:
            lines.append(f"{ref.name}>={format_version(ref.requirement.version)}")
        else:
            raise ValueError(f"{ref.requirement.op.value} has no PyFlat notation")
    return "\n".join(lines) + ("\n" if lines else "")


def _parse_toml_deps(data: bytes) -> tuple[list[PackageRef], list[str]]:
    refs: list[PackageRef] = []
    warnings: list[str] = []
    in_dependencies = False
    for lineno, raw in enumerate(_decode(data).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        section = _TOML_SECTION_RE.match(line)
        if section:
            in_dependencies = section.group(1).strip() == "dependencies"
            continue
        if not in_dependencies:
            continue
        match = _TOML_DEP_RE.match(line)
        if not match:
            warnings.append(f"line {lineno}: unrecognized dependency {raw.strip()!r}")
            continue
        name, spec = match.groups()
        if spec.startswith("^"):
            req = VersionReq(
                ReqOp.COMPATIBLE_WITHIN_MAJOR, parse_version(spec[1:], lineno)
            )
        else:
            req = VersionReq(ReqOp.EXACT, parse_version(spec, lineno))
        refs.append(PackageRef(Ecosystem.TOML_DEPS, name, req))
    return refs, warnings


def _parse_go_mod(data: bytes) -> tuple[list[PackageRef], list[str]]:
    refs: list[PackageRef] = []
    warnings: list[str] = []
    in_block = False
    for lineno, raw in enumerate(_decode(data).splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        if in_block:
            if line == ")":
                in_block = False
                continue
            match = _GO_BLOCK_ENTRY_RE.match(line)
            if not match:
                warnings.append(f"line {lineno}: unrecognized require entry {raw.strip()!r}")
                continue
            refs.append(
                PackageRef(
                    Ecosystem.GO_MOD,
                    match.group(1),
                    VersionReq(ReqOp.EXACT, parse_version(match.group(2), lineno)),
                )
            )
            continue
        if line == "require (":
            in_block = True
            continue
        match = _GO_REQUIRE_RE.match(line)
        if match:
            refs.append(
                PackageRef(
                    Ecosystem.GO_MOD,
                    match.group(1),
                    VersionReq(ReqOp.EXACT, parse_version(match.group(2), lineno)),
                )
            )
            continue
        if line.split(None, 1)[0] in _GO_DIRECTIVES:
            continue
        warnings.append(f"line {lineno}: unrecognized line {raw.strip()!r}")
    return refs, warnings


def _parse_json_deps(data: bytes) -> tuple[list[PackageRef], list[str]]:
    import json

    try:
        document = json.loads(_decode(data))
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(document, dict):
        raise ParseFailure("manifest root must be an object")
    refs: list[PackageRef] = []
    warnings: list[str] = []
    dependencies = document.get("dependencies", {})
    if not isinstance(dependencies, dict):
        raise ParseFailure('"dependencies" must be an object')
    for name in sorted(dependencies):
        spec = dependencies[name]
        if not isinstance(spec, str):
            warnings.append(f"dependency {name!r}: non-string requirement skipped")
            continue
        if spec == "*":
            req = VersionReq(ReqOp.ANY)
        elif spec.startswith("^"):
            req = VersionReq(ReqOp.COMPATIBLE_WITHIN_MAJOR, parse_version(spec[1:]))
        elif spec.startswith(">="):
            req = VersionReq(ReqOp.AT_LEAST, parse_version(spec[2:]))
        elif _VERSION_RE.match(spec):
            req = VersionReq(ReqOp.EXACT, parse_version(spec))
        else:
            warnings.append(f"dependency {name!r}: unrecognized requirement {spec!r}")
            continue
        refs.append(PackageRef(Ecosystem.JSON_DEPS, name, req))
    return refs, warnings


# -- registry index ----------------------------------------------------------


@dataclass(frozen=True)
class LocCounts:
    code: int = 0
    comment: int = 0
    blank: int = 0

    @property
    def total(self) -> int:
        return self.code + self.comment + self.blank

    def __add__(self, other: "LocCounts") -> "LocCounts":
        return LocCounts(
            self.code + other.code,
            self.comment + other.comment,
            self.blank + other.blank,
        )

    def to_json_value(self) -> dict[str, int]:
        return {"code": self.code, "comment": self.comment, "blank": self.blank}

    @classmethod
    def from_json_value(cls, value: Mapping[str, int]) -> "LocCounts":
        return cls(value.get("code", 0), value.get("comment", 0), value.get("blank", 0))


@dataclass(frozen=True)
class VersionEntry:
    version: Version
    deps: tuple[PackageRef, ...]
    loc: LocCounts | None = None


class Registry(Protocol):
    """Read-only package index: versions and their direct dependencies."""

    def versions(self, ecosystem: Ecosystem, name: str) -> list[VersionEntry] | None: ...


class InMemoryRegistry:
    def __init__(self) -> None:
        self._packages: dict[tuple[str, str], list[VersionEntry]] = {}

    def add(self, ecosystem: Ecosystem, name: str, entries: Iterable[VersionEntry]) -> None:
        ordered = sorted(entries, key=lambda e: e.version)
        versions = [e.version for e in ordered]
        if len(set(versions)) != len(versions):
            raise ValueError(f"duplicate versions for {ecosystem.value}:{name}")
        self._packages[(ecosystem.value, name)] = ordered

    def versions(self, ecosystem: Ecosystem, name: str) -> list[VersionEntry] | None:
        return self._packages.get((ecosystem.value, name))


class DirectoryRegistry:
    """Offline index: ``<root>/<ecosystem>/<name>.json`` per package.

    Each file holds ``{"versions": [{"version": "x.y.z", "deps": [{"name":
    ..., "req": ...}], "loc": {...}?}]}``; the loc block is optional.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def versions(self, ecosystem: Ecosystem, name: str) -> list[VersionEntry] | None:
        path = self.root / ecosystem.value / f"{name}.json"
        if not path.is_file():
            return None
        document = canonical.parse(path.read_bytes())
        entries = []
        for raw in document.get("versions", []):
            deps = tuple(
                PackageRef(ecosystem, d["name"], VersionReq.parse(d["req"]))
                for d in raw.get("deps", [])
            )
            loc_raw = raw.get("loc")
            entries.append(
                VersionEntry(
                    version=parse_version(raw["version"]),
                    deps=deps,
                    loc=LocCounts.from_json_value(loc_raw) if loc_raw else None,
                )
            )
        entries.sort(key=lambda e: e.version)
        if len({e.version for e in entries}) != len(entries):
            raise ParseFailure(f"duplicate versions in index entry {path}")
        return entries


# -- transitive resolution ----------------------------------------------------


@dataclass(frozen=True)
class ResolvedPackage:
    ecosystem: Ecosystem
    name: str
    version: Version
    loc: LocCounts | None = None

    @property
    def key(self) -> str:
        return f"{self.ecosystem.value}:{self.name}"

    def to_json_value(self) -> dict[str, Any]:
        return {
            "ecosystem": self.ecosystem.value,
            "name": self.name,
            "version": format_version(self.version),
        }


@dataclass(frozen=True)
class ResolvedGraph:
    """Closure of a direct set with one unified version per package."""

    nodes: tuple[ResolvedPackage, ...]
    edges: tuple[tuple[str, str], ...]  # (dependent key, dependency key)
    roots: tuple[str, ...]

    def to_json_value(self) -> dict[str, Any]:
        return {
            "nodes": [n.to_json_value() for n in self.nodes],
            "edges": [{"from": a, "to": b} for a, b in self.edges],
            "roots": list(self.roots),
        }


def _select_version(
    ref: PackageRef, entries: Sequence[VersionEntry], chain: tuple[str, ...]
) -> VersionEntry:
    if ref.requirement.op is ReqOp.EXACT:
        for entry in entries:
            if entry.version == ref.requirement.version:
                return entry
        raise UnresolvablePackage(
            f"{ref.key} has no version {format_version(ref.requirement.version)}",  # type: ignore[arg-type]
            chain,
        )
    best: VersionEntry | None = None
    for entry in entries:
        if ref.requirement.satisfied_by(entry.version):
            if best is None or entry.version > best.version:
                best = entry
    if best is None:
        raise UnresolvablePackage(
            f"{ref.key} has no version satisfying {ref.requirement}", chain
        )
    return best


def resolve_transitive(direct: Sequence[PackageRef], registry: Registry) -> ResolvedGraph:
    """Breadth-first fixpoint with single-version unification.

    One version per (ecosystem, name): when two requirement paths select
    different versions the higher wins and the edge set is rewritten to it.
    Dependency cycles in the index terminate through the selection set.
    """
    selected: dict[str, VersionEntry] = {}
    eco_of: dict[str, Ecosystem] = {}
    queue: list[tuple[PackageRef, tuple[str, ...]]] = [
        (ref, ("<direct>",)) for ref in direct
    ]
    while queue:
        ref, chain = queue.pop(0)
        entries = registry.versions(ref.ecosystem, ref.name)
        if entries is None:
            raise UnresolvablePackage(f"{ref.key} is not in the index", chain)
        entry = _select_version(ref, entries, chain)
        current = selected.get(ref.key)
        if current is not None and current.version >= entry.version:
            continue
        selected[ref.key] = entry
        eco_of[ref.key] = ref.ecosystem
        next_chain = chain + (f"{ref.key} {format_version(entry.version)}",)
        for dep in entry.deps:
            queue.append((dep, next_chain))

    # Rebuild edges from the final selections, then prune anything no longer
    # reachable from the roots (orphans left behind by version rewrites).
    edge_map: dict[str, set[str]] = {}
    for key, entry in selected.items():
        edge_map[key] = {dep.key for dep in entry.deps}
    roots = sorted({ref.key for ref in direct})
    reachable: set[str] = set()
    stack = [key for key in roots if key in selected]
    while stack:
        key = stack.pop()
        if key in reachable:
            continue
        reachable.add(key)
        stack.extend(edge_map.get(key, ()))

    nodes = tuple(
        ResolvedPackage(
            ecosystem=eco_of[key],
            name=key.split(":", 1)[1],
            version=selected[key].version,
            loc=selected[key].loc,
        )
        for key in sorted(reachable)
    )
    edges = tuple(
        sorted(
            (src, dst)
            for src in reachable
            for dst in edge_map.get(src, ())
            if dst in reachable
        )
    )
    return ResolvedGraph(nodes=nodes, edges=edges, roots=tuple(roots))


# -- lines of code -------------------------------------------------------------


class CommentProfile(Enum):
    POUND = "pound"  # '#' line comments, no block form
    C_LIKE = "c_like"  # '//' line comments, '/* */' blocks (no nesting)


DEFAULT_PROFILES: dict[str, CommentProfile] = {
    ".py": CommentProfile.POUND,
    ".sh": CommentProfile.POUND,
    ".rb": CommentProfile.POUND,
    ".yaml": CommentProfile.POUND,
    ".yml": CommentProfile.POUND,
    ".toml": CommentProfile.POUND,
    ".c": CommentProfile.C_LIKE,
    ".h": CommentProfile.C_LIKE,
    ".cc": CommentProfile.C_LIKE,
    ".cpp": CommentProfile.C_LIKE,
    ".hpp": CommentProfile.C_LIKE,
    ".go": CommentProfile.C_LIKE,
    ".rs": CommentProfile.C_LIKE,
    ".js": CommentProfile.C_LIKE,
    ".ts": CommentProfile.C_LIKE,
    ".java": CommentProfile.C_LIKE,
    ".scala": CommentProfile.C_LIKE,
}


def profile_for_path(path: str | Path) -> CommentProfile | None:
    return DEFAULT_PROFILES.get(Path(path).suffix.lower())


@dataclass(frozen=True)
class FileLoc:
    counts: LocCounts
    warning: str | None = None


def count_loc(data: bytes, profile: CommentProfile) -> FileLoc:
    """Classify each physical line as code, comment, or blank.

    Blank lines are whitespace-only (even inside block comments); a comment
    line either starts with the line-comment marker or lies wholly inside a
    block comment; anything else, including mixed code+trailing-comment,
    is code. Non-UTF-8 content is counted as code lines with a warning.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        line_count = len(data.splitlines())
        return FileLoc(
            LocCounts(code=line_count), warning="not UTF-8; counted all lines as code"
        )
    code = comment = blank = 0
    in_block = False
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            blank += 1
            continue
        if profile is CommentProfile.POUND:
            if in_block:  # unreachable for this profile, kept for symmetry
                comment += 1
            elif stripped.startswith("#"):
                comment += 1
            else:
                code += 1
            continue
        has_code, in_block = _scan_c_line(line, in_block)
        if has_code:
            code += 1
        else:
            comment += 1
    return FileLoc(LocCounts(code=code, comment=comment, blank=blank))


def _scan_c_line(line: str, in_block: bool) -> tuple[bool, bool]:
    """Whether any non-comment, non-whitespace content exists on the line,
    and the block-comment state after it."""
    has_code = False
    pos = 0
    length = len(line)
    while pos < length:
        if in_block:
            end = line.find("*/", pos)
            if end == -1:
                return has_code, True
            pos = end + 2
            in_block = False
            continue
        char = line[pos]
        if char in " \t":
            pos += 1
            continue
        if line.startswith("//", pos):
            return has_code, False
        if line.startswith("/*", pos):
            in_block = True
            pos += 2
            continue
        has_code = True
        pos += 1
    return has_code, in_block


@dataclass(frozen=True)
class LocReport:
    files: Mapping[str, FileLoc]
    total: LocCounts
    by_profile: Mapping[str, LocCounts]

    def to_json_value(self) -> dict[str, Any]:
        return {
            "files": {
                path: {
                    "counts": entry.counts.to_json_value(),
                    "warning": entry.warning,
                }
                for path, entry in sorted(self.files.items())
            },
            "total": self.total.to_json_value(),
            "by_profile": {
                name: counts.to_json_value()
                for name, counts in sorted(self.by_profile.items())
            },
        }


def count_loc_tree(root: str | Path, skip_dirs: frozenset[str] = LOC_SKIP_DIRS) -> LocReport:
    """LOC over every profiled file under ``root``, excluding skip dirs.

    Files without a registered extension profile are not counted.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoFailure(f"not a readable directory: {root}")
    files: dict[str, FileLoc] = {}
    total = LocCounts()
    by_profile: dict[str, LocCounts] = {}
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in skip_dirs)
        for filename in sorted(filenames):
            path = Path(dirpath) / filename
            profile = profile_for_path(path)
            if profile is None:
                continue
            entry = count_loc(path.read_bytes(), profile)
            rel = path.relative_to(root).as_posix()
            files[rel] = entry
            total = total + entry.counts
            by_profile[profile.value] = (
                by_profile.get(profile.value, LocCounts()) + entry.counts
            )
    return LocReport(files=files, total=total, by_profile=by_profile)


# -- stack scan ----------------------------------------------------------------


@dataclass(frozen=True)
class ProjectSpec:
    name: str
    root: Path
    layer: Layer
    uses: tuple[str, ...] = ()

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any], base: Path) -> "ProjectSpec":
        return cls(
            name=value["name"],
            root=(base / value["root"]).resolve(),
            layer=Layer(value["layer"]),
            uses=tuple(value.get("uses", [])),
        )


@dataclass(frozen=True)
class ProjectResult:
    name: str
    layer: Layer
    direct_count: int
    transitive_count: int
    loc: LocCounts
    direct: tuple[str, ...]
    transitive: tuple[str, ...]
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    def to_json_value(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "layer": self.layer.value,
            "direct_count": self.direct_count,
            "transitive_count": self.transitive_count,
            "loc": self.loc.to_json_value(),
            "direct": list(self.direct),
            "transitive": list(self.transitive),
            "errors": list(self.errors),
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class StackReport:
    projects: tuple[ProjectResult, ...]
    total_direct: int
    total_transitive: int
    loc: LocCounts
    transitive_loc: LocCounts
    transitive_loc_known: bool
    per_layer_loc: Mapping[str, LocCounts]
    graph_nodes: tuple[tuple[str, str], ...]  # (project, layer)
    graph_edges: tuple[tuple[str, str], ...]

    def to_json_value(self) -> dict[str, Any]:
        ratio: float | None = None
        if self.transitive_loc_known and self.loc.code > 0:
            ratio = self.transitive_loc.code / self.loc.code
        return {
            "projects": [p.to_json_value() for p in self.projects],
            "aggregates": {
                "total_direct": self.total_direct,
                "total_transitive": self.total_transitive,
                "loc": self.loc.to_json_value(),
                "transitive_loc": (
                    self.transitive_loc.to_json_value()
                    if self.transitive_loc_known
                    else None
                ),
                "transitive_to_direct_loc_ratio": ratio,
                "per_layer_loc": {
                    layer: counts.to_json_value()
                    for layer, counts in sorted(self.per_layer_loc.items())
                },
            },
            "graph": {
                "nodes": [
                    {"id": name, "layer": layer} for name, layer in self.graph_nodes
                ],
                "edges": [{"from": a, "to": b} for a, b in self.graph_edges],
            },
        }

    def to_dot(self) -> str:
        from chainlock.dot import LAYER_COLORS, render_dot

        nodes = [
            (name, {"label": name, "fillcolor": LAYER_COLORS[layer], "style": "filled"})
            for name, layer in self.graph_nodes
        ]
        return render_dot("stack", nodes, list(self.graph_edges))


def scan_project(spec: ProjectSpec, registry: Registry) -> ProjectResult:
    """Scan one project: manifests, closure, own LOC.

    Per-manifest failures are annotations, not aborts, so a stack scan can
    degrade gracefully.
    """
    result, _ = _scan_project(spec, registry)
    return result


def _scan_project(
    spec: ProjectSpec, registry: Registry
) -> tuple[ProjectResult, tuple[ResolvedPackage, ...]]:
    errors: list[str] = []
    warnings: list[str] = []
    direct_refs: dict[str, PackageRef] = {}
    try:
        manifests = detect_manifests(spec.root)
    except IoFailure as exc:
        manifests = []
        errors.append(str(exc))
    for path, eco in manifests:
        try:
            refs, parse_warnings = parse_manifest(path.read_bytes(), eco)
        except ParseFailure as exc:
            errors.append(f"{path.name}: {exc}")
            continue
        warnings.extend(f"{path.name}: {w}" for w in parse_warnings)
        for ref in refs:
            direct_refs.setdefault(ref.key, ref)

    transitive_keys: tuple[str, ...] = ()
    transitive_nodes: tuple[ResolvedPackage, ...] = ()
    try:
        graph = resolve_transitive(list(direct_refs.values()), registry)
        transitive_keys = tuple(sorted(node.key for node in graph.nodes))
        transitive_nodes = graph.nodes
    except UnresolvablePackage as exc:
        errors.append(str(exc))

    try:
        loc = count_loc_tree(spec.root).total
    except IoFailure as exc:
        loc = LocCounts()
        errors.append(str(exc))

    result = ProjectResult(
        name=spec.name,
        layer=spec.layer,
        direct_count=len(direct_refs),
        transitive_count=len(transitive_keys),
        loc=loc,
        direct=tuple(sorted(direct_refs)),
        transitive=transitive_keys,
        errors=tuple(errors),
        warnings=tuple(warnings),
    )
    return result, transitive_nodes


def scan_stack(projects: Sequence[ProjectSpec], registry: Registry) -> StackReport:
    """Scan a project stack and aggregate: transitive counts deduplicate by
    (ecosystem, name) across projects; direct counts sum per project."""
    names = [p.name for p in projects]
    if len(set(names)) != len(names):
        raise ValueError("project names must be unique")
    known = set(names)

    scanned = [
        _scan_project(spec, registry) for spec in sorted(projects, key=lambda p: p.name)
    ]
    results = [result for result, _ in scanned]

    dedup: dict[str, ResolvedPackage] = {}
    for _, nodes in scanned:
        for node in nodes:
            current = dedup.get(node.key)
            if current is None or node.version > current.version:
                dedup[node.key] = node

    transitive_loc = LocCounts()
    loc_known = bool(dedup)
    for node in dedup.values():
        if node.loc is None:
            loc_known = False
        else:
            transitive_loc = transitive_loc + node.loc

    per_layer: dict[str, LocCounts] = {layer.value: LocCounts() for layer in Layer}
    total_loc = LocCounts()
    for result in results:
        per_layer[result.layer.value] = per_layer[result.layer.value] + result.loc
        total_loc = total_loc + result.loc

    graph_nodes = tuple((r.name, r.layer.value) for r in results)
    edges: list[tuple[str, str]] = []
    annotated_results: list[ProjectResult] = []
    by_name = {spec.name: spec for spec in projects}
    for result in results:
        spec = by_name[result.name]
        extra_errors = list(result.errors)
        for used in spec.uses:
            if used not in known:
                extra_errors.append(f"declared use of unknown project {used!r}")
                continue
            edges.append((result.name, used))
        if len(extra_errors) != len(result.errors):
            result = ProjectResult(
                name=result.name,
                layer=result.layer,
                direct_count=result.direct_count,
                transitive_count=result.transitive_count,
                loc=result.loc,
                direct=result.direct,
                transitive=result.transitive,
                errors=tuple(extra_errors),
                warnings=result.warnings,
            )
        annotated_results.append(result)

    return StackReport(
        projects=tuple(annotated_results),
        total_direct=sum(r.direct_count for r in annotated_results),
        total_transitive=len(dedup),
        loc=total_loc,
        transitive_loc=transitive_loc,
        transitive_loc_known=loc_known,
        per_layer_loc=per_layer,
        graph_nodes=graph_nodes,
        graph_edges=tuple(sorted(edges)),
    )


def load_stack_config(path: str | Path) -> list[ProjectSpec]:
    path = Path(path)
    document = canonical.parse(path.read_bytes())
    base = path.parent
    return [ProjectSpec.from_json_value(raw, base) for raw in document.get("projects", [])]
