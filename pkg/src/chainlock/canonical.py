"""Canonical JSON: one unique byte serialization per structured value.

Every signature, digest, and deterministic file format in the toolkit is
defined over these bytes, so the rules are strict:

- object keys sorted lexicographically by their UTF-8 bytes (for valid
  Unicode this equals code-point order, which is what ``sort_keys`` gives),
- no insignificant whitespace,
- numbers in shortest round-trip decimal form (Python's repr),
- strings encoded UTF-8 with minimal escaping.

Non-finite numbers have no JSON form and are rejected rather than
approximated.
"""

from __future__ import annotations

import json
import math
from typing import Any

from chainlock.errors import NonCanonicalizable

JsonValue = None | bool | int | float | str | list | tuple | dict


def _check(value: Any, path: str) -> None:
    if value is None or isinstance(value, (bool, str)):
        return
    if isinstance(value, int):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise NonCanonicalizable(f"non-finite number at {path}: {value!r}")
        return
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise NonCanonicalizable(f"non-string object key at {path}: {key!r}")
            _check(item, f"{path}.{key}")
        return
    raise NonCanonicalizable(f"unsupported type at {path}: {type(value).__name__}")


def canonical_text(value: JsonValue) -> str:
    """Serialize ``value`` to its canonical JSON text."""
    _check(value, "$")
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )


def canonical_bytes(value: JsonValue) -> bytes:
    """Serialize ``value`` to its canonical JSON bytes (UTF-8)."""
    return canonical_text(value).encode("utf-8")


def parse(data: bytes | str) -> Any:
    """Parse JSON text or bytes; the inverse of :func:`canonical_bytes`."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)
