"""Deterministic DOT rendering shared by the lineage and scanner graphs."""

from __future__ import annotations

from typing import Iterable, Mapping

LAYER_COLORS = {
    "data_acquisition": "#6baed6",
    "training": "#9e9ac8",
    "inference_integration": "#74c476",
    "cross_cutting": "#969696",
}
POLICY_COLOR = "#fdae6b"


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(
    name: str,
    nodes: Iterable[tuple[str, Mapping[str, str]]],
    edges: Iterable[tuple[str, str]],
) -> str:
    """Render a digraph with nodes and edges sorted by id; attribute order
    within a node follows the caller's mapping (callers pass fixed orders)."""
    lines = [f"digraph {name} {{"]
    for node_id, attrs in sorted(nodes, key=lambda item: item[0]):
        rendered = ", ".join(f"{key}={_quote(value)}" for key, value in attrs.items())
        lines.append(f"  {_quote(node_id)} [{rendered}];")
    for src, dst in sorted(edges):
        lines.append(f"  {_quote(src)} -> {_quote(dst)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
