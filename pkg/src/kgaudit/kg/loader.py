"""Tab-separated node/edge file ingestion.

Node files carry ``id  name  type`` rows, edge files ``src  relation  dst``,
both with a header line. Strict mode (default) rejects edges that reference
unknown entities; lenient mode drops them and keeps a count.
"""

from __future__ import annotations

import logging
from pathlib import Path as FsPath

from ..exceptions import DataError
from .model import (
    DirectionalityPolicy,
    Entity,
    EntityKind,
    KnowledgeGraph,
    RelationEdge,
)

log = logging.getLogger(__name__)

NODE_HEADER = ["id", "name", "type"]
EDGE_HEADER = ["src", "relation", "dst"]


def _read_rows(path: FsPath, header: list[str]) -> list[tuple[int, list[str]]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if [c.strip() for c in first.rstrip("\n").split("\t")] != header:
            raise DataError(f"{path}: expected header {chr(9).join(header)!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} tab-separated columns, "
                    f"got {len(cols)}"
                )
            rows.append((lineno, cols))
    return rows


def load_kg(
    nodes_source: str | FsPath,
    edges_source: str | FsPath,
    policy: DirectionalityPolicy | None = None,
    strict: bool = True,
) -> KnowledgeGraph:
    """Load and validate a knowledge graph from node/edge TSV files."""
    nodes_path = FsPath(nodes_source)
    edges_path = FsPath(edges_source)
    policy = policy or DirectionalityPolicy()

    entities: dict[str, Entity] = {}
    for lineno, (eid, name, type_label) in _read_rows(nodes_path, NODE_HEADER):
        if not eid:
            raise DataError(f"{nodes_path}:{lineno}: empty entity id")
        if not name:
            raise DataError(f"{nodes_path}:{lineno}: empty entity name")
        if eid in entities:
            raise DataError(f"{nodes_path}:{lineno}: duplicate entity id {eid!r}")
        entities[eid] = Entity(eid, name, EntityKind.from_label(type_label))

    edges: list[RelationEdge] = []
    dropped = 0
    for lineno, (src, relation, dst) in _read_rows(edges_path, EDGE_HEADER):
        if not relation:
            raise DataError(f"{edges_path}:{lineno}: empty relation type")
        missing = [e for e in (src, dst) if e not in entities]
        if missing:
            if strict:
                raise DataError(
                    f"{edges_path}:{lineno}: edge references unknown entity "
                    f"{missing[0]!r}"
                )
            dropped += 1
            continue
        edges.append(RelationEdge(src, relation, dst))
    if dropped:
        log.warning("%s: dropped %d edge rows referencing unknown entities", edges_path, dropped)

    return KnowledgeGraph(entities, edges, policy, dropped_edge_count=dropped)
