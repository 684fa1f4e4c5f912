from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from kgaudit.kg import (
    DirectionalityPolicy,
    Entity,
    EntityKind,
    KnowledgeGraph,
    RelationEdge,
    load_kg,
)

FIXTURES = resources.files("kgaudit") / "fixtures" / "toy7"


def make_graph(nodes, edges, directed=("parent-of",)) -> KnowledgeGraph:
    """Build a graph straight from row tuples, bypassing file I/O."""
    entities = {eid: Entity(eid, name, EntityKind.from_label(kind)) for eid, name, kind in nodes}
    edge_objs = [RelationEdge(s, r, d) for s, r, d in edges]
    return KnowledgeGraph(entities, edge_objs, DirectionalityPolicy(frozenset(directed)))


def write_kg_files(tmp_path: Path, nodes, edges) -> tuple[Path, Path]:
    nodes_path = tmp_path / "nodes.tsv"
    edges_path = tmp_path / "edges.tsv"
    nodes_path.write_text(
        "id\tname\ttype\n" + "".join(f"{i}\t{n}\t{k}\n" for i, n, k in nodes),
        encoding="utf-8",
    )
    edges_path.write_text(
        "src\trelation\tdst\n" + "".join(f"{s}\t{r}\t{d}\n" for s, r, d in edges),
        encoding="utf-8",
    )
    return nodes_path, edges_path


@pytest.fixture(scope="session")
def toy7_graph() -> KnowledgeGraph:
    return load_kg(str(FIXTURES / "nodes.tsv"), str(FIXTURES / "edges.tsv"))


@pytest.fixture(scope="session")
def toy7b_graph() -> KnowledgeGraph:
    return load_kg(str(FIXTURES / "nodes.tsv"), str(FIXTURES / "edges_b.tsv"))
