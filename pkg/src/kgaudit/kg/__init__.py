"""Knowledge-graph core: data model, ingestion and traversal queries."""

from .backend import kernel_backend
from .engine import (
    GraphEngine,
    ancestor_set,
    engine_for,
    neighborhood,
    reach,
    reachable_set,
    shortest_paths,
)
from .loader import load_kg
from .model import (
    DirectionalityPolicy,
    Entity,
    EntityId,
    EntityKind,
    KnowledgeGraph,
    Path,
    RelationEdge,
    Subgraph,
)

__all__ = [
    "DirectionalityPolicy",
    "Entity",
    "EntityId",
    "EntityKind",
    "GraphEngine",
    "KnowledgeGraph",
    "Path",
    "RelationEdge",
    "Subgraph",
    "ancestor_set",
    "engine_for",
    "kernel_backend",
    "load_kg",
    "neighborhood",
    "reach",
    "reachable_set",
    "shortest_paths",
]
