"""Graph data model: entities, relation edges, and the derived traversal graph.

The traversal graph is the mixed-direction view of the knowledge graph:
hierarchy-like relation types keep their direction, every other relation
type contributes arcs both ways. Reachability, ancestor and path queries
all run over this structure.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..exceptions import DataError, UnknownEntityError

EntityId = str

DEFAULT_DIRECTED_RELATIONS = frozenset({"parent-of"})


class EntityKind(str, Enum):
    DISEASE = "Disease"
    SYMPTOM = "Symptom"
    OTHER = "Other"

    @classmethod
    def from_label(cls, label: str) -> "EntityKind":
        """Map a raw type label onto a kind; unrecognized labels become OTHER."""
        norm = label.strip().lower()
        if norm == "disease":
            return cls.DISEASE
        if norm == "symptom":
            return cls.SYMPTOM
        return cls.OTHER


@dataclass(frozen=True)
class Entity:
    id: EntityId
    name: str
    kind: EntityKind = EntityKind.OTHER


@dataclass(frozen=True)
class RelationEdge:
    src: EntityId
    relation: str
    dst: EntityId


@dataclass(frozen=True)
class DirectionalityPolicy:
    """Which relation types keep their direction; everything else is bidirectional."""

    directed_relations: frozenset[str] = DEFAULT_DIRECTED_RELATIONS

    def is_directed(self, relation: str) -> bool:
        return relation in self.directed_relations


@dataclass(frozen=True)
class Path:
    """A directed walk in the traversal graph.

    ``relations[i]`` labels the hop from ``nodes[i]`` to ``nodes[i+1]``;
    a zero-length path has a single node and no relations.
    """

    nodes: tuple[EntityId, ...]
    relations: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("a path needs at least one node")
        if len(self.relations) != len(self.nodes) - 1:
            raise ValueError("each hop needs exactly one relation label")

    def __len__(self) -> int:
        return len(self.nodes) - 1

    @property
    def pairs(self) -> tuple[tuple[EntityId, EntityId], ...]:
        return tuple(zip(self.nodes[:-1], self.nodes[1:]))

    def to_record(self) -> dict:
        return {"nodes": list(self.nodes), "relations": list(self.relations)}

    @classmethod
    def from_record(cls, rec: dict) -> "Path":
        return cls(tuple(rec["nodes"]), tuple(rec["relations"]))


class KnowledgeGraph:
    """Immutable entity/relation store plus the derived traversal adjacency.

    Parallel arcs between the same ordered node pair are collapsed in the
    traversal structure (reachability is multiplicity-invariant); the raw
    edge list keeps full multiplicity. Safe for concurrent reads once built.
    """

    def __init__(
        self,
        entities: dict[EntityId, Entity],
        edges: list[RelationEdge],
        policy: DirectionalityPolicy,
        dropped_edge_count: int = 0,
    ):
        self.entities = dict(entities)
        self.edges = list(edges)
        self.policy = policy
        self.dropped_edge_count = dropped_edge_count

        # Dense index: entity ids sorted lexicographically, fixed for the
        # lifetime of the graph. All kernel-level work uses these indices.
        self._ids: list[EntityId] = sorted(self.entities)
        self._index: dict[EntityId, int] = {eid: i for i, eid in enumerate(self._ids)}
        self._build_traversal()

    # -- construction -----------------------------------------------------

    def _build_traversal(self) -> None:
        n = len(self._ids)
        pair_rel: dict[tuple[int, int], str] = {}
        for e in self.edges:
            s = self._index[e.src]
            d = self._index[e.dst]
            arcs = [(s, d)] if self.policy.is_directed(e.relation) else [(s, d), (d, s)]
            for a in arcs:
                prev = pair_rel.get(a)
                # Collapsed parallel arcs carry the lexicographically
                # smallest relation label so path output is deterministic.
                if prev is None or e.relation < prev:
                    pair_rel[a] = e.relation

        arcs_sorted = sorted(pair_rel)
        m = len(arcs_sorted)
        src = np.fromiter((a[0] for a in arcs_sorted), dtype=np.int32, count=m)
        dst = np.fromiter((a[1] for a in arcs_sorted), dtype=np.int32, count=m)
        self.indptr = np.zeros(n + 1, dtype=np.int32)
        np.add.at(self.indptr, src + 1, 1)
        np.cumsum(self.indptr, out=self.indptr)
        self.indices = dst.copy()
        self.arc_relations: dict[tuple[int, int], str] = pair_rel

        # Reverse CSR, for ancestor queries and backward distances.
        rev_order = np.lexsort((src, dst))
        self.rev_indptr = np.zeros(n + 1, dtype=np.int32)
        np.add.at(self.rev_indptr, dst + 1, 1)
        np.cumsum(self.rev_indptr, out=self.rev_indptr)
        self.rev_indices = src[rev_order].copy()

        # Undirected skeleton (arc union both ways), built lazily.
        self._und_csr: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def num_entities(self) -> int:
        return len(self._ids)

    @property
    def num_arcs(self) -> int:
        return int(self.indices.shape[0])

    # -- id <-> index ------------------------------------------------------

    def index_of(self, entity_id: EntityId) -> int:
        try:
            return self._index[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity id: {entity_id!r}") from None

    def id_of(self, index: int) -> EntityId:
        return self._ids[index]

    def ids(self) -> list[EntityId]:
        return list(self._ids)

    def __contains__(self, entity_id: EntityId) -> bool:
        return entity_id in self.entities

    def entity(self, entity_id: EntityId) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity id: {entity_id!r}") from None

    def undirected_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR over the arc union ignoring direction; cached after first use."""
        if self._und_csr is None:
            n = self.num_entities
            pairs = set(self.arc_relations)
            pairs |= {(b, a) for (a, b) in pairs}
            arcs = sorted(pairs)
            src = np.fromiter((a for a, _ in arcs), dtype=np.int32, count=len(arcs))
            dst = np.fromiter((b for _, b in arcs), dtype=np.int32, count=len(arcs))
            indptr = np.zeros(n + 1, dtype=np.int32)
            np.add.at(indptr, src + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._und_csr = (indptr, dst.copy())
        return self._und_csr

    def relation_for_arc(self, src: EntityId, dst: EntityId) -> str:
        key = (self.index_of(src), self.index_of(dst))
        try:
            return self.arc_relations[key]
        except KeyError:
            raise DataError(f"no traversal arc {src!r} -> {dst!r}") from None

    def digest(self) -> str:
        """Content hash over entities, edges and policy (canonical order)."""
        h = hashlib.sha256()
        payload = {
            "entities": [
                [e.id, e.name, e.kind.value]
                for e in sorted(self.entities.values(), key=lambda e: e.id)
            ],
            "edges": sorted((e.src, e.relation, e.dst) for e in self.edges),
            "directed_relations": sorted(self.policy.directed_relations),
        }
        h.update(json.dumps(payload, ensure_ascii=False).encode("utf-8"))
        return h.hexdigest()


@dataclass(frozen=True)
class Subgraph:
    """Entities plus the traversal arcs among them (neighborhood queries)."""

    entity_ids: frozenset[EntityId]
    arcs: frozenset[tuple[EntityId, EntityId]]
    relations: dict[tuple[EntityId, EntityId], str] = field(hash=False, default_factory=dict)
