"""Mention-to-entity alignment and case grounding.

Free-text mentions are resolved against the graph in three stages: exact
name match, embedding similarity above a threshold, then adjudication over
the top-k candidates. Grounded cases carry the model's reasoning paths
mapped onto graph entities plus reference paths from the question entities
to the correct answer.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path as FsPath

import numpy as np

from .exceptions import DataError, ProviderProtocolError
from .kg import EntityId, KnowledgeGraph, Path, engine_for
from .services import (
    Adjudicator,
    AlignChoice,
    EmbeddingProvider,
    Extract,
    PrunePaths,
)


class MentionOrigin(str, Enum):
    QUESTION = "Question"
    OPTION = "Option"
    MODEL_PATH = "ModelPath"


class AlignMethod(str, Enum):
    EXACT = "Exact"
    EMBEDDING = "Embedding"
    ADJUDICATED = "Adjudicated"
    UNALIGNED = "Unaligned"


@dataclass(frozen=True)
class Mention:
    text: str
    origin: MentionOrigin

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("mention text must be non-empty")


@dataclass(frozen=True)
class AlignmentResult:
    mention: Mention
    entity: EntityId | None
    method: AlignMethod
    similarity: float | None = None

    def to_record(self) -> dict:
        return {
            "text": self.mention.text,
            "origin": self.mention.origin.value,
            "entity": self.entity,
            "method": self.method.value,
            "similarity": self.similarity,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "AlignmentResult":
        return cls(
            Mention(rec["text"], MentionOrigin(rec["origin"])),
            rec["entity"],
            AlignMethod(rec["method"]),
            rec["similarity"],
        )


@dataclass(frozen=True)
class RawPathStep:
    entity_text: str
    relation_text: str = ""


@dataclass(frozen=True)
class RawPath:
    steps: tuple[RawPathStep, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a raw path needs at least one step")

    @classmethod
    def from_record(cls, rec: list[dict]) -> "RawPath":
        return cls(tuple(RawPathStep(s["entity_text"], s.get("relation_text", "")) for s in rec))


@dataclass(frozen=True)
class GroundedStep:
    entity: EntityId
    relation_label: str
    alignment: AlignmentResult


@dataclass(frozen=True)
class GroundedPath:
    steps: tuple[GroundedStep, ...]
    dropped_steps: int = 0

    @property
    def entity_ids(self) -> tuple[EntityId, ...]:
        return tuple(s.entity for s in self.steps)

    @property
    def pairs(self) -> tuple[tuple[EntityId, EntityId], ...]:
        ids = self.entity_ids
        return tuple(zip(ids[:-1], ids[1:]))

    def to_record(self) -> dict:
        return {
            "steps": [
                {
                    "entity": s.entity,
                    "relation_label": s.relation_label,
                    "alignment": s.alignment.to_record(),
                }
                for s in self.steps
            ],
            "dropped_steps": self.dropped_steps,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "GroundedPath":
        return cls(
            tuple(
                GroundedStep(
                    s["entity"],
                    s["relation_label"],
                    AlignmentResult.from_record(s["alignment"]),
                )
                for s in rec["steps"]
            ),
            rec["dropped_steps"],
        )


@dataclass(frozen=True)
class CaseRecord:
    """A corpus row as parsed, before any grounding."""

    id: str
    question: str
    options: tuple[str, ...]
    correct_answer: str
    predicted_answer: str
    question_entities: tuple[tuple[str, str], ...]  # (text, kind hint); may be empty
    model_paths: tuple[RawPath, ...]

    def __post_init__(self):
        if self.correct_answer not in self.options:
            raise DataError(f"case {self.id}: correct answer not among options")
        if self.predicted_answer not in self.options:
            raise DataError(f"case {self.id}: predicted answer not among options")


@dataclass(frozen=True)
class Case:
    """A fully grounded corpus case."""

    id: str
    question: str
    options: tuple[str, ...]
    correct_answer: str
    predicted_answer: str
    question_entities: tuple[AlignmentResult, ...]
    correct_entity: EntityId
    predicted_entity: EntityId
    model_paths: tuple[GroundedPath, ...]
    reference_paths: tuple[Path, ...]

    @property
    def is_correct(self) -> bool:
        # entity-level comparison: two option strings may alias one concept
        return self.correct_entity == self.predicted_entity

    def observed_pairs(self) -> set[tuple[EntityId, EntityId]]:
        """Consecutive entity pairs across all grounded model paths."""
        pairs: set[tuple[EntityId, EntityId]] = set()
        for path in self.model_paths:
            pairs.update(path.pairs)
        return pairs

    def observed_entities(self) -> set[EntityId]:
        seen: set[EntityId] = set()
        for path in self.model_paths:
            seen.update(path.entity_ids)
        return seen

    def reference_entities(self) -> set[EntityId]:
        seen: set[EntityId] = set()
        for path in self.reference_paths:
            seen.update(path.nodes)
        return seen

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "options": list(self.options),
            "correct_answer": self.correct_answer,
            "predicted_answer": self.predicted_answer,
            "question_entities": [a.to_record() for a in self.question_entities],
            "correct_entity": self.correct_entity,
            "predicted_entity": self.predicted_entity,
            "model_paths": [p.to_record() for p in self.model_paths],
            "reference_paths": [p.to_record() for p in self.reference_paths],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Case":
        return cls(
            id=rec["id"],
            question=rec["question"],
            options=tuple(rec["options"]),
            correct_answer=rec["correct_answer"],
            predicted_answer=rec["predicted_answer"],
            question_entities=tuple(
                AlignmentResult.from_record(a) for a in rec["question_entities"]
            ),
            correct_entity=rec["correct_entity"],
            predicted_entity=rec["predicted_entity"],
            model_paths=tuple(GroundedPath.from_record(p) for p in rec["model_paths"]),
            reference_paths=tuple(Path.from_record(p) for p in rec["reference_paths"]),
        )


_STRIP_CHARS = string.punctuation + string.whitespace


def normalize_mention(text: str) -> str:
    """Trim, casefold, collapse internal whitespace, strip surrounding
    punctuation. Internal punctuation (apostrophes, hyphens) survives."""
    collapsed = " ".join(text.split())
    return collapsed.casefold().strip(_STRIP_CHARS)


class EntityAligner:
    """Three-stage mention alignment bound to one graph and one provider
    pair. Entity-name embeddings are computed once (lazily) and may be
    cached on disk keyed by graph digest + embedder identity."""

    def __init__(
        self,
        graph: KnowledgeGraph,
        embedder: EmbeddingProvider,
        adjudicator: Adjudicator,
        tau: float = 0.9,
        k: int = 5,
        cache_dir: str | FsPath | None = None,
    ):
        if not (0.0 < tau <= 1.0):
            raise ValueError(f"tau must be in (0, 1], got {tau}")
        if k < 1:
            raise ValueError("k must be >= 1")
        self.graph = graph
        self.embedder = embedder
        self.adjudicator = adjudicator
        self.tau = tau
        self.k = k
        self.cache_dir = FsPath(cache_dir) if cache_dir else None

        self._exact: dict[str, EntityId] = {}
        for eid in sorted(graph.entities):
            key = normalize_mention(graph.entities[eid].name)
            # first writer wins: ids are visited in sorted order, so ties
            # resolve to the lexicographically smallest id
            if key and key not in self._exact:
                self._exact[key] = eid
        self._name_ids: list[EntityId] = sorted(graph.entities)
        self._name_matrix: np.ndarray | None = None
        self._mention_vectors: dict[str, np.ndarray] = {}

    # -- embedding cache ----------------------------------------------------

    def _matrix_cache_path(self) -> FsPath | None:
        if self.cache_dir is None:
            return None
        safe = self.embedder.identity.replace("/", "_").replace(":", "_")
        return self.cache_dir / f"names-{self.graph.digest()[:16]}-{safe}.npz"

    def name_matrix(self) -> np.ndarray:
        """Unit-normalized embedding per entity name, rows in sorted-id order."""
        if self._name_matrix is not None:
            return self._name_matrix
        cache_path = self._matrix_cache_path()
        if cache_path is not None and cache_path.exists():
            self._name_matrix = np.load(cache_path)["matrix"]
            return self._name_matrix
        names = [normalize_mention(self.graph.entities[eid].name) for eid in self._name_ids]
        matrix = np.asarray(self.embedder.embed(names), dtype=np.float64)
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        matrix = matrix / norms
        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            np.savez(cache_path, matrix=matrix)
        self._name_matrix = matrix
        return matrix

    def _mention_vector(self, text: str) -> np.ndarray:
        vec = self._mention_vectors.get(text)
        if vec is None:
            vec = np.asarray(self.embedder.embed([text])[0], dtype=np.float64)
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
            self._mention_vectors[text] = vec
        return vec

    # -- alignment ------------------------------------------------------------

    def align(self, mention: Mention, context: str = "") -> AlignmentResult:
        norm = normalize_mention(mention.text)
        if not norm:
            return AlignmentResult(mention, None, AlignMethod.UNALIGNED)

        exact = self._exact.get(norm)
        if exact is not None:
            return AlignmentResult(mention, exact, AlignMethod.EXACT)

        sims = self.name_matrix() @ self._mention_vector(norm)
        best = int(np.argmax(sims))
        if float(sims[best]) >= self.tau:
            return AlignmentResult(
                mention, self._name_ids[best], AlignMethod.EMBEDDING, float(sims[best])
            )

        # ties broken toward the smaller entity id: stable secondary key
        order = np.lexsort((np.arange(len(sims)), -sims))[: self.k]
        candidates = tuple(
            (
                self._name_ids[int(i)],
                self.graph.entities[self._name_ids[int(i)]].name,
                float(sims[int(i)]),
            )
            for i in order
        )
        choice = self.adjudicator.adjudicate(
            AlignChoice(mention=mention.text, context=context, candidates=candidates)
        )
        if choice.index is None:
            return AlignmentResult(mention, None, AlignMethod.UNALIGNED)
        if not (0 <= choice.index < len(candidates)):
            raise ProviderProtocolError(f"adjudicator chose index {choice.index} of {len(candidates)}")
        return AlignmentResult(mention, candidates[choice.index][0], AlignMethod.ADJUDICATED)


def ground_path(raw: RawPath, aligner: EntityAligner, context: str = "") -> GroundedPath:
    """Align every step; unaligned steps are excised so their neighbors
    become adjacent, with the excision count preserved."""
    steps: list[GroundedStep] = []
    dropped = 0
    for step in raw.steps:
        result = aligner.align(Mention(step.entity_text, MentionOrigin.MODEL_PATH), context)
        if result.entity is None:
            dropped += 1
            continue
        steps.append(GroundedStep(result.entity, step.relation_text, result))
    return GroundedPath(tuple(steps), dropped)


def build_reference_paths(
    question_entities: tuple[AlignmentResult, ...],
    correct_entity: EntityId,
    graph: KnowledgeGraph,
    adjudicator: Adjudicator,
    context: str = "",
    max_paths_per_entity: int = 16,
) -> tuple[Path, ...]:
    """Union of adjudicator-pruned shortest paths from each aligned question
    entity to the correct answer, deduplicated and deterministically ordered."""
    engine = engine_for(graph)
    kept: set[Path] = set()
    for x in sorted({a.entity for a in question_entities if a.entity is not None}):
        paths = engine.shortest_paths(x, correct_entity, max_paths_per_entity)
        if not paths:
            continue
        response = adjudicator.adjudicate(
            PrunePaths(context=context, paths=tuple(p.nodes for p in paths))
        )
        for i in response.indices:
            if 0 <= i < len(paths):
                kept.add(paths[i])
    return tuple(sorted(kept, key=lambda p: (len(p.nodes), p.nodes)))


def extract_question_entities(
    record: CaseRecord, adjudicator: Adjudicator
) -> tuple[tuple[str, str], ...]:
    """Pre-extracted mentions when the corpus supplies them, otherwise the
    adjudicator's extraction capability over the question text."""
    if record.question_entities:
        return record.question_entities
    result = adjudicator.adjudicate(Extract(text=record.question))
    return tuple(result.mentions)


def case_context(question: str, options: tuple[str, ...]) -> str:
    """The adjudication context shared by every call about one case."""
    return question + "\n" + "\n".join(options)


def attach_reference_paths(
    case: Case,
    graph: KnowledgeGraph,
    adjudicator: Adjudicator,
    max_paths_per_entity: int = 16,
) -> Case:
    """Fill in the reference paths of an already-aligned case."""
    refs = build_reference_paths(
        case.question_entities,
        case.correct_entity,
        graph,
        adjudicator,
        case_context(case.question, case.options),
        max_paths_per_entity,
    )
    return replace(case, reference_paths=refs)


def assemble_case(
    record: CaseRecord,
    aligner: EntityAligner,
    max_paths_per_entity: int = 16,
    with_reference_paths: bool = True,
) -> Case:
    """Ground one corpus record end to end.

    Raises DataError when the correct or predicted answer cannot be aligned;
    everything downstream needs those two anchors.
    """
    context = case_context(record.question, record.options)

    def align_option(text: str, role: str) -> EntityId:
        result = aligner.align(Mention(text, MentionOrigin.OPTION), context)
        if result.entity is None:
            raise DataError(f"case {record.id}: cannot align {role} option {text!r}")
        return result.entity

    correct_entity = align_option(record.correct_answer, "correct")
    predicted_entity = align_option(record.predicted_answer, "predicted")

    question_alignments = tuple(
        aligner.align(Mention(text, MentionOrigin.QUESTION), context)
        for text, _ in extract_question_entities(record, aligner.adjudicator)
    )
    model_paths = tuple(ground_path(p, aligner, context) for p in record.model_paths)
    reference_paths: tuple[Path, ...] = ()
    if with_reference_paths:
        reference_paths = build_reference_paths(
            question_alignments,
            correct_entity,
            aligner.graph,
            aligner.adjudicator,
            context,
            max_paths_per_entity,
        )
    return Case(
        id=record.id,
        question=record.question,
        options=record.options,
        correct_answer=record.correct_answer,
        predicted_answer=record.predicted_answer,
        question_entities=question_alignments,
        correct_entity=correct_entity,
        predicted_entity=predicted_entity,
        model_paths=model_paths,
        reference_paths=reference_paths,
    )
