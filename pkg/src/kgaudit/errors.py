"""Structural error detection, corpus aggregation, and pattern expansion.

A grounded case yields three error sets over its observed step pairs and
reference-path entities:

* relation errors: observed pairs with no supporting graph path,
* branch errors: observed pairs stepping out of the correct answer's
  ancestor set,
* missing errors: reference-path entities absent from the observed paths
  that support the correct answer but not the predicted one.

Relation and branch labels are independent; one pair can carry both, and
branch records note that overlap via ``also_relation_error``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

from .exceptions import DataError
from .grounding import Case
from .kg import EntityId, KnowledgeGraph, engine_for
from .services import Adjudicator, Categorize


class ErrorKind(str, Enum):
    RELATION = "Relation"
    BRANCH = "Branch"
    MISSING = "Missing"


class ExpandMode(str, Enum):
    ALONG_ERROR_SET = "AlongErrorSet"
    ALONG_REFERENCE_SET = "AlongReferenceSet"


@dataclass(frozen=True, order=True)
class ErrorRecord:
    case_id: str
    kind: ErrorKind
    source: EntityId | None  # absent for Missing
    target: EntityId
    also_relation_error: bool = False  # set on Branch records only

    def to_record(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "also_relation_error": self.also_relation_error,
        }


def detect_relation_errors(case: Case, graph: KnowledgeGraph) -> set[ErrorRecord]:
    """Observed step pairs the graph does not support in that direction."""
    engine = engine_for(graph)
    return {
        ErrorRecord(case.id, ErrorKind.RELATION, a, b)
        for a, b in case.observed_pairs()
        if not engine.reach(a, b)
    }


def detect_branch_errors(case: Case, graph: KnowledgeGraph) -> set[ErrorRecord]:
    """Observed step pairs leaving the correct answer's ancestor set."""
    engine = engine_for(graph)
    ancestors = engine.ancestor_set(case.correct_entity)
    return {
        ErrorRecord(
            case.id,
            ErrorKind.BRANCH,
            a,
            b,
            also_relation_error=not engine.reach(a, b),
        )
        for a, b in case.observed_pairs()
        if a in ancestors and b not in ancestors
    }


def detect_missing_errors(case: Case, graph: KnowledgeGraph) -> set[ErrorRecord]:
    """Reference-path entities the model never visited although they
    support the correct answer and rule out the predicted one. The correct
    answer itself is not a candidate: it ends every reference path."""
    engine = engine_for(graph)
    candidates = case.reference_entities() - case.observed_entities()
    return {
        ErrorRecord(case.id, ErrorKind.MISSING, None, m)
        for m in candidates
        if m != case.correct_entity
        and engine.reach(m, case.correct_entity)
        and not engine.reach(m, case.predicted_entity)
    }


@dataclass(frozen=True)
class CaseErrorReport:
    case_id: str
    relation_errors: frozenset[ErrorRecord]
    branch_errors: frozenset[ErrorRecord]
    missing_errors: frozenset[ErrorRecord]
    correct: bool

    @property
    def n_rel(self) -> int:
        return len(self.relation_errors)

    @property
    def n_br(self) -> int:
        return len(self.branch_errors)

    @property
    def n_miss(self) -> int:
        return len(self.missing_errors)

    def records(self) -> list[ErrorRecord]:
        return sorted(self.relation_errors | self.branch_errors | self.missing_errors)

    def to_record(self) -> dict:
        return {
            "case_id": self.case_id,
            "correct": self.correct,
            "n_rel": self.n_rel,
            "n_br": self.n_br,
            "n_miss": self.n_miss,
            "relation_errors": [r.to_record() for r in sorted(self.relation_errors)],
            "branch_errors": [r.to_record() for r in sorted(self.branch_errors)],
            "missing_errors": [r.to_record() for r in sorted(self.missing_errors)],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CaseErrorReport":
        def unpack(kind: ErrorKind, rows: list[dict]) -> frozenset[ErrorRecord]:
            return frozenset(
                ErrorRecord(
                    rec["case_id"], kind, r["source"], r["target"], r["also_relation_error"]
                )
                for r in rows
            )

        return cls(
            case_id=rec["case_id"],
            relation_errors=unpack(ErrorKind.RELATION, rec["relation_errors"]),
            branch_errors=unpack(ErrorKind.BRANCH, rec["branch_errors"]),
            missing_errors=unpack(ErrorKind.MISSING, rec["missing_errors"]),
            correct=rec["correct"],
        )


def analyze_case(case: Case, graph: KnowledgeGraph) -> CaseErrorReport:
    """Run all three detectors; pure function of (case, graph)."""
    return CaseErrorReport(
        case_id=case.id,
        relation_errors=frozenset(detect_relation_errors(case, graph)),
        branch_errors=frozenset(detect_branch_errors(case, graph)),
        missing_errors=frozenset(detect_missing_errors(case, graph)),
        correct=case.is_correct,
    )


@dataclass(frozen=True)
class EntityRoles:
    """Per-entity case-membership counts backing the node glyphs."""

    ref_path_occurrences: int = 0
    observed_error_occurrences: int = 0
    observed_nonerror_occurrences: int = 0
    total_occurrences: int = 0

    def to_record(self) -> dict:
        return {
            "ref_path_occurrences": self.ref_path_occurrences,
            "observed_error_occurrences": self.observed_error_occurrences,
            "observed_nonerror_occurrences": self.observed_nonerror_occurrences,
            "total_occurrences": self.total_occurrences,
        }


@dataclass(frozen=True)
class CorpusSummary:
    total_cases: int
    correct_cases: int
    incorrect_cases: int
    accuracy: float | None  # None for an empty corpus
    totals: dict[ErrorKind, int]
    per_entity_intensity: dict[tuple[EntityId, ErrorKind], int]
    per_entity_roles: dict[EntityId, EntityRoles]

    def intensity_by_entity(self, kind: ErrorKind) -> dict[EntityId, int]:
        return {
            eid: count for (eid, k), count in self.per_entity_intensity.items() if k is kind
        }

    def to_record(self) -> dict:
        intensity: dict[str, dict[str, int]] = defaultdict(dict)
        for (eid, kind), count in sorted(self.per_entity_intensity.items()):
            intensity[eid][kind.value] = count
        return {
            "total_cases": self.total_cases,
            "correct_cases": self.correct_cases,
            "incorrect_cases": self.incorrect_cases,
            "accuracy": self.accuracy,
            "totals": {k.value: self.totals.get(k, 0) for k in ErrorKind},
            "per_entity_intensity": {k: intensity[k] for k in sorted(intensity)},
            "per_entity_roles": {
                eid: roles.to_record() for eid, roles in sorted(self.per_entity_roles.items())
            },
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CorpusSummary":
        return cls(
            total_cases=rec["total_cases"],
            correct_cases=rec["correct_cases"],
            incorrect_cases=rec["incorrect_cases"],
            accuracy=rec["accuracy"],
            totals={ErrorKind(k): v for k, v in rec["totals"].items()},
            per_entity_intensity={
                (eid, ErrorKind(k)): v
                for eid, kinds in rec["per_entity_intensity"].items()
                for k, v in kinds.items()
            },
            per_entity_roles={
                eid: EntityRoles(**roles) for eid, roles in rec["per_entity_roles"].items()
            },
        )


def aggregate_corpus(reports: list[CaseErrorReport], cases: list[Case]) -> CorpusSummary:
    """Order-independent reduction of per-case reports into corpus totals,
    per-entity error intensities, and per-entity role counts."""
    report_ids = sorted(r.case_id for r in reports)
    case_ids = sorted(c.id for c in cases)
    if report_ids != case_ids:
        raise DataError("reports and cases cover different case ids")
    case_by_id = {c.id: c for c in cases}

    totals = {kind: 0 for kind in ErrorKind}
    intensity: dict[tuple[EntityId, ErrorKind], int] = defaultdict(int)
    roles: dict[EntityId, list[int]] = defaultdict(lambda: [0, 0, 0, 0])
    correct = 0

    for report in reports:
        case = case_by_id[report.case_id]
        if report.correct:
            correct += 1
        totals[ErrorKind.RELATION] += report.n_rel
        totals[ErrorKind.BRANCH] += report.n_br
        totals[ErrorKind.MISSING] += report.n_miss

        for rec in report.relation_errors | report.branch_errors:
            intensity[(rec.source, rec.kind)] += 1
            intensity[(rec.target, rec.kind)] += 1
        for rec in report.missing_errors:
            intensity[(rec.target, ErrorKind.MISSING)] += 1

        observed = case.observed_entities()
        referenced = case.reference_entities()
        endpoints: set[EntityId] = set()
        for rec in report.relation_errors | report.branch_errors:
            endpoints.add(rec.source)
            endpoints.add(rec.target)
        for eid in observed:
            roles[eid][1 if eid in endpoints else 2] += 1
        for eid in referenced:
            roles[eid][0] += 1
        for eid in observed | referenced:
            roles[eid][3] += 1

    n = len(reports)
    return CorpusSummary(
        total_cases=n,
        correct_cases=correct,
        incorrect_cases=n - correct,
        accuracy=(correct / n) if n else None,
        totals=totals,
        per_entity_intensity=dict(intensity),
        per_entity_roles={eid: EntityRoles(*counts) for eid, counts in roles.items()},
    )


Pair = tuple[EntityId, EntityId]


@dataclass(frozen=True)
class PatternExpansion:
    anchor: EntityId
    kind: ErrorKind
    mode: ExpandMode
    error_targets: frozenset[EntityId]
    reference_targets: frozenset[EntityId]
    related_error_pairs: frozenset[Pair]
    related_reference_pairs: frozenset[Pair]
    error_case_ids: dict[Pair, frozenset[str]] = field(default_factory=dict)
    reference_case_ids: dict[Pair, frozenset[str]] = field(default_factory=dict)

    @property
    def supporting_case_ids(self) -> dict[Pair, frozenset[str]]:
        merged: dict[Pair, frozenset[str]] = dict(self.error_case_ids)
        for pair, ids in self.reference_case_ids.items():
            merged[pair] = merged.get(pair, frozenset()) | ids
        return merged

    @property
    def is_empty(self) -> bool:
        return not (self.error_targets or self.reference_targets)

    def to_record(self) -> dict:
        def pairs(pair_set, support):
            return [
                {"source": a, "target": b, "case_ids": sorted(support.get((a, b), ()))}
                for a, b in sorted(pair_set)
            ]

        return {
            "anchor": self.anchor,
            "kind": self.kind.value,
            "mode": self.mode.value,
            "error_targets": sorted(self.error_targets),
            "reference_targets": sorted(self.reference_targets),
            "related_error_pairs": pairs(self.related_error_pairs, self.error_case_ids),
            "related_reference_pairs": pairs(
                self.related_reference_pairs, self.reference_case_ids
            ),
        }


class CorpusIndex:
    """Pair-level corpus indexes shared by repeated expansions."""

    def __init__(self, reports: list[CaseErrorReport], cases: list[Case]):
        self.error_pairs: dict[ErrorKind, dict[Pair, set[str]]] = {
            ErrorKind.RELATION: defaultdict(set),
            ErrorKind.BRANCH: defaultdict(set),
        }
        self.reference_pairs: dict[Pair, set[str]] = defaultdict(set)
        # Missing errors have no observed pair; they are compared through
        # the answers of their cases instead.
        self.missing_error_pairs: dict[Pair, set[str]] = defaultdict(set)
        self.missing_reference_pairs: dict[Pair, set[str]] = defaultdict(set)
        self.missing_answers: dict[EntityId, tuple[set[EntityId], set[EntityId]]] = (
            defaultdict(lambda: (set(), set()))
        )

        case_by_id = {c.id: c for c in cases}
        for report in reports:
            case = case_by_id[report.case_id]
            for rec in report.relation_errors:
                self.error_pairs[ErrorKind.RELATION][(rec.source, rec.target)].add(case.id)
            for rec in report.branch_errors:
                self.error_pairs[ErrorKind.BRANCH][(rec.source, rec.target)].add(case.id)
            for rec in report.missing_errors:
                m = rec.target
                self.missing_error_pairs[(m, case.predicted_entity)].add(case.id)
                self.missing_reference_pairs[(m, case.correct_entity)].add(case.id)
                wrong, right = self.missing_answers[m]
                wrong.add(case.predicted_entity)
                right.add(case.correct_entity)
            for path in case.reference_paths:
                for pair in path.pairs:
                    self.reference_pairs[pair].add(case.id)

    def expand(self, anchor: EntityId, kind: ErrorKind, mode: ExpandMode) -> PatternExpansion:
        if kind is ErrorKind.MISSING:
            err_source = self.missing_error_pairs
            ref_source = self.missing_reference_pairs
            wrong, right = self.missing_answers.get(anchor, (set(), set()))
            error_targets = frozenset(wrong)
            reference_targets = frozenset(right)
        else:
            err_source = self.error_pairs[kind]
            ref_source = self.reference_pairs
            error_targets = frozenset(b for (a, b) in err_source if a == anchor)
            reference_targets = frozenset(b for (a, b) in ref_source if a == anchor)

        chosen = error_targets if mode is ExpandMode.ALONG_ERROR_SET else reference_targets
        related_err = {pair: ids for pair, ids in err_source.items() if pair[1] in chosen}
        related_ref = {pair: ids for pair, ids in ref_source.items() if pair[1] in chosen}
        return PatternExpansion(
            anchor=anchor,
            kind=kind,
            mode=mode,
            error_targets=error_targets,
            reference_targets=reference_targets,
            related_error_pairs=frozenset(related_err),
            related_reference_pairs=frozenset(related_ref),
            error_case_ids={p: frozenset(ids) for p, ids in related_err.items()},
            reference_case_ids={p: frozenset(ids) for p, ids in related_ref.items()},
        )


def expand_pattern(
    anchor: EntityId,
    kind: ErrorKind,
    mode: ExpandMode,
    reports: list[CaseErrorReport],
    cases: list[Case],
) -> PatternExpansion:
    """One-shot expansion; build a :class:`CorpusIndex` for repeated use."""
    return CorpusIndex(reports, cases).expand(anchor, kind, mode)


@dataclass(frozen=True)
class PatternSummary:
    categories_err: dict[EntityId, str]
    categories_ref: dict[EntityId, str]
    summary_text: str

    def to_record(self) -> dict:
        return {
            "categories_err": dict(sorted(self.categories_err.items())),
            "categories_ref": dict(sorted(self.categories_ref.items())),
            "summary_text": self.summary_text,
        }


def summarize_pattern(
    expansion: PatternExpansion,
    adjudicator: Adjudicator,
    graph: KnowledgeGraph,
    context: str = "",
) -> PatternSummary:
    """Categorize both target sets and produce a difference summary."""
    if expansion.is_empty:
        raise ValueError("cannot summarize an empty expansion")

    def describe(entity_ids: frozenset[EntityId]) -> tuple[tuple[str, str, str], ...]:
        return tuple(
            (eid, graph.entity(eid).name, graph.entity(eid).kind.value)
            for eid in sorted(entity_ids)
        )

    result = adjudicator.adjudicate(
        Categorize(
            context=context,
            error_entities=describe(expansion.error_targets),
            reference_entities=describe(expansion.reference_targets),
        )
    )
    return PatternSummary(
        categories_err=dict(result.error_labels),
        categories_ref=dict(result.reference_labels),
        summary_text=result.summary,
    )
