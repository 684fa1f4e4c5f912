"""Run persistence: one directory per analysis run, newline-delimited
record files with version headers, content digests in the manifest, and a
single-writer lock. Also the case index powering filtered/sorted queries
and the per-case instance bundle.

Run ids are content-addressed over (KG digest, corpus digest, config
digest), so re-running identical inputs lands in the same directory and
finished stages can be skipped.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path as FsPath
from typing import Iterable, Mapping

from .errors import CaseErrorReport, ErrorKind
from .exceptions import DataError, StoreError
from .grounding import Case, CaseRecord, RawPath
from .kg import EntityId
from .projection import ProjectionLayout

SCHEMA_VERSION = 1

STAGES = ("ingest", "align", "reference-paths", "detect", "project")

CASES_FILE = "cases.jsonl"
REPORTS_FILE = "reports.jsonl"
RECORDS_FILE = "records.jsonl"
SUMMARY_FILE = "summary.json"
LAYOUT_FILE = "layout.tsv"
PROJECTION_META_FILE = "projection.json"
MANIFEST_FILE = "manifest.json"
EXPANSIONS_DIR = "expansions"


def _dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _atomic_write(path: FsPath, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _check_schema_version(header: dict, context: str) -> None:
    version = header.get("schema_version")
    if not isinstance(version, int):
        raise DataError(f"{context}: missing schema_version header")
    if version > SCHEMA_VERSION:
        raise DataError(
            f"{context}: schema version {version} is newer than supported ({SCHEMA_VERSION})"
        )


# -- corpus input --------------------------------------------------------------


def read_corpus(path: str | FsPath) -> list[CaseRecord]:
    """Parse the newline-delimited corpus case file."""
    path = FsPath(path)
    records: list[CaseRecord] = []
    seen: set[str] = set()
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"corpus file not found: {path}") from None
    with fh:
        first = fh.readline()
        if not first.strip():
            raise DataError(f"{path}: empty corpus file")
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:1: invalid JSON header: {exc}") from exc
        _check_schema_version(header, str(path))
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                record = CaseRecord(
                    id=str(raw["id"]),
                    question=raw["question"],
                    options=tuple(raw["options"]),
                    correct_answer=raw["correct_answer"],
                    predicted_answer=raw["predicted_answer"],
                    question_entities=tuple(
                        (e["text"], e.get("kind", "")) for e in raw.get("question_entities", [])
                    ),
                    model_paths=tuple(RawPath.from_record(p) for p in raw.get("model_paths", [])),
                )
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
            if record.id in seen:
                raise DataError(f"{path}:{lineno}: duplicate case id {record.id!r}")
            seen.add(record.id)
            records.append(record)
    return records


def corpus_digest(path: str | FsPath) -> str:
    try:
        return hashlib.sha256(FsPath(path).read_bytes()).hexdigest()
    except FileNotFoundError:
        raise DataError(f"corpus file not found: {path}") from None


# -- run directory --------------------------------------------------------------


def compute_run_id(kg_digest: str, corpus_dig: str, config_digest: str) -> str:
    blob = _dumps({"kg": kg_digest, "corpus": corpus_dig, "config": config_digest})
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass
class RunManifest:
    run_id: str
    kg_digest: str
    corpus_digest: str
    config_digest: str
    created_at: str
    stage_status: dict[str, str]  # stage -> Pending | Done | Failed
    artifact_digests: dict[str, str]

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "run_id": self.run_id,
            "kg_digest": self.kg_digest,
            "corpus_digest": self.corpus_digest,
            "config_digest": self.config_digest,
            "created_at": self.created_at,
            "stage_status": dict(sorted(self.stage_status.items())),
            "artifact_digests": dict(sorted(self.artifact_digests.items())),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "RunManifest":
        _check_schema_version(rec, "manifest")
        return cls(
            run_id=rec["run_id"],
            kg_digest=rec["kg_digest"],
            corpus_digest=rec["corpus_digest"],
            config_digest=rec["config_digest"],
            created_at=rec["created_at"],
            stage_status=dict(rec["stage_status"]),
            artifact_digests=dict(rec["artifact_digests"]),
        )


class RunLock:
    """Exclusive writer lock per run directory, stealable when the owning
    process is gone."""

    def __init__(self, run_dir: FsPath):
        self.path = run_dir / ".lock"
        self._held = False

    def __enter__(self) -> "RunLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        for _ in range(2):
            try:
                fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                if self._owner_alive():
                    raise StoreError(f"run directory is locked: {self.path}") from None
                self.path.unlink(missing_ok=True)
                continue
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            self._held = True
            return self
        raise StoreError(f"could not acquire lock: {self.path}")

    def _owner_alive(self) -> bool:
        try:
            pid = int(self.path.read_text().strip())
            os.kill(pid, 0)
            return True
        except (ValueError, FileNotFoundError, ProcessLookupError):
            return False
        except PermissionError:
            return True

    def __exit__(self, *exc) -> None:
        if self._held:
            self.path.unlink(missing_ok=True)
            self._held = False


class Run:
    """Handle over one run directory. Reads verify content digests against
    the manifest; writes are atomic and update the manifest."""

    def __init__(self, root: FsPath, manifest: RunManifest):
        self.root = root
        self.manifest = manifest

    @property
    def run_id(self) -> str:
        return self.manifest.run_id

    def lock(self) -> RunLock:
        return RunLock(self.root)

    # -- manifest -----------------------------------------------------------

    def _save_manifest(self) -> None:
        _atomic_write(self.root / MANIFEST_FILE, _dumps(self.manifest.to_record()) + "\n")

    def set_stage(self, stage: str, status: str) -> None:
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        if status not in ("Pending", "Done", "Failed"):
            raise ValueError(f"unknown status {status!r}")
        self.manifest.stage_status[stage] = status
        self._save_manifest()

    def stage_status(self, stage: str) -> str:
        return self.manifest.stage_status.get(stage, "Pending")

    # -- typed artifact IO -----------------------------------------------------

    def _write_file(self, name: str, data: str) -> None:
        _atomic_write(self.root / name, data)
        self.manifest.artifact_digests[name] = hashlib.sha256(data.encode("utf-8")).hexdigest()
        self._save_manifest()

    def _read_file(self, name: str) -> str:
        path = self.root / name
        try:
            data = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise StoreError(f"run {self.run_id}: missing artifact {name}") from None
        expected = self.manifest.artifact_digests.get(name)
        if expected is not None:
            actual = hashlib.sha256(data.encode("utf-8")).hexdigest()
            if actual != expected:
                raise StoreError(f"run {self.run_id}: digest mismatch for {name}")
        return data

    def write_jsonl(self, name: str, record_kind: str, records: Iterable[dict]) -> None:
        lines = [_dumps({"schema_version": SCHEMA_VERSION, "record_kind": record_kind})]
        lines.extend(_dumps(rec) for rec in records)
        self._write_file(name, "\n".join(lines) + "\n")

    def read_jsonl(self, name: str, record_kind: str) -> list[dict]:
        text = self._read_file(name)
        lines = text.splitlines()
        if not lines:
            raise DataError(f"{name}: empty record file")
        header = json.loads(lines[0])
        _check_schema_version(header, name)
        if header.get("record_kind") != record_kind:
            raise DataError(
                f"{name}: expected {record_kind!r} records, found {header.get('record_kind')!r}"
            )
        return [json.loads(line) for line in lines[1:] if line]

    def write_json(self, name: str, payload: dict) -> None:
        body = {"schema_version": SCHEMA_VERSION, **payload}
        self._write_file(name, _dumps(body) + "\n")

    def read_json(self, name: str) -> dict:
        body = json.loads(self._read_file(name))
        _check_schema_version(body, name)
        return body

    # -- domain artifacts -------------------------------------------------------

    def save_records(self, records: list[CaseRecord]) -> None:
        rows = []
        for r in records:
            rows.append(
                {
                    "id": r.id,
                    "question": r.question,
                    "options": list(r.options),
                    "correct_answer": r.correct_answer,
                    "predicted_answer": r.predicted_answer,
                    "question_entities": [
                        {"text": t, "kind": k} for t, k in r.question_entities
                    ],
                    "model_paths": [
                        [
                            {"entity_text": s.entity_text, "relation_text": s.relation_text}
                            for s in p.steps
                        ]
                        for p in r.model_paths
                    ],
                }
            )
        self.write_jsonl(RECORDS_FILE, "case-record", rows)

    def load_records(self) -> list[CaseRecord]:
        rows = self.read_jsonl(RECORDS_FILE, "case-record")
        return [
            CaseRecord(
                id=row["id"],
                question=row["question"],
                options=tuple(row["options"]),
                correct_answer=row["correct_answer"],
                predicted_answer=row["predicted_answer"],
                question_entities=tuple((e["text"], e["kind"]) for e in row["question_entities"]),
                model_paths=tuple(RawPath.from_record(p) for p in row["model_paths"]),
            )
            for row in rows
        ]

    def save_cases(self, cases: list[Case]) -> None:
        self.write_jsonl(CASES_FILE, "case", [c.to_record() for c in cases])

    def load_cases(self) -> list[Case]:
        return [Case.from_record(rec) for rec in self.read_jsonl(CASES_FILE, "case")]

    def save_reports(self, reports: list[CaseErrorReport]) -> None:
        self.write_jsonl(REPORTS_FILE, "error-report", [r.to_record() for r in reports])

    def load_reports(self) -> list[CaseErrorReport]:
        return [
            CaseErrorReport.from_record(rec)
            for rec in self.read_jsonl(REPORTS_FILE, "error-report")
        ]

    def save_summary(self, summary) -> None:
        self.write_json(SUMMARY_FILE, summary.to_record())

    def load_summary(self):
        from .errors import CorpusSummary

        body = self.read_json(SUMMARY_FILE)
        body.pop("schema_version", None)
        return CorpusSummary.from_record(body)

    def save_layout(self, layout: ProjectionLayout, params: dict | None = None) -> None:
        lines = ["entity_id\tx\ty"]
        for eid, x, y in layout.table_rows():
            lines.append(f"{eid}\t{x:.6f}\t{y:.6f}")
        self._write_file(LAYOUT_FILE, "\n".join(lines) + "\n")
        self.write_json(PROJECTION_META_FILE, {"seed": layout.seed, "params": params or {}})

    def load_layout(self) -> ProjectionLayout:
        text = self._read_file(LAYOUT_FILE)
        meta = self.read_json(PROJECTION_META_FILE)
        lines = text.splitlines()
        if not lines or lines[0] != "entity_id\tx\ty":
            raise DataError(f"{LAYOUT_FILE}: unexpected header")
        rows = []
        for line in lines[1:]:
            eid, x, y = line.split("\t")
            rows.append((eid, float(x), float(y)))
        return ProjectionLayout.from_table_rows(rows, seed=meta["seed"])

    # -- expansions cache -------------------------------------------------------

    def expansion_key(self, anchor: EntityId, kind: str, mode: str) -> str:
        return hashlib.sha256(
            _dumps({"anchor": anchor, "kind": kind, "mode": mode}).encode()
        ).hexdigest()[:24]

    def save_expansion(self, anchor: EntityId, kind: str, mode: str, payload: dict) -> None:
        key = self.expansion_key(anchor, kind, mode)
        exp_dir = self.root / EXPANSIONS_DIR
        exp_dir.mkdir(exist_ok=True)
        _atomic_write(
            exp_dir / f"{key}.json",
            _dumps({"schema_version": SCHEMA_VERSION, **payload}) + "\n",
        )

    def load_expansion(self, anchor: EntityId, kind: str, mode: str) -> dict | None:
        key = self.expansion_key(anchor, kind, mode)
        path = self.root / EXPANSIONS_DIR / f"{key}.json"
        if not path.exists():
            return None
        body = json.loads(path.read_text(encoding="utf-8"))
        _check_schema_version(body, path.name)
        body.pop("schema_version", None)
        return body


class RunStore:
    """Root directory holding many runs."""

    def __init__(self, root: str | FsPath):
        self.root = FsPath(root)

    def run_dir(self, run_id: str) -> FsPath:
        return self.root / run_id

    def list_runs(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(
            p.name for p in self.root.iterdir() if (p / MANIFEST_FILE).exists()
        )

    def create_run(self, kg_digest: str, corpus_dig: str, config_digest: str) -> Run:
        """Open-or-create the content-addressed run for these inputs."""
        run_id = compute_run_id(kg_digest, corpus_dig, config_digest)
        run_dir = self.run_dir(run_id)
        if (run_dir / MANIFEST_FILE).exists():
            run = self.open_run(run_id)
            if (
                run.manifest.kg_digest != kg_digest
                or run.manifest.corpus_digest != corpus_dig
                or run.manifest.config_digest != config_digest
            ):
                raise StoreError(f"run {run_id}: manifest digests do not match inputs")
            return run
        run_dir.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(
            run_id=run_id,
            kg_digest=kg_digest,
            corpus_digest=corpus_dig,
            config_digest=config_digest,
            created_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            stage_status={stage: "Pending" for stage in STAGES},
            artifact_digests={},
        )
        run = Run(run_dir, manifest)
        run._save_manifest()
        return run

    def open_run(self, run_id: str) -> Run:
        path = self.run_dir(run_id) / MANIFEST_FILE
        try:
            manifest = RunManifest.from_record(json.loads(path.read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise StoreError(f"unknown run id: {run_id}") from None
        if manifest.run_id != run_id:
            raise StoreError(f"run {run_id}: manifest belongs to {manifest.run_id}")
        return Run(self.run_dir(run_id), manifest)


# -- case index and queries ------------------------------------------------------


class CaseSort(str, Enum):
    TOTAL_ERRORS_DESC = "TotalErrorsDesc"
    CASE_ID_ASC = "CaseIdAsc"


@dataclass(frozen=True)
class CaseIndexEntry:
    case_id: str
    question_entity_ids: tuple[EntityId, ...]
    n_rel: int
    n_br: int
    n_miss: int
    total_errors: int
    predicted_answer: str
    correct_answer: str
    correct: bool
    entity_ids: frozenset[EntityId]  # question entities + error endpoints
    search_text: str

    def to_record(self) -> dict:
        return {
            "case_id": self.case_id,
            "question_entity_ids": list(self.question_entity_ids),
            "n_rel": self.n_rel,
            "n_br": self.n_br,
            "n_miss": self.n_miss,
            "total_errors": self.total_errors,
            "predicted_answer": self.predicted_answer,
            "correct_answer": self.correct_answer,
            "correct": self.correct,
        }


def build_case_index(
    cases: list[Case],
    reports: list[CaseErrorReport],
    entity_names: Mapping[EntityId, str],
) -> list[CaseIndexEntry]:
    report_by_id = {r.case_id: r for r in reports}
    entries = []
    for case in cases:
        report = report_by_id.get(case.id)
        if report is None:
            raise DataError(f"no report for case {case.id}")
        question_ids = tuple(
            sorted({a.entity for a in case.question_entities if a.entity is not None})
        )
        involved: set[EntityId] = set(question_ids)
        for rec in report.records():
            if rec.source is not None:
                involved.add(rec.source)
            involved.add(rec.target)
        names = sorted(
            entity_names.get(eid, "")
            for eid in involved | case.observed_entities() | case.reference_entities()
        )
        search = " ".join([case.question.casefold()] + [n.casefold() for n in names if n])
        entries.append(
            CaseIndexEntry(
                case_id=case.id,
                question_entity_ids=question_ids,
                n_rel=report.n_rel,
                n_br=report.n_br,
                n_miss=report.n_miss,
                total_errors=report.n_rel + report.n_br + report.n_miss,
                predicted_answer=case.predicted_answer,
                correct_answer=case.correct_answer,
                correct=report.correct,
                entity_ids=frozenset(involved),
                search_text=search,
            )
        )
    return entries


def query_cases(
    entries: list[CaseIndexEntry],
    entity_id: EntityId | None = None,
    kind: ErrorKind | None = None,
    text: str | None = None,
    sort: CaseSort = CaseSort.TOTAL_ERRORS_DESC,
    offset: int = 0,
    limit: int | None = None,
) -> list[CaseIndexEntry]:
    """Filter, sort and page the case index. All filters conjunctive."""
    if offset < 0:
        raise ValueError("offset must be >= 0")
    if limit is not None and limit < 0:
        raise ValueError("limit must be >= 0")
    selected = entries
    if entity_id is not None:
        selected = [e for e in selected if entity_id in e.entity_ids]
    if kind is not None:
        counts = {
            ErrorKind.RELATION: lambda e: e.n_rel,
            ErrorKind.BRANCH: lambda e: e.n_br,
            ErrorKind.MISSING: lambda e: e.n_miss,
        }[kind]
        selected = [e for e in selected if counts(e) > 0]
    if text:
        fragment = text.casefold()
        selected = [e for e in selected if fragment in e.search_text]
    if sort is CaseSort.TOTAL_ERRORS_DESC:
        selected = sorted(selected, key=lambda e: (-e.total_errors, e.case_id))
    else:
        selected = sorted(selected, key=lambda e: e.case_id)
    end = None if limit is None else offset + limit
    return selected[offset:end]


# -- instance bundle -------------------------------------------------------------


def instance_bundle(case: Case, report: CaseErrorReport) -> dict:
    """Everything the per-case drill-down needs: both path families with
    per-node mention flags and per-step error labels."""
    mentioned = {a.entity for a in case.question_entities if a.entity is not None}
    step_labels: dict[tuple[EntityId, EntityId], list[str]] = {}
    for rec in sorted(report.relation_errors | report.branch_errors):
        step_labels.setdefault((rec.source, rec.target), []).append(rec.kind.value)

    model_paths = []
    for path in case.model_paths:
        steps = []
        ids = path.entity_ids
        for i, step in enumerate(path.steps):
            pair = (ids[i - 1], ids[i]) if i > 0 else None
            steps.append(
                {
                    "entity": step.entity,
                    "relation_label": step.relation_label,
                    "mentioned": step.entity in mentioned,
                    "incoming_error_kinds": sorted(step_labels.get(pair, [])) if pair else [],
                }
            )
        model_paths.append({"steps": steps, "dropped_steps": path.dropped_steps})

    reference_paths = [
        {
            "nodes": list(p.nodes),
            "relations": list(p.relations),
            "mentioned": [n in mentioned for n in p.nodes],
        }
        for p in case.reference_paths
    ]
    return {
        "case_id": case.id,
        "question": case.question,
        "options": list(case.options),
        "correct_answer": case.correct_answer,
        "predicted_answer": case.predicted_answer,
        "correct_entity": case.correct_entity,
        "predicted_entity": case.predicted_entity,
        "correct": report.correct,
        "question_entities": [a.to_record() for a in case.question_entities],
        "missing_entities": sorted(r.target for r in report.missing_errors),
        "model_paths": model_paths,
        "reference_paths": reference_paths,
    }
