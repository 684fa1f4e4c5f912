"""Read-only HTTP API over one finished analysis run.

Every response body carries a schema version and the run id. The service
holds an immutable snapshot loaded at startup; identical requests return
byte-identical bodies. The only disk writes are expansion-cache entries
inside the run directory.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import Config
from .errors import (
    CorpusIndex,
    CorpusSummary,
    ErrorKind,
    ExpandMode,
    aggregate_corpus,
    summarize_pattern,
)
from .exceptions import StoreError
from .pipeline import load_graph
from .services import build_providers
from .store import (
    STAGES,
    CaseSort,
    RunStore,
    build_case_index,
    instance_bundle,
    query_cases,
)
from .projection import heat_grid, top_k_nodes

SCHEMA_VERSION = 1

# Which endpoints back which interactive view; the coverage test checks
# every entry resolves to a live route.
VIEW_ENDPOINTS: dict[str, list[tuple[str, str]]] = {
    "overview": [("GET", "/api/overview")],
    "projection": [("GET", "/api/projection")],
    "paths": [("POST", "/api/path-view"), ("GET", "/api/node/{entity_id}/links")],
    "patterns": [("POST", "/api/errors/expand")],
    "cases": [("GET", "/api/cases")],
    "instance": [("GET", "/api/cases/{case_id}/instance")],
}


class RunNotReady(StoreError):
    """The run exists but at least one stage is not Done."""


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(message)


@dataclass
class Snapshot:
    """Everything the endpoints read, loaded once."""

    run_id: str
    run: Any
    graph: Any
    config: Config
    cases: list
    reports: list
    summary: CorpusSummary
    layout: Any
    index_entries: list
    corpus_index: CorpusIndex
    adjudicator: Any
    case_by_id: dict = field(default_factory=dict)
    report_by_id: dict = field(default_factory=dict)
    observed_pair_cases: dict = field(default_factory=dict)
    reference_pair_cases: dict = field(default_factory=dict)
    pair_error_kinds: dict = field(default_factory=dict)

    def __post_init__(self):
        self.case_by_id = {c.id: c for c in self.cases}
        self.report_by_id = {r.case_id: r for r in self.reports}
        observed: dict = defaultdict(set)
        for case in self.cases:
            for path in case.model_paths:
                for pair in path.pairs:
                    observed[pair].add(case.id)
        self.observed_pair_cases = dict(observed)
        self.reference_pair_cases = {
            pair: set(ids) for pair, ids in self.corpus_index.reference_pairs.items()
        }
        kinds: dict = defaultdict(set)
        for kind in (ErrorKind.RELATION, ErrorKind.BRANCH):
            for pair in self.corpus_index.error_pairs[kind]:
                kinds[pair].add(kind.value)
        self.pair_error_kinds = dict(kinds)


def load_snapshot(config: Config, run_id: str) -> Snapshot:
    store = RunStore(config.store_root)
    run = store.open_run(run_id)
    pending = [s for s in STAGES if run.stage_status(s) != "Done"]
    if pending:
        raise RunNotReady(f"run {run_id}: stages not complete: {', '.join(pending)}")
    graph = load_graph(config)
    if graph.digest() != run.manifest.kg_digest:
        raise StoreError(
            f"run {run_id}: knowledge graph does not match the run "
            f"(expected {run.manifest.kg_digest[:12]}, got {graph.digest()[:12]})"
        )
    cases = run.load_cases()
    reports = run.load_reports()
    summary = run.load_summary()
    layout = run.load_layout()
    names = {eid: graph.entity(eid).name for eid in graph.ids()}
    entries = build_case_index(cases, reports, names)
    vocabulary = {e.name: e.kind.value for e in graph.entities.values()}
    _, adjudicator = build_providers(config, store.root / ".provider-cache", vocabulary)
    return Snapshot(
        run_id=run_id,
        run=run,
        graph=graph,
        config=config,
        cases=cases,
        reports=reports,
        summary=summary,
        layout=layout,
        index_entries=entries,
        corpus_index=CorpusIndex(reports, cases),
        adjudicator=adjudicator,
    )


class PathViewRequest(BaseModel):
    entity_ids: list[str]
    min_error_intensity: float = 0.0


class ExpandRequest(BaseModel):
    anchor: str
    kind: str
    mode: str


def _parse_kind(value: str | None) -> ErrorKind | None:
    if value is None or value == "":
        return None
    try:
        return ErrorKind(value)
    except ValueError:
        raise ApiError(400, f"unknown error kind {value!r}") from None


def create_app(config: Config, run_id: str | None = None) -> FastAPI:
    """Build the service; the run snapshot is loaded lazily on first use so
    an incomplete run surfaces as 409 on every request, not a crash."""
    store = RunStore(config.store_root)
    if run_id is None:
        runs = store.list_runs()
        if len(runs) != 1:
            raise StoreError(
                f"store has {len(runs)} runs; pass an explicit run id"
            )
        run_id = runs[0]

    app = FastAPI(title="reasoning audit api", openapi_url=None)
    state = {"snapshot": None, "error": None}

    def snapshot() -> Snapshot:
        if state["snapshot"] is None:
            try:
                state["snapshot"] = load_snapshot(config, run_id)
            except RunNotReady as exc:
                raise ApiError(409, str(exc)) from None
        return state["snapshot"]

    def body(payload: dict) -> dict:
        return {"schema_version": SCHEMA_VERSION, "run_id": run_id, **payload}

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"schema_version": SCHEMA_VERSION, "error": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"schema_version": SCHEMA_VERSION, "error": str(exc.errors())},
        )

    @app.get("/api/overview")
    def overview(kind: str | None = None):
        snap = snapshot()
        kind_filter = _parse_kind(kind)
        if kind_filter is None:
            summary = snap.summary
        else:
            counts = {
                ErrorKind.RELATION: lambda r: r.n_rel,
                ErrorKind.BRANCH: lambda r: r.n_br,
                ErrorKind.MISSING: lambda r: r.n_miss,
            }[kind_filter]
            keep = {r.case_id for r in snap.reports if counts(r) > 0}
            summary = aggregate_corpus(
                [r for r in snap.reports if r.case_id in keep],
                [c for c in snap.cases if c.id in keep],
            )
        return body({"kind": kind_filter.value if kind_filter else None,
                     "summary": summary.to_record()})

    @app.get("/api/projection")
    def projection(kind: str | None = None, k: int = 10):
        snap = snapshot()
        kind_filter = _parse_kind(kind)
        if k < 0:
            raise ApiError(400, "k must be >= 0")
        heat_cfg = snap.config.heat
        grid = heat_grid(
            snap.layout,
            snap.summary.per_entity_intensity,
            resolution=(heat_cfg.width, heat_cfg.height),
            bandwidth=heat_cfg.bandwidth,
            kind_filter=kind_filter,
        )
        top = top_k_nodes(snap.summary.per_entity_intensity, k, kind_filter=kind_filter)
        rows = snap.layout.table_rows()
        return body(
            {
                "kind": kind_filter.value if kind_filter else None,
                "entities": [r[0] for r in rows],
                "names": [snap.graph.entity(r[0]).name for r in rows],
                "entity_kinds": [snap.graph.entity(r[0]).kind.value for r in rows],
                "x": [r[1] for r in rows],
                "y": [r[2] for r in rows],
                "grid": {
                    "width": grid.width,
                    "height": grid.height,
                    "bandwidth": grid.bandwidth,
                    "values": [round(v, 9) for v in grid.values.reshape(-1).tolist()],
                },
                "top": [{"entity_id": eid, "count": count} for eid, count in top],
                "k": k,
            }
        )

    def _edges_among(snap: Snapshot, included: set[str]) -> list[dict]:
        pairs = set(snap.observed_pair_cases) | set(snap.reference_pair_cases)
        edges = []
        for a, b in sorted(pairs):
            if a not in included or b not in included:
                continue
            edges.append(
                {
                    "source": a,
                    "target": b,
                    "observed_case_count": len(snap.observed_pair_cases.get((a, b), ())),
                    "reference_case_count": len(snap.reference_pair_cases.get((a, b), ())),
                    "error_kinds": sorted(snap.pair_error_kinds.get((a, b), ())),
                }
            )
        return edges

    @app.post("/api/path-view")
    def path_view(req: PathViewRequest):
        snap = snapshot()
        if req.min_error_intensity < 0:
            raise ApiError(400, "min_error_intensity must be >= 0")
        for eid in req.entity_ids:
            if eid not in snap.graph:
                raise ApiError(404, f"unknown entity {eid!r}")
        nodes = []
        included: set[str] = set()
        for eid in sorted(set(req.entity_ids)):
            roles = snap.summary.per_entity_roles.get(eid)
            intensity = {
                kind.value: snap.summary.per_entity_intensity.get((eid, kind), 0)
                for kind in ErrorKind
            }
            total_intensity = sum(intensity.values())
            if total_intensity < req.min_error_intensity:
                continue
            included.add(eid)
            entity = snap.graph.entity(eid)
            x, y = snap.layout.coordinates.get(eid, (None, None))
            nodes.append(
                {
                    "entity_id": eid,
                    "name": entity.name,
                    "entity_kind": entity.kind.value,
                    "x": x,
                    "y": y,
                    "reference_occurrences": roles.ref_path_occurrences if roles else 0,
                    "observed_error_occurrences": roles.observed_error_occurrences if roles else 0,
                    "observed_nonerror_occurrences": (
                        roles.observed_nonerror_occurrences if roles else 0
                    ),
                    "total_occurrences": roles.total_occurrences if roles else 0,
                    "intensity": intensity,
                    "total_intensity": total_intensity,
                }
            )
        return body(
            {
                "min_error_intensity": req.min_error_intensity,
                "nodes": nodes,
                "edges": _edges_among(snap, included),
            }
        )

    @app.get("/api/node/{entity_id}/links")
    def node_links(entity_id: str):
        snap = snapshot()
        if entity_id not in snap.graph:
            raise ApiError(404, f"unknown entity {entity_id!r}")

        def collect(pair_cases: dict, family: str) -> tuple[list[dict], list[dict]]:
            outgoing, incoming = [], []
            for (a, b), case_ids in sorted(pair_cases.items()):
                if a != entity_id and b != entity_id:
                    continue
                item = {
                    "source": a,
                    "target": b,
                    "family": family,
                    "case_count": len(case_ids),
                    "case_ids": sorted(case_ids),
                    "error_kinds": sorted(snap.pair_error_kinds.get((a, b), ()))
                    if family == "observed"
                    else [],
                }
                (outgoing if a == entity_id else incoming).append(item)
            return outgoing, incoming

        ref_out, ref_in = collect(snap.reference_pair_cases, "reference")
        obs_out, obs_in = collect(snap.observed_pair_cases, "observed")
        return body(
            {
                "entity_id": entity_id,
                "outgoing": ref_out + obs_out,
                "incoming": ref_in + obs_in,
            }
        )

    @app.post("/api/errors/expand")
    def expand(req: ExpandRequest):
        snap = snapshot()
        kind = _parse_kind(req.kind)
        if kind is None:
            raise ApiError(400, "kind is required")
        try:
            mode = ExpandMode(req.mode)
        except ValueError:
            raise ApiError(400, f"unknown expansion mode {req.mode!r}") from None
        if req.anchor not in snap.graph:
            raise ApiError(404, f"unknown entity {req.anchor!r}")

        cached = snap.run.load_expansion(req.anchor, kind.value, mode.value)
        if cached is not None:
            return body(cached)
        expansion = snap.corpus_index.expand(req.anchor, kind, mode)
        if expansion.is_empty:
            payload = {"expansion": expansion.to_record(), "summary": None}
        else:
            summary = summarize_pattern(expansion, snap.adjudicator, snap.graph)
            payload = {"expansion": expansion.to_record(), "summary": summary.to_record()}
        # canonicalize key order so compute and cache-hit responses match
        payload = json.loads(json.dumps(payload, sort_keys=True))
        snap.run.save_expansion(req.anchor, kind.value, mode.value, payload)
        return body(payload)

    @app.get("/api/cases")
    def cases(
        entity: str | None = None,
        sort: str = "TotalErrorsDesc",
        kind: str | None = None,
        text: str | None = None,
        offset: int = 0,
        limit: int = 50,
    ):
        snap = snapshot()
        kind_filter = _parse_kind(kind)
        try:
            sort_order = CaseSort(sort)
        except ValueError:
            raise ApiError(400, f"unknown sort order {sort!r}") from None
        if offset < 0 or limit < 0:
            raise ApiError(400, "offset and limit must be >= 0")
        if entity is not None and entity not in snap.graph:
            raise ApiError(404, f"unknown entity {entity!r}")
        filtered = query_cases(
            snap.index_entries,
            entity_id=entity,
            kind=kind_filter,
            text=text,
            sort=sort_order,
        )
        page = filtered[offset : offset + limit]
        return body(
            {
                "total": len(filtered),
                "offset": offset,
                "limit": limit,
                "cases": [entry.to_record() for entry in page],
            }
        )

    @app.get("/api/cases/{case_id}/instance")
    def instance(case_id: str):
        snap = snapshot()
        case = snap.case_by_id.get(case_id)
        if case is None:
            raise ApiError(404, f"unknown case {case_id!r}")
        return body({"instance": instance_bundle(case, snap.report_by_id[case_id])})

    return app
