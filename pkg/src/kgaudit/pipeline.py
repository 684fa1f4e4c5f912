"""Stage orchestration over a run directory.

Stages run in a fixed order (ingest, align, reference-paths, detect,
project); finished stages are skipped on resume, failed or pending ones
re-run. Progress is reported as JSON lines so callers can stream it.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath
from typing import Callable

from .config import Config
from .errors import aggregate_corpus, analyze_case
from .exceptions import DataError
from .grounding import (
    EntityAligner,
    assemble_case,
    attach_reference_paths,
)
from .kg import DirectionalityPolicy, KnowledgeGraph, load_kg
from .projection import Node2VecParams, node2vec_embed, project_2d
from .services import build_providers
from .store import STAGES, Run, RunStore, corpus_digest, read_corpus

Progress = Callable[[dict], None]


def stderr_progress(event: dict) -> None:
    sys.stderr.write(json.dumps(event, sort_keys=True) + "\n")
    sys.stderr.flush()


@dataclass
class PipelineResult:
    run: Run
    graph: KnowledgeGraph
    ran_stages: list[str] = field(default_factory=list)
    skipped_cases: list[tuple[str, str]] = field(default_factory=list)


class _Stages:
    """Lazy shared state so providers are only constructed when a stage
    actually needs them."""

    def __init__(self, config: Config, store: RunStore, run: Run, graph: KnowledgeGraph,
                 result: PipelineResult, progress: Progress):
        self.config = config
        self.store = store
        self.run = run
        self.graph = graph
        self.result = result
        self.progress = progress
        self._providers = None

    def providers(self):
        if self._providers is None:
            cache_dir = self.store.root / ".provider-cache"
            vocabulary = {
                e.name: e.kind.value for e in self.graph.entities.values()
            }
            self._providers = build_providers(self.config, cache_dir, vocabulary)
        return self._providers

    def aligner(self) -> EntityAligner:
        embedder, adjudicator = self.providers()
        return EntityAligner(
            self.graph,
            embedder,
            adjudicator,
            tau=self.config.tau,
            k=self.config.top_k_candidates,
            cache_dir=self.store.root / ".name-cache",
        )

    # -- stage bodies ---------------------------------------------------------

    def ingest(self) -> None:
        records = read_corpus(self.config.corpus)
        self.run.save_records(records)
        self.progress(
            {"event": "ingested", "cases": len(records), "entities": self.graph.num_entities}
        )

    def align(self) -> None:
        aligner = self.aligner()
        cases = []
        for record in self.run.load_records():
            try:
                cases.append(
                    assemble_case(
                        record,
                        aligner,
                        max_paths_per_entity=self.config.max_paths_per_entity,
                        with_reference_paths=False,
                    )
                )
            except DataError as exc:
                if not self.config.lenient:
                    raise
                self.result.skipped_cases.append((record.id, str(exc)))
                self.progress({"event": "case_skipped", "case_id": record.id, "reason": str(exc)})
        if not cases:
            raise DataError("no cases could be grounded")
        self.run.save_cases(cases)

    def reference_paths(self) -> None:
        _, adjudicator = self.providers()
        cases = [
            attach_reference_paths(
                case, self.graph, adjudicator, self.config.max_paths_per_entity
            )
            for case in self.run.load_cases()
        ]
        self.run.save_cases(cases)

    def detect(self) -> None:
        cases = self.run.load_cases()
        reports = [analyze_case(case, self.graph) for case in cases]
        self.run.save_reports(reports)
        self.run.save_summary(aggregate_corpus(reports, cases))

    def project(self) -> None:
        pc = self.config.projection
        params = Node2VecParams(
            walk_length=pc.walk_length,
            walks_per_node=pc.walks_per_node,
            window=pc.window,
            return_p=pc.return_p,
            inout_q=pc.inout_q,
            reproducible=pc.reproducible,
        )
        embeddings = node2vec_embed(
            self.graph, params, dimension=pc.dimension, seed=pc.seed
        )
        n = len(embeddings.vectors)
        # sklearn requires perplexity < n; clamp rather than fail on small graphs
        perplexity = pc.perplexity
        if perplexity >= n:
            perplexity = max(1.0, (n - 1) / 3.0)
            self.progress({"event": "perplexity_clamped", "requested": pc.perplexity, "used": perplexity})
        layout = project_2d(
            embeddings,
            seed=pc.seed,
            perplexity=perplexity,
            max_iter=pc.max_iter,
            early_exaggeration=pc.early_exaggeration,
        )
        self.run.save_layout(layout, params=asdict(pc))


def require_keys(config: Config, keys: tuple[str, ...]) -> None:
    """Reject configs missing a key the requested operation depends on."""
    from .exceptions import ConfigError

    values = {
        "kg.nodes": config.kg.nodes,
        "kg.edges": config.kg.edges,
        "corpus": config.corpus,
    }
    for key in keys:
        if not values[key]:
            raise ConfigError(f"missing required config key: {key}")


def load_graph(config: Config) -> KnowledgeGraph:
    policy = DirectionalityPolicy(frozenset(config.kg.directed_relations))
    return load_kg(config.kg.nodes, config.kg.edges, policy=policy, strict=not config.lenient)


def run_pipeline(
    config: Config,
    through: str = "project",
    force: bool = False,
    progress: Progress = stderr_progress,
) -> PipelineResult:
    """Run every stage up to and including `through`, skipping Done ones."""
    if through not in STAGES:
        raise ValueError(f"unknown stage {through!r}")
    config.validate()
    require_keys(config, ("kg.nodes", "kg.edges", "corpus"))
    graph = load_graph(config)
    store = RunStore(config.store_root)
    run = store.create_run(
        graph.digest(), corpus_digest(config.corpus), config.analysis_digest()
    )
    result = PipelineResult(run=run, graph=graph)
    stages = _Stages(config, store, run, graph, result, progress)
    bodies = {
        "ingest": stages.ingest,
        "align": stages.align,
        "reference-paths": stages.reference_paths,
        "detect": stages.detect,
        "project": stages.project,
    }
    wanted = STAGES[: STAGES.index(through) + 1]
    with run.lock():
        for stage in wanted:
            if run.stage_status(stage) == "Done" and not force:
                progress({"event": "stage", "stage": stage, "status": "skipped", "run_id": run.run_id})
                continue
            progress({"event": "stage", "stage": stage, "status": "start", "run_id": run.run_id})
            started = time.monotonic()
            try:
                bodies[stage]()
            except Exception:
                run.set_stage(stage, "Failed")
                progress({"event": "stage", "stage": stage, "status": "failed", "run_id": run.run_id})
                raise
            run.set_stage(stage, "Done")
            result.ran_stages.append(stage)
            progress(
                {
                    "event": "stage",
                    "stage": stage,
                    "status": "done",
                    "run_id": run.run_id,
                    "elapsed_ms": int((time.monotonic() - started) * 1000),
                }
            )
    return result
