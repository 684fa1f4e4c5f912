"""End-to-end stage orchestration on the bundled demo fixtures."""

import dataclasses
import json

import pytest

from kgaudit.config import demo_config
from kgaudit.exceptions import DataError
from kgaudit.pipeline import run_pipeline
from kgaudit.store import STAGES, RunStore

from .conftest import FIXTURES


def collect():
    events = []
    return events, events.append


def artifact_bytes(run, name):
    return (run.root / name).read_bytes()


@pytest.fixture(scope="module")
def demo_result(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo-store")
    events, progress = collect()
    result = run_pipeline(demo_config(root), progress=progress)
    return result, events


def test_demo_runs_all_stages(demo_result):
    result, events = demo_result
    assert result.ran_stages == list(STAGES)
    assert all(result.run.stage_status(s) == "Done" for s in STAGES)
    statuses = [e["status"] for e in events if e["event"] == "stage"]
    assert statuses.count("done") == len(STAGES)


def test_demo_error_counts(demo_result):
    result, _ = demo_result
    reports = {r.case_id: r for r in result.run.load_reports()}
    assert (reports["CASE-A"].n_rel, reports["CASE-A"].n_br, reports["CASE-A"].n_miss) == (0, 0, 1)
    assert (reports["CASE-B"].n_rel, reports["CASE-B"].n_br, reports["CASE-B"].n_miss) == (1, 1, 0)
    summary = result.run.load_summary()
    assert summary.accuracy == 0.0
    assert summary.total_cases == 2


def test_demo_layout_covers_graph(demo_result):
    result, _ = demo_result
    layout = result.run.load_layout()
    assert sorted(layout.coordinates) == sorted(result.graph.ids())
    for x, y in layout.coordinates.values():
        assert 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0


def test_rerun_skips_everything_and_preserves_bytes(demo_result, tmp_path):
    result, _ = demo_result
    before = {
        name: artifact_bytes(result.run, name)
        for name in ("cases.jsonl", "reports.jsonl", "summary.json", "layout.tsv")
    }
    events, progress = collect()
    again = run_pipeline(demo_config(result.run.root.parent), progress=progress)
    assert again.run.run_id == result.run.run_id
    assert again.ran_stages == []
    statuses = {e["status"] for e in events if e["event"] == "stage"}
    assert statuses == {"skipped"}
    for name, data in before.items():
        assert artifact_bytes(again.run, name) == data


def test_independent_stores_agree_byte_for_byte(demo_result, tmp_path):
    result, _ = demo_result
    other = run_pipeline(demo_config(tmp_path / "other-store"), progress=lambda e: None)
    assert other.run.run_id == result.run.run_id
    for name in ("cases.jsonl", "reports.jsonl", "summary.json", "layout.tsv"):
        assert artifact_bytes(other.run, name) == artifact_bytes(result.run, name)


def test_partial_then_resume(tmp_path):
    config = demo_config(tmp_path / "store")
    first = run_pipeline(config, through="align", progress=lambda e: None)
    assert first.ran_stages == ["ingest", "align"]
    assert first.run.stage_status("detect") == "Pending"

    events, progress = collect()
    second = run_pipeline(config, through="detect", progress=progress)
    assert second.ran_stages == ["reference-paths", "detect"]
    skipped = [e["stage"] for e in events if e.get("status") == "skipped"]
    assert skipped == ["ingest", "align"]


def test_failed_stage_reruns(tmp_path, monkeypatch):
    config = demo_config(tmp_path / "store")
    from kgaudit import pipeline as pl

    def boom(self):
        raise DataError("synthetic failure")

    monkeypatch.setattr(pl._Stages, "detect", boom)
    with pytest.raises(DataError, match="synthetic"):
        run_pipeline(config, through="detect", progress=lambda e: None)
    monkeypatch.undo()

    store = RunStore(config.store_root)
    run = store.open_run(store.list_runs()[0])
    assert run.stage_status("detect") == "Failed"
    assert run.stage_status("align") == "Done"

    result = run_pipeline(config, through="detect", progress=lambda e: None)
    assert result.ran_stages == ["detect"]
    assert result.run.stage_status("detect") == "Done"


def test_force_reruns_done_stages(tmp_path):
    config = demo_config(tmp_path / "store")
    run_pipeline(config, through="ingest", progress=lambda e: None)
    result = run_pipeline(config, through="ingest", force=True, progress=lambda e: None)
    assert result.ran_stages == ["ingest"]


def test_unknown_stage_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown stage"):
        run_pipeline(demo_config(tmp_path / "s"), through="transmogrify")


def test_lenient_skips_ungroundable_case(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    good = {
        "id": "GOOD",
        "question": "Patient has a fever. Diagnosis?",
        "options": ["influenza", "lupus"],
        "correct_answer": "influenza",
        "predicted_answer": "lupus",
        "question_entities": [{"text": "fever", "kind": "Symptom"}],
        "model_paths": [],
    }
    bad = dict(good, id="BAD", options=["influenza", "quuxotherium"], predicted_answer="quuxotherium")
    corpus.write_text(
        '{"schema_version": 1, "record_kind": "case"}\n'
        + json.dumps(good)
        + "\n"
        + json.dumps(bad)
        + "\n"
    )
    base = demo_config(tmp_path / "store")
    config = dataclasses.replace(base, corpus=str(corpus))

    with pytest.raises(DataError, match="cannot align"):
        run_pipeline(config, through="align", progress=lambda e: None)

    events, progress = collect()
    lenient = dataclasses.replace(config, lenient=True, store_root=str(tmp_path / "store2"))
    result = run_pipeline(lenient, through="detect", progress=progress)
    assert result.skipped_cases and result.skipped_cases[0][0] == "BAD"
    assert [r.case_id for r in result.run.load_reports()] == ["GOOD"]
    assert any(e["event"] == "case_skipped" for e in events)


def test_progress_lines_are_json(tmp_path, capsys):
    from kgaudit.pipeline import stderr_progress

    stderr_progress({"event": "stage", "stage": "ingest", "status": "start"})
    err = capsys.readouterr().err
    parsed = json.loads(err)
    assert parsed["stage"] == "ingest"


def test_missing_corpus_is_data_error(tmp_path):
    config = dataclasses.replace(
        demo_config(tmp_path / "store"), corpus=str(tmp_path / "absent.jsonl")
    )
    with pytest.raises(DataError, match="not found"):
        run_pipeline(config, through="ingest", progress=lambda e: None)
