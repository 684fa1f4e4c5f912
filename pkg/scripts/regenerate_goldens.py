"""Rebuild the committed golden files from a fresh demo run.

Run from the repository root after an intentional behavior change:

    python3 scripts/regenerate_goldens.py

Never run it to make a failing test pass without understanding why the
bytes moved.
"""

import json
import shutil
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from kgaudit.api import create_app
from kgaudit.config import demo_config
from kgaudit.pipeline import run_pipeline

REPO = Path(__file__).resolve().parent.parent
DEMO_DIR = REPO / "tests" / "goldens" / "demo"
API_DIR = REPO / "tests" / "goldens" / "api"

RUN_ARTIFACTS = ("cases.jsonl", "reports.jsonl", "summary.json", "layout.tsv")

# name -> (method, path, params or json body)
RECORDED = {
    "overview": ("GET", "/api/overview", None),
    "overview_missing": ("GET", "/api/overview", {"kind": "Missing"}),
    "projection_k3": ("GET", "/api/projection", {"k": 3}),
    "path_view_all": (
        "POST",
        "/api/path-view",
        {"entity_ids": ["n1", "n2", "n3", "n4", "n5", "n6", "n7"], "min_error_intensity": 0},
    ),
    "node_n1_links": ("GET", "/api/node/n1/links", None),
    "expand_n1_relation": (
        "POST",
        "/api/errors/expand",
        {"anchor": "n1", "kind": "Relation", "mode": "AlongErrorSet"},
    ),
    "expand_n1_missing": (
        "POST",
        "/api/errors/expand",
        {"anchor": "n1", "kind": "Missing", "mode": "AlongErrorSet"},
    ),
    "cases_default": ("GET", "/api/cases", None),
    "cases_entity_n1": ("GET", "/api/cases", {"entity": "n1"}),
    "instance_case_b": ("GET", "/api/cases/CASE-B/instance", None),
}


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        config = demo_config(Path(tmp) / "store")
        result = run_pipeline(config, progress=lambda e: None)

        DEMO_DIR.mkdir(parents=True, exist_ok=True)
        for name in RUN_ARTIFACTS:
            shutil.copyfile(result.run.root / name, DEMO_DIR / name)
        (DEMO_DIR / "run_id.txt").write_text(result.run.run_id + "\n")

        API_DIR.mkdir(parents=True, exist_ok=True)
        client = TestClient(create_app(config, result.run.run_id))
        for name, (method, path, payload) in sorted(RECORDED.items()):
            if method == "GET":
                resp = client.get(path, params=payload)
            else:
                resp = client.post(path, json=payload)
            assert resp.status_code == 200, (name, resp.status_code, resp.text)
            record = {
                "request": {"method": method, "path": path, "payload": payload},
                "status": resp.status_code,
                "body": resp.text,
            }
            (API_DIR / f"{name}.json").write_text(
                json.dumps(record, indent=2, sort_keys=True) + "\n"
            )
    print(f"wrote {len(RUN_ARTIFACTS) + 1} run artifacts and {len(RECORDED)} API goldens")


if __name__ == "__main__":
    main()
