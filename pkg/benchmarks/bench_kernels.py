"""Compare the compiled reachability kernels against the pure-Python
fallback on a synthetic graph.

    python3 benchmarks/bench_kernels.py [--nodes N] [--edges M] [--queries Q]

The fallback is selected with KGAUDIT_PURE_PYTHON=1 in a subprocess so
both sides run exactly the import path users get.
"""

import argparse
import json
import os
import random
import subprocess
import sys
import tempfile
import textwrap
from pathlib import Path


def build_fixture(path: Path, n_nodes: int, n_edges: int, seed: int = 7) -> None:
    rng = random.Random(seed)
    nodes = path / "nodes.tsv"
    edges = path / "edges.tsv"
    with open(nodes, "w") as fh:
        fh.write("id\tname\ttype\n")
        for i in range(n_nodes):
            kind = ("Disease", "Symptom", "Other")[i % 3]
            fh.write(f"e{i}\tentity {i}\t{kind}\n")
    with open(edges, "w") as fh:
        fh.write("src\trelation\tdst\n")
        for _ in range(n_edges):
            a = rng.randrange(n_nodes)
            b = rng.randrange(n_nodes)
            rel = rng.choice(["parent-of", "presents", "causes"])
            fh.write(f"e{a}\t{rel}\te{b}\n")


WORKER = textwrap.dedent(
    """
    import json, random, sys, time
    from kgaudit.kg import engine_for, kernel_backend, load_kg

    nodes, edges, n_queries = sys.argv[1], sys.argv[2], int(sys.argv[3])
    graph = load_kg(nodes, edges, strict=False)
    engine = engine_for(graph)
    rng = random.Random(11)
    ids = graph.ids()
    pairs = [(rng.choice(ids), rng.choice(ids)) for _ in range(n_queries)]

    # warm pass populates the per-source cache, timed pass measures reuse
    t0 = time.perf_counter()
    hits = sum(engine.reach(a, b) for a, b in pairs)
    cold = time.perf_counter() - t0
    t0 = time.perf_counter()
    hits2 = sum(engine.reach(a, b) for a, b in pairs)
    warm = time.perf_counter() - t0
    assert hits == hits2

    t0 = time.perf_counter()
    sets = sum(len(engine.reachable_set(x)) for x in ids[:200])
    sweep = time.perf_counter() - t0

    print(json.dumps({
        "backend": kernel_backend(),
        "reach_cold_s": round(cold, 4),
        "reach_warm_s": round(warm, 4),
        "reachable_set_200_s": round(sweep, 4),
        "hits": hits,
        "set_size_sum": sets,
    }))
    """
)


def run_side(pure: bool, nodes: Path, edges: Path, queries: int) -> dict:
    env = dict(os.environ)
    if pure:
        env["KGAUDIT_PURE_PYTHON"] = "1"
    else:
        env.pop("KGAUDIT_PURE_PYTHON", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(nodes), str(edges), str(queries)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=20000)
    parser.add_argument("--edges", type=int, default=100000)
    parser.add_argument("--queries", type=int, default=2000)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        build_fixture(tmp_path, args.nodes, args.edges)
        results = [
            run_side(False, tmp_path / "nodes.tsv", tmp_path / "edges.tsv", args.queries),
            run_side(True, tmp_path / "nodes.tsv", tmp_path / "edges.tsv", args.queries),
        ]

    if results[0]["hits"] != results[1]["hits"] or (
        results[0]["set_size_sum"] != results[1]["set_size_sum"]
    ):
        raise SystemExit("backends disagree; benchmark aborted")

    print(f"graph: {args.nodes} nodes, {args.edges} edges, {args.queries} reach queries")
    header = f"{'backend':<10} {'cold reach':>12} {'warm reach':>12} {'200 sweeps':>12}"
    print(header)
    print("-" * len(header))
    for r in results:
        print(
            f"{r['backend']:<10} {r['reach_cold_s']:>11.4f}s {r['reach_warm_s']:>11.4f}s "
            f"{r['reachable_set_200_s']:>11.4f}s"
        )
    speedup = results[1]["reachable_set_200_s"] / max(results[0]["reachable_set_200_s"], 1e-9)
    print(f"compiled speedup on sweeps: {speedup:.1f}x")


if __name__ == "__main__":
    main()
