"""Slow, obviously-correct reference implementations used to check the
package. Everything here is built from plain dicts and exhaustive search,
sharing no code with the library under test."""

from __future__ import annotations

from collections import deque


def traversal_arcs(edges, directed_relations=("parent-of",)):
    """Arc set of the mixed-direction traversal graph: directed relations
    keep their direction, everything else contributes both directions."""
    directed = set(directed_relations)
    arcs = set()
    for src, rel, dst in edges:
        arcs.add((src, dst))
        if rel not in directed:
            arcs.add((dst, src))
    return arcs


def adjacency(entity_ids, arcs):
    adj = {e: set() for e in entity_ids}
    for src, dst in arcs:
        adj[src].add(dst)
    return adj


def reachable_oracle(entity_ids, arcs, start):
    """BFS closure including the start node itself."""
    adj = adjacency(entity_ids, arcs)
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in adj[node]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def reach_oracle(entity_ids, arcs, src, dst):
    return dst in reachable_oracle(entity_ids, arcs, src)


def ancestors_oracle(entity_ids, arcs, target):
    return {e for e in entity_ids if reach_oracle(entity_ids, arcs, e, target)}


def distances_oracle(entity_ids, arcs, start):
    adj = adjacency(entity_ids, arcs)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in adj[node]:
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


def shortest_paths_oracle(entity_ids, arcs, src, dst):
    """Every minimum-hop node sequence from src to dst, sorted
    lexicographically. Exhaustive DFS over the shortest-path DAG."""
    if src == dst:
        return [(src,)]
    dist = distances_oracle(entity_ids, arcs, src)
    if dst not in dist:
        return []
    back = distances_oracle(entity_ids, {(b, a) for a, b in arcs}, dst)
    total = dist[dst]
    adj = adjacency(entity_ids, arcs)
    results = []

    def walk(node, prefix):
        if node == dst:
            results.append(tuple(prefix))
            return
        for nxt in sorted(adj[node]):
            if dist.get(node, -2) + 1 == dist.get(nxt, -1) and nxt in back and dist[nxt] + back[nxt] == total:
                walk(nxt, prefix + [nxt])

    walk(src, [src])
    return sorted(results)


def error_sets_oracle(entity_ids, arcs, model_pairs, ref_nodes, model_nodes, y_true, y_pred):
    """The three error sets computed straight from their defining
    predicates, given a grounded case.

    model_pairs: consecutive entity pairs of the grounded model paths.
    ref_nodes:   entities on the reference paths.
    model_nodes: entities on the grounded model paths.
    """

    def reach(a, b):
        return reach_oracle(entity_ids, arcs, a, b)

    relation = {(a, b) for a, b in model_pairs if not reach(a, b)}
    branch = {(a, b) for a, b in model_pairs if reach(a, y_true) and not reach(b, y_true)}
    missing = {
        m
        for m in (set(ref_nodes) - set(model_nodes))
        if m != y_true and reach(m, y_true) and not reach(m, y_pred)
    }
    return relation, branch, missing


def random_graph(rng, max_nodes=50, max_edges=200, relations=("parent-of", "present", "resemble")):
    """A random entity/edge list in loader row format. Node ids are zero
    padded so lexicographic and numeric order agree."""
    n = rng.randint(2, max_nodes)
    ids = [f"e{i:03d}" for i in range(n)]
    kinds = [rng.choice(["Disease", "Symptom", "Other"]) for _ in ids]
    nodes = [(eid, f"name-{eid}", kind) for eid, kind in zip(ids, kinds)]
    m = rng.randint(0, max_edges)
    edges = []
    seen = set()
    for _ in range(m):
        src, dst = rng.choice(ids), rng.choice(ids)
        if src == dst:
            continue
        rel = rng.choice(relations)
        if (src, rel, dst) in seen:
            continue
        seen.add((src, rel, dst))
        edges.append((src, rel, dst))
    return nodes, edges
