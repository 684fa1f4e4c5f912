"""Node embeddings via biased random walks and skip-gram training.

Walks run over the undirected skeleton of the traversal graph so layout
proximity reflects topology rather than reachability direction. Training
is plain NumPy stochastic gradient descent with negative sampling, fully
deterministic for a fixed seed: batched updates, seeded permutations, and
a seeded sampling table. p = q = 1 takes a vectorized all-walks-at-once
path; other settings fall back to per-walk second-order sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..kg import EntityId, KnowledgeGraph


@dataclass(frozen=True)
class Node2VecParams:
    walk_length: int = 80
    walks_per_node: int = 10
    window: int = 10
    return_p: float = 1.0
    inout_q: float = 1.0
    epochs: int = 3
    negative: int = 5
    learning_rate: float = 0.025
    reproducible: bool = True

    def __post_init__(self):
        if self.walk_length < 1 or self.walks_per_node < 1 or self.window < 1:
            raise ValueError("walk_length, walks_per_node and window must be >= 1")
        if self.return_p <= 0 or self.inout_q <= 0:
            raise ValueError("return_p and inout_q must be positive")


@dataclass(frozen=True)
class NodeEmbeddings:
    dimension: int
    vectors: dict[EntityId, np.ndarray]
    seed: int
    params: Node2VecParams = field(default_factory=Node2VecParams)

    def matrix(self, order: list[EntityId] | None = None) -> np.ndarray:
        ids = order if order is not None else sorted(self.vectors)
        return np.stack([self.vectors[i] for i in ids])


def _uniform_walks(indptr, indices, starts: np.ndarray, length: int, rng) -> list[list[int]]:
    n_walks = len(starts)
    out = np.full((n_walks, length), -1, dtype=np.int64)
    cur = starts.astype(np.int64).copy()
    out[:, 0] = cur
    alive = (indptr[cur + 1] - indptr[cur]) > 0
    for t in range(1, length):
        if not alive.any():
            break
        deg = indptr[cur + 1] - indptr[cur]
        r = rng.random(n_walks)
        pick = np.minimum((r * np.maximum(deg, 1)).astype(np.int64), np.maximum(deg - 1, 0))
        # gather only live rows: a dead row's offset can point past the array
        nxt = cur.copy()
        src = (indptr[cur] + pick).astype(np.int64)
        nxt[alive] = indices[src[alive]].astype(np.int64)
        cur = nxt
        out[alive, t] = cur[alive]
        alive &= (indptr[cur + 1] - indptr[cur]) > 0
    return [row[row >= 0].tolist() for row in out]


def _biased_walk(indptr, indices, start: int, length: int, p: float, q: float, rng) -> list[int]:
    walk = [start]
    prev = -1
    for _ in range(length - 1):
        cur = walk[-1]
        lo, hi = int(indptr[cur]), int(indptr[cur + 1])
        if lo == hi:
            break
        nbrs = indices[lo:hi]
        if prev < 0:
            weights = np.ones(len(nbrs))
        else:
            prev_nbrs = indices[int(indptr[prev]) : int(indptr[prev + 1])]
            weights = np.where(np.isin(nbrs, prev_nbrs), 1.0, 1.0 / q)
            weights[nbrs == prev] = 1.0 / p
        cum = np.cumsum(weights)
        j = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        nxt = int(nbrs[min(j, len(nbrs) - 1)])
        prev = cur
        walk.append(nxt)
    return walk


def _walk_corpus(graph: KnowledgeGraph, params: Node2VecParams, rng) -> list[list[int]]:
    indptr, indices = graph.undirected_csr()
    n = graph.num_entities
    if params.return_p == 1.0 and params.inout_q == 1.0:
        starts = np.tile(np.arange(n, dtype=np.int64), params.walks_per_node)
        return _uniform_walks(indptr, indices, starts, params.walk_length, rng)
    walks = []
    for _ in range(params.walks_per_node):
        for start in range(n):
            walks.append(
                _biased_walk(
                    indptr, indices, start, params.walk_length, params.return_p, params.inout_q, rng
                )
            )
    return walks


def _skipgram_pairs(walks: list[list[int]], window: int) -> tuple[np.ndarray, np.ndarray]:
    centers: list[int] = []
    contexts: list[int] = []
    for walk in walks:
        length = len(walk)
        for i, c in enumerate(walk):
            lo = max(0, i - window)
            hi = min(length, i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(c)
                    contexts.append(walk[j])
    return (
        np.asarray(centers, dtype=np.int64),
        np.asarray(contexts, dtype=np.int64),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


def _train(
    n_nodes: int,
    dimension: int,
    centers: np.ndarray,
    contexts: np.ndarray,
    params: Node2VecParams,
    rng,
) -> np.ndarray:
    in_vecs = (rng.random((n_nodes, dimension)) - 0.5) / dimension
    if len(centers) == 0:
        return in_vecs
    out_vecs = np.zeros((n_nodes, dimension))

    freq = np.bincount(contexts, minlength=n_nodes).astype(np.float64)
    table = freq**0.75
    table_sum = table.sum()
    cum = np.cumsum(table / table_sum)

    n_pairs = len(centers)
    batch = 1024
    total_steps = params.epochs * n_pairs
    step = 0
    for _ in range(params.epochs):
        order = rng.permutation(n_pairs)
        for start in range(0, n_pairs, batch):
            idx = order[start : start + batch]
            c = centers[idx]
            o = contexts[idx]
            lr = params.learning_rate * max(1e-4, 1.0 - step / total_steps)
            step += len(idx)

            neg = np.searchsorted(cum, rng.random((len(idx), params.negative)), side="right")
            neg = np.minimum(neg, n_nodes - 1)

            wc = in_vecs[c]
            co = out_vecs[o]
            cn = out_vecs[neg]

            g_pos = _sigmoid(np.einsum("bd,bd->b", wc, co)) - 1.0
            g_neg = _sigmoid(np.einsum("bd,bkd->bk", wc, cn))

            grad_wc = g_pos[:, None] * co + np.einsum("bk,bkd->bd", g_neg, cn)
            grad_co = g_pos[:, None] * wc
            grad_cn = g_neg[:, :, None] * wc[:, None, :]

            # average gradients per parameter row within the batch; summing
            # collisions blows up on small graphs where every batch hits the
            # same few rows many times
            neg_flat = neg.reshape(-1)
            c_scale = 1.0 / np.bincount(c, minlength=n_nodes)[c]
            o_scale = 1.0 / np.bincount(o, minlength=n_nodes)[o]
            n_scale = 1.0 / np.bincount(neg_flat, minlength=n_nodes)[neg_flat]
            np.add.at(in_vecs, c, -lr * grad_wc * c_scale[:, None])
            np.add.at(out_vecs, o, -lr * grad_co * o_scale[:, None])
            np.add.at(
                out_vecs,
                neg_flat,
                -lr * grad_cn.reshape(-1, dimension) * n_scale[:, None],
            )
    return in_vecs


def node2vec_embed(
    graph: KnowledgeGraph,
    params: Node2VecParams | None = None,
    dimension: int = 128,
    seed: int = 42,
    entity_ids: list[EntityId] | None = None,
) -> NodeEmbeddings:
    """Embed graph nodes; vectors are returned for ``entity_ids`` (default
    all). Nodes never visited by a walk keep their seeded random init, so
    an edgeless graph still yields one finite vector per node."""
    if dimension < 2:
        raise ValueError("dimension must be >= 2")
    if graph.num_entities == 0:
        raise ValueError("graph is empty")
    params = params or Node2VecParams()
    rng = np.random.Generator(np.random.PCG64(seed))

    walks = _walk_corpus(graph, params, rng)
    centers, contexts = _skipgram_pairs(walks, params.window)
    matrix = _train(graph.num_entities, dimension, centers, contexts, params, rng)

    wanted = entity_ids if entity_ids is not None else graph.ids()
    vectors = {eid: matrix[graph.index_of(eid)].copy() for eid in wanted}
    return NodeEmbeddings(dimension=dimension, vectors=vectors, seed=seed, params=params)
