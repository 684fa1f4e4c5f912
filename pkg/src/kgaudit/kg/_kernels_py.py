"""Pure-NumPy fallback for the traversal kernels.

Same signatures and semantics as the compiled ``_kernels`` extension;
frontier expansion is vectorized per BFS level so the fallback stays usable
on large graphs, just slower than the compiled path.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"


def _expand(indptr: np.ndarray, indices: np.ndarray, frontier: np.ndarray) -> np.ndarray:
    """All out-neighbors of the frontier nodes, with repeats."""
    starts = indptr[frontier]
    counts = indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=indices.dtype)
    offsets = np.repeat(starts - (np.cumsum(counts) - counts), counts) + np.arange(
        total, dtype=np.int64
    )
    return indices[offsets]


def reach_mask(indptr: np.ndarray, indices: np.ndarray, src: int) -> np.ndarray:
    """Boolean mask of nodes reachable from ``src`` (including ``src``)."""
    n = indptr.shape[0] - 1
    seen = np.zeros(n, dtype=np.uint8)
    seen[src] = 1
    frontier = np.array([src], dtype=np.int32)
    while frontier.size:
        nbrs = _expand(indptr, indices, frontier)
        fresh = nbrs[seen[nbrs] == 0]
        if fresh.size == 0:
            break
        frontier = np.unique(fresh)
        seen[frontier] = 1
    return seen


def reach_pair(indptr: np.ndarray, indices: np.ndarray, src: int, dst: int) -> bool:
    """True iff ``dst`` is reachable from ``src``; stops once it is seen."""
    if src == dst:
        return True
    n = indptr.shape[0] - 1
    seen = np.zeros(n, dtype=np.uint8)
    seen[src] = 1
    frontier = np.array([src], dtype=np.int32)
    while frontier.size:
        nbrs = _expand(indptr, indices, frontier)
        fresh = nbrs[seen[nbrs] == 0]
        if fresh.size == 0:
            return False
        frontier = np.unique(fresh)
        if seen[dst]:
            return True
        seen[frontier] = 1
        if seen[dst]:
            return True
    return False


def bfs_distances(indptr: np.ndarray, indices: np.ndarray, src: int) -> np.ndarray:
    """Hop distance from ``src`` to every node; -1 where unreachable."""
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int32)
    dist[src] = 0
    frontier = np.array([src], dtype=np.int32)
    level = 0
    while frontier.size:
        level += 1
        nbrs = _expand(indptr, indices, frontier)
        fresh = nbrs[dist[nbrs] < 0]
        if fresh.size == 0:
            break
        frontier = np.unique(fresh)
        dist[frontier] = level
    return dist
