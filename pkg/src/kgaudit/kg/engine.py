"""Reachability, ancestor, shortest-path and neighborhood queries.

Queries run over the traversal graph's CSR adjacency via the active kernel
backend. Full reachable/ancestor sets are memoized as packed bitmasks in
bounded LRU caches; with a warm ancestor cache a reach query is a single
bit test. All caches are lock-protected, so one engine can serve many
reader threads over the immutable graph.
"""

from __future__ import annotations

import threading
import weakref
from collections import OrderedDict

import numpy as np

from .backend import kernel_backend, kernels
from .model import EntityId, KnowledgeGraph, Path, Subgraph


class _LruMasks:
    """Bounded node-index -> packed-bitmask cache."""

    def __init__(self, maxsize: int):
        self.maxsize = maxsize
        self._data: OrderedDict[int, np.ndarray] = OrderedDict()

    def get(self, key: int) -> np.ndarray | None:
        mask = self._data.get(key)
        if mask is not None:
            self._data.move_to_end(key)
        return mask

    def put(self, key: int, mask: np.ndarray) -> None:
        self._data[key] = mask
        self._data.move_to_end(key)
        while len(self._data) > self.maxsize:
            self._data.popitem(last=False)


def _packed_test(packed: np.ndarray, idx: int) -> bool:
    return bool((packed[idx >> 3] >> (idx & 7)) & 1)


class GraphEngine:
    """Query engine bound to one immutable :class:`KnowledgeGraph`."""

    def __init__(self, graph: KnowledgeGraph, cache_size: int = 512):
        self.graph = graph
        self._lock = threading.Lock()
        self._fwd_masks = _LruMasks(cache_size)
        self._anc_masks = _LruMasks(cache_size)

    @property
    def backend(self) -> str:
        return kernel_backend()

    # -- mask-level internals (index space) --------------------------------

    def _mask(self, cache: _LruMasks, indptr, indices, idx: int) -> np.ndarray:
        with self._lock:
            packed = cache.get(idx)
        if packed is None:
            mask = kernels.reach_mask(indptr, indices, idx)
            packed = np.packbits(mask, bitorder="little")
            with self._lock:
                cache.put(idx, packed)
        return packed

    def forward_mask(self, idx: int) -> np.ndarray:
        """Packed reachable-set bitmask for a source index."""
        return self._mask(self._fwd_masks, self.graph.indptr, self.graph.indices, idx)

    def ancestor_mask(self, idx: int) -> np.ndarray:
        """Packed ancestor-set bitmask for a target index."""
        return self._mask(self._anc_masks, self.graph.rev_indptr, self.graph.rev_indices, idx)

    def warm_ancestors(self, entity_ids: list[EntityId]) -> None:
        """Precompute ancestor masks, e.g. for every answer entity of a corpus."""
        for eid in entity_ids:
            self.ancestor_mask(self.graph.index_of(eid))

    def reach_idx(self, u: int, v: int) -> bool:
        if u == v:
            return True
        with self._lock:
            anc = self._anc_masks.get(v)
            fwd = self._fwd_masks.get(u)
        if anc is not None:
            return _packed_test(anc, u)
        if fwd is None:
            # cache the whole source mask: corpus queries reuse sources
            fwd = self.forward_mask(u)
        return _packed_test(fwd, v)

    # -- public queries (id space) ------------------------------------------

    def reach(self, u: EntityId, v: EntityId) -> bool:
        """True iff a directed traversal path u -> v exists (reflexive)."""
        return self.reach_idx(self.graph.index_of(u), self.graph.index_of(v))

    def reachable_set(self, u: EntityId) -> set[EntityId]:
        """All entities reachable from ``u``, including ``u`` itself."""
        packed = self.forward_mask(self.graph.index_of(u))
        return self._unpack_ids(packed)

    def ancestor_set(self, target: EntityId) -> set[EntityId]:
        """All entities from which ``target`` is reachable, including itself."""
        packed = self.ancestor_mask(self.graph.index_of(target))
        return self._unpack_ids(packed)

    def _unpack_ids(self, packed: np.ndarray) -> set[EntityId]:
        n = self.graph.num_entities
        bits = np.unpackbits(packed, count=n, bitorder="little")
        return {self.graph.id_of(int(i)) for i in np.nonzero(bits)[0]}

    def shortest_paths(self, src: EntityId, dst: EntityId, max_paths: int) -> list[Path]:
        """All distinct minimum-length directed paths src -> dst.

        Capped at ``max_paths`` in lexicographic order of the node-id
        sequence; empty when unreachable; the single zero-length path when
        src == dst.
        """
        if max_paths <= 0:
            raise ValueError("max_paths must be positive")
        g = self.graph
        s = g.index_of(src)
        d = g.index_of(dst)
        if s == d:
            return [Path((src,))]
        fwd = kernels.bfs_distances(g.indptr, g.indices, s)
        total = int(fwd[d])
        if total < 0:
            return []
        bwd = kernels.bfs_distances(g.rev_indptr, g.rev_indices, d)

        paths: list[Path] = []
        stack: list[int] = [s]

        def extend(u: int, depth: int) -> bool:
            if u == d:
                nodes = tuple(g.id_of(i) for i in stack)
                rels = tuple(
                    g.arc_relations[(stack[k], stack[k + 1])] for k in range(len(stack) - 1)
                )
                paths.append(Path(nodes, rels))
                return len(paths) >= max_paths
            # CSR neighbors are in ascending index order, which is ascending
            # id order, so DFS emits paths lexicographically.
            for j in range(g.indptr[u], g.indptr[u + 1]):
                v = int(g.indices[j])
                if fwd[v] == depth + 1 and fwd[v] + bwd[v] == total:
                    stack.append(v)
                    if extend(v, depth + 1):
                        return True
                    stack.pop()
            return False

        extend(s, 0)
        return paths

    def distance(self, src: EntityId, dst: EntityId) -> int:
        """Hop count of the shortest traversal path, or -1 when unreachable."""
        g = self.graph
        s = g.index_of(src)
        d = g.index_of(dst)
        return int(kernels.bfs_distances(g.indptr, g.indices, s)[d])

    def neighborhood(self, center: EntityId, depth: int) -> Subgraph:
        """Entities within ``depth`` undirected hops plus the arcs among them."""
        if depth < 0:
            raise ValueError("depth must be non-negative")
        g = self.graph
        c = g.index_of(center)
        und_indptr, und_indices = g.undirected_csr()
        dist = kernels.bfs_distances(und_indptr, und_indices, c)
        included = np.nonzero((dist >= 0) & (dist <= depth))[0]
        inc_set = set(int(i) for i in included)
        ids = frozenset(g.id_of(i) for i in inc_set)
        arcs = {}
        for u in inc_set:
            for j in range(g.indptr[u], g.indptr[u + 1]):
                v = int(g.indices[j])
                if v in inc_set:
                    arcs[(g.id_of(u), g.id_of(v))] = g.arc_relations[(u, v)]
        return Subgraph(ids, frozenset(arcs), arcs)


_ENGINES: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()
_ENGINES_LOCK = threading.Lock()


def engine_for(graph: KnowledgeGraph) -> GraphEngine:
    """Shared engine per graph instance, so callers reuse one cache."""
    with _ENGINES_LOCK:
        eng = _ENGINES.get(graph)
        if eng is None:
            eng = GraphEngine(graph)
            _ENGINES[graph] = eng
        return eng


def reach(graph: KnowledgeGraph, u: EntityId, v: EntityId) -> bool:
    return engine_for(graph).reach(u, v)


def reachable_set(graph: KnowledgeGraph, u: EntityId) -> set[EntityId]:
    return engine_for(graph).reachable_set(u)


def ancestor_set(graph: KnowledgeGraph, target: EntityId) -> set[EntityId]:
    return engine_for(graph).ancestor_set(target)


def shortest_paths(
    graph: KnowledgeGraph, src: EntityId, dst: EntityId, max_paths: int
) -> list[Path]:
    return engine_for(graph).shortest_paths(src, dst, max_paths)


def neighborhood(graph: KnowledgeGraph, center: EntityId, depth: int) -> Subgraph:
    return engine_for(graph).neighborhood(center, depth)
