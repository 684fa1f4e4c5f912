# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled breadth-first traversal kernels over CSR adjacency.

Hot loops of the reachability engine: full reachable-set masks, early-exit
pair queries and level labelling. A NumPy implementation with the same
signatures lives in ``_kernels_py``; the engine picks one at import time.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPLEMENTATION = "compiled"


def reach_mask(cnp.int32_t[::1] indptr, cnp.int32_t[::1] indices, int src):
    """Boolean mask of nodes reachable from ``src`` (including ``src``)."""
    cdef int n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] seen = out
    queue = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[::1] q = queue
    cdef int head = 0, tail = 0, u, v
    cdef cnp.int32_t j
    seen[src] = 1
    q[tail] = src
    tail += 1
    while head < tail:
        u = q[head]
        head += 1
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            if not seen[v]:
                seen[v] = 1
                q[tail] = v
                tail += 1
    return out


def reach_pair(cnp.int32_t[::1] indptr, cnp.int32_t[::1] indices, int src, int dst):
    """True iff ``dst`` is reachable from ``src``; stops as soon as it is seen."""
    if src == dst:
        return True
    cdef int n = indptr.shape[0] - 1
    seen_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] seen = seen_arr
    queue = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[::1] q = queue
    cdef int head = 0, tail = 0, u, v
    cdef cnp.int32_t j
    seen[src] = 1
    q[tail] = src
    tail += 1
    while head < tail:
        u = q[head]
        head += 1
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            if v == dst:
                return True
            if not seen[v]:
                seen[v] = 1
                q[tail] = v
                tail += 1
    return False


def bfs_distances(cnp.int32_t[::1] indptr, cnp.int32_t[::1] indices, int src):
    """Hop distance from ``src`` to every node; -1 where unreachable."""
    cdef int n = indptr.shape[0] - 1
    out = np.full(n, -1, dtype=np.int32)
    cdef cnp.int32_t[::1] dist = out
    queue = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[::1] q = queue
    cdef int head = 0, tail = 0, u, v
    cdef cnp.int32_t j
    dist[src] = 0
    q[tail] = src
    tail += 1
    while head < tail:
        u = q[head]
        head += 1
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q[tail] = v
                tail += 1
    return out
