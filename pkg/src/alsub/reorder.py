"""Reverse Cuthill-McKee relabeling of mesh vertices.

The ordering works on the vertex adjacency (the pattern of ``E``, i.e. the
off-diagonal pattern of the mesh's graph Laplacian). Components are taken in
ascending order of their smallest vertex id; each BFS starts at the
component's minimum-degree vertex (ties to the lowest id) and visits
neighbours by ascending degree (ties to the lowest id). The concatenated
order is reversed at the end.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import DimensionError
from .sparse import (EDGE_MAP, INDEX, MeshMatrix, ReducedMeshMatrix, SparseMatrix, cyclic_arrays,
                     mesh_matrix_from_faces, spgemm_implicit_mesh)
from .topology import ragged_ranges


def adjacency(m: MeshMatrix) -> SparseMatrix:
    return spgemm_implicit_mesh(m, EDGE_MAP)


def bandwidth(m: MeshMatrix, adj: SparseMatrix | None = None) -> int:
    """max |i - j| over adjacent vertex pairs (0 for edgeless meshes)."""
    if adj is None:
        adj = adjacency(m)
    if adj.nnz == 0:
        return 0
    return int(np.abs(adj.row_indices - adj.column_indices()).max())


@njit(cache=True)
def _cuthill_mckee(offs, nbrs, degree):
    n = offs.size - 1
    order = np.empty(n, np.int64)
    seen = np.zeros(n, np.bool_)
    head = 0
    tail = 0
    # vertices by (degree, id): candidate starts, scanned once per component
    by_degree = np.argsort(degree, kind="mergesort")
    comp = np.full(n, -1, np.int64)
    # label components by their smallest vertex
    stack = np.empty(n, np.int64)
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = s
        top = 0
        stack[top] = s
        top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for p in range(offs[v], offs[v + 1]):
                w = nbrs[p]
                if comp[w] < 0:
                    comp[w] = s
                    stack[top] = w
                    top += 1
    start_of = np.full(n, -1, np.int64)
    for t in range(n):
        v = by_degree[t]
        if start_of[comp[v]] < 0:
            start_of[comp[v]] = v
    for c in range(n):
        s = start_of[c]
        if s < 0:
            continue
        seen[s] = True
        order[tail] = s
        tail += 1
        while head < tail:
            v = order[head]
            head += 1
            lo = offs[v]
            hi = offs[v + 1]
            cand = np.empty(hi - lo, np.int64)
            k = 0
            for p in range(lo, hi):
                w = nbrs[p]
                if not seen[w]:
                    seen[w] = True
                    cand[k] = w
                    k += 1
            cand = cand[:k]
            key = degree[cand] * n + cand
            cand = cand[np.argsort(key)]
            for w in cand:
                order[tail] = w
                tail += 1
    return order


def rcm_order(m: MeshMatrix, adj: SparseMatrix | None = None) -> np.ndarray:
    """Permutation ``perm`` with ``perm[new] = old``."""
    if adj is None:
        adj = adjacency(m)
    degree = np.diff(adj.col_offsets).astype(INDEX)
    cm = _cuthill_mckee(adj.col_offsets, adj.row_indices, degree)
    return cm[::-1].copy()


def inverse_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=INDEX)
    inv = np.full(perm.size, -1, INDEX)
    inv[perm] = np.arange(perm.size, dtype=INDEX)
    if np.any(inv < 0) or np.any(perm < 0) or np.any(perm >= perm.size):
        raise DimensionError("not a permutation")
    return inv


def permute_mesh(m: MeshMatrix, P, perm) -> tuple[MeshMatrix, np.ndarray]:
    """Relabel vertices (new id of old ``v`` is ``inv[v]``) and stably sort
    faces by their smallest new vertex id. Cyclic order inside faces is kept."""
    perm = np.asarray(perm, dtype=INDEX)
    P = np.asarray(P)
    if perm.size != m.rows or P.shape[0] != m.rows:
        raise DimensionError("permutation length must equal the vertex count")
    inv = inverse_permutation(perm)
    offs, rows = cyclic_arrays(m)
    new_rows = inv[rows]
    c = np.diff(offs)
    if m.cols:
        face_min = np.minimum.reduceat(new_rows, offs[:-1]) if new_rows.size else np.zeros(0, INDEX)
    else:
        face_min = np.zeros(0, INDEX)
    face_order = np.argsort(face_min, kind="stable")
    idx = ragged_ranges(offs[face_order], c[face_order])
    flat = new_rows[idx]
    if isinstance(m, ReducedMeshMatrix):
        out = ReducedMeshMatrix(m.order, m.faces, m.verts, flat)
    else:
        cs = c[face_order]
        starts = np.concatenate([[0], np.cumsum(cs)])
        out = mesh_matrix_from_faces([flat[starts[k]:starts[k + 1]].tolist() for k in range(cs.size)],
                                     m.rows)
    return out, P[perm]
