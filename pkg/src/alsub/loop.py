"""Loop subdivision for closed triangle meshes.

The opposite-vertex matrix ``G = M M^T`` under ``{Q_3}[opposite]`` stores,
for each directed edge i -> j, 1 + the third vertex of the triangle holding
it. Refined vertex ids: original vertices ``0..|v|-1``, then edge-points
``|v| + edge_id``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .catmull_clark import build_edge_matrix
from .errors import BoundaryError, DegenerateVertexError, NonManifoldError, SchemeConstraintError
from .sparse import (INDEX, OPPOSITE_MAP, MeshMatrix, PerRow, ReducedMeshMatrix, SparseMatrix,
                     cyclic_arrays, lookup, spgemm_implicit_mesh, spmv_mapped_direct)
from .topology import EdgeTable, entry_edges


def loop_beta(n) -> np.ndarray:
    """beta(n) = (5/8 - (3/8 + cos(2 pi / n) / 4)^2) / n."""
    n = np.asarray(n, dtype=np.float64)
    return (0.625 - (0.375 + 0.25 * np.cos(2.0 * np.pi / n)) ** 2) / n


def check_closed_triangles(m: MeshMatrix, scheme: str):
    """Raise unless ``m`` is a closed, consistently oriented manifold triangle mesh.

    Returns ``(E, edges, n)`` with ``n`` the edge valence of each vertex.
    """
    orders = np.diff(m.col_offsets)
    if m.cols and np.any(orders != 3):
        k = int(np.flatnonzero(orders != 3)[0])
        raise SchemeConstraintError(
            f"{scheme} needs a triangle mesh; face {k} has {orders[k]} vertices "
            "(use Catmull-Clark for polygon meshes)")
    E, edges = build_edge_matrix(m)
    if E.nnz and np.any(E.values == 1):
        p = int(np.flatnonzero(E.values == 1)[0])
        i, j = int(E.row_indices[p]), int(E.column_indices()[p])
        raise BoundaryError(
            f"{scheme} supports closed meshes only; edge ({min(i, j)}, {max(i, j)}) is on "
            "the boundary (use Catmull-Clark or fill the hole first)")
    n = np.diff(E.col_offsets)
    used = np.zeros(m.rows, bool)
    used[m.row_indices] = True
    low = used & (n < 3)
    if np.any(low):
        v = int(np.flatnonzero(low)[0])
        raise DegenerateVertexError(f"vertex {v} has valence {n[v]} < 3")
    return E, edges, n


@dataclass(eq=False)
class LoopBuildArtifacts:
    M: MeshMatrix
    G: SparseMatrix
    edges: EdgeTable
    opp0: np.ndarray  # vertex opposite v0 -> v1
    opp1: np.ndarray  # vertex opposite v1 -> v0
    n: np.ndarray
    M_next: ReducedMeshMatrix

    C_next = None

    @property
    def n_verts(self) -> int:
        return self.M.rows

    @property
    def n_verts_next(self) -> int:
        return self.M.rows + self.edges.count

    def nbytes(self) -> int:
        arrays = [self.G.row_indices, self.G.values, self.M_next.row_indices,
                  self.opp0, self.opp1, self.edges.v0, self.edges.v1]
        return int(sum(a.nbytes for a in arrays))


def build_opposite_matrix(m: MeshMatrix) -> SparseMatrix:
    return spgemm_implicit_mesh(m, OPPOSITE_MAP)


def loop_refine_topology(m: MeshMatrix, entry_edge: np.ndarray, n_edges: int) -> ReducedMeshMatrix:
    """Triangle (k, l, m) -> (k, e_kl, e_mk), (l, e_lm, e_kl), (m, e_mk, e_lm), (e_kl, e_lm, e_mk)."""
    _, rows = cyclic_arrays(m)
    nv = m.rows
    t = rows.reshape(-1, 3)
    e = nv + entry_edge.reshape(-1, 3)  # e_kl, e_lm, e_mk
    kl, lm, mk = e[:, 0], e[:, 1], e[:, 2]
    tris = np.stack([
        np.stack([t[:, 0], kl, mk], 1),
        np.stack([t[:, 1], lm, kl], 1),
        np.stack([t[:, 2], mk, lm], 1),
        np.stack([kl, lm, mk], 1),
    ], axis=1).reshape(-1, 3)
    return ReducedMeshMatrix(3, tris.shape[0], nv + n_edges, tris)


def build(m: MeshMatrix, C=None) -> LoopBuildArtifacts:
    if C is not None and C.nnz:
        raise SchemeConstraintError("creases are supported for Catmull-Clark only")
    _, edges, n = check_closed_triangles(m, "Loop")
    G = build_opposite_matrix(m)
    p01 = lookup(G, edges.v0, edges.v1)
    p10 = lookup(G, edges.v1, edges.v0)
    if np.any(p01 < 0) or np.any(p10 < 0):
        raise NonManifoldError("faces are inconsistently oriented")
    opp0 = (G.values[p01] - 1).astype(INDEX)
    opp1 = (G.values[p10] - 1).astype(INDEX)
    ee = entry_edges(m, edges)
    M_next = loop_refine_topology(m, ee, edges.count)
    _ = G.row_view
    return LoopBuildArtifacts(m, G, edges, opp0, opp1, n, M_next)


def loop_edge_points(P, art: LoopBuildArtifacts) -> np.ndarray:
    """3/8 (p_i + p_j) + 1/8 (p_a + p_b), a and b opposite the edge."""
    out = np.empty((art.edges.count, P.shape[1]))
    K.loop_edge_points(art.edges.v0, art.edges.v1, art.opp0, art.opp1, P, out)
    return out


def vertex_weights(n):
    nz = n > 0
    beta = np.where(nz, loop_beta(np.where(nz, n, 3)), 0.0)
    return 1.0 - n * beta, beta


def loop_vertex_update(G: SparseMatrix, P, n) -> np.ndarray:
    """(1 - n beta) p_i + beta sum_j p_j over G's pattern."""
    self_w, beta = vertex_weights(n)
    acc = spmv_mapped_direct(G, PerRow(beta), P)
    out = np.empty_like(acc)
    K.affine_combine(self_w, np.ascontiguousarray(P), acc, out)
    return out


def evaluate(art: LoopBuildArtifacts, P) -> np.ndarray:
    P = np.ascontiguousarray(P, dtype=np.float64)
    return np.concatenate([loop_vertex_update(art.G, P, art.n), loop_edge_points(P, art)])


def step_stencils(art: LoopBuildArtifacts):
    """Triplets of the one-step refinement matrix."""
    nv = art.n_verts
    e = art.edges
    eid = nv + np.arange(e.count, dtype=INDEX)
    self_w, beta = vertex_weights(art.n)
    rv = art.G.row_view
    verts = np.arange(nv, dtype=INDEX)
    ring_r = np.repeat(verts, np.diff(rv.row_offsets))
    rows = np.concatenate([verts, ring_r, eid, eid, eid, eid])
    cols = np.concatenate([verts, rv.col_index, e.v0, e.v1, art.opp0, art.opp1])
    w3, w1 = np.full(e.count, 0.375), np.full(e.count, 0.125)
    vals = np.concatenate([self_w, beta[ring_r], w3, w3, w1, w1])
    return rows, cols, vals
