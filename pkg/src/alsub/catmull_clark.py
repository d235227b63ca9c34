"""Catmull-Clark subdivision as mapped sparse products.

One iteration is a *build* step (topology only: ``E``, ``F``, the refined mesh
matrix, boundary and crease bookkeeping) followed by an *eval* step (face-
points, edge-points, vertex update, boundary repair, crease overrides).

Refined vertex ids: original vertices ``0..|v|-1``, face-points
``|v|..|v|+|f|-1``, edge-points ``|v|+|f|+edge_id``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import creases as cr
from .errors import BoundaryError, DegenerateVertexError, NonManifoldError
from .sparse import (EDGE_MAP, FACE_MAP, INDEX, Constant, MeshMatrix, PerRow,
                     ReducedMeshMatrix, SparseMatrix, cyclic_arrays, lookup,
                     spgemm_implicit_mesh, spmv_mapped_direct, spmv_mapped_transpose)
from .topology import EdgeTable, cyclic_prev, entry_edges, enumerate_edges, ragged_ranges


def face_orders(m: MeshMatrix) -> np.ndarray:
    """``c = M^T 1`` with values mapped to 1."""
    return np.rint(spmv_mapped_transpose(m, Constant(1.0), np.ones(m.rows))).astype(INDEX)


def valences(m: MeshMatrix) -> np.ndarray:
    """Faces incident to each vertex, ``n = M 1`` with values mapped to 1."""
    return np.rint(spmv_mapped_direct(m, Constant(1.0), np.ones(m.cols))).astype(INDEX)


def face_points(m: MeshMatrix, P, c=None) -> np.ndarray:
    if c is None:
        c = face_orders(m)
    return spmv_mapped_transpose(m, PerRow(1.0 / c), P)


def build_edge_matrix(m: MeshMatrix) -> tuple[SparseMatrix, EdgeTable]:
    """``E = M M^T`` under ``{Q_c + Q_c^{c-1}}[lambda = Q]`` and its edge numbering.

    ``E(i, j)`` counts the faces sharing edge (i, j): 1 on the boundary, 2 inside.
    """
    E = spgemm_implicit_mesh(m, EDGE_MAP)
    if E.nnz and E.values.max() > 2:
        p = int(np.argmax(E.values))
        i, j = int(E.row_indices[p]), int(E.column_indices()[p])
        raise NonManifoldError(f"edge ({min(i, j)}, {max(i, j)}) has {E.values[p]} incident faces")
    return E, enumerate_edges(E)


def build_face_matrix(m: MeshMatrix) -> SparseMatrix:
    """``F = M M^T`` under ``{Q_c}[gamma]``: ``F(i, j)`` = 1 + face holding i -> j."""
    return spgemm_implicit_mesh(m, FACE_MAP)


@dataclass(frozen=True, eq=False)
class EdgeFaces:
    """Per edge: endpoints and the faces left/right of it (-1 if absent)."""

    v0: np.ndarray
    v1: np.ndarray
    f0: np.ndarray  # face holding v0 -> v1
    f1: np.ndarray  # face holding v1 -> v0
    mult: np.ndarray


def edge_faces(E: SparseMatrix, F: SparseMatrix, edges: EdgeTable) -> EdgeFaces:
    v0, v1 = edges.v0, edges.v1
    p01 = lookup(F, v0, v1)
    p10 = lookup(F, v1, v0)
    f0 = np.where(p01 >= 0, F.values[np.maximum(p01, 0)] - 1, -1).astype(INDEX)
    f1 = np.where(p10 >= 0, F.values[np.maximum(p10, 0)] - 1, -1).astype(INDEX)
    mult = E.values[E.row_indices < E.column_indices()]
    return EdgeFaces(v0, v1, f0, f1, mult)


@dataclass(frozen=True, eq=False)
class BoundaryInfo:
    edges: np.ndarray  # ids of boundary edges
    count: np.ndarray  # boundary edges incident to each vertex
    nbr: np.ndarray  # (|v|, 2) boundary neighbours where count == 2

    @property
    def empty(self) -> bool:
        return self.edges.size == 0


def boundary_info(ef: EdgeFaces, n_verts: int) -> BoundaryInfo:
    bid = np.flatnonzero(ef.mult == 1)
    ends = np.concatenate([ef.v0[bid], ef.v1[bid]])
    other = np.concatenate([ef.v1[bid], ef.v0[bid]])
    count = np.bincount(ends, minlength=n_verts).astype(INDEX)
    if np.any(count == 1):
        v = int(np.flatnonzero(count == 1)[0])
        raise BoundaryError(f"vertex {v} has a single boundary edge (malformed boundary)")
    nbr = np.full((n_verts, 2), -1, INDEX)
    order = np.argsort(ends, kind="stable")
    ends_s, other_s = ends[order], other[order]
    first = np.searchsorted(ends_s, np.arange(n_verts))
    two = np.flatnonzero(count == 2)
    nbr[two, 0] = other_s[first[two]]
    nbr[two, 1] = other_s[first[two] + 1]
    return BoundaryInfo(bid.astype(INDEX), count, nbr)


def refine_topology(m: MeshMatrix, entry_edge: np.ndarray, n_edges: int) -> ReducedMeshMatrix:
    """Each face of order c becomes c quads (v_t, e(v_t, v_t+1), f_r, e(v_t-1, v_t))."""
    offs, rows = cyclic_arrays(m)
    nv, nf = m.rows, m.cols
    c = np.diff(offs)
    face_of = np.repeat(np.arange(nf, dtype=INDEX), c)
    prev = cyclic_prev(m)
    ebase = nv + nf
    quads = np.stack([rows, ebase + entry_edge, nv + face_of, ebase + entry_edge[prev]], axis=1)
    return ReducedMeshMatrix(4, quads.shape[0], nv + nf + n_edges, quads)


@dataclass(eq=False)
class CCBuildArtifacts:
    M: MeshMatrix
    E: SparseMatrix
    F: SparseMatrix
    edges: EdgeTable
    ef: EdgeFaces
    c: np.ndarray
    n: np.ndarray
    boundary: BoundaryInfo
    M_next: ReducedMeshMatrix
    creases: cr.CreaseArtifacts | None = None

    @property
    def n_verts(self) -> int:
        return self.M.rows

    @property
    def n_faces(self) -> int:
        return self.M.cols

    @property
    def edge_count(self) -> int:
        return self.edges.count

    @property
    def n_verts_next(self) -> int:
        return self.n_verts + self.n_faces + self.edge_count

    @property
    def C_next(self) -> SparseMatrix | None:
        return None if self.creases is None else self.creases.C_next

    def nbytes(self) -> int:
        arrays = [self.E.row_indices, self.E.values, self.F.row_indices, self.F.values,
                  self.M_next.row_indices, self.ef.v0, self.ef.v1, self.ef.f0, self.ef.f1]
        return int(sum(a.nbytes for a in arrays))


def build(m: MeshMatrix, C: SparseMatrix | None = None) -> CCBuildArtifacts:
    """Topology step for one iteration."""
    c = face_orders(m)
    n = valences(m)
    E, edges = build_edge_matrix(m)
    F = build_face_matrix(m)
    ef = edge_faces(E, F, edges)
    bad = (ef.mult == 2) & ((ef.f0 < 0) | (ef.f1 < 0))
    if np.any(bad):
        t = int(np.flatnonzero(bad)[0])
        raise NonManifoldError(
            f"faces on edge ({ef.v0[t]}, {ef.v1[t]}) are inconsistently oriented")
    bnd = boundary_info(ef, m.rows)
    interior = (bnd.count == 0) & (n > 0)
    if np.any(interior & (n < 3)):
        v = int(np.flatnonzero(interior & (n < 3))[0])
        raise DegenerateVertexError(f"interior vertex {v} has valence {n[v]} < 3")
    ee = entry_edges(m, edges)
    M_next = refine_topology(m, ee, edges.count)
    art = CCBuildArtifacts(m, E, F, edges, ef, c, n, bnd, M_next)
    if C is not None:
        ca = cr.prepare(C, edges)
        ca.C_next = cr.inherit_creases(ca, art.n_verts_next, m.rows + m.cols)
        art.creases = ca
    # transpose indices used by the eval step belong to the build
    _ = m.row_view, F.row_view
    return art


def edge_points(P, f, ef: EdgeFaces) -> np.ndarray:
    """(p_k + p_l + f_r + f_s) / 4 for interior edges; midpoints elsewhere."""
    out = np.empty((ef.v0.size, P.shape[1]))
    K.cc_edge_points(ef.v0, ef.v1, ef.f0, ef.f1, P, f, out)
    return out


def vertex_weights(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(1 - 2/n, 1/n^2)``; isolated vertices (n = 0) are held fixed."""
    nz = n > 0
    nf = np.where(nz, n, 1).astype(np.float64)
    self_w = np.where(nz, 1.0 - 2.0 / nf, 1.0)
    ring_w = np.where(nz, 1.0 / (nf * nf), 0.0)
    return self_w, ring_w


def update_vertices(m: MeshMatrix, P, f, F: SparseMatrix, n) -> np.ndarray:
    """S(p_i) = (1 - 2/n_i) p_i + (1/n_i^2) sum ring + (1/n_i^2) sum adjacent face-points.

    The ring sum is a mapped SpMV over ``F``'s pattern, the face-point sum
    the mapped SpMV ``M f``.
    """
    self_w, ring_w = vertex_weights(n)
    s2 = spmv_mapped_direct(F, PerRow(ring_w), P)
    s3 = spmv_mapped_direct(m, PerRow(ring_w), f)
    out = np.empty_like(s2)
    K.affine_combine3(self_w, np.ascontiguousarray(P), s2, s3, out)
    return out


def repair_boundary(bnd: BoundaryInfo, ef: EdgeFaces, P, P_new, edge_offset: int) -> np.ndarray:
    """Boundary edge-points -> midpoints; boundary vertices -> 3/4 p + 1/8 (a + b);
    vertices on >= 3 boundary edges stay put. Modifies ``P_new`` in place."""
    if bnd.empty:
        return P_new
    b = bnd.edges
    P_new[edge_offset + b] = 0.5 * (P[ef.v0[b]] + P[ef.v1[b]])
    two = np.flatnonzero(bnd.count == 2)
    P_new[two] = 0.75 * P[two] + 0.125 * (P[bnd.nbr[two, 0]] + P[bnd.nbr[two, 1]])
    corner = np.flatnonzero(bnd.count >= 3)
    P_new[corner] = P[corner]
    return P_new


def evaluate(art: CCBuildArtifacts, P) -> np.ndarray:
    """Eval step: refined vertex data (|v| + |f| + |e|, dim)."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    nv, nf = art.n_verts, art.n_faces
    f = face_points(art.M, P, art.c)
    e = edge_points(P, f, art.ef)
    s = update_vertices(art.M, P, f, art.F, art.n)
    out = np.concatenate([s, f, e])
    repair_boundary(art.boundary, art.ef, P, out, nv + nf)
    if art.creases is not None:
        cr.apply_crease_rules(art.creases, P, out, nv + nf)
    return out


def step_stencils(art: CCBuildArtifacts):
    """Triplets ``(row, col, weight)`` of the one-step refinement matrix,
    matching :func:`evaluate` stencil by stencil."""
    m = art.M
    offs, rows = cyclic_arrays(m)
    nv, nf = art.n_verts, art.n_faces
    c = art.c
    inv_c = 1.0 / c
    ebase = nv + nf
    face_of = np.repeat(np.arange(nf, dtype=INDEX), c)
    self_w, ring_w = vertex_weights(art.n)

    def expand(targets, faces, w):
        # targets receive w * (barycenter of face) as per-vertex weights
        idx = ragged_ranges(offs[faces], c[faces])
        return (np.repeat(targets, c[faces]), rows[idx], np.repeat(w * inv_c[faces], c[faces]))

    R, C, W = [], [], []

    def add(r, cc, w):
        R.append(np.asarray(r, INDEX)); C.append(np.asarray(cc, INDEX)); W.append(np.asarray(w, float))

    # face-points
    add(nv + face_of, rows, inv_c[face_of])
    # edge-points
    ef = art.ef
    eid = np.arange(ef.v0.size, dtype=INDEX)
    inner = (ef.f0 >= 0) & (ef.f1 >= 0)
    ei = eid[inner]
    q = np.full(ei.size, 0.25)
    add(ebase + ei, ef.v0[ei], q)
    add(ebase + ei, ef.v1[ei], q)
    add(*expand(ebase + ei, ef.f0[ei], q))
    add(*expand(ebase + ei, ef.f1[ei], q))
    eo = eid[~inner]
    add(ebase + eo, ef.v0[eo], np.full(eo.size, 0.5))
    add(ebase + eo, ef.v1[eo], np.full(eo.size, 0.5))
    # vertices: self, ring over F's rows, adjacent face-points over M's rows
    verts = np.arange(nv, dtype=INDEX)
    add(verts, verts, self_w)
    frv = art.F.row_view
    fr = np.repeat(verts, np.diff(frv.row_offsets))
    add(fr, frv.col_index, ring_w[fr])
    mrv = m.row_view
    mr = np.repeat(verts, np.diff(mrv.row_offsets))
    add(*expand(mr, mrv.col_index, ring_w[mr]))

    keep = np.ones(art.n_verts_next)
    extra = []
    bnd = art.boundary
    if not bnd.empty:
        b = bnd.edges
        keep[ebase + b] = 0.0
        keep[verts[bnd.count >= 2]] = 0.0
        two = np.flatnonzero(bnd.count == 2)
        corner = np.flatnonzero(bnd.count >= 3)
        extra += [(ebase + b, ef.v0[b], np.full(b.size, 0.5)),
                  (ebase + b, ef.v1[b], np.full(b.size, 0.5)),
                  (two, two, np.full(two.size, 0.75)),
                  (two, bnd.nbr[two, 0], np.full(two.size, 0.125)),
                  (two, bnd.nbr[two, 1], np.full(two.size, 0.125)),
                  (corner, corner, np.ones(corner.size))]
    W = [w * keep[r] for r, w in zip(R, W)]
    R_, C_, W_ = R + [e[0] for e in extra], C + [e[1] for e in extra], W + [e[2] for e in extra]
    rows_all, cols_all, w_all = np.concatenate(R_), np.concatenate(C_), np.concatenate(W_)
    if art.creases is not None and not art.creases.empty:
        crow, ckeep, (tr, tc, tw) = cr.crease_stencils(art.creases, ebase)
        factor = np.ones(art.n_verts_next)
        factor[crow] = ckeep
        w_all = w_all * factor[rows_all]
        rows_all = np.concatenate([rows_all, tr])
        cols_all = np.concatenate([cols_all, tc])
        w_all = np.concatenate([w_all, tw])
    return rows_all, cols_all, w_all
