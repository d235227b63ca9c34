"""sqrt(3) subdivision for closed triangle meshes.

Each triangle gains its barycenter; every old vertex is smoothed with
``alpha(n) = (4 - 2 cos(2 pi / n)) / 9``; every old edge is flipped so that it
joins the barycenters of its two triangles. Refined vertex ids: original
vertices ``0..|v|-1``, then face-points ``|v| + face``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .catmull_clark import build_face_matrix
from .errors import NonManifoldError, SchemeConstraintError
from .loop import check_closed_triangles
from .sparse import (INDEX, MeshMatrix, PerRow, ReducedMeshMatrix, SparseMatrix, cyclic_arrays,
                     lookup, spmv_mapped_direct, spmv_mapped_transpose)


def sqrt3_alpha(n) -> np.ndarray:
    n = np.asarray(n, dtype=np.float64)
    return (4.0 - 2.0 * np.cos(2.0 * np.pi / n)) / 9.0


@dataclass(eq=False)
class Sqrt3BuildArtifacts:
    M: MeshMatrix
    F: SparseMatrix
    n: np.ndarray
    across: np.ndarray  # per mesh entry (v_t -> v_t+1): face on the other side
    M_next: ReducedMeshMatrix

    C_next = None

    @property
    def n_verts(self) -> int:
        return self.M.rows

    @property
    def n_verts_next(self) -> int:
        return self.M.rows + self.M.cols

    def nbytes(self) -> int:
        arrays = [self.F.row_indices, self.F.values, self.M_next.row_indices, self.across]
        return int(sum(a.nbytes for a in arrays))


def sqrt3_face_points(m: MeshMatrix, P) -> np.ndarray:
    return spmv_mapped_transpose(m, PerRow(np.full(m.cols, 1.0 / 3.0)), P)


def vertex_weights(n):
    nz = n > 0
    alpha = np.where(nz, sqrt3_alpha(np.where(nz, n, 3)), 0.0)
    return 1.0 - alpha, alpha / np.where(nz, n, 1)


def sqrt3_vertex_update(F: SparseMatrix, P, n) -> np.ndarray:
    """(1 - alpha) p_i + (alpha / n) sum_j p_j over F's pattern."""
    self_w, ring_w = vertex_weights(n)
    acc = spmv_mapped_direct(F, PerRow(ring_w), P)
    out = np.empty_like(acc)
    K.affine_combine(self_w, np.ascontiguousarray(P), acc, out)
    return out


def sqrt3_refine_topology(m: MeshMatrix, across: np.ndarray) -> ReducedMeshMatrix:
    """Per entry (v_t of face i, next vertex v_t+1) emit (v_t, f_across, f_i).

    ``f_across`` is F(v_t+1, v_t) - 1, the face beyond edge (v_t, v_t+1). This
    order keeps the input's counter-clockwise orientation.
    """
    _, rows = cyclic_arrays(m)
    nv = m.rows
    face_of = np.repeat(np.arange(m.cols, dtype=INDEX), 3)
    tris = np.stack([rows, nv + across, nv + face_of], axis=1)
    return ReducedMeshMatrix(3, tris.shape[0], nv + m.cols, tris)


def build(m: MeshMatrix, C=None) -> Sqrt3BuildArtifacts:
    if C is not None and C.nnz:
        raise SchemeConstraintError("creases are supported for Catmull-Clark only")
    _, _, n = check_closed_triangles(m, "sqrt3")
    F = build_face_matrix(m)
    offs, rows = cyclic_arrays(m)
    nxt = K.next_in_face(offs, rows)
    pos = lookup(F, nxt, rows)
    if np.any(pos < 0):
        raise NonManifoldError("faces are inconsistently oriented")
    across = (F.values[pos] - 1).astype(INDEX)
    M_next = sqrt3_refine_topology(m, across)
    _ = F.row_view
    return Sqrt3BuildArtifacts(m, F, n, across, M_next)


def evaluate(art: Sqrt3BuildArtifacts, P) -> np.ndarray:
    P = np.ascontiguousarray(P, dtype=np.float64)
    return np.concatenate([sqrt3_vertex_update(art.F, P, art.n), sqrt3_face_points(art.M, P)])


def step_stencils(art: Sqrt3BuildArtifacts):
    nv, nf = art.n_verts, art.M.cols
    self_w, ring_w = vertex_weights(art.n)
    rv = art.F.row_view
    verts = np.arange(nv, dtype=INDEX)
    ring_r = np.repeat(verts, np.diff(rv.row_offsets))
    _, mrows = cyclic_arrays(art.M)
    frows = nv + np.repeat(np.arange(nf, dtype=INDEX), 3)
    rows = np.concatenate([verts, ring_r, frows])
    cols = np.concatenate([verts, rv.col_index, mrows])
    vals = np.concatenate([self_w, ring_w[ring_r], np.full(mrows.size, 1.0 / 3.0)])
    return rows, cols, vals
