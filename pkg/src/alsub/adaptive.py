"""Selective (feature-adaptive) Catmull-Clark subdivision.

Each level tags irregular vertices, grows the tag set by one face ring
(``q = M^T x``, ``x' = M q``, binarized), extracts that submesh with the
extraction pair ``(X, X_o)`` and subdivides only the submesh.

Positions produced on a cut submesh are only trustworthy where the stencil
saw the whole neighbourhood, so two per-vertex flags are tracked:

* ``complete``: the vertex's full face fan is present in the mesh.
* ``exact``: the position equals the uniform subdivision result.

Tags at later levels are restricted to complete vertices whose fans consist
of exact vertices. By induction every extracted submesh holds exact positions
only, and every tagged vertex is refined with exactly its uniform stencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import catmull_clark as cc
from . import refine as rm
from .errors import AlsubError
from .sparse import (INDEX, Constant, MeshMatrix, ReducedMeshMatrix, SparseMatrix, cyclic_arrays,
                     from_triplets, mesh_matrix_from_faces, spmv_mapped_direct,
                     spmv_mapped_transpose)
from .topology import ragged_ranges

ORIGIN_VERTEX, ORIGIN_FACE, ORIGIN_EDGE = 0, 1, 2


@dataclass(frozen=True)
class RegularValence:
    """Edge valences counted as regular."""

    interior: int = 4
    boundary: int = 3
    corner: int = 2


def tag_extraordinary(n, boundary_count, regular: RegularValence = RegularValence(),
                      crease_valency=None) -> np.ndarray:
    """0/1 vector marking irregular vertices.

    ``n`` is the edge valence, ``boundary_count`` the number of incident
    boundary edges. Boundary vertices are regular at the boundary or the
    corner valence. Isolated vertices are never tagged; crease vertices are
    tagged when ``crease_valency`` is given.
    """
    n = np.asarray(n)
    b = np.asarray(boundary_count)
    interior_bad = (b == 0) & (n != regular.interior)
    boundary_bad = (b == 2) & (n != regular.boundary) & (n != regular.corner)
    x = (interior_bad | boundary_bad | (b > 2)) & (n > 0)
    if crease_valency is not None:
        x |= np.asarray(crease_valency) > 0
    return x.astype(np.float64)


def propagate_selection(m: MeshMatrix, x) -> tuple[np.ndarray, np.ndarray]:
    """One ring of growth: faces touching ``x`` and their vertices, both binarized."""
    x = np.asarray(x, dtype=np.float64)
    q = (spmv_mapped_transpose(m, Constant(1.0), x) > 0).astype(np.float64)
    x1 = (spmv_mapped_direct(m, Constant(1.0), q) > 0).astype(np.float64)
    return q, x1


@dataclass(frozen=True, eq=False)
class ExtractionPair:
    """Row-deleted identity ``X`` (selected vertices) and column-deleted
    identity ``X_o`` (selected faces), kept as index lists."""

    vert_ids: np.ndarray  # local -> global vertex
    face_ids: np.ndarray  # local -> global face
    n_verts: int
    n_faces: int

    @property
    def X(self) -> SparseMatrix:
        k = self.vert_ids.size
        return from_triplets(np.arange(k), self.vert_ids, np.ones(k), (k, self.n_verts))

    @property
    def X_o(self) -> SparseMatrix:
        k = self.face_ids.size
        return from_triplets(self.face_ids, np.arange(k), np.ones(k), (self.n_faces, k))

    def global_to_local(self) -> np.ndarray:
        g2l = np.full(self.n_verts, -1, INDEX)
        g2l[self.vert_ids] = np.arange(self.vert_ids.size, dtype=INDEX)
        return g2l


def build_extraction(q, x1) -> ExtractionPair:
    q = np.asarray(q)
    x1 = np.asarray(x1)
    return ExtractionPair(np.flatnonzero(x1 > 0).astype(INDEX), np.flatnonzero(q > 0).astype(INDEX),
                          x1.size, q.size)


def extract_submesh(m: MeshMatrix, P, pair: ExtractionPair) -> tuple[MeshMatrix, np.ndarray]:
    """``M' = X M X_o`` (columns keep their cyclic order) and ``P' = X P``."""
    offs, rows = cyclic_arrays(m)
    g2l = pair.global_to_local()
    c = np.diff(offs)[pair.face_ids]
    idx = ragged_ranges(offs[pair.face_ids], c)
    local = g2l[rows[idx]]
    if np.any(local < 0):
        raise AlsubError("internal invariant violated: selected face uses an unselected vertex")
    nv = pair.vert_ids.size
    if c.size and np.all(c == c[0]):
        sub = ReducedMeshMatrix(int(c[0]), c.size, nv, local)
    elif c.size == 0:
        sub = ReducedMeshMatrix(4, 0, nv, local)
    else:
        starts = np.concatenate([[0], np.cumsum(c)])
        sub = mesh_matrix_from_faces([local[starts[k]:starts[k + 1]].tolist()
                                      for k in range(c.size)], nv)
    return sub, np.asarray(P)[pair.vert_ids]


def restrict_creases(C: SparseMatrix | None, pair: ExtractionPair,
                     edges=None) -> SparseMatrix | None:
    """``X C X^T``, optionally dropping pairs that are not edges of the submesh."""
    if C is None:
        return None
    g2l = pair.global_to_local()
    cols = C.column_indices()
    r, c = g2l[C.row_indices], g2l[cols]
    keep = (r >= 0) & (c >= 0)
    r, c, v = r[keep], c[keep], C.values[keep]
    if edges is not None and r.size:
        ok = edges.ids(r, c) >= 0
        r, c, v = r[ok], c[ok], v[ok]
    k = pair.vert_ids.size
    return from_triplets(r, c, v.astype(np.float64), (k, k))


@dataclass(eq=False)
class AdaptiveLevel:
    """Level ``k``: the refined submesh and where its vertices came from.

    ``origin`` is ORIGIN_VERTEX / ORIGIN_FACE / ORIGIN_EDGE; ``origin_a`` /
    ``origin_b`` hold the parent vertex, the parent face, or the two edge
    endpoints, numbered in the previous level's mesh.
    """

    level: int
    M: MeshMatrix
    P: np.ndarray
    exact: np.ndarray
    complete: np.ndarray
    origin: np.ndarray
    origin_a: np.ndarray
    origin_b: np.ndarray
    face_parent: np.ndarray  # parent face in the previous level, per face
    face_corner: np.ndarray  # corner of that parent face, per face
    tagged: int = 0
    C: SparseMatrix | None = None
    R: rm.RefinementMatrix | None = None

    @property
    def n_faces(self) -> int:
        return self.M.cols

    @property
    def n_verts(self) -> int:
        return self.M.rows


@dataclass(eq=False)
class AdaptiveResult:
    levels: list[AdaptiveLevel] = field(default_factory=list)

    @property
    def final(self) -> AdaptiveLevel:
        return self.levels[-1]


def _edge_data(m: MeshMatrix):
    E, _ = cc.build_edge_matrix(m)
    n_edge = np.diff(E.col_offsets)
    bcount = np.bincount(E.column_indices()[E.values == 1], minlength=m.rows)
    return n_edge, bcount


def select(m: MeshMatrix, exact, complete, regular: RegularValence, C=None,
           level0: bool = False) -> np.ndarray:
    """Tag set for one level (see the module docstring)."""
    n_edge, bcount = _edge_data(m)
    k = None
    if C is not None:
        k = np.diff(C.col_offsets)
    x = tag_extraordinary(n_edge, bcount, regular, k) > 0
    if level0:
        # faces other than quads are irregular too: tag all their corners
        offs, rows = cyclic_arrays(m)
        c = np.diff(offs)
        x[rows[np.repeat(c != 4, c)]] = True
    bad_face = spmv_mapped_transpose(m, Constant(1.0), (~exact).astype(np.float64)) > 0
    fan_bad = spmv_mapped_direct(m, Constant(1.0), bad_face.astype(np.float64)) > 0
    return (x & complete & exact & ~fan_bad).astype(np.float64)


def adaptive_subdivide(m: MeshMatrix, P, depth: int, *, C: SparseMatrix | None = None,
                       regular: RegularValence = RegularValence(),
                       single_spmv: bool = False) -> AdaptiveResult:
    """Refine around irregular (and, with ``C``, creased) vertices ``depth`` times.

    ``levels[0]`` is the control mesh; ``levels[k]`` the refined submesh
    after step k. With ``single_spmv`` each level also carries ``R`` with
    ``levels[k].P == R @ P0``.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    P = np.ascontiguousarray(P, dtype=np.float64)
    nv = m.rows
    z = np.zeros(nv, INDEX)
    cur = AdaptiveLevel(0, m, P, np.ones(nv, bool), np.ones(nv, bool),
                        np.zeros(nv, np.int8), np.arange(nv, dtype=INDEX), z - 1,
                        np.arange(m.cols, dtype=INDEX), np.zeros(m.cols, INDEX), C=C,
                        R=rm.RefinementMatrix.identity(nv) if single_spmv else None)
    result = AdaptiveResult([cur])
    for k in range(depth):
        x = select(cur.M, cur.exact, cur.complete, regular, cur.C, level0=(k == 0))
        cur.tagged = int(x.sum())
        q, x1 = propagate_selection(cur.M, x)
        pair = build_extraction(q, x1)
        sub, Psub = extract_submesh(cur.M, cur.P, pair)
        fan_all = cc.valences(cur.M)[pair.vert_ids]
        fan_sub = cc.valences(sub)
        complete = cur.complete[pair.vert_ids] & (fan_all == fan_sub)
        if sub.cols == 0:
            cur = _empty_level(k + 1, single_spmv, cur)
            result.levels.append(cur)
            continue
        Csub = None
        if cur.C is not None:
            E, edges = cc.build_edge_matrix(sub)
            Csub = restrict_creases(cur.C, pair, edges)
        art = cc.build(sub, Csub)
        Pn = cc.evaluate(art, Psub)
        cur = _next_level(k + 1, art, Pn, pair, complete, single_spmv, cur)
        result.levels.append(cur)
    return result


def _empty_level(level, single_spmv, parent):
    e = np.zeros(0, INDEX)
    R = None
    if single_spmv:
        R = rm.RefinementMatrix.from_triplets(e, e, np.zeros(0), (0, parent.R.cols))
    return AdaptiveLevel(level, ReducedMeshMatrix(4, 0, 0, e), np.zeros((0, parent.P.shape[1])),
                         np.zeros(0, bool), np.zeros(0, bool), np.zeros(0, np.int8), e, e, e, e,
                         C=None, R=R)


def _next_level(level, art: cc.CCBuildArtifacts, Pn, pair: ExtractionPair, complete,
                single_spmv, parent: AdaptiveLevel) -> AdaptiveLevel:
    nv, nf = art.n_verts, art.n_faces
    ef = art.ef
    interior_edge = ef.mult == 2
    true_boundary = (ef.mult == 1) & (complete[ef.v0] | complete[ef.v1])
    edge_ok = interior_edge | true_boundary
    exact = np.concatenate([complete, np.ones(nf, bool), edge_ok])
    complete_n = exact.copy()
    ca = art.creases
    if ca is not None and not ca.empty:
        # a child crease's sharpness depends on both endpoints' crease sets
        partial = ~(complete[ca.edge_v0] & complete[ca.edge_v1])
        complete_n[nv + nf + ca.edge_ids[partial]] = False
    origin = np.concatenate([np.full(nv, ORIGIN_VERTEX, np.int8), np.full(nf, ORIGIN_FACE, np.int8),
                             np.full(ef.v0.size, ORIGIN_EDGE, np.int8)])
    vid = pair.vert_ids
    oa = np.concatenate([vid, pair.face_ids, vid[ef.v0]])
    ob = np.concatenate([np.full(nv + nf, -1, INDEX), vid[ef.v1]])
    c = art.c
    face_parent = np.repeat(pair.face_ids, c)
    face_corner = np.arange(int(c.sum()), dtype=INDEX) - np.repeat(np.cumsum(c) - c, c)
    R = None
    if single_spmv:
        step = rm.build_step_matrix(art, cc.step_stencils(art))
        # R_i X_i: the row selection becomes a column relabeling of R_i
        T = step.T
        X_step = rm.RefinementMatrix(SparseMatrix(parent.R.rows, T.cols, T.col_offsets,
                                                  vid[T.row_indices], T.values))
        R = rm.multiply(X_step, parent.R)
    return AdaptiveLevel(level, art.M_next, Pn, exact, complete_n, origin, oa, ob,
                         face_parent, face_corner, C=art.C_next, R=R)


def resolve_uniform(result: AdaptiveResult, uniform) -> list[tuple[np.ndarray, np.ndarray]]:
    """Map every level's vertices and faces to ids in a uniform run.

    ``uniform[k]`` are the Catmull-Clark build artifacts of uniform level k
    (``k = 0..depth-1``). Returns per level ``(vertex_ids, face_ids)``.
    """
    base = result.levels[0]
    out = [(np.arange(base.n_verts, dtype=INDEX), np.arange(base.n_faces, dtype=INDEX))]
    for k in range(1, len(result.levels)):
        lv = result.levels[k]
        art = uniform[k - 1]
        vmap, fmap = out[-1]
        ids = np.empty(lv.n_verts, INDEX)
        o = lv.origin
        iv, iff, ie = o == ORIGIN_VERTEX, o == ORIGIN_FACE, o == ORIGIN_EDGE
        ids[iv] = vmap[lv.origin_a[iv]]
        ids[iff] = art.n_verts + fmap[lv.origin_a[iff]]
        ids[ie] = art.n_verts + art.n_faces + art.edges.ids(vmap[lv.origin_a[ie]],
                                                              vmap[lv.origin_b[ie]])
        faces = art.M.col_offsets[fmap[lv.face_parent]] + lv.face_corner
        out.append((ids, faces))
    return out
