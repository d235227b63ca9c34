"""Sharp and semi-sharp creases for Catmull-Clark.

The crease matrix ``C`` is a symmetric vertex x vertex matrix of sharpness
values. Evaluation overwrites the smooth results of crease edges and crease
vertices; after every step the crease network is refined with a Chaikin-style
sharpness decay.

Rules (edge sharpness sigma, vertex sharpness s = mean incident sigma,
crease valency k = number of incident creases):

* edge-point: sigma >= 1 -> midpoint; 0 < sigma < 1 -> (1-sigma) smooth + sigma midpoint
* vertex: k == 2 -> 3/4 p + 1/8 (a + b) over the crease neighbours;
  k >= 3 -> p; k <= 1 -> smooth. 0 < s < 1 blends (1-s) smooth + s rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import CreaseError
from .meshio import INF_SHARPNESS, CreaseSet
from .sparse import INDEX, Constant, PerEntry, SparseMatrix, from_triplets, spmv_mapped_direct
from .topology import EdgeTable


def crease_matrix(creases: CreaseSet | None, n_verts: int) -> SparseMatrix:
    """Symmetric crease matrix; zero sharpness is elided."""
    entries = [] if creases is None else [e for e in creases.entries if e[2] > 0]
    if entries:
        i, j, s = (np.array(x) for x in zip(*entries))
    else:
        i = j = np.zeros(0, INDEX)
        s = np.zeros(0)
    if i.size and (min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= n_verts):
        raise CreaseError("crease references a missing vertex")
    return from_triplets(np.concatenate([i, j]), np.concatenate([j, i]),
                         np.concatenate([s, s]).astype(np.float64), (n_verts, n_verts))


def crease_valency(C: SparseMatrix) -> np.ndarray:
    """Creases incident to each vertex (``C 1`` with values mapped to 1)."""
    return spmv_mapped_direct(C, Constant(1.0), np.ones(C.cols)).astype(INDEX)


def vertex_sharpness(C: SparseMatrix, k: np.ndarray) -> np.ndarray:
    """Mean incident sharpness (``C 1`` with ``val -> val / k_i``); 0 where k = 0."""
    inv_k = np.divide(1.0, k, out=np.zeros(k.size), where=k > 0)
    return spmv_mapped_direct(C, PerEntry(fn=lambda v, row: v * inv_k[row]), np.ones(C.cols))


@njit(parallel=True, cache=True)
def _valency_sharpness(col_offsets, values, k, s):
    # C is symmetric, so column i holds vertex i's creases.
    n = col_offsets.size - 1
    for i in prange(n):
        lo = col_offsets[i]
        hi = col_offsets[i + 1]
        cnt = hi - lo
        k[i] = cnt
        acc = 0.0
        if cnt > 0:
            w = 1.0 / cnt
            for p in range(lo, hi):
                acc += values[p] * w
        s[i] = acc


def valency_and_sharpness(C: SparseMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Fused ``k`` and ``s``: each column's count feeds its own average."""
    k = np.empty(C.cols, INDEX)
    s = np.empty(C.cols)
    _valency_sharpness(C.col_offsets, C.values.astype(np.float64, copy=False), k, s)
    return k, s


@dataclass(eq=False)
class CreaseArtifacts:
    C: SparseMatrix
    k: np.ndarray
    s: np.ndarray
    edge_v0: np.ndarray
    edge_v1: np.ndarray
    edge_sigma: np.ndarray
    edge_ids: np.ndarray
    nbr: np.ndarray  # (n_verts, 2) crease neighbours for k == 2, else -1
    C_next: SparseMatrix | None = None

    @property
    def empty(self) -> bool:
        return self.C.nnz == 0


def prepare(C: SparseMatrix, edges: EdgeTable) -> CreaseArtifacts:
    """Per-level crease data; raises if a crease is not a mesh edge."""
    k, s = valency_and_sharpness(C)
    cols = C.column_indices()
    upper = C.row_indices < cols
    v0, v1, sig = C.row_indices[upper], cols[upper], C.values[upper].astype(np.float64)
    eids = edges.ids(v0, v1)
    if np.any(eids < 0):
        t = int(np.flatnonzero(eids < 0)[0])
        raise CreaseError(f"crease ({v0[t]}, {v1[t]}) is not an edge of the mesh")
    nbr = np.full((C.cols, 2), -1, INDEX)
    two = np.flatnonzero(k == 2)
    nbr[two, 0] = C.row_indices[C.col_offsets[two]]
    nbr[two, 1] = C.row_indices[C.col_offsets[two] + 1]
    return CreaseArtifacts(C, k, s, v0, v1, sig, eids, nbr)


def apply_crease_rules(art: CreaseArtifacts, P: np.ndarray, P_new: np.ndarray,
                       edge_offset: int) -> np.ndarray:
    """Overwrite crease edge-points and crease vertices in ``P_new`` in place.

    ``edge_offset`` is the refined id of edge 0 (``|v| + |f|`` for Catmull-Clark).
    """
    if art.empty:
        return P_new
    mid = 0.5 * (P[art.edge_v0] + P[art.edge_v1])
    rows = edge_offset + art.edge_ids
    sig = art.edge_sigma[:, None]
    smooth = P_new[rows]
    P_new[rows] = np.where(sig >= 1.0, mid, (1.0 - sig) * smooth + sig * mid)

    verts = np.flatnonzero(art.k >= 2)
    vc = P[verts].copy()
    two = art.k[verts] == 2
    a, b = art.nbr[verts[two], 0], art.nbr[verts[two], 1]
    vc[two] = 0.75 * P[verts[two]] + 0.125 * (P[a] + P[b])
    s = art.s[verts][:, None]
    sm = P_new[verts]
    P_new[verts] = np.where(s >= 1.0, vc, (1.0 - s) * sm + s * vc)
    return P_new


def crease_stencils(art: CreaseArtifacts, edge_offset: int):
    """Stencil overrides as triplets for the refinement matrix.

    Returns ``(rows, keep, (tr, tc, tw))``: rows whose existing stencil is
    scaled by ``keep`` before the triplets are added.
    """
    if art.empty:
        z = np.zeros(0, INDEX)
        return z, np.zeros(0), (z, z, np.zeros(0))
    erows = edge_offset + art.edge_ids
    sig = art.edge_sigma
    ek = np.where(sig >= 1.0, 0.0, 1.0 - sig)
    ew = np.where(sig >= 1.0, 1.0, sig) * 0.5
    tr = [erows, erows]
    tc = [art.edge_v0, art.edge_v1]
    tw = [ew, ew]

    verts = np.flatnonzero(art.k >= 2)
    s = art.s[verts]
    vk = np.where(s >= 1.0, 0.0, 1.0 - s)
    vw = np.where(s >= 1.0, 1.0, s)
    two = art.k[verts] == 2
    tr += [verts, verts[two], verts[two]]
    tc += [verts, art.nbr[verts[two], 0], art.nbr[verts[two], 1]]
    tw += [np.where(two, 0.75, 1.0) * vw, 0.125 * vw[two], 0.125 * vw[two]]
    rows = np.concatenate([erows, verts])
    keep = np.concatenate([ek, vk])
    return rows, keep, (np.concatenate(tr), np.concatenate(tc), np.concatenate(tw))


def _child(parent, neighbour):
    return np.maximum(0.25 * (neighbour + 3.0 * parent) - 1.0, 0.0)


def inherit_creases(art: CreaseArtifacts, n_verts_next: int, edge_offset: int) -> SparseMatrix:
    """Refined crease matrix.

    Crease (i, j) with sharpness sj splits at its edge-point e into (i, e) and
    (e, j) with sharpness max((sn + 3 sj)/4 - 1, 0), where sn is the
    sharpness continuing the crease through the respective endpoint: the
    mean of the other finite creases incident there, or sj itself at a chain
    end (or where only infinite creases continue). Infinite creases stay
    infinite; zero children are dropped. Assembled with a
    count-then-fill pass.
    """
    if art.empty:
        return crease_matrix(None, n_verts_next)
    C = art.C
    vals = C.values.astype(np.float64)
    finite = vals < INF_SHARPNESS
    cols = C.column_indices()
    # infinite neighbours never enter the average (the sentinel is not a number to blend)
    total = np.bincount(cols[finite], weights=vals[finite], minlength=C.cols)
    count = np.bincount(cols[finite], minlength=C.cols)
    v0, v1, sj = art.edge_v0, art.edge_v1, art.edge_sigma
    own = (sj < INF_SHARPNESS).astype(np.float64)

    def continuation(v):
        others = count[v] - own
        mean = np.divide(total[v] - own * sj, others, out=sj.copy(), where=others > 0)
        return np.where(others > 0, mean, sj)

    si, sk = continuation(v0), continuation(v1)
    inf = sj >= INF_SHARPNESS
    c1 = np.where(inf, INF_SHARPNESS, _child(sj, si))
    c2 = np.where(inf, INF_SHARPNESS, _child(sj, sk))
    e = edge_offset + art.edge_ids
    keep1, keep2 = c1 > 0, c2 > 0
    a = np.concatenate([v0[keep1], v1[keep2]])
    b = np.concatenate([e[keep1], e[keep2]])
    w = np.concatenate([c1[keep1], c2[keep2]])
    return from_triplets(np.concatenate([a, b]), np.concatenate([b, a]),
                         np.concatenate([w, w]), (n_verts_next, n_verts_next),
                         drop_zeros=True)
