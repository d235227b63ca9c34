"""Edge enumeration and per-entry edge lookups shared by the schemes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .sparse import INDEX, MeshMatrix, SparseMatrix, cyclic_arrays, lookup


@dataclass(frozen=True, eq=False)
class EdgeTable:
    """Undirected edges ``v0 < v1`` numbered in upper-triangle traversal order
    of a symmetric-pattern matrix (ascending column, then ascending row).

    ``rank`` maps every stored entry position of the source matrix (either
    triangle) to its edge id.
    """

    v0: np.ndarray
    v1: np.ndarray
    rank: np.ndarray
    source: SparseMatrix

    @property
    def count(self) -> int:
        return int(self.v0.size)

    def ids(self, a, b) -> np.ndarray:
        """Edge ids of vertex pairs (either orientation); -1 if not an edge."""
        a = np.asarray(a, dtype=INDEX)
        b = np.asarray(b, dtype=INDEX)
        pos = lookup(self.source, np.minimum(a, b), np.maximum(a, b))
        return np.where(pos >= 0, self.rank[np.maximum(pos, 0)], -1)


def enumerate_edges(sym: SparseMatrix) -> EdgeTable:
    cols = sym.column_indices()
    upper = sym.row_indices < cols
    rank = np.cumsum(upper, dtype=INDEX) - 1
    rank[~upper] = -1
    return EdgeTable(sym.row_indices[upper], cols[upper], rank, sym)


def entry_edges(m: MeshMatrix, edges: EdgeTable) -> np.ndarray:
    """Edge id of (v_t, v_{t+1}) for every mesh-matrix entry, in cyclic storage order."""
    offs, rows = cyclic_arrays(m)
    nxt = K.next_in_face(offs, rows)
    return edges.ids(rows, nxt)


def cyclic_prev(m: MeshMatrix) -> np.ndarray:
    """Storage position of the cyclically previous entry of every entry."""
    offs = m.col_offsets
    c = np.diff(offs)
    p = np.arange(int(offs[-1]), dtype=INDEX)
    first = np.repeat(offs[:-1], c)
    return np.where(p == first, p + np.repeat(c, c) - 1, p - 1)


def ragged_ranges(starts, lengths) -> np.ndarray:
    """Concatenation of ``arange(s, s + l)`` for each pair."""
    starts = np.asarray(starts, dtype=INDEX)
    lengths = np.asarray(lengths, dtype=INDEX)
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, INDEX)
    seg_first = np.cumsum(lengths) - lengths
    return np.arange(total, dtype=INDEX) - np.repeat(seg_first - starts, lengths)


def is_symmetric_pattern(mat: SparseMatrix) -> bool:
    cols = mat.column_indices()
    return bool(np.all(lookup(mat, cols, mat.row_indices) >= 0))
