"""Sparse containers and action-mapped SpMV / SpGEMM.

Matrices are column-compressed (CSC). A *mesh matrix* is a vertex x face
matrix whose column ``k`` stores face ``k``'s vertices, with values giving each
vertex's 1-based cyclic position. Entries of a mesh matrix are always kept in
cyclic order inside their column, so the values are implied by position.

An *action map* replaces the multiply in a sparse product:

* :class:`Constant`, :class:`PerRow` and :class:`PerEntry` substitute the
  stored value with a weight in SpMVs.
* :class:`Collision` drives ``M M^T`` products: whenever vertex ``i`` (cyclic
  position ``a``) meets vertex ``j`` (position ``b``) in face ``k``, the sum of
  circulant lookups ``q = sum_r Q_c^r(a, b)`` is formed, and if non-zero the
  collision function produces the contribution.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from . import _kernels as K
from .errors import DimensionError, NonFiniteError
from .parallel import get_threads

INDEX = np.int64


def _index_array(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=INDEX)


class _RowView:
    """Transpose index of a CSC matrix (row -> entries), built once."""

    __slots__ = ("row_offsets", "col_index", "entry_pos")

    def __init__(self, col_offsets, row_indices, n_rows):
        self.row_offsets, self.col_index, self.entry_pos = K.transpose_index(
            col_offsets, row_indices, n_rows)


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """CSC matrix. Row indices are unique within a column."""

    rows: int
    cols: int
    col_offsets: np.ndarray
    row_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))
        object.__setattr__(self, "col_offsets", _index_array(self.col_offsets))
        object.__setattr__(self, "row_indices", _index_array(self.row_indices))
        vals = np.ascontiguousarray(self.values)
        if vals.dtype.kind not in "if":
            vals = vals.astype(np.float64)
        object.__setattr__(self, "values", vals)
        if self.col_offsets.shape != (self.cols + 1,):
            raise DimensionError(
                f"col_offsets has length {self.col_offsets.size}, expected {self.cols + 1}")
        if self.col_offsets[0] != 0 or self.col_offsets[-1] != self.row_indices.size:
            raise DimensionError("col_offsets must start at 0 and end at nnz")
        if self.values.shape != self.row_indices.shape:
            raise DimensionError("values and row_indices differ in length")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return int(self.row_indices.size)

    def check(self) -> None:
        """Full invariant check (O(nnz)); raises ValueError on violation."""
        if np.any(np.diff(self.col_offsets) < 0):
            raise ValueError("col_offsets not non-decreasing")
        if self.nnz and (self.row_indices.min() < 0 or self.row_indices.max() >= self.rows):
            raise ValueError("row index out of range")
        cols = np.repeat(np.arange(self.cols), np.diff(self.col_offsets))
        keys = cols * max(self.rows, 1) + self.row_indices
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate row index within a column")

    @cached_property
    def row_view(self) -> _RowView:
        return _RowView(self.col_offsets, self.row_indices, self.rows)

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.col_offsets[j], self.col_offsets[j + 1]
        return self.row_indices[lo:hi], self.values[lo:hi]

    def get(self, i: int, j: int, default=0):
        rows, vals = self.column(j)
        hit = np.flatnonzero(rows == i)
        return vals[hit[0]] if hit.size else default

    def column_indices(self) -> np.ndarray:
        """Column index of every stored entry."""
        return np.repeat(np.arange(self.cols, dtype=INDEX), np.diff(self.col_offsets))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=self.values.dtype)
        out[self.row_indices, self.column_indices()] = self.values
        return out

    def transpose(self) -> "SparseMatrix":
        rv = self.row_view
        return SparseMatrix(self.cols, self.rows, rv.row_offsets, rv.col_index,
                            self.values[rv.entry_pos])

    def sorted_rows(self) -> "SparseMatrix":
        """Copy with ascending row order inside every column."""
        order = np.lexsort((self.row_indices, self.column_indices()))
        return SparseMatrix(self.rows, self.cols, self.col_offsets.copy(),
                            self.row_indices[order], self.values[order])

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.asarray(a)
        cols, rows = np.nonzero(a.T)
        return from_triplets(rows, cols, a[rows, cols], a.shape)

    def equal(self, other: "SparseMatrix") -> bool:
        """Exact equality of shape, pattern, storage order and values."""
        return (self.shape == other.shape
                and np.array_equal(self.col_offsets, other.col_offsets)
                and np.array_equal(self.row_indices, other.row_indices)
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class ReducedMeshMatrix:
    """Mesh matrix of a uniform-order mesh: only the face table is stored.

    ``row_indices`` is column-major: face ``k`` is
    ``row_indices[k*order:(k+1)*order]`` in cyclic order.
    """

    order: int
    faces: int
    verts: int
    row_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_indices", _index_array(self.row_indices).ravel())
        if self.row_indices.size != self.order * self.faces:
            raise DimensionError("row_indices length must be order * faces")

    rows = property(lambda self: self.verts)
    cols = property(lambda self: self.faces)
    shape = property(lambda self: (self.verts, self.faces))
    nnz = property(lambda self: int(self.row_indices.size))

    @cached_property
    def col_offsets(self) -> np.ndarray:
        return np.arange(self.faces + 1, dtype=INDEX) * self.order

    @cached_property
    def values(self) -> np.ndarray:
        return np.tile(np.arange(1, self.order + 1, dtype=INDEX), self.faces)

    @cached_property
    def row_view(self) -> _RowView:
        return _RowView(self.col_offsets, self.row_indices, self.verts)

    def face_table(self) -> np.ndarray:
        return self.row_indices.reshape(self.faces, self.order)

    def column_indices(self) -> np.ndarray:
        return np.repeat(np.arange(self.faces, dtype=INDEX), self.order)

    def to_sparse(self) -> SparseMatrix:
        return SparseMatrix(self.verts, self.faces, self.col_offsets.copy(),
                            self.row_indices.copy(), self.values.copy())

    @classmethod
    def from_sparse(cls, m: SparseMatrix) -> "ReducedMeshMatrix":
        orders = np.diff(m.col_offsets)
        if m.cols and np.any(orders != orders[0]):
            raise ValueError("faces have differing orders; no reduced form")
        c = int(orders[0]) if m.cols else 0
        cols = m.column_indices()
        order = np.lexsort((m.values, cols))
        return cls(c, m.cols, m.rows, m.row_indices[order])

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().to_dense()


MeshMatrix = Union[SparseMatrix, ReducedMeshMatrix]


def mesh_matrix_from_faces(faces, n_verts: int) -> MeshMatrix:
    """Mesh matrix from a list of faces (each a cyclic vertex list).

    The reduced form is returned iff all faces share one order.
    """
    if isinstance(faces, np.ndarray) and faces.ndim == 2:
        return ReducedMeshMatrix(faces.shape[1], faces.shape[0], n_verts, faces)
    lengths = np.fromiter((len(f) for f in faces), dtype=INDEX, count=len(faces))
    flat = (np.fromiter((v for f in faces for v in f), dtype=INDEX, count=int(lengths.sum()))
            if len(faces) else np.zeros(0, INDEX))
    if lengths.size and np.all(lengths == lengths[0]):
        return ReducedMeshMatrix(int(lengths[0]), lengths.size, n_verts, flat)
    if lengths.size == 0:
        return ReducedMeshMatrix(0, 0, n_verts, flat)
    offsets = exclusive_scan(lengths)
    vals = np.arange(flat.size, dtype=INDEX) - np.repeat(offsets[:-1], lengths) + 1
    return SparseMatrix(n_verts, lengths.size, offsets, flat, vals)


def face_orders_of(m: MeshMatrix) -> np.ndarray:
    return np.diff(m.col_offsets)


def mesh_faces(m: MeshMatrix) -> list[list[int]]:
    """Faces as Python lists (cyclic order)."""
    if isinstance(m, ReducedMeshMatrix):
        return m.face_table().tolist()
    offs = m.col_offsets
    rows = m.row_indices.tolist()
    return [rows[offs[k]:offs[k + 1]] for k in range(m.cols)]


def cyclic_arrays(m: MeshMatrix) -> tuple[np.ndarray, np.ndarray]:
    """``(col_offsets, row_indices)`` with each column in cyclic order."""
    if isinstance(m, ReducedMeshMatrix):
        return m.col_offsets, m.row_indices
    vals = m.values
    expected = np.arange(m.nnz, dtype=INDEX) - np.repeat(m.col_offsets[:-1], np.diff(m.col_offsets)) + 1
    if np.array_equal(vals, expected):
        return m.col_offsets, m.row_indices
    order = np.lexsort((vals, m.column_indices()))
    return m.col_offsets, m.row_indices[order]


# ---------------------------------------------------------------------------
# action maps


@dataclass(frozen=True)
class Constant:
    w: float


@dataclass(frozen=True, eq=False)
class PerRow:
    """Weight per *output* slot (face for transposed products, row otherwise)."""

    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class PerEntry:
    """Weight from the stored value.

    ``table`` is indexed by the (integer) stored value; alternatively ``fn``
    receives ``(values, out_index)`` as arrays and returns per-entry weights.
    """

    table: np.ndarray | None = None
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class Circulant:
    """Q_c^r: 1-based entry (a, b) is 1 iff b == ((a + r - 1) mod c) + 1."""

    r: int
    c: int | None = None  # None: the order of the face being processed

    def __call__(self, a: int, b: int, c: int | None = None) -> int:
        c = self.c if c is None else c
        return int(b == ((a + self.r - 1) % c) + 1)


COLLISION_KINDS = ("count", "face", "opposite")


@dataclass(frozen=True)
class Collision:
    """Sum of circulants ``powers`` with a collision function.

    Negative powers are taken modulo the face order, so ``-1`` denotes
    ``Q_c^{c-1}``. ``kind`` selects a built-in function:

    * ``"count"``: the circulant sum ``q`` itself (edge multiplicity).
    * ``"face"``: face index + 1 (stored offset so face 0 survives zero elision).
    * ``"opposite"``: remaining triangle vertex + 1.

    ``fn(i, j, k, q)`` may replace ``kind`` for the reference product; it
    returns a value or ``None`` to skip.
    """

    powers: tuple[int, ...]
    kind: str = "count"
    fn: Callable | None = None

    def __post_init__(self):
        if self.fn is None and self.kind not in COLLISION_KINDS:
            raise ValueError(f"unknown collision kind {self.kind!r}")

    def lookup(self, a: int, b: int, c: int) -> int:
        """Circulant sum at 1-based positions (a, b) for face order c."""
        return sum(Circulant(r % c if r < 0 else r, c)(a, b) for r in self.powers)


EDGE_MAP = Collision((1, -1), "count")
FACE_MAP = Collision((1,), "face")
OPPOSITE_MAP = Collision((1,), "opposite")

ActionMap = Union[Constant, PerRow, PerEntry, Circulant, Collision]


def _weight_args(amap, m, out_len: int):
    empty = np.zeros(0, np.float64)
    if isinstance(amap, Constant):
        return K.MODE_CONST, float(amap.w), empty, empty
    if isinstance(amap, PerRow):
        w = np.ascontiguousarray(amap.weights, dtype=np.float64)
        if w.shape != (out_len,):
            raise DimensionError(f"PerRow weights have shape {w.shape}, expected ({out_len},)")
        return K.MODE_PER_OUT, 0.0, w, empty
    if isinstance(amap, PerEntry):
        return K.MODE_PER_ENTRY, 0.0, empty, None  # filled by caller
    raise TypeError(f"{type(amap).__name__} is not an SpMV map")


def _as_buffer(x, count: int, name="x") -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    flat = x.ndim == 1
    if flat:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != count:
        raise DimensionError(f"{name} has {x.shape[0] if x.ndim else 0} rows, expected {count}")
    return np.ascontiguousarray(x), flat


def _finish(out, flat):
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("SpMV produced non-finite values")
    return out[:, 0] if flat else out


def spmv_mapped_transpose(m: MeshMatrix | SparseMatrix, amap, x) -> np.ndarray:
    """``out = M^T x`` under ``amap``; one worker per output column.

    ``x`` is ``(rows, dim)`` (or 1-D); the result is ``(cols, dim)``.
    """
    xb, flat = _as_buffer(x, m.rows)
    mode, const, per_out, per_entry = _weight_args(amap, m, m.cols)
    if mode == K.MODE_PER_ENTRY:
        per_entry = _entry_weights(amap, m.values, m.column_indices())
    out = np.empty((m.cols, xb.shape[1]))
    K.spmv_transpose(m.col_offsets, m.row_indices, mode, const, per_out, per_entry, xb, out)
    return _finish(out, flat)


def spmv_mapped_direct(m: MeshMatrix | SparseMatrix, amap, x) -> np.ndarray:
    """``out = M x`` under ``amap``.

    Each output row sums its entries in ascending column order through the
    cached transpose index, so the result is bitwise reproducible for any
    worker count.
    """
    xb, flat = _as_buffer(x, m.cols)
    rv = m.row_view
    mode, const, per_out, per_entry = _weight_args(amap, m, m.rows)
    if mode == K.MODE_PER_ENTRY:
        per_entry = _entry_weights(amap, m.values, m.row_indices)
    out = np.empty((m.rows, xb.shape[1]))
    K.spmv_direct(rv.row_offsets, rv.col_index, rv.entry_pos, mode, const,
                  per_out, per_entry, xb, out)
    return _finish(out, flat)


def _entry_weights(amap: PerEntry, values, out_index) -> np.ndarray:
    if amap.table is not None:
        w = np.asarray(amap.table, dtype=np.float64)[values.astype(INDEX)]
    elif amap.fn is not None:
        w = np.asarray(amap.fn(values, out_index), dtype=np.float64)
    else:
        raise ValueError("PerEntry needs a table or fn")
    return np.ascontiguousarray(w)


def exclusive_scan(counts) -> np.ndarray:
    """Offsets from counts: ``out[0] = 0``, ``out[k] = sum(counts[:k])``."""
    counts = np.asarray(counts)
    if counts.size == 0:
        return np.zeros(1, INDEX)
    if counts.dtype.kind not in "iu":
        raise TypeError("counts must be integers")
    if counts.min() < 0:
        raise ValueError("negative count")
    limit = np.iinfo(INDEX).max
    if int(counts.max()) > limit // counts.size and sum(int(c) for c in counts) > limit:
        raise OverflowError("prefix sum exceeds the index range")
    return K.exclusive_scan_i64(counts.astype(INDEX, copy=False))


# ---------------------------------------------------------------------------
# SpGEMM


def spgemm_mapped(m: MeshMatrix, cmap: Collision) -> SparseMatrix:
    """Reference ``M M^T`` under a collision map (row-by-column, pure Python).

    For every row ``i`` of ``M`` and every face ``k`` in that row, each vertex
    ``j`` of column ``k`` is a collision; the circulant sum is looked up at the
    two cyclic positions and the collision function decides the contribution.
    Serves as the oracle for :func:`spgemm_implicit_mesh`.
    """
    faces = mesh_faces(m)
    incident = defaultdict(list)  # vertex -> [(face, 1-based position)]
    for k, face in enumerate(faces):
        for a, v in enumerate(face, start=1):
            incident[v].append((k, a))
    acc: dict[tuple[int, int], int] = defaultdict(int)
    for i in sorted(incident):
        for k, a in incident[i]:
            face = faces[k]
            c = len(face)
            for b, j in enumerate(face, start=1):
                q = cmap.lookup(a, b, c)
                if q == 0:
                    continue
                if cmap.fn is not None:
                    v = cmap.fn(i, j, k, q)
                elif cmap.kind == "count":
                    v = q
                elif cmap.kind == "face":
                    v = k + 1
                else:
                    (o,) = [x for x in face if x != i and x != j]
                    v = o + 1
                if v is not None:
                    acc[(i, j)] += v
    entries = sorted((j, i, v) for (i, j), v in acc.items() if v != 0)
    n = m.rows
    rows = np.array([e[1] for e in entries], dtype=INDEX)
    cols = np.array([e[0] for e in entries], dtype=INDEX)
    vals = np.array([e[2] for e in entries], dtype=INDEX)
    offsets = np.zeros(n + 1, INDEX)
    np.add.at(offsets, cols + 1, 1)
    return SparseMatrix(n, n, np.cumsum(offsets), rows, vals)


def spgemm_implicit_mesh(m: MeshMatrix, cmap: Collision, *, symbolic: bool | None = None) -> SparseMatrix:
    """``M M^T`` under a collision map, built directly from ``M``.

    Pass 1 counts per-vertex collisions (skipped when every map row has the
    same non-zero count, in which case column ``j`` holds ``z * n_j`` slots)
    and scans them into column offsets. Pass 2 fills the slots in parallel over
    faces, visiting only partner positions where the circulant is non-zero.
    A final per-column sort/merge sums repeated pairs so the result matches
    :func:`spgemm_mapped` exactly. ``symbolic=True`` forces the count pass.
    """
    if cmap.fn is not None:
        raise ValueError("implicit SpGEMM supports only built-in collision kinds")
    kind = COLLISION_KINDS.index(cmap.kind)
    offs, rows = cyclic_arrays(m)
    orders = np.diff(offs)
    if kind == K.KIND_OPPOSITE and np.any(orders != 3):
        raise ValueError("opposite-vertex map needs a triangle mesh")
    powers = np.asarray(cmap.powers, dtype=INDEX)
    rv = m.row_view
    z_per_order = {int(c): len({p % int(c) for p in cmap.powers}) for c in np.unique(orders)}
    uniform = len(set(z_per_order.values())) <= 1
    if symbolic is None:
        symbolic = not uniform
    if symbolic:
        z = K.collision_counts(offs, powers)
        col_counts = K.column_counts_from_entries(rv.row_offsets, rv.entry_pos, z)
    else:
        zr = next(iter(z_per_order.values()), 0)
        z = np.full(rows.size, zr, INDEX)
        col_counts = zr * np.diff(rv.row_offsets)
    col_ptr = exclusive_scan(col_counts)
    base = K.entry_slots(rv.row_offsets, rv.entry_pos, z, col_ptr, rows.size)
    total = int(col_ptr[-1])
    out_rows = np.empty(total, INDEX)
    out_vals = np.empty(total, INDEX)
    K.implicit_fill(offs, rows, powers, kind, base, out_rows, out_vals)
    return _merge(m.rows, m.rows, col_ptr, out_rows, out_vals, drop_zeros=True)


def _merge(nrows, ncols, col_ptr, rows, vals, drop_zeros) -> SparseMatrix:
    uniq = K.sort_merge_columns(col_ptr, rows, vals, drop_zeros)
    new_ptr = exclusive_scan(uniq)
    if new_ptr[-1] == rows.size:
        return SparseMatrix(nrows, ncols, new_ptr, rows, vals)
    r = np.empty(int(new_ptr[-1]), INDEX)
    v = np.empty(int(new_ptr[-1]), vals.dtype)
    K.compact_columns(col_ptr, rows, vals, new_ptr, r, v)
    return SparseMatrix(nrows, ncols, new_ptr, r, v)


def from_triplets(rows, cols, vals, shape, *, drop_zeros=False) -> SparseMatrix:
    """Assemble CSC from (row, col, value) triplets, summing duplicates.

    Count per column, scan, fill, then sort/merge each column.
    """
    nrows, ncols = int(shape[0]), int(shape[1])
    rows = _index_array(rows)
    cols = _index_array(cols)
    vals = np.ascontiguousarray(vals)
    if vals.dtype.kind not in "if":
        vals = vals.astype(np.float64)
    if not (rows.size == cols.size == vals.size):
        raise DimensionError("triplet arrays differ in length")
    if rows.size and (rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols):
        raise DimensionError("triplet index out of range")
    ptr, perm = K.bucket_by_column(cols, ncols)
    return _merge(nrows, ncols, ptr, rows[perm], vals[perm].copy(), drop_zeros)


def spgemm_general(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Numeric ``A B`` (Gustavson, column by column); rows sorted per column."""
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    nchunks = max(1, min(b.cols, 4 * get_threads()))
    counts = K.spgemm_symbolic(a.col_offsets, a.row_indices, b.col_offsets, b.row_indices,
                               a.rows, nchunks)
    c_off = exclusive_scan(counts)
    c_rows = np.empty(int(c_off[-1]), INDEX)
    c_vals = np.empty(int(c_off[-1]), np.float64)
    K.spgemm_numeric(a.col_offsets, a.row_indices, a.values.astype(np.float64, copy=False),
                     b.col_offsets, b.row_indices, b.values.astype(np.float64, copy=False),
                     a.rows, nchunks, c_off, c_rows, c_vals)
    return SparseMatrix(a.rows, b.cols, c_off, c_rows, c_vals)


def identity(n: int) -> SparseMatrix:
    return SparseMatrix(n, n, np.arange(n + 1), np.arange(n), np.ones(n))


def lookup(mat: SparseMatrix, rows, cols) -> np.ndarray:
    """Entry positions of (rows[t], cols[t]) in a row-sorted CSC matrix (-1 if absent)."""
    return K.lookup_pairs(mat.col_offsets, mat.row_indices, _index_array(rows), _index_array(cols))
