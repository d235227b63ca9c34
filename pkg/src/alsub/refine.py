"""Refinement matrices for static-topology evaluation.

A step matrix ``R_i`` maps level-i vertex data to level i+1: one row per
refined vertex, holding that vertex's stencil. Composing the steps gives
``R = R_{n-1} ... R_0`` so that ``P_n = R P_0`` is a single SpMV.

Refinement matrices are stored row-compressed. Internally that is the CSC
layout of the transpose, which lets the products reuse the column kernels.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from .errors import DimensionError, MeshError
from .parallel import get_threads
from .sparse import INDEX, SparseMatrix, from_triplets, spgemm_general

CACHE_MAGIC = b"ALSUBR1"
_HEADER = struct.Struct("<QQQ")


@dataclass(frozen=True, eq=False)
class RefinementMatrix:
    """Row-compressed stencil matrix. ``T`` is the CSC form of its transpose."""

    T: SparseMatrix
    chunks: np.ndarray | None = field(default=None)

    @property
    def rows(self) -> int:
        return self.T.cols

    @property
    def cols(self) -> int:
        return self.T.rows

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return self.T.nnz

    @property
    def row_offsets(self) -> np.ndarray:
        return self.T.col_offsets

    @property
    def col_index(self) -> np.ndarray:
        return self.T.row_indices

    @property
    def values(self) -> np.ndarray:
        return self.T.values

    def row(self, r: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.row_offsets[r], self.row_offsets[r + 1]
        return self.col_index[lo:hi], self.values[lo:hi]

    def row_sums(self) -> np.ndarray:
        counts = np.diff(self.row_offsets)
        return np.bincount(np.repeat(np.arange(self.rows), counts), weights=self.values,
                           minlength=self.rows)

    def to_dense(self) -> np.ndarray:
        return self.T.to_dense().T

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape, drop_zeros=True) -> "RefinementMatrix":
        """Assemble from (row, col, weight) triplets; duplicates are summed."""
        T = from_triplets(cols, rows, vals, (shape[1], shape[0]), drop_zeros=drop_zeros)
        return cls(T)

    @classmethod
    def identity(cls, n: int) -> "RefinementMatrix":
        return cls(SparseMatrix(n, n, np.arange(n + 1, dtype=INDEX), np.arange(n, dtype=INDEX),
                                np.ones(n)))

    def with_chunks(self, nchunks: int | None = None) -> "RefinementMatrix":
        return RefinementMatrix(self.T, row_chunks(self.row_offsets, nchunks))

    def apply(self, P) -> np.ndarray:
        return eval_single_spmv(self, P)


def row_chunks(row_offsets, nchunks: int | None = None) -> np.ndarray:
    """Row boundaries splitting the non-zeros into ``nchunks`` near-equal parts.

    Computed once at build time; rows are never split.
    """
    nrows = row_offsets.size - 1
    if nchunks is None:
        nchunks = 8 * get_threads()
    nchunks = max(1, min(int(nchunks), max(nrows, 1)))
    nnz = int(row_offsets[-1])
    targets = (np.arange(1, nchunks) * nnz) // nchunks
    cuts = np.searchsorted(row_offsets, targets, side="left")
    return np.unique(np.concatenate([[0], cuts, [nrows]])).astype(INDEX)


def build_step_matrix(art, stencils) -> RefinementMatrix:
    """``R_i`` from a scheme's stencil triplets (``step_stencils(art)``).

    Stencils are exactly the weights the iterative eval applies, including
    boundary and crease overrides; weights cancelled to zero are dropped.
    """
    rows, cols, vals = stencils
    return RefinementMatrix.from_triplets(rows, cols, vals, (art.n_verts_next, art.n_verts))


def compose(steps, n_verts: int | None = None) -> RefinementMatrix:
    """``R_{n-1} ... R_0`` accumulated left to right (``R <- R_i R``).

    Intermediate products keep the small column count ``|v_0|``. With no
    steps the result is the identity of size ``n_verts``.
    """
    steps = list(steps)
    if not steps:
        if n_verts is None:
            raise ValueError("composing zero steps needs n_verts")
        return RefinementMatrix.identity(n_verts)
    acc = steps[0]
    for R in steps[1:]:
        acc = multiply(R, acc)
    return acc


def multiply(a: RefinementMatrix, b: RefinementMatrix) -> RefinementMatrix:
    """``A B`` for row-compressed operands: ``(A B)^T = B^T A^T``."""
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return RefinementMatrix(spgemm_general(b.T, a.T))


def eval_single_spmv(R: RefinementMatrix, P0) -> np.ndarray:
    """``P_n = R P_0``, parallel over row chunks of equal non-zero count."""
    P0 = np.asarray(P0, dtype=np.float64)
    flat = P0.ndim == 1
    x = np.ascontiguousarray(P0.reshape(-1, 1) if flat else P0)
    if x.shape[0] != R.cols:
        raise DimensionError(f"refinement matrix has {R.cols} columns, data has {x.shape[0]} rows")
    chunks = R.chunks if R.chunks is not None else row_chunks(R.row_offsets)
    out = np.empty((R.rows, x.shape[1]))
    K.csr_spmv_chunked(R.row_offsets, R.col_index, R.values.astype(np.float64, copy=False),
                       chunks, x, out)
    return out[:, 0] if flat else out


def save(R: RefinementMatrix, path) -> None:
    """Binary cache: magic, u64 rows/cols/nnz, u64 offsets, u32 indices, f64 values (LE)."""
    if R.cols >= 2**32:
        raise ValueError("column count does not fit the u32 index field")
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(_HEADER.pack(R.rows, R.cols, R.nnz))
        fh.write(R.row_offsets.astype("<u8").tobytes())
        fh.write(R.col_index.astype("<u4").tobytes())
        fh.write(R.values.astype("<f8").tobytes())


def load(path) -> RefinementMatrix:
    data = Path(path).read_bytes()
    n0 = len(CACHE_MAGIC)
    if data[:n0] != CACHE_MAGIC:
        raise MeshError(f"{path}: not a refinement-matrix cache")
    if len(data) < n0 + _HEADER.size:
        raise MeshError(f"{path}: truncated cache header")
    rows, cols, nnz = _HEADER.unpack_from(data, n0)
    pos = n0 + _HEADER.size
    expected = pos + 8 * (rows + 1) + 4 * nnz + 8 * nnz
    if len(data) != expected:
        raise MeshError(f"{path}: truncated or corrupt cache ({len(data)} bytes, expected {expected})")
    offs = np.frombuffer(data, "<u8", rows + 1, pos).astype(INDEX)
    pos += 8 * (rows + 1)
    idx = np.frombuffer(data, "<u4", nnz, pos).astype(INDEX)
    pos += 4 * nnz
    vals = np.frombuffer(data, "<f8", nnz, pos).astype(np.float64)
    try:
        T = SparseMatrix(cols, rows, offs, idx, vals)
        T.check()
    except ValueError as exc:
        raise MeshError(f"{path}: invalid cache contents ({exc})") from None
    return RefinementMatrix(T)
