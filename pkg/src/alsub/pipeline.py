"""Multi-level subdivision in the three evaluation modes.

* ``dynamic``: build and eval alternate, level by level.
* ``static``: all build steps run once (topology fixed); ``evaluate`` replays
  only the eval steps, so new vertex data (animation frames) is cheap.
* ``single-spmv``: the build additionally assembles and composes the step
  matrices, so evaluation is one SpMV ``P_n = R P_0``.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

import numpy as np

from . import catmull_clark, loop, refine, reorder, sqrt3
from .errors import DimensionError, NonFiniteError, SchemeConstraintError
from .sparse import MeshMatrix, SparseMatrix, cyclic_arrays, from_triplets

SCHEMES = {"cc": catmull_clark, "loop": loop, "sqrt3": sqrt3}
MODES = ("dynamic", "static", "single-spmv")

# fixed row-chunk count used in deterministic mode
DETERMINISTIC_CHUNKS = 64


@dataclass
class SubdivisionConfig:
    scheme: str = "cc"
    levels: int = 1
    mode: str = "dynamic"
    reorder: bool = False
    deterministic: bool = False
    chunks: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r} (choose from {sorted(SCHEMES)})")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r} (choose from {list(MODES)})")
        if self.levels < 0:
            raise ValueError("levels must be >= 0")


@dataclass(eq=False)
class SubdivisionResult:
    M: MeshMatrix
    P: np.ndarray
    C: SparseMatrix | None
    build_ms: float
    eval_ms: float
    peak_bytes: int
    perm: np.ndarray | None = None  # input relabeling applied before subdivision
    R: refine.RefinementMatrix | None = None

    @property
    def n_faces(self) -> int:
        return self.M.cols

    @property
    def n_verts(self) -> int:
        return self.M.rows

    @property
    def total_ms(self) -> float:
        return self.build_ms + self.eval_ms

    def digest(self) -> str:
        return output_hash(self.M, self.P)


def output_hash(M: MeshMatrix, P) -> str:
    """SHA-256 over the face table and the position bytes."""
    h = hashlib.sha256()
    offs, rows = cyclic_arrays(M)
    h.update(np.ascontiguousarray(offs, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(rows, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(P, dtype="<f8").tobytes())
    return h.hexdigest()


def permute_creases(C: SparseMatrix | None, perm) -> SparseMatrix | None:
    if C is None:
        return None
    inv = reorder.inverse_permutation(perm)
    return from_triplets(inv[C.row_indices], inv[C.column_indices()], C.values, C.shape)


def _check_positions(P, n):
    P = np.ascontiguousarray(P, dtype=np.float64)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    if P.shape[0] != n:
        raise DimensionError(f"vertex data has {P.shape[0]} rows, mesh has {n} vertices")
    if not np.all(np.isfinite(P)):
        raise NonFiniteError("vertex data contains NaN or infinite values")
    return P


def _check_creases(scheme: str, C):
    if C is not None and C.nnz and scheme != "cc":
        raise SchemeConstraintError("creases are supported for Catmull-Clark only")


class Subdivider:
    """Static-topology subdivision: build once, evaluate many times."""

    def __init__(self, M: MeshMatrix, config: SubdivisionConfig | None = None,
                 C: SparseMatrix | None = None, R: refine.RefinementMatrix | None = None):
        """``R`` (single-SpMV mode) adopts a cached refinement matrix instead
        of composing one; its shape must match the build."""
        self.config = config or SubdivisionConfig(mode="static")
        cfg = self.config
        _check_creases(cfg.scheme, C)
        self.perm = None
        if cfg.reorder:
            self.perm = reorder.rcm_order(M)
            M, _ = reorder.permute_mesh(M, np.zeros((M.rows, 0)), self.perm)
            C = permute_creases(C, self.perm)
        self.M0 = M
        self.C0 = C
        mod = SCHEMES[cfg.scheme]
        t0 = time.perf_counter()
        self.steps = []
        m, c = M, C
        for _ in range(cfg.levels):
            art = mod.build(m, c)
            self.steps.append(art)
            m, c = art.M_next, art.C_next
        self.M_out, self.C_out = m, c
        self.R = None
        self.cache_hit = False
        if cfg.mode == "single-spmv":
            if R is not None and R.shape == (self.M_out.rows, self.M0.rows):
                self.use_matrix(R)
                self.cache_hit = True
            else:
                self.R = self._compose(mod)
        self.build_ms = 1e3 * (time.perf_counter() - t0)

    def _compose(self, mod) -> refine.RefinementMatrix:
        cfg = self.config
        R = refine.compose((refine.build_step_matrix(a, mod.step_stencils(a)) for a in self.steps),
                           self.M0.rows)
        nchunks = DETERMINISTIC_CHUNKS if cfg.deterministic else cfg.chunks
        return R.with_chunks(nchunks)

    def use_matrix(self, R: refine.RefinementMatrix) -> None:
        """Adopt a cached refinement matrix (dimensions must match the build)."""
        if R.shape != (self.M_out.rows, self.M0.rows):
            raise DimensionError(f"cached matrix is {R.shape}, build expects "
                                 f"{(self.M_out.rows, self.M0.rows)}")
        nchunks = DETERMINISTIC_CHUNKS if self.config.deterministic else self.config.chunks
        self.R = R.with_chunks(nchunks)

    def prepare(self, P) -> np.ndarray:
        """Input vertex data in the (possibly reordered) build labeling."""
        P = _check_positions(P, self.M0.rows if self.perm is None else self.perm.size)
        return P if self.perm is None else P[self.perm]

    def evaluate(self, P) -> np.ndarray:
        P = self.prepare(P)
        if self.R is not None:
            return refine.eval_single_spmv(self.R, P)
        mod = SCHEMES[self.config.scheme]
        for art in self.steps:
            P = mod.evaluate(art, P)
        return P

    def nbytes(self) -> int:
        total = sum(a.nbytes() for a in self.steps)
        if self.R is not None:
            total += self.R.values.nbytes + self.R.col_index.nbytes + self.R.row_offsets.nbytes
        return int(total)


def subdivide(M: MeshMatrix, P, config: SubdivisionConfig | None = None,
              C: SparseMatrix | None = None) -> SubdivisionResult:
    """Subdivide ``config.levels`` times in the configured mode."""
    cfg = config or SubdivisionConfig()
    if cfg.mode != "dynamic":
        sub = Subdivider(M, cfg, C)
        t0 = time.perf_counter()
        Pn = sub.evaluate(P)
        eval_ms = 1e3 * (time.perf_counter() - t0)
        peak = sub.nbytes() + Pn.nbytes
        return SubdivisionResult(sub.M_out, Pn, sub.C_out, sub.build_ms, eval_ms, peak,
                                 sub.perm, sub.R)
    _check_creases(cfg.scheme, C)
    perm = None
    P = _check_positions(P, M.rows)
    if cfg.reorder:
        perm = reorder.rcm_order(M)
        M, P = reorder.permute_mesh(M, P, perm)
        C = permute_creases(C, perm)
    mod = SCHEMES[cfg.scheme]
    build_ms = eval_ms = 0.0
    peak = 0
    for _ in range(cfg.levels):
        t0 = time.perf_counter()
        art = mod.build(M, C)
        t1 = time.perf_counter()
        Pn = mod.evaluate(art, P)
        t2 = time.perf_counter()
        build_ms += 1e3 * (t1 - t0)
        eval_ms += 1e3 * (t2 - t1)
        peak = max(peak, art.nbytes() + P.nbytes + Pn.nbytes)
        M, P, C = art.M_next, Pn, art.C_next
    return SubdivisionResult(M, P, C, build_ms, eval_ms, max(peak, P.nbytes), perm)


def predicted_counts(scheme: str, n_faces: int, n_verts: int, n_edges: int, corner_sum: int,
                     levels: int) -> tuple[int, int]:
    """(faces, vertices) after ``levels`` steps on a closed mesh, from the count recurrences.

    ``corner_sum`` is the sum of face orders.
    """
    F, V, E, S = n_faces, n_verts, n_edges, corner_sum
    for _ in range(levels):
        if scheme == "cc":
            F, V, E, S = S, V + F + E, 2 * E + S, 4 * S
        elif scheme == "loop":
            F, V, E, S = 4 * F, V + E, 2 * E + 3 * F, 12 * F
        elif scheme == "sqrt3":
            F, V, E, S = 3 * F, V + F, E + 3 * F, 9 * F
        else:
            raise ValueError(scheme)
    return F, V
