"""OBJ / crease-file I/O, mesh-matrix construction and manifold diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CreaseError, MeshError, ObjParseError
from .sparse import (EDGE_MAP, MeshMatrix, mesh_faces, mesh_matrix_from_faces,
                     spgemm_implicit_mesh)

log = logging.getLogger(__name__)

#: Stand-in for infinite sharpness; never blended, inherited unchanged.
INF_SHARPNESS = 1e30


@dataclass(eq=False)
class IndexedMesh:
    """Positions plus faces (0-based, cyclic, counter-clockwise as authored).

    ``texcoords`` / ``normals`` are per-vertex channels, present only when the
    OBJ indexed them identically to positions.
    """

    positions: np.ndarray
    faces: list
    texcoords: np.ndarray | None = None
    normals: np.ndarray | None = None

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 2:
            raise MeshError("positions must be a (count, dim) array")
        if not np.all(np.isfinite(self.positions)):
            raise MeshError("non-finite vertex position")
        if isinstance(self.faces, np.ndarray):
            self.faces = self.faces.tolist()
        nv = len(self.positions)
        for k, f in enumerate(self.faces):
            if len(f) < 3:
                raise MeshError(f"face {k} has fewer than 3 vertices")
            if min(f) < 0 or max(f) >= nv:
                raise MeshError(f"face {k} references a missing vertex")

    @property
    def n_verts(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @classmethod
    def from_matrix(cls, m: MeshMatrix, positions) -> "IndexedMesh":
        return cls(positions, mesh_faces(m))


def build_mesh_matrix(mesh: IndexedMesh) -> MeshMatrix:
    """Column ``k`` holds face ``k``'s vertices with values ``1..c_k``.

    Returns a :class:`ReducedMeshMatrix` iff all faces share one order.
    """
    return mesh_matrix_from_faces(mesh.faces, mesh.n_verts)


# ---------------------------------------------------------------------------
# OBJ


def _resolve(tok: str, count: int, lineno: int, path, what: str) -> int:
    try:
        idx = int(tok)
    except ValueError:
        raise ObjParseError(f"bad {what} index {tok!r}", lineno, path) from None
    if idx > 0:
        idx -= 1
    elif idx < 0:
        idx += count
    else:
        raise ObjParseError(f"{what} index 0 is invalid", lineno, path)
    if not 0 <= idx < count:
        raise ObjParseError(f"face references missing {what} {tok}", lineno, path)
    return idx


def load_obj(path) -> IndexedMesh:
    """Read ``v``/``vt``/``vn``/``f`` records; other records are ignored.

    Face corners may be ``v``, ``v/vt``, ``v/vt/vn`` or ``v//vn``; indices are
    converted to 0-based and negative (relative) indices resolved.
    """
    path = Path(path)
    verts, uvs, nrms, faces = [], [], [], []
    corner_uv, corner_n = [], []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MeshError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        try:
            if tag == "v":
                if len(rest) < 3:
                    raise ObjParseError("vertex needs 3 coordinates", lineno, path)
                verts.append([float(x) for x in rest[:3]])
            elif tag == "vt":
                uvs.append([float(x) for x in rest[:2]] + [0.0] * (2 - len(rest[:2])))
            elif tag == "vn":
                nrms.append([float(x) for x in rest[:3]])
            elif tag == "f":
                if len(rest) < 3:
                    raise ObjParseError("face needs at least 3 vertices", lineno, path)
                face, fu, fn = [], [], []
                for corner in rest:
                    parts = corner.split("/")
                    face.append(_resolve(parts[0], len(verts), lineno, path, "vertex"))
                    fu.append(_resolve(parts[1], len(uvs), lineno, path, "texcoord")
                              if len(parts) > 1 and parts[1] else None)
                    fn.append(_resolve(parts[2], len(nrms), lineno, path, "normal")
                              if len(parts) > 2 and parts[2] else None)
                faces.append(face)
                corner_uv.append(fu)
                corner_n.append(fn)
        except ValueError as exc:
            raise ObjParseError(str(exc), lineno, path) from None
    positions = np.array(verts, dtype=np.float64).reshape(-1, 3)
    mesh = IndexedMesh(positions, faces)
    mesh.texcoords = _vertex_channel(faces, corner_uv, uvs, len(verts), "texcoord")
    mesh.normals = _vertex_channel(faces, corner_n, nrms, len(verts), "normal")
    return mesh


def _vertex_channel(faces, corner_idx, values, nv, what):
    if not values:
        return None
    chan = np.full((nv, len(values[0])), np.nan)
    for face, idx in zip(faces, corner_idx):
        for v, t in zip(face, idx):
            if t is None:
                continue
            if not np.isnan(chan[v, 0]) and not np.array_equal(chan[v], values[t]):
                log.info("%s channel is face-varying; not carried per vertex", what)
                return None
            chan[v] = values[t]
    if np.isnan(chan).any():
        return None
    return chan


def write_obj(mesh: IndexedMesh | tuple, path) -> None:
    """Write ``v`` then ``f`` records (1-based), 9 significant digits."""
    if isinstance(mesh, tuple):
        m, positions = mesh
        faces = mesh_faces(m)
    else:
        positions, faces = mesh.positions, mesh.faces
    path = Path(path)
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in np.asarray(positions)[:, :3]]
    lines += ["f " + " ".join(str(v + 1) for v in f) for f in faces]
    try:
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    except OSError as exc:
        raise MeshError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# creases


@dataclass
class CreaseSet:
    """Undirected crease edges ``(i, j, sigma)``; sigma may be INF_SHARPNESS."""

    entries: list[tuple[int, int, float]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        clean = []
        for i, j, s in self.entries:
            i, j, s = int(i), int(j), float(s)
            if i == j:
                raise CreaseError(f"crease ({i}, {j}) is a self-loop")
            if s < 0 or math.isnan(s):
                raise CreaseError(f"crease ({i}, {j}) has invalid sharpness {s}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise CreaseError(f"crease ({i}, {j}) listed twice")
            seen.add(key)
            clean.append((i, j, min(s, INF_SHARPNESS)))
        self.entries = clean

    def __len__(self):
        return len(self.entries)

    def check_edges(self, m: MeshMatrix) -> None:
        """Raise :class:`CreaseError` naming the first pair that is not an edge."""
        edges = edge_set(m)
        for i, j, _ in self.entries:
            if (min(i, j), max(i, j)) not in edges:
                raise CreaseError(f"crease ({i}, {j}) is not an edge of the mesh")


def load_creases(path, mesh: IndexedMesh | None = None) -> CreaseSet:
    """Parse ``c <i> <j> <sigma>`` lines (0-based, ``inf`` allowed)."""
    path = Path(path)
    out = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MeshError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "c" or len(parts) != 4:
            raise ObjParseError("expected 'c <i> <j> <sigma>'", lineno, path)
        try:
            i, j = int(parts[1]), int(parts[2])
            s = INF_SHARPNESS if parts[3].lower() in ("inf", "infinity") else float(parts[3])
        except ValueError:
            raise ObjParseError(f"bad crease record {line!r}", lineno, path) from None
        if math.isinf(s):
            s = INF_SHARPNESS
        out.append((i, j, s))
    creases = CreaseSet(out)
    if mesh is not None:
        nv = mesh.n_verts
        for i, j, _ in creases.entries:
            if not (0 <= i < nv and 0 <= j < nv):
                raise CreaseError(f"crease ({i}, {j}) references a missing vertex")
        creases.check_edges(build_mesh_matrix(mesh))
    return creases


def write_creases(creases: CreaseSet, path) -> None:
    lines = []
    for i, j, s in creases.entries:
        sv = "inf" if s >= INF_SHARPNESS else repr(float(s))
        lines.append(f"c {i} {j} {sv}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# diagnostics


def edge_set(m: MeshMatrix) -> set[tuple[int, int]]:
    out = set()
    for f in mesh_faces(m):
        for a, b in zip(f, f[1:] + f[:1]):
            out.add((min(a, b), max(a, b)))
    return out


@dataclass
class ManifoldReport:
    non_manifold_edges: list[tuple[int, int]]
    boundary_edges: list[tuple[int, int]]
    zero_area_faces: list[int]
    duplicate_vertex_faces: list[int]
    edge_count: int

    @property
    def is_manifold(self) -> bool:
        return not (self.non_manifold_edges or self.duplicate_vertex_faces)

    @property
    def is_closed(self) -> bool:
        return not self.boundary_edges

    @property
    def ok(self) -> bool:
        return self.is_manifold and not self.zero_area_faces


def validate_manifold(mesh: IndexedMesh, m: MeshMatrix | None = None,
                      area_eps: float = 0.0) -> ManifoldReport:
    """Diagnose edges with >2 faces, boundary edges, zero-area and repeated-vertex faces.

    Edge multiplicities come from ``E = M M^T`` under the edge map.
    """
    if m is None:
        m = build_mesh_matrix(mesh)
    dup = [k for k, f in enumerate(mesh.faces) if len(set(f)) != len(f)]
    P = mesh.positions
    P3 = P[:, :3] if P.shape[1] >= 3 else np.pad(P, ((0, 0), (0, 3 - P.shape[1])))
    zero = []
    for k, f in enumerate(mesh.faces):
        pts = P3[f]
        # Newell normal; its length is twice the polygon area
        normal = np.cross(pts, np.roll(pts, -1, axis=0)).sum(0)
        if np.linalg.norm(normal) <= area_eps:
            zero.append(k)
    if dup:
        # duplicate vertices confuse the collision count; report edges directly
        from collections import Counter
        cnt = Counter()
        for f in mesh.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                if a != b:
                    cnt[(min(a, b), max(a, b))] += 1
        nm = sorted(e for e, v in cnt.items() if v > 2)
        bd = sorted(e for e, v in cnt.items() if v == 1)
        return ManifoldReport(nm, bd, zero, dup, len(cnt))
    E = spgemm_implicit_mesh(m, EDGE_MAP)
    cols = E.column_indices()
    upper = E.row_indices < cols
    r, c, v = E.row_indices[upper], cols[upper], E.values[upper]
    nm = list(zip(r[v > 2].tolist(), c[v > 2].tolist()))
    bd = list(zip(r[v == 1].tolist(), c[v == 1].tolist()))
    return ManifoldReport(nm, bd, zero, dup, int(upper.sum()))
