"""Small procedural control meshes used by tests, scripts and benchmarks.

All faces are counter-clockwise seen from outside (or from +z for planar
patches).
"""

from __future__ import annotations

import numpy as np

from .meshio import IndexedMesh


def cube() -> IndexedMesh:
    P = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                  [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], float)
    F = [[0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]]
    return IndexedMesh(P, F)


def tetrahedron() -> IndexedMesh:
    P = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    return IndexedMesh(P, [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])


def octahedron() -> IndexedMesh:
    P = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    F = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]]
    return IndexedMesh(P, F)


def icosahedron() -> IndexedMesh:
    t = (1 + 5 ** 0.5) / 2
    P = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                  [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                  [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], float)
    F = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    return IndexedMesh(P, F)


def grid(nx: int, ny: int | None = None, size: float = 1.0) -> IndexedMesh:
    """Flat ``nx`` x ``ny`` quad grid in the z = 0 plane."""
    ny = nx if ny is None else ny
    xs, ys = np.meshgrid(np.linspace(0, size, nx + 1), np.linspace(0, size * ny / nx, ny + 1))
    P = np.stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)], 1)
    w = nx + 1
    F = [[j * w + i, j * w + i + 1, (j + 1) * w + i + 1, (j + 1) * w + i]
         for j in range(ny) for i in range(nx)]
    return IndexedMesh(P, F)


def triangle_grid(nx: int, ny: int | None = None) -> IndexedMesh:
    """Quad grid with every cell split along its diagonal (open mesh)."""
    g = grid(nx, ny)
    F = []
    for a, b, c, d in g.faces:
        F += [[a, b, c], [a, c, d]]
    return IndexedMesh(g.positions, F)


def torus(n_major: int = 16, n_minor: int = 8, R: float = 2.0, r: float = 0.5,
          triangles: bool = False) -> IndexedMesh:
    """Closed torus grid; all vertices have valence 4 (6 if triangulated)."""
    u = 2 * np.pi * np.arange(n_major) / n_major
    v = 2 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    P = np.stack([(R + r * np.cos(vv)) * np.cos(uu), (R + r * np.cos(vv)) * np.sin(uu),
                  r * np.sin(vv)], -1).reshape(-1, 3)

    def vid(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    F = []
    for i in range(n_major):
        for j in range(n_minor):
            q = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
            F += [[q[0], q[1], q[2]], [q[0], q[2], q[3]]] if triangles else [q]
    return IndexedMesh(P, F)


def star_patch(valence: int = 5, k: int = 3) -> IndexedMesh:
    """Planar patch of ``valence`` quad sectors, each a ``k`` x ``k`` grid.

    The center has valence ``valence``; every other interior vertex is
    regular and the boundary is regular except at the sector corners.
    """
    index: dict[tuple, int] = {}
    pts, F = [], []

    def vid(p):
        key = (round(p[0], 9), round(p[1], 9))
        if key not in index:
            index[key] = len(pts)
            pts.append([p[0], p[1], 0.0])
        return index[key]

    ang = 2 * np.pi / valence
    for s in range(valence):
        O = np.zeros(2)
        A = np.array([np.cos(s * ang), np.sin(s * ang)])
        B = 1.4 * np.array([np.cos((s + 0.5) * ang), np.sin((s + 0.5) * ang)])
        C = np.array([np.cos((s + 1) * ang), np.sin((s + 1) * ang)])

        def at(i, j):
            u, v = i / k, j / k
            return (1 - u) * (1 - v) * O + u * (1 - v) * A + u * v * B + (1 - u) * v * C

        for i in range(k):
            for j in range(k):
                F.append([vid(at(i, j)), vid(at(i + 1, j)), vid(at(i + 1, j + 1)), vid(at(i, j + 1))])
    return IndexedMesh(np.array(pts), F)


def uv_sphere(n_lon: int = 16, n_rings: int = 8, radius: float = 1.0,
              center=(0.0, 0.0, 0.0)) -> IndexedMesh:
    """Closed triangulated sphere: ``2 + n_rings * n_lon`` vertices,
    ``2 * n_lon * n_rings`` triangles."""
    center = np.asarray(center, float)
    theta = np.pi * np.arange(1, n_rings + 1) / (n_rings + 1)
    phi = 2 * np.pi * np.arange(n_lon) / n_lon
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ring = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], -1).reshape(-1, 3)
    P = np.vstack([[0, 0, 1], ring, [0, 0, -1]]) * radius + center
    south = 1 + n_rings * n_lon

    def vid(r, j):
        return 1 + r * n_lon + (j % n_lon)

    F = [[0, vid(0, j), vid(0, j + 1)] for j in range(n_lon)]
    for r in range(n_rings - 1):
        for j in range(n_lon):
            a, b, c, d = vid(r, j), vid(r + 1, j), vid(r + 1, j + 1), vid(r, j + 1)
            F += [[a, b, c], [a, c, d]]
    F += [[south, vid(n_rings - 1, j + 1), vid(n_rings - 1, j)] for j in range(n_lon)]
    return IndexedMesh(P, F)


def bipyramid(n: int = 311) -> IndexedMesh:
    """Closed ``n``-gonal bipyramid: ``n + 2`` vertices, ``2 n`` triangles."""
    phi = 2 * np.pi * np.arange(n) / n
    ring = np.stack([np.cos(phi), np.sin(phi), np.zeros(n)], 1)
    P = np.vstack([ring, [[0, 0, 1], [0, 0, -1]]])
    top, bot = n, n + 1
    F = [[j, (j + 1) % n, top] for j in range(n)] + [[(j + 1) % n, j, bot] for j in range(n)]
    return IndexedMesh(P, F)


def merge(*meshes: IndexedMesh) -> IndexedMesh:
    """Disjoint union."""
    P, F, off = [], [], 0
    for m in meshes:
        P.append(m.positions)
        F += [[v + off for v in f] for f in m.faces]
        off += m.n_verts
    return IndexedMesh(np.vstack(P), F)


def goblet_substitute() -> IndexedMesh:
    """Four disjoint 256-triangle spheres: 1024 faces, 520 vertices, closed."""
    return merge(*[uv_sphere(16, 8, 1.0, (3.0 * i, 0.0, 0.0)) for i in range(4)])


def fox_substitute() -> IndexedMesh:
    """Closed triangle mesh with 622 faces and 313 vertices (genus 0)."""
    return bipyramid(311)


def mixed_polygons() -> IndexedMesh:
    """Open planar strip mixing a triangle, quads and a pentagon."""
    P = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0],
                  [0, 1, 0], [1, 1, 0], [2, 1, 0], [3, 1, 0], [3.5, 0.5, 0],
                  [0.5, 1.8, 0]], float)
    F = [[0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 8, 7, 6], [4, 5, 9]]
    return IndexedMesh(P, F)
