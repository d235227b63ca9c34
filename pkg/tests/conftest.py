import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from alsub import shapes
from alsub.meshio import IndexedMesh

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("ALSUB_HYPOTHESIS_PROFILE", "default"))


def scrambled(mesh: IndexedMesh, rng, triangulate=0.0, drop=0.0, rotate=True) -> IndexedMesh:
    """Randomly split quads into triangles, drop faces, rotate face starts,
    shuffle face order and relabel vertices. Unused vertices are removed."""
    faces = []
    for f in mesh.faces:
        if rng.random() < drop:
            continue
        if len(f) == 4 and rng.random() < triangulate:
            if rng.random() < 0.5:
                faces += [[f[0], f[1], f[2]], [f[0], f[2], f[3]]]
            else:
                faces += [[f[0], f[1], f[3]], [f[1], f[2], f[3]]]
        else:
            faces.append(list(f))
    if rotate:
        faces = [f[k:] + f[:k] for f in faces for k in [int(rng.integers(len(f)))]]
    faces = [faces[k] for k in rng.permutation(len(faces))]
    used = sorted({v for f in faces for v in f})
    perm = rng.permutation(len(used))
    relabel = {old: int(perm[t]) for t, old in enumerate(used)}
    P = np.empty((len(used), mesh.positions.shape[1]))
    for old, new in relabel.items():
        P[new] = mesh.positions[old]
    return IndexedMesh(P, [[relabel[v] for v in f] for f in faces])


@st.composite
def random_meshes(draw, closed=False, triangles_only=False, max_side=8):
    """Small manifold meshes: scrambled grids (open) or tori (closed)."""
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    a = draw(st.integers(3, max_side))
    b = draw(st.integers(3, max_side))
    tri = 1.0 if triangles_only else draw(st.sampled_from([0.0, 0.3, 1.0]))
    if closed:
        base = shapes.torus(a, b)
        drop = 0.0
    else:
        base = shapes.grid(a, b)
        base.positions[:, 2] = rng.normal(scale=0.1, size=base.n_verts)
        drop = 0.0
    return scrambled(base, rng, triangulate=tri, drop=drop)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def cube():
    return shapes.cube()


# acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
