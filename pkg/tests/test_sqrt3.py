import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import random_meshes
from alsub import shapes, sqrt3
from alsub.errors import BoundaryError
from alsub.meshio import IndexedMesh, build_mesh_matrix
from alsub.sparse import mesh_faces


def one_step(mesh):
    art = sqrt3.build(build_mesh_matrix(mesh))
    return art, sqrt3.evaluate(art, mesh.positions)


def test_alpha_values():
    assert sqrt3.sqrt3_alpha(6) == 1 / 3
    assert sqrt3.sqrt3_alpha(3) == pytest.approx(5 / 9, rel=1e-15)


def test_face_points():
    tri = IndexedMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    np.testing.assert_allclose(sqrt3.sqrt3_face_points(build_mesh_matrix(tri), tri.positions),
                               [[1 / 3, 1 / 3, 0]], rtol=1e-15)
    tet = shapes.tetrahedron()
    f = sqrt3.sqrt3_face_points(build_mesh_matrix(tet), tet.positions)
    np.testing.assert_allclose(f, [tet.positions[x].mean(0) for x in tet.faces], rtol=1e-15)


def test_tetrahedron_vertex_update():
    tet = shapes.tetrahedron()
    _, P1 = one_step(tet)
    P = tet.positions
    a = 5 / 9
    for i in range(4):
        ref = (1 - a) * P[i] + a / 3 * (P.sum(0) - P[i])
        np.testing.assert_allclose(P1[i], ref, rtol=1e-14, atol=1e-16)


def test_counts_and_one_to_nine():
    art, _ = one_step(shapes.tetrahedron())
    assert (art.M_next.cols, art.M_next.rows) == (12, 8)
    for m in [shapes.tetrahedron(), shapes.octahedron(), shapes.icosahedron(), shapes.torus(5, 4, triangles=True)]:
        M = build_mesh_matrix(m)
        M2 = sqrt3.build(sqrt3.build(M).M_next).M_next
        assert M2.cols == 9 * m.n_faces


def test_rejects_boundary():
    with pytest.raises(BoundaryError):
        sqrt3.build(build_mesh_matrix(shapes.triangle_grid(2)))


@given(random_meshes(closed=True, triangles_only=True))
def test_matches_brute_force_step(mesh):
    art, P1 = one_step(mesh)
    ref_faces, ref_P = oracles.sqrt3(mesh.faces, mesh.positions)
    assert mesh_faces(art.M_next) == ref_faces
    np.testing.assert_allclose(P1, ref_P, rtol=1e-12, atol=1e-14)


@given(random_meshes(closed=True, triangles_only=True))
def test_every_edge_is_flipped(mesh):
    art, _ = one_step(mesh)
    new_edges = oracles.edge_incidence(mesh_faces(art.M_next))
    dface = oracles.directed_faces(mesh.faces)
    nv = mesh.n_verts
    for (k, l) in oracles.edge_incidence(mesh.faces):
        r, s = dface[(k, l)], dface[(l, k)]
        assert (min(nv + r, nv + s), max(nv + r, nv + s)) in new_edges
        assert (k, l) not in new_edges


@given(random_meshes(closed=True, triangles_only=True))
def test_orientation_consistent(mesh):
    art, _ = one_step(mesh)
    faces = mesh_faces(art.M_next)
    assert oracles.is_closed(faces)
    # every directed edge appears once: consistent orientation
    d = [(a, b) for f in faces for a, b in zip(f, f[1:] + f[:1])]
    assert len(d) == len(set(d))


def test_outward_orientation_kept():
    m = shapes.icosahedron()
    M, P = build_mesh_matrix(m), m.positions
    for _ in range(3):
        art = sqrt3.build(M)
        P = sqrt3.evaluate(art, P)
        M = art.M_next
        assert oracles.signed_volume(mesh_faces(M), P) > 0


@given(random_meshes(closed=True, triangles_only=True), st.integers(0, 2**31))
def test_affine_invariance(mesh, seed):
    r = np.random.default_rng(seed)
    A, t = r.normal(size=(3, 3)), r.normal(size=3)
    art, P1 = one_step(mesh)
    ref = P1 @ A.T + t
    assert np.abs(sqrt3.evaluate(art, mesh.positions @ A.T + t) - ref).max() <= 1e-9 * np.abs(ref).max()


def test_stencil_rows_partition_unity():
    art, _ = one_step(shapes.icosahedron())
    rows, _, vals = sqrt3.step_stencils(art)
    np.testing.assert_allclose(np.bincount(rows, weights=vals), 1.0, rtol=0, atol=1e-15)
