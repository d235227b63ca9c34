import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from alsub import catmull_clark as cc
from alsub import creases as cr
from alsub import shapes
from alsub.errors import CreaseError
from alsub.meshio import INF_SHARPNESS, CreaseSet, IndexedMesh, build_mesh_matrix
from alsub.sparse import mesh_faces

VERTICAL = [(0, 4), (1, 5), (2, 6), (3, 7)]
CUBE_EDGES = [(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7)] + VERTICAL


def cmat(entries, n):
    return cr.crease_matrix(CreaseSet(entries), n)


def step(mesh_or_M, P, C):
    M = build_mesh_matrix(mesh_or_M) if isinstance(mesh_or_M, IndexedMesh) else mesh_or_M
    art = cc.build(M, C)
    return art, cc.evaluate(art, P)


def test_crease_valency_examples():
    np.testing.assert_array_equal(cr.crease_valency(cmat([(0, 1, 1), (1, 2, 1)], 5)),
                                  [1, 2, 1, 0, 0])
    np.testing.assert_array_equal(cr.crease_valency(cr.crease_matrix(None, 3)), [0, 0, 0])
    C = cmat([(a, b, 2.0) for a, b in CUBE_EDGES], 8)
    np.testing.assert_array_equal(cr.crease_valency(C), [3] * 8)


def test_vertex_sharpness_examples():
    C = cmat([(0, 1, 2.0), (0, 2, 4.0)], 3)
    s = cr.vertex_sharpness(C, cr.crease_valency(C))
    np.testing.assert_allclose(s, [3.0, 2.0, 4.0])
    C = cmat([(a, b, 2.0) for a, b in CUBE_EDGES], 8)
    np.testing.assert_array_equal(cr.vertex_sharpness(C, cr.crease_valency(C)), [2.0] * 8)
    C = cmat([(0, 1, 1.0), (0, 3, 2.0), (0, 4, 3.0)], 8)
    assert cr.vertex_sharpness(C, cr.crease_valency(C))[0] == pytest.approx(2.0)
    assert cr.vertex_sharpness(C, cr.crease_valency(C))[5] == 0.0


@given(st.lists(st.tuples(st.sampled_from(CUBE_EDGES), st.floats(0.01, 10.0)), max_size=12,
                unique_by=lambda t: t[0]))
def test_fused_valency_sharpness_matches_separate(entries):
    C = cmat([(a, b, s) for (a, b), s in entries], 8)
    k, s = cr.valency_and_sharpness(C)
    np.testing.assert_array_equal(k, cr.crease_valency(C))
    np.testing.assert_allclose(s, cr.vertex_sharpness(C, k), rtol=1e-15)


def test_crease_matrix_symmetric_and_zero_free():
    C = cmat([(0, 1, 2.0), (1, 2, 0.0)], 3)
    assert C.nnz == 2
    np.testing.assert_array_equal(C.to_dense(), C.to_dense().T)


def test_crease_on_non_edge_is_rejected(cube):
    with pytest.raises(CreaseError, match=r"\(0, 6\)"):
        cc.build(build_mesh_matrix(cube), cmat([(0, 6, 1.0)], 8))


def test_zero_sharpness_is_smooth(cube):
    _, smooth = step(cube, cube.positions, None)
    _, zero = step(cube, cube.positions, cmat([(a, b, 0.0) for a, b in CUBE_EDGES], 8))
    assert smooth.tobytes() == zero.tobytes()


def test_half_sharp_edge_blends(cube):
    _, smooth = step(cube, cube.positions, None)
    art, P1 = step(cube, cube.positions, cmat([(0, 1, 0.5)], 8))
    row = art.n_verts + art.n_faces + int(art.edges.ids([0], [1])[0])
    mid = 0.5 * (cube.positions[0] + cube.positions[1])
    np.testing.assert_allclose(P1[row], 0.5 * mid + 0.5 * smooth[row], rtol=1e-15)
    # only that edge-point changes: both endpoints have crease valency 1
    changed = np.flatnonzero(np.any(P1 != smooth, axis=1))
    np.testing.assert_array_equal(changed, [row])


def test_fractional_vertex_sharpness_blends(cube):
    _, smooth = step(cube, cube.positions, None)
    _, P1 = step(cube, cube.positions, cmat([(0, 1, 0.5), (0, 3, 0.5)], 8))
    P = cube.positions
    rule = 0.75 * P[0] + 0.125 * (P[1] + P[3])
    np.testing.assert_allclose(P1[0], 0.5 * smooth[0] + 0.5 * rule, rtol=1e-15)


def test_corner_rule_for_three_creases(cube):
    _, P1 = step(cube, cube.positions, cmat([(0, 1, 3.0), (0, 3, 3.0), (0, 4, 3.0)], 8))
    np.testing.assert_array_equal(P1[0], cube.positions[0])


def test_vertical_infinite_creases(cube):
    C = cmat([(a, b, np.inf) for a, b in VERTICAL], 8)
    _, smooth = step(cube, cube.positions, None)
    art, P1 = step(cube, cube.positions, C)
    for a, b in VERTICAL:
        e = art.n_verts + art.n_faces + int(art.edges.ids([a], [b])[0])
        np.testing.assert_array_equal(P1[e], 0.5 * (cube.positions[a] + cube.positions[b]))
    # each endpoint carries a single crease (a dart), so it keeps the smooth rule
    np.testing.assert_array_equal(P1[:8], smooth[:8])


def test_fully_creased_cube_edges_stay_on_cube_edges(cube):
    C = cmat([(a, b, np.inf) for a, b in CUBE_EDGES], 8)
    M, P = build_mesh_matrix(cube), cube.positions
    for _ in range(3):
        art, P = step(M, P, C)
        M, C = art.M_next, art.C_next
    on = np.flatnonzero(np.diff(C.col_offsets) > 0)
    assert on.size == 8 + 12 * 7
    # a point lies on a cube edge iff at least two coordinates are 0 or 1
    at_face = (np.isclose(P[on], 0, atol=1e-15) | np.isclose(P[on], 1, atol=1e-15)).sum(1)
    assert np.all(at_face >= 2)


def test_inherit_examples():
    # chain 0-1-2-3 on a strip of quads, sigma 4 everywhere
    g = shapes.grid(3, 1)
    C = cmat([(0, 1, 4.0), (1, 2, 4.0), (2, 3, 4.0)], g.n_verts)
    art = cc.build(build_mesh_matrix(g), C)
    e12 = art.n_verts + art.n_faces + int(art.edges.ids([1], [2])[0])
    assert art.C_next.get(1, e12) == 3.0 and art.C_next.get(e12, 2) == 3.0
    # ends of the chain use sigma_j itself: (4 + 12)/4 - 1 = 3 as well
    e01 = art.n_verts + art.n_faces + int(art.edges.ids([0], [1])[0])
    assert art.C_next.get(0, e01) == 3.0

    C = cmat([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], g.n_verts)
    assert cc.build(build_mesh_matrix(g), C).C_next.nnz == 0

    C = cmat([(1, 2, 2.0)], g.n_verts)
    art = cc.build(build_mesh_matrix(g), C)
    e = art.n_verts + art.n_faces + int(art.edges.ids([1], [2])[0])
    assert art.C_next.get(1, e) == 1.0 and art.C_next.get(2, e) == 1.0
    assert art.C_next.nnz == 4


def test_inherit_uses_neighbour_sharpness():
    g = shapes.grid(3, 1)
    C = cmat([(0, 1, 2.0), (1, 2, 4.0), (2, 3, 6.0)], g.n_verts)
    art = cc.build(build_mesh_matrix(g), C)
    e = art.n_verts + art.n_faces + int(art.edges.ids([1], [2])[0])
    assert art.C_next.get(1, e) == pytest.approx(0.25 * (2 + 12) - 1)
    assert art.C_next.get(2, e) == pytest.approx(0.25 * (12 + 6) - 1)


def test_infinite_creases_stay_infinite_and_are_not_averaged(cube):
    C = cmat([(0, 1, np.inf), (1, 2, 2.0)], 8)
    art = cc.build(build_mesh_matrix(cube), C)
    e01 = art.n_verts + art.n_faces + int(art.edges.ids([0], [1])[0])
    e12 = art.n_verts + art.n_faces + int(art.edges.ids([1], [2])[0])
    assert art.C_next.get(0, e01) == INF_SHARPNESS and art.C_next.get(1, e01) == INF_SHARPNESS
    # the finite crease meets only an infinite one at vertex 1: treated as a chain end
    assert art.C_next.get(1, e12) == pytest.approx(1.0)


@given(st.lists(st.tuples(st.sampled_from(CUBE_EDGES), st.floats(0.0, 6.0)), max_size=12,
                unique_by=lambda t: t[0]), st.integers(1, 3))
def test_inherited_matrix_invariants(entries, levels):
    cube = shapes.cube()
    C = cmat([(a, b, s) for (a, b), s in entries], 8)
    M = build_mesh_matrix(cube)
    top = max([s for _, s in entries], default=0.0)
    for _ in range(levels):
        art = cc.build(M, C)
        M, C = art.M_next, art.C_next
        np.testing.assert_array_equal(C.to_dense(), C.to_dense().T)
        assert np.all(C.values > 0)
        assert C.values.max(initial=0.0) <= top
        edges = oracles.edge_incidence(mesh_faces(M))
        cols = C.column_indices()
        for i, j in zip(C.row_indices, cols):
            assert (min(i, j), max(i, j)) in edges


@given(st.lists(st.tuples(st.sampled_from(CUBE_EDGES), st.sampled_from([0.3, 1.0, 2.5, np.inf])),
                min_size=1, max_size=12, unique_by=lambda t: t[0]))
def test_matches_brute_force_crease_step(entries):
    cube = shapes.cube()
    C = cmat([(a, b, s) for (a, b), s in entries], 8)
    _, P1 = step(cube, cube.positions, C)
    ref_creases = {(a, b): min(s, INF_SHARPNESS) for (a, b), s in entries}
    _, ref = oracles.catmull_clark(cube.faces, cube.positions, ref_creases)
    np.testing.assert_allclose(P1, ref, rtol=1e-13, atol=1e-15)
