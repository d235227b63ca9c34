import numpy as np
import pytest
from hypothesis import given

import oracles
from conftest import random_meshes, scrambled
from alsub import catmull_clark as cc
from alsub import reorder, shapes
from alsub.errors import DimensionError
from alsub.meshio import IndexedMesh, build_mesh_matrix
from alsub.sparse import from_triplets, mesh_faces


def path_adjacency(labels):
    """Adjacency of a path visiting ``labels`` in order."""
    a, b = np.array(labels[:-1]), np.array(labels[1:])
    n = len(labels)
    return from_triplets(np.concatenate([a, b]), np.concatenate([b, a]),
                         np.ones(2 * a.size), (n, n))


def test_path_graph_becomes_consecutive():
    adj = path_adjacency([2, 0, 1])
    perm = reorder.rcm_order(None, adj)
    inv = reorder.inverse_permutation(perm)
    # relabeled path: consecutive ids along the path
    new = [int(inv[v]) for v in [2, 0, 1]]
    assert sorted(abs(x - y) for x, y in zip(new, new[1:])) == [1, 1]


def test_single_vertex_is_identity():
    adj = from_triplets([], [], [], (1, 1))
    assert reorder.rcm_order(None, adj).tolist() == [0]


def test_tie_rules_on_path():
    # path 0-1-2-3: ends have degree 1; the start is the lowest id among them (0)
    perm = reorder.rcm_order(None, path_adjacency([0, 1, 2, 3]))
    assert perm.tolist() == [3, 2, 1, 0]


def test_components_in_min_index_order():
    # two disjoint triangles, the second listed with lower ids
    m = IndexedMesh(np.zeros((6, 3)), [[3, 4, 5], [0, 1, 2]])
    perm = reorder.rcm_order(build_mesh_matrix(m))
    # Cuthill-McKee visits component {0,1,2} first; the reversal puts it last
    assert sorted(perm[3:].tolist()) == [0, 1, 2]
    assert sorted(perm[:3].tolist()) == [3, 4, 5]


def test_banded_grid_not_worse():
    g = shapes.grid(12)
    M = build_mesh_matrix(g)
    before = reorder.bandwidth(M)
    Mp, _ = reorder.permute_mesh(M, g.positions, reorder.rcm_order(M))
    assert reorder.bandwidth(Mp) <= before


def test_shuffled_grid_bandwidth_drops(rng):
    g = scrambled(shapes.grid(64), rng, rotate=False)
    M = build_mesh_matrix(g)
    before = reorder.bandwidth(M)
    Mp, _ = reorder.permute_mesh(M, g.positions, reorder.rcm_order(M))
    after = reorder.bandwidth(Mp)
    assert after < before
    assert after == oracles.bandwidth(mesh_faces(Mp))
    assert after <= 2 * 65


@given(random_meshes())
def test_bandwidth_matches_brute_force(mesh):
    assert reorder.bandwidth(build_mesh_matrix(mesh)) == oracles.bandwidth(mesh.faces)


@given(random_meshes())
def test_rcm_is_a_permutation(mesh):
    perm = reorder.rcm_order(build_mesh_matrix(mesh))
    assert sorted(perm.tolist()) == list(range(mesh.n_verts))


def test_permute_mesh_contract(rng):
    m = shapes.mixed_polygons()
    M = build_mesh_matrix(m)
    perm = rng.permutation(m.n_verts)
    Mp, Pp = reorder.permute_mesh(M, m.positions, perm)
    inv = reorder.inverse_permutation(perm)
    faces = mesh_faces(Mp)
    # same faces, relabeled, cyclic order kept; columns sorted by min new id
    assert oracles.canonical_faces(faces) == oracles.canonical_faces(
        [[int(inv[v]) for v in f] for f in m.faces])
    mins = [min(f) for f in faces]
    assert mins == sorted(mins)
    np.testing.assert_array_equal(Pp, m.positions[perm])
    for f_new in faces:
        np.testing.assert_array_equal(Pp[f_new], m.positions[[int(perm[v]) for v in f_new]])


def test_identity_and_reversal(cube):
    M = build_mesh_matrix(cube)
    Mi, Pi = reorder.permute_mesh(M, cube.positions, np.arange(8))
    assert oracles.canonical_faces(mesh_faces(Mi)) == oracles.canonical_faces(cube.faces)
    np.testing.assert_array_equal(Pi, cube.positions)
    q = IndexedMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2, 3]])
    Mq, Pq = reorder.permute_mesh(build_mesh_matrix(q), q.positions, np.arange(4)[::-1])
    f = mesh_faces(Mq)[0]
    # the face visits the same points in the same cyclic order
    seq = [tuple(p) for p in Pq[f]]
    ref = [tuple(p) for p in q.positions]
    k = seq.index(ref[0])
    assert seq[k:] + seq[:k] == ref


def test_bad_permutations(cube):
    M = build_mesh_matrix(cube)
    with pytest.raises(DimensionError):
        reorder.permute_mesh(M, cube.positions, [0, 0, 1, 2, 3, 4, 5, 6])
    with pytest.raises(DimensionError):
        reorder.permute_mesh(M, cube.positions, np.arange(7))


@given(random_meshes())
def test_subdivision_commutes_with_relabeling(mesh):
    M = build_mesh_matrix(mesh)
    Mp, Pp = reorder.permute_mesh(M, mesh.positions, reorder.rcm_order(M))
    a = cc.evaluate(cc.build(M), mesh.positions)
    b = cc.evaluate(cc.build(Mp), Pp)
    assert a.shape == b.shape
    d = np.abs(a[:, None, :] - b[None, :, :]).max(-1)
    match = d.argmin(1)
    assert np.all(d[np.arange(len(a)), match] <= 1e-12)
    assert len(set(match.tolist())) == len(a)
