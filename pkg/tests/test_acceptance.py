"""Acceptance criteria, one test (and one summary line) each.

Every test records ``PASS``/``FAIL <name>: <detail>`` in the terminal summary
and prints it, then asserts.
"""

import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial import cKDTree

import oracles
from conftest import ACCEPTANCE_LINES, scrambled
from alsub import catmull_clark as cc
from alsub import creases as cr
from alsub import loop, refine, reorder, shapes, sqrt3
from alsub.meshio import CreaseSet, build_mesh_matrix
from alsub.pipeline import MODES, SubdivisionConfig, subdivide
from alsub.sparse import (EDGE_MAP, FACE_MAP, OPPOSITE_MAP, mesh_faces, spgemm_implicit_mesh,
                          spgemm_mapped)

ROOT = Path(__file__).resolve().parents[1]
SCHEMES = {"cc": cc, "loop": loop, "sqrt3": sqrt3}


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def timed_counts(factory, scheme, levels):
    mesh = factory()
    t0 = time.perf_counter()
    r = subdivide(build_mesh_matrix(mesh), mesh.positions, SubdivisionConfig(scheme, levels, "static"))
    return r.n_faces, r.n_verts, time.perf_counter() - t0


# 1. count reproduction -------------------------------------------------------

def test_counts_fox_sqrt3():
    f, v, s = timed_counts(shapes.fox_substitute, "sqrt3", 6)
    report("counts/fox-sqrt3-x6", f == 453_438 and s < 10,
           f"{f} faces (expected 453438), {v} vertices, {s:.2f} s")


def test_counts_goblet_loop():
    f, v, s = timed_counts(shapes.goblet_substitute, "loop", 6)
    report("counts/goblet-loop-x6", f == 4_194_304 and v == 2_096_650 and s < 10,
           f"{f} faces (expected 4194304), {v} vertices (expected 2096650), {s:.2f} s")


def test_counts_cube_cc():
    f, v, s = timed_counts(shapes.cube, "cc", 5)
    # V' = V + F + E and F' = sum of face orders, unrolled by hand
    F, V, E, S = 6, 8, 12, 24
    for _ in range(5):
        F, V, E, S = S, V + F + E, 2 * E + S, 4 * S
    report("counts/cube-cc-x5", f == 6144 == F and v == V and s < 10,
           f"{f} faces (expected 6144), {v} vertices (recurrence {V}), {s:.3f} s")


# 2. oracle equivalence ---------------------------------------------------------

def oracle_meshes(n=24, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        if k % 2:
            base = shapes.torus(int(rng.integers(3, 20)), int(rng.integers(3, 20)))
        else:
            base = shapes.grid(int(rng.integers(2, 25)), int(rng.integers(2, 25)))
        tri = [0.0, 0.4, 1.0][k % 3]
        m = scrambled(base, rng, triangulate=tri)
        if m.n_faces <= 1000:
            out.append(m)
    return out


def test_oracle_equivalence():
    meshes = oracle_meshes()
    checked = 0
    for m in meshes:
        M = build_mesh_matrix(m)
        maps = [EDGE_MAP, FACE_MAP]
        closed_tris = oracles.is_closed(m.faces) and all(len(f) == 3 for f in m.faces)
        if closed_tris:
            maps.append(OPPOSITE_MAP)
        for cmap in maps:
            a, b = spgemm_implicit_mesh(M, cmap), spgemm_mapped(M, cmap)
            assert a.equal(b), (m.n_faces, cmap)
            checked += 1
    report("oracle-equivalence", len(meshes) >= 20,
           f"{len(meshes)} random meshes <= 1k faces, {checked} implicit/generic products identical")


# 3. mode equivalence -----------------------------------------------------------

def mode_cases():
    cube = shapes.cube()
    crease = cr.crease_matrix(CreaseSet([(0, 1, np.inf), (1, 2, 1.5), (2, 3, 0.5),
                                         (4, 5, 2.0), (0, 4, 3.0)]), 8)
    return [
        ("cc-open", shapes.mixed_polygons(), None, "cc"),
        ("cc-star", shapes.star_patch(5, 2), None, "cc"),
        ("cc-creased", cube, crease, "cc"),
        ("loop", shapes.icosahedron(), None, "loop"),
        ("loop-torus", shapes.torus(6, 5, triangles=True), None, "loop"),
        ("sqrt3", shapes.octahedron(), None, "sqrt3"),
        ("sqrt3-torus", shapes.torus(6, 5, triangles=True), None, "sqrt3"),
    ]


def test_mode_equivalence():
    worst = 0.0
    runs = 0
    for name, mesh, C, scheme in mode_cases():
        M = build_mesh_matrix(mesh)
        for levels in range(1, 5):
            out = {mode: subdivide(M, mesh.positions, SubdivisionConfig(scheme, levels, mode), C)
                   for mode in MODES}
            ref = out["dynamic"].P
            scale = np.maximum(np.abs(ref), 1.0)
            for mode in ("static", "single-spmv"):
                assert mesh_faces(out[mode].M) == mesh_faces(out["dynamic"].M)
                worst = max(worst, float((np.abs(out[mode].P - ref) / scale).max()))
                runs += 1
    report("mode-equivalence", worst <= 1e-12,
           f"{runs} comparisons (cc with boundary and creases, loop, sqrt3, levels 1-4), "
           f"max relative difference {worst:.2e}")


# 4. hand-computed stencils -----------------------------------------------------

def test_hand_stencils():
    cube = shapes.cube()
    art = cc.build(build_mesh_matrix(cube))
    P1 = cc.evaluate(art, cube.positions)
    corner = P1[0]
    e01 = art.n_verts + art.n_faces + int(art.edges.ids([0], [1])[0])
    edge = P1[e01]
    ok = (np.abs(corner - 2 / 9).max() <= 1e-12
          and np.abs(edge - [0.5, 0.125, 0.125]).max() <= 1e-12
          and loop.loop_beta(6) == 1 / 16 and sqrt3.sqrt3_alpha(6) == 1 / 3)
    report("hand-stencils", ok,
           f"corner {corner.tolist()}, edge-point {edge.tolist()}, "
           f"beta(6)={float(loop.loop_beta(6))!r}, alpha(6)={float(sqrt3.sqrt3_alpha(6))!r}")


# 5. structural properties ------------------------------------------------------

def test_structural_properties():
    notes = []
    ok = True
    for m in [shapes.tetrahedron(), shapes.icosahedron(), shapes.torus(5, 4, triangles=True)]:
        M2 = sqrt3.build(sqrt3.build(build_mesh_matrix(m)).M_next).M_next
        ok &= M2.cols == 9 * m.n_faces
    notes.append("sqrt3 x2 = 9x faces")
    closed = {"cc": [shapes.cube(), shapes.torus(5, 4)],
              "loop": [shapes.icosahedron(), shapes.torus(5, 4, triangles=True)],
              "sqrt3": [shapes.tetrahedron(), shapes.torus(5, 4, triangles=True)]}
    worst = 0.0
    for scheme, meshes in closed.items():
        mod = SCHEMES[scheme]
        for m in meshes:
            M, mats = build_mesh_matrix(m), []
            for _ in range(3):
                art = mod.build(M)
                mats.append(refine.build_step_matrix(art, mod.step_stencils(art)))
                M = art.M_next
                ok &= oracles.is_closed(mesh_faces(M))
            worst = max(worst, float(np.abs(refine.compose(mats).row_sums() - 1).max()))
    for m in [shapes.mixed_polygons(), shapes.star_patch(5, 2)]:
        r = subdivide(build_mesh_matrix(m), m.positions, SubdivisionConfig("cc", 3, "single-spmv"))
        worst = max(worst, float(np.abs(r.R.row_sums() - 1).max()))
    ok &= worst <= 1e-9
    notes += ["closed stays closed (cc/loop/sqrt3 x3)", f"max |row sum - 1| = {worst:.1e}"]
    report("structural", ok, ", ".join(notes))


# 6. crease limit ---------------------------------------------------------------

CUBE_EDGES = [(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7),
              (0, 4), (1, 5), (2, 6), (3, 7)]


def curve_step(pts):
    """Cubic B-spline curve rule on an open polyline with fixed endpoints."""
    pts = np.asarray(pts)
    out = [pts[0]]
    for k in range(1, len(pts)):
        out.append(0.5 * (pts[k - 1] + pts[k]))
        if k < len(pts) - 1:
            out.append(0.75 * pts[k] + 0.125 * (pts[k - 1] + pts[k + 1]))
        else:
            out.append(pts[k])
    return np.array(out)


def test_crease_limit():
    rng = np.random.default_rng(3)
    cube = shapes.cube()
    # a generic hexahedron so that the edge polylines are not evenly spaced after one step
    P0 = cube.positions @ (np.eye(3) + 0.2 * rng.normal(size=(3, 3))).T + 0.3 * rng.normal(size=(8, 3))
    C = cr.crease_matrix(CreaseSet([(a, b, np.inf) for a, b in CUBE_EDGES]), 8)
    M, P = build_mesh_matrix(cube), P0
    polylines = {e: [e[0], e[1]] for e in CUBE_EDGES}
    curves = {e: P0[list(e)] for e in CUBE_EDGES}
    for _ in range(4):
        art = cc.build(M, C)
        P = cc.evaluate(art, P)
        base = art.n_verts + art.n_faces
        for e, ids in polylines.items():
            mids = base + art.edges.ids(np.array(ids[:-1]), np.array(ids[1:]))
            new = [ids[0]]
            for k in range(1, len(ids)):
                new += [int(mids[k - 1]), ids[k]]
            polylines[e] = new
            curves[e] = curve_step(curves[e])
        M, C = art.M_next, art.C_next
    worst = max(float(np.abs(P[ids] - curves[e]).max()) for e, ids in polylines.items())

    smooth = subdivide(build_mesh_matrix(cube), P0, SubdivisionConfig("cc", 3, deterministic=True))
    zero = cr.crease_matrix(CreaseSet([(a, b, 0.0) for a, b in CUBE_EDGES]), 8)
    same = all(
        subdivide(build_mesh_matrix(cube), P0, SubdivisionConfig("cc", 3, mode, deterministic=True),
                  zero).P.tobytes()
        == subdivide(build_mesh_matrix(cube), P0, SubdivisionConfig("cc", 3, mode, deterministic=True)
                     ).P.tobytes()
        for mode in MODES)
    same &= smooth.P.tobytes() == subdivide(build_mesh_matrix(cube), P0,
                                            SubdivisionConfig("cc", 3, deterministic=True),
                                            zero).P.tobytes()
    report("crease-limit", worst <= 1e-12 and same,
           f"all-inf cube edges vs curve rule (4 levels): max difference {worst:.1e}; "
           f"all-zero creases bitwise equal to smooth in every mode: {same}")


# 7. reordering -----------------------------------------------------------------

def test_reordering():
    rng = np.random.default_rng(11)
    g = scrambled(shapes.grid(64), rng)
    M = build_mesh_matrix(g)
    before = reorder.bandwidth(M)
    perm = reorder.rcm_order(M)
    Mp, Pp = reorder.permute_mesh(M, g.positions, perm)
    after = reorder.bandwidth(Mp)
    worst = 0.0
    for scheme, mesh in [("cc", g), ("cc", shapes.star_patch(5, 3)),
                         ("loop", shapes.torus(7, 6, triangles=True))]:
        Mm = build_mesh_matrix(mesh)
        a = subdivide(Mm, mesh.positions, SubdivisionConfig(scheme, 2)).P
        b = subdivide(Mm, mesh.positions, SubdivisionConfig(scheme, 2, reorder=True)).P
        dist, idx = cKDTree(b).query(a, p=np.inf)
        assert len(set(idx.tolist())) == len(a)
        worst = max(worst, float(dist.max()))
    report("reordering", after < before and worst <= 1e-12,
           f"64x64 shuffled grid bandwidth {before} -> {after}; "
           f"relabeled subdivision point sets differ by {worst:.1e}")


# 8. performance ----------------------------------------------------------------

def run_script(args, env=None):
    out = subprocess.run([sys.executable, *args], cwd=ROOT, capture_output=True, text=True,
                         env={**os.environ, **(env or {})}, timeout=600, check=True)
    return out.stdout


def test_deterministic_bytes_across_runs(tmp_path):
    obj = tmp_path / "torus.obj"
    from alsub.meshio import write_obj
    write_obj(shapes.torus(40, 30), obj)
    hashes = []
    for _ in range(2):
        out = run_script(["-m", "alsub.cli", "subdivide", str(obj), "--levels", "3",
                          "--mode", "single-spmv", "--deterministic"],
                         {"NUMBA_NUM_THREADS": "4"})
        hashes.append(json.loads(out)["hash"])
    report("performance/deterministic-bytes", hashes[0] == hashes[1],
           f"two processes, 4-worker pool, hashes {hashes[0][:12]} / {hashes[1][:12]}")


@pytest.mark.slow
def test_parallel_speedup():
    rec = json.loads(run_script(["scripts/bench_threads.py", "--workers", "4", "--levels", "5"],
                                {"NUMBA_NUM_THREADS": "4"}))
    report("performance/speedup", rec["speedup"] >= 2.5 and rec["workers_used"] >= 4,
           f"cc level 5 on {rec['faces_in']} faces ({rec['faces_out']} out): "
           f"{rec['speedup']:.2f}x at {rec['workers_used']} workers vs 1 "
           f"(machine has {rec['cpus']} CPU)")
