"""Reproduce the face/vertex counts of the reference runs on substitute meshes.

Prints one JSON line per run with the measured counts, the expected counts
and the wall time. Exit status is 1 if any count differs.
"""

import argparse
import json
import sys
import time

from alsub import shapes
from alsub.meshio import build_mesh_matrix
from alsub.pipeline import SubdivisionConfig, subdivide

# (name, mesh factory, scheme, levels, expected faces, expected vertices or None)
RUNS = [
    ("fox", shapes.fox_substitute, "sqrt3", 6, 453_438, None),
    ("goblet", shapes.goblet_substitute, "loop", 6, 4_194_304, 2_096_650),
    ("cube", shapes.cube, "cc", 5, 6144, None),
]


def run(name, factory, scheme, levels, mode="static"):
    mesh = factory()
    M = build_mesh_matrix(mesh)
    t0 = time.perf_counter()
    res = subdivide(M, mesh.positions, SubdivisionConfig(scheme, levels, mode))
    seconds = time.perf_counter() - t0
    return {"mesh": name, "faces_in": mesh.n_faces, "verts_in": mesh.n_verts, "scheme": scheme,
            "levels": levels, "faces": res.n_faces, "verts": res.n_verts, "seconds": seconds}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mode", default="static", choices=["dynamic", "static", "single-spmv"])
    args = p.parse_args(argv)
    ok = True
    for name, factory, scheme, levels, faces, verts in RUNS:
        rec = run(name, factory, scheme, levels, args.mode)
        rec["expected_faces"], rec["expected_verts"] = faces, verts
        rec["match"] = rec["faces"] == faces and (verts is None or rec["verts"] == verts)
        ok &= rec["match"]
        print(json.dumps(rec), flush=True)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
