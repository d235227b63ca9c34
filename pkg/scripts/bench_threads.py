"""Single-worker vs multi-worker evaluation throughput.

Run in a fresh process: the numba pool size is fixed at import, so
NUMBA_NUM_THREADS must be set before ``alsub`` is imported. Prints a JSON
object with the best evaluation time per worker count and the speedup.
"""

import argparse
import json
import os
import sys
import time


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--mode", default="static", choices=["static", "single-spmv"])
    p.add_argument("--major", type=int, default=100)
    p.add_argument("--minor", type=int, default=52)
    p.add_argument("--reps", type=int, default=3)
    args = p.parse_args(argv)
    os.environ.setdefault("NUMBA_NUM_THREADS", str(args.workers))

    import numpy as np

    from alsub import shapes
    from alsub.meshio import build_mesh_matrix
    from alsub.parallel import cpu_count, max_threads, threads
    from alsub.pipeline import SubdivisionConfig, Subdivider

    mesh = shapes.torus(args.major, args.minor)
    sub = Subdivider(build_mesh_matrix(mesh), SubdivisionConfig("cc", args.levels, args.mode))
    best, digests = {}, {}
    for n in (1, args.workers):
        with threads(n) as used:
            sub.evaluate(mesh.positions)  # warm-up
            times = []
            for _ in range(args.reps):
                t0 = time.perf_counter()
                P = sub.evaluate(mesh.positions)
                times.append(time.perf_counter() - t0)
            best[used] = min(times)
            digests[used] = P.tobytes() == sub.evaluate(mesh.positions).tobytes()
    lo, hi = min(best), max(best)
    rec = {"faces_in": mesh.n_faces, "faces_out": sub.M_out.cols, "levels": args.levels,
           "mode": args.mode, "cpus": cpu_count(), "pool": max_threads(),
           "seconds": {str(k): v for k, v in best.items()},
           "speedup": best[lo] / best[hi] if hi != lo else 1.0,
           "workers_used": hi, "repeatable": all(digests.values()),
           "checksum": float(np.abs(P).sum())}
    print(json.dumps(rec))
    return 0


if __name__ == "__main__":
    sys.exit(main())
