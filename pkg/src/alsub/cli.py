"""Command-line front end: ``alsub subdivide`` and ``alsub bench``.

Exit codes: 0 success, 1 input error, 2 scheme constraint violation.
Statistics are newline-delimited JSON (see ``stats_schema.json``), appended
to ``--stats FILE`` or printed to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import resource
import sys
import time
from pathlib import Path

import numpy as np

from . import adaptive as ad
from . import refine
from .creases import crease_matrix
from .errors import AlsubError, DimensionError, MeshError, SchemeConstraintError
from .meshio import build_mesh_matrix, load_creases, load_obj, write_obj
from .parallel import get_threads, set_threads
from .pipeline import (MODES, SCHEMES, SubdivisionConfig, Subdivider, output_hash,
                       permute_creases, subdivide)
from .reorder import permute_mesh, rcm_order

log = logging.getLogger("alsub")

SCHEMA_PATH = Path(__file__).with_name("stats_schema.json")


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text())


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("input", help="input OBJ file")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="cc")
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--mode", choices=MODES, default="dynamic")
    p.add_argument("--creases", metavar="FILE", help="crease file ('c i j sigma' lines)")
    p.add_argument("--adaptive", action="store_true",
                   help="refine only around irregular vertices (Catmull-Clark)")
    p.add_argument("--regular-valence", default="4,3,2", metavar="I,B,C",
                   help="regular interior, boundary and corner valences (default 4,3,2)")
    p.add_argument("--reorder", action="store_true", help="RCM-relabel the input first")
    p.add_argument("--deterministic", action="store_true",
                   help="fixed work partitioning; outputs are byte-identical across runs")
    p.add_argument("--threads", type=int, default=None, help="worker count (default: all)")
    p.add_argument("--stats", metavar="FILE", help="append NDJSON statistics to FILE")
    p.add_argument("--cache", metavar="FILE",
                   help="refinement-matrix cache (single-spmv mode)")
    p.add_argument("-o", "--output", metavar="FILE", help="output OBJ")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alsub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("subdivide", help="subdivide a mesh and write the result")
    _add_common(p)
    b = sub.add_parser("bench", help="repeat the pipeline and report timings")
    _add_common(b)
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--warmup", type=int, default=1, help="untimed runs before measuring")
    return parser


class _Input:
    def __init__(self, args):
        self.path = args.input
        self.mesh = load_obj(args.input)
        self.M = build_mesh_matrix(self.mesh)
        self.C = None
        if args.creases:
            creases = load_creases(args.creases, self.mesh)
            self.C = crease_matrix(creases, self.mesh.n_verts)


def _regular(text: str) -> ad.RegularValence:
    try:
        i, b, c = (int(x) for x in text.split(","))
    except ValueError:
        raise MeshError(f"--regular-valence expects three integers, got {text!r}") from None
    return ad.RegularValence(i, b, c)


def _validate_args(args):
    if args.levels < 0:
        raise MeshError("--levels must be >= 0")
    if args.adaptive and args.scheme != "cc":
        raise SchemeConstraintError("adaptive subdivision is available for Catmull-Clark only")
    if args.cache and args.mode != "single-spmv":
        raise MeshError("--cache requires --mode single-spmv")
    if getattr(args, "reps", 1) < 1:
        raise MeshError("--reps must be >= 1")


def _peak_rss_kb() -> int:
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)


def _base_record(args, inp: _Input) -> dict:
    return {
        "record": "run", "command": args.command, "input": str(args.input),
        "scheme": args.scheme, "mode": args.mode, "levels": args.levels,
        "adaptive": bool(args.adaptive), "reorder": bool(args.reorder),
        "faces_in": inp.M.cols, "verts_in": inp.M.rows,
        "threads": get_threads(), "deterministic": bool(args.deterministic),
    }


def _run_uniform(args, inp: _Input, R_cached=None):
    """Returns (M_out, P_out, build_ms, eval_ms, peak_bytes, R, cache_hit)."""
    cfg = SubdivisionConfig(args.scheme, args.levels, args.mode, args.reorder, args.deterministic)
    if args.mode == "dynamic":
        res = subdivide(inp.M, inp.mesh.positions, cfg, inp.C)
        return res.M, res.P, res.build_ms, res.eval_ms, res.peak_bytes, None, False
    sub = Subdivider(inp.M, cfg, inp.C, R=R_cached)
    t0 = time.perf_counter()
    P = sub.evaluate(inp.mesh.positions)
    eval_ms = 1e3 * (time.perf_counter() - t0)
    return sub.M_out, P, sub.build_ms, eval_ms, sub.nbytes() + P.nbytes, sub.R, sub.cache_hit


def _run_adaptive(args, inp: _Input):
    M, P, C = inp.M, inp.mesh.positions, inp.C
    if args.reorder:
        perm = rcm_order(M)
        M, P = permute_mesh(M, P, perm)
        C = permute_creases(C, perm)
    t0 = time.perf_counter()
    result = ad.adaptive_subdivide(M, P, args.levels, C=C, regular=_regular(args.regular_valence),
                                   single_spmv=args.mode == "single-spmv")
    total = 1e3 * (time.perf_counter() - t0)
    eval_ms = 0.0
    if args.mode == "single-spmv":
        t1 = time.perf_counter()
        for lv in result.levels:
            lv.P = refine.eval_single_spmv(lv.R, P)
        eval_ms = 1e3 * (time.perf_counter() - t1)
    peak = max(lv.P.nbytes + 8 * lv.M.nnz for lv in result.levels)
    return result, total, eval_ms, peak


def _adaptive_paths(out: str, k: int) -> tuple[Path, Path]:
    p = Path(out)
    stem = p.with_suffix("") if p.suffix.lower() == ".obj" else p
    return Path(f"{stem}.L{k}.obj"), Path(f"{stem}.L{k}.remap")


def write_remap(level: ad.AdaptiveLevel, path) -> None:
    """One line per vertex: ``v <parent vertex>``, ``f <parent face>`` or
    ``e <a> <b>``, numbered in the previous level's file."""
    tags = {ad.ORIGIN_VERTEX: "v", ad.ORIGIN_FACE: "f", ad.ORIGIN_EDGE: "e"}
    lines = [f"# level {level.level}: parent of each vertex in level {level.level - 1}"]
    for o, a, b in zip(level.origin.tolist(), level.origin_a.tolist(), level.origin_b.tolist()):
        lines.append(f"e {a} {b}" if o == ad.ORIGIN_EDGE else f"{tags[o]} {a}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _emit(args, records):
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if args.stats:
        with open(args.stats, "a", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _one_run(args, inp: _Input, R_cached=None):
    """Run once; returns (record, writer, R, cache_hit); ``writer`` emits the output files."""
    rec = _base_record(args, inp)
    if args.adaptive:
        result, build_ms, eval_ms, peak = _run_adaptive(args, inp)
        final = result.final
        rec.update(build_ms=build_ms, eval_ms=eval_ms, total_ms=build_ms + eval_ms,
                   faces_out=final.n_faces, verts_out=final.n_verts, peak_bytes=int(peak),
                   level_faces=[lv.n_faces for lv in result.levels],
                   level_verts=[lv.n_verts for lv in result.levels],
                   hash=output_hash(final.M, final.P))

        def writer():
            for lv in result.levels:
                obj, remap = _adaptive_paths(args.output, lv.level)
                write_obj((lv.M, lv.P), obj)
                if lv.level > 0:
                    write_remap(lv, remap)
        return rec, writer, None, False
    M, P, build_ms, eval_ms, peak, R, hit = _run_uniform(args, inp, R_cached)
    rec.update(build_ms=build_ms, eval_ms=eval_ms, total_ms=build_ms + eval_ms,
               faces_out=M.cols, verts_out=M.rows, peak_bytes=int(peak),
               hash=output_hash(M, P))

    def writer():
        write_obj((M, P), args.output)
    return rec, writer, R, hit


def _load_cache(args):
    if not args.cache or not Path(args.cache).exists():
        return None
    try:
        return refine.load(args.cache)
    except MeshError as exc:
        log.warning("ignoring cache: %s", exc)
        return None


def cmd_subdivide(args) -> int:
    inp = _Input(args)
    cached = _load_cache(args)
    rec, writer, R, hit = _one_run(args, inp, cached)
    if args.cache:
        rec["cache"] = "hit" if hit else "miss"
        if not hit and R is not None:
            refine.save(R, args.cache)
    if args.output:
        writer()
    rec["peak_rss_kb"] = _peak_rss_kb()
    _emit(args, [rec])
    return 0


def cmd_bench(args) -> int:
    inp = _Input(args)
    records = []
    if args.mode != "dynamic" and not args.adaptive:
        # build once, evaluate repeatedly
        cfg = SubdivisionConfig(args.scheme, args.levels, args.mode, args.reorder, args.deterministic)
        sub = Subdivider(inp.M, cfg, inp.C, R=_load_cache(args))
        for _ in range(args.warmup):
            sub.evaluate(inp.mesh.positions)
        for rep in range(args.reps):
            t0 = time.perf_counter()
            P = sub.evaluate(inp.mesh.positions)
            eval_ms = 1e3 * (time.perf_counter() - t0)
            rec = _base_record(args, inp)
            rec.update(rep=rep, build_ms=sub.build_ms, eval_ms=eval_ms,
                       total_ms=sub.build_ms + eval_ms, faces_out=sub.M_out.cols,
                       verts_out=sub.M_out.rows, peak_bytes=sub.nbytes() + P.nbytes,
                       hash=output_hash(sub.M_out, P))
            records.append(rec)
        last_writer = lambda: write_obj((sub.M_out, P), args.output)  # noqa: E731
    else:
        for _ in range(args.warmup):
            _one_run(args, inp)
        last_writer = None
        for rep in range(args.reps):
            rec, last_writer, _, _ = _one_run(args, inp)
            rec["rep"] = rep
            records.append(rec)
    if args.output and last_writer is not None:
        last_writer()
    for r in records:
        r["peak_rss_kb"] = _peak_rss_kb()
    ev = np.array([r["eval_ms"] for r in records])
    agg = {
        "record": "aggregate", "command": "bench", "input": str(args.input),
        "scheme": args.scheme, "mode": args.mode, "levels": args.levels, "reps": args.reps,
        "build_ms_mean": float(np.mean([r["build_ms"] for r in records])),
        "eval_ms_mean": float(ev.mean()), "eval_ms_min": float(ev.min()),
        "eval_ms_std": float(ev.std()),
        "total_ms_mean": float(np.mean([r["total_ms"] for r in records])),
        "faces_out": records[-1]["faces_out"], "verts_out": records[-1]["verts_out"],
        "peak_bytes": max(r["peak_bytes"] for r in records),
        "threads": get_threads(), "deterministic": bool(args.deterministic),
        "hashes_identical": len({r["hash"] for r in records}) == 1,
    }
    _emit(args, records + [agg])
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="alsub: %(levelname)s: %(message)s")
    try:
        _validate_args(args)
        if args.threads is not None:
            set_threads(args.threads)
        if args.command == "subdivide":
            return cmd_subdivide(args)
        return cmd_bench(args)
    except SchemeConstraintError as exc:
        print(f"alsub: scheme constraint: {exc}", file=sys.stderr)
        return 2
    except (MeshError, DimensionError, OSError) as exc:
        print(f"alsub: input error: {exc}", file=sys.stderr)
        return 1
    except AlsubError as exc:
        print(f"alsub: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
