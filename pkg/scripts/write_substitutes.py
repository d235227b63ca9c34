"""Write the substitute test meshes as OBJ files."""

import argparse
from pathlib import Path

from alsub import shapes
from alsub.meshio import write_obj

MESHES = {
    "cube": shapes.cube,
    "fox_substitute": shapes.fox_substitute,
    "goblet_substitute": shapes.goblet_substitute,
    "torus_5k": lambda: shapes.torus(100, 52),
    "star5": lambda: shapes.star_patch(5, 4),
}


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("outdir", nargs="?", default="meshes")
    args = p.parse_args(argv)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, make in MESHES.items():
        m = make()
        write_obj(m, out / f"{name}.obj")
        print(f"{name}: {m.n_faces} faces, {m.n_verts} vertices")


if __name__ == "__main__":
    main()
