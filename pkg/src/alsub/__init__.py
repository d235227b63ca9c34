"""Mesh subdivision (Catmull-Clark, Loop, sqrt(3)) as action-mapped sparse linear algebra."""

import os

import numba

# Prefer OpenMP / workqueue: probing an outdated TBB emits a warning on every
# first parallel launch. An explicit environment setting still wins.
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ and "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .errors import (AlsubError, BoundaryError, CreaseError, DegenerateVertexError,  # noqa: E402
                     DimensionError, MeshError, NonFiniteError, NonManifoldError, ObjParseError,
                     SchemeConstraintError)
from .meshio import (INF_SHARPNESS, CreaseSet, IndexedMesh, build_mesh_matrix,  # noqa: E402
                     load_creases, load_obj, validate_manifold, write_obj)
from .pipeline import (SubdivisionConfig, SubdivisionResult, Subdivider,  # noqa: E402
                       subdivide)
from .sparse import ReducedMeshMatrix, SparseMatrix  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "AlsubError", "BoundaryError", "CreaseError", "CreaseSet", "DegenerateVertexError",
    "DimensionError", "INF_SHARPNESS", "IndexedMesh", "MeshError", "NonFiniteError",
    "NonManifoldError", "ObjParseError", "ReducedMeshMatrix", "SchemeConstraintError",
    "SparseMatrix", "SubdivisionConfig", "SubdivisionResult", "Subdivider", "build_mesh_matrix",
    "load_creases", "load_obj", "subdivide", "validate_manifold", "write_obj",
]
