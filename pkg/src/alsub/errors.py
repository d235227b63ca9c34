"""Exception hierarchy.

Input problems (bad files, malformed meshes) derive from :class:`MeshError`;
violations of a scheme's requirements derive from
:class:`SchemeConstraintError`. The CLI maps the former to exit code 1 and the
latter to exit code 2.
"""


class AlsubError(Exception):
    """Base class for all library errors."""


class DimensionError(AlsubError, ValueError):
    """Operand shapes do not agree."""


class NonFiniteError(AlsubError, ArithmeticError):
    """A kernel produced NaN or infinite values."""


class MeshError(AlsubError):
    """Invalid or unreadable input mesh / crease data."""


class ObjParseError(MeshError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class CreaseError(MeshError):
    """Crease data references a vertex pair that is not a mesh edge."""


class SchemeConstraintError(AlsubError):
    """The mesh does not satisfy a requirement of the chosen scheme."""


class NonManifoldError(SchemeConstraintError):
    pass


class BoundaryError(SchemeConstraintError):
    """Boundary present where the scheme requires a closed mesh, or a
    malformed boundary loop."""


class DegenerateVertexError(SchemeConstraintError):
    """Interior vertex with valence below 3."""
