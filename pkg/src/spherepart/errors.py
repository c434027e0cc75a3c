"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Requested discretization exceeds the built-in size guard."""


class MeshSymmetryError(ValueError):
    """Mesh is not antipodally symmetric (no vertex/triangle match under x -> -x)."""


class AssemblyError(ValueError):
    """Finite-element assembly failed (e.g. degenerate triangle)."""


class DomainTooThinError(ValueError):
    """Triangle mask has no interior vertex, so no Dirichlet problem exists."""


class DegenerateVectorError(ValueError):
    """Vertex vector is numerically zero everywhere; no sign structure."""


class SymmetryClassError(ValueError):
    """Vector is neither symmetric nor antisymmetric under the inversion map."""


class DegeneratePartitionError(RuntimeError):
    """A partition label emptied during optimization and could not be reseeded."""


class ConvergenceError(RuntimeError):
    """Eigensolver failed to reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
