"""Numerical toolkit for spectral energies of sphere partitions.

Submodules:
    geom      meshes, partition constructors, antipodal maps, exports
    exact     closed-form spectra, spherical harmonics, cap constants
    fem       Laplace-Beltrami finite elements and eigensolvers
    bounds    convexity-based lower-bound constants
    analysis  partition evaluation, topology validators, optimizer
    cli       batch command-line front end
"""

from . import analysis, bounds, exact, fem, geom
from .errors import (
    AssemblyError,
    CapacityError,
    ConvergenceError,
    DegeneratePartitionError,
    DegenerateVectorError,
    DomainTooThinError,
    MeshSymmetryError,
    SymmetryClassError,
)

__all__ = [
    "analysis",
    "bounds",
    "exact",
    "fem",
    "geom",
    "AssemblyError",
    "CapacityError",
    "ConvergenceError",
    "DegeneratePartitionError",
    "DegenerateVectorError",
    "DomainTooThinError",
    "MeshSymmetryError",
    "SymmetryClassError",
]

__version__ = "0.1.0"
