"""Piecewise-linear Laplace-Beltrami finite elements on sphere meshes.

Cotangent stiffness on the flat triangles with a lumped (or optionally
consistent) mass matrix.  Seamed meshes are assembled with sign-flipped
couplings across the seam and pinned poles, which realizes the antiperiodic
azimuthal problem on a single copy of the sphere.  Dirichlet subdomain
problems restrict to interior vertices, i.e. standard conforming FEM on the
edge-aligned polygon covered by the mask, so eigenvalues converge from above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import (
    AssemblyError,
    ConvergenceError,
    DegenerateVectorError,
    DomainTooThinError,
)
from .geom import TriangleMesh, spherical_angles

DEFAULT_RESIDUAL_TOL = 1e-8
MIN_TRIANGLE_AREA = 1e-14
SOLVER_SEED = 20210828
CLUSTER_HEADROOM = 4  # extra pairs computed so multiplicity clusters are not cut
_DENSE_CUTOFF = 200


@dataclass
class EigenPair:
    """Eigenvalue with its mass-normalized per-vertex eigenvector."""

    eigenvalue: float
    eigenvector: np.ndarray
    residual: float


@dataclass
class NodalCount:
    """Number of strictly-signed connected components and per-vertex signs."""

    count: int
    signs: np.ndarray


def _seam_corner_signs(mesh):
    """Per-(triangle, corner) factors for antiperiodic seam coupling.

    A seam-vertex degree of freedom stores the limit value from the
    azimuth < pi side; triangles on the other side of the seam read the
    negated value.
    """
    signs = np.ones(mesh.triangles.shape, dtype=float)
    on_seam = np.zeros(mesh.n_vertices, dtype=bool)
    on_seam[mesh.seam_vertices] = True
    centroid = mesh.vertices[mesh.triangles].mean(axis=1)
    east = np.arctan2(centroid[:, 1], centroid[:, 0]) < 0.0
    flip = on_seam[mesh.triangles] & east[:, None]
    signs[flip] = -1.0
    return signs


def assemble(mesh: TriangleMesh, lumped: bool = True, antiperiodic: bool | None = None):
    """Stiffness and mass matrices for the mesh.

    With `antiperiodic` (default: on iff the mesh has a seam), couplings that
    cross the seam carry a factor -1 and the pole rows are pinned to zero
    (stiffness diagonal 1, mass diagonal 0).
    """
    if antiperiodic is None:
        antiperiodic = mesh.has_seam
    if antiperiodic and not mesh.has_seam:
        raise ValueError("antiperiodic assembly requires a seamed mesh")

    tris = mesh.triangles
    r = mesh.vertices[tris]
    areas = mesh.triangle_areas
    if areas.min() < MIN_TRIANGLE_AREA:
        raise AssemblyError("degenerate triangle in mesh")

    signs = _seam_corner_signs(mesh) if antiperiodic else np.ones(tris.shape)

    rows, cols, vals = [], [], []
    mrows, mcols, mvals = [], [], []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        # half-cotangent of the angle at corner i couples corners j and k
        w = 0.5 * np.einsum("ij,ij->i", r[:, j] - r[:, i], r[:, k] - r[:, i]) / (2.0 * areas)
        sj, sk = signs[:, j], signs[:, k]
        vj, vk = tris[:, j], tris[:, k]
        rows += [vj, vk, vj, vk]
        cols += [vk, vj, vj, vk]
        vals += [-w * sj * sk, -w * sj * sk, w, w]
        if not lumped:
            mrows += [vj, vk, vj]
            mcols += [vk, vj, vj]
            mvals += [areas / 12.0 * sj * sk, areas / 12.0 * sj * sk, areas / 6.0]

    n = mesh.n_vertices
    row = np.concatenate(rows)
    col = np.concatenate(cols)
    val = np.concatenate(vals)

    fixed = None
    if antiperiodic:
        fixed = np.zeros(n, dtype=bool)
        fixed[list(mesh.pole_indices)] = True
        keep = ~(fixed[row] | fixed[col])
        row, col, val = row[keep], col[keep], val[keep]
        row = np.concatenate([row, np.flatnonzero(fixed)])
        col = np.concatenate([col, np.flatnonzero(fixed)])
        val = np.concatenate([val, np.ones(fixed.sum())])
    stiffness = sparse.coo_matrix((val, (row, col)), shape=(n, n)).tocsr()

    if lumped:
        diag = np.zeros(n)
        np.add.at(diag, tris.ravel(), np.repeat(areas / 3.0, 3))
        if fixed is not None:
            diag[fixed] = 0.0
        mass = sparse.diags(diag).tocsr()
    else:
        mrow = np.concatenate(mrows)
        mcol = np.concatenate(mcols)
        mval = np.concatenate(mvals)
        if fixed is not None:
            keep = ~(fixed[mrow] | fixed[mcol])
            mrow, mcol, mval = mrow[keep], mcol[keep], mval[keep]
        mass = sparse.coo_matrix((mval, (mrow, mcol)), shape=(n, n)).tocsr()
    return stiffness, mass


def solve_smallest(stiffness, mass, count: int, tol: float = DEFAULT_RESIDUAL_TOL,
                   sigma: float = -1.0, seed: int = SOLVER_SEED):
    """Smallest `count` eigenpairs of the symmetric pencil (stiffness, mass).

    Shift-invert with sparse factorization at `sigma` (use 0 for Dirichlet
    problems, -1 for closed surfaces so the zero mode is handled); computes
    `count` + 4 pairs internally so multiplicity clusters are resolved.
    Deterministic: the start vector comes from a fixed seed.  Rows with zero
    mass diagonal (pinned vertices) are excluded from the start vector and
    forced to zero in the output.
    """
    if count < 1 or count > 30:
        raise ValueError("count must be in 1..30")
    n = stiffness.shape[0]
    k_int = count + CLUSTER_HEADROOM
    mdiag = mass.diagonal()
    pinned = np.flatnonzero(mdiag == 0.0)

    if n <= max(_DENSE_CUTOFF, k_int + 2):
        if len(pinned):
            raise ValueError("dense path does not support pinned vertices")
        lam, vec = scipy.linalg.eigh(
            np.asarray(stiffness.todense()), np.asarray(mass.todense())
        )
        lam, vec = lam[:count], vec[:, :count]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        v0[pinned] = 0.0
        try:
            lam, vec = eigsh(stiffness, k=min(k_int, n - 1), M=mass, sigma=sigma,
                             which="LM", v0=v0)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc
        order = np.argsort(lam)[:count]
        lam, vec = lam[order], vec[:, order]

    pairs = []
    for i in range(count):
        u = vec[:, i].copy()
        u[pinned] = 0.0
        bu = mass @ u
        nrm = np.sqrt(abs(u @ bu))
        u /= nrm
        bu = mass @ u
        res = float(np.linalg.norm(stiffness @ u - lam[i] * bu) / np.linalg.norm(bu))
        if res > tol:
            raise ConvergenceError(
                f"eigenpair {i} residual {res:.3e} exceeds tolerance {tol:.1e}",
                residual=res,
            )
        value = float(lam[i])
        if -1e-8 < value < 0.0:
            value = 0.0
        pairs.append(EigenPair(value, u, res))
    return pairs


def interior_vertices(mesh: TriangleMesh, mask):
    """Vertices all of whose incident triangles belong to the mask."""
    mask = np.asarray(mask, dtype=bool)
    free = np.ones(mesh.n_vertices, dtype=bool)
    outside = mesh.triangles[~mask]
    if len(outside):
        free[np.unique(outside)] = False
    return free


def domain_ground_state(mesh: TriangleMesh, mask, operators=None,
                        tol: float = DEFAULT_RESIDUAL_TOL) -> EigenPair:
    """Smallest Dirichlet eigenpair of the subdomain covered by the mask.

    The problem is restricted to interior vertices and the eigenvector is
    extended by zero, so the reported energy is that of the edge-aligned
    polygon spanned by the member triangles.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask selects no triangles")
    if operators is None:
        operators = assemble(mesh, antiperiodic=False)
    stiffness, mass = operators
    free = interior_vertices(mesh, mask)
    if not free.any():
        raise DomainTooThinError("mask has no interior vertex")
    if free.all():
        pair = solve_smallest(stiffness, mass, 1, tol=tol, sigma=-1.0)[0]
        return pair
    idx = np.flatnonzero(free)
    kff = stiffness[idx][:, idx]
    mff = mass[idx][:, idx]
    pair = solve_smallest(kff, mff, 1, tol=tol, sigma=0.0)[0]
    full = np.zeros(mesh.n_vertices)
    full[idx] = pair.eigenvector
    return EigenPair(pair.eigenvalue, full, pair.residual)


def signed_components(mesh: TriangleMesh, selector):
    """Connected components of the selected vertex set under mesh edges.

    Returns (count, labels) where labels is per-vertex, -1 outside the set.
    """
    selector = np.asarray(selector, dtype=bool)
    full = np.full(mesh.n_vertices, -1, dtype=np.int64)
    idx = np.flatnonzero(selector)
    if len(idx) == 0:
        return 0, full
    sub = mesh.vertex_adjacency[idx][:, idx]
    ncomp, comp = csgraph.connected_components(sub, directed=False)
    full[idx] = comp
    return ncomp, full


def nodal_domains(mesh: TriangleMesh, vector, eps_rel: float = 1e-6) -> NodalCount:
    """Count sign domains of a vertex vector.

    Vertices with |u| below eps_rel * max|u| are treated as zero; the count is
    the number of connected components of the strictly positive plus the
    strictly negative vertex subgraphs.
    """
    v = np.asarray(vector, dtype=float)
    if v.shape != (mesh.n_vertices,):
        raise ValueError("vector length does not match vertex count")
    amax = np.abs(v).max()
    if amax == 0.0:
        raise DegenerateVectorError("vector is identically zero")
    cut = eps_rel * amax
    signs = np.zeros(mesh.n_vertices, dtype=np.int8)
    signs[v > cut] = 1
    signs[v < -cut] = -1
    if not signs.any():
        raise DegenerateVectorError("no vertex clears the zero threshold")
    n_plus, _ = signed_components(mesh, signs == 1)
    n_minus, _ = signed_components(mesh, signs == -1)
    return NodalCount(n_plus + n_minus, signs)


def sample_harmonic_on_mesh(mesh: TriangleMesh, idx, parity: str):
    """Vertex samples of a real harmonic, using atan2 azimuths in (-pi, pi]."""
    from .exact import eval_real_harmonic

    theta, phi = spherical_angles(mesh.vertices)
    return eval_real_harmonic(idx, parity, theta, phi)


def rayleigh_quotient(stiffness, mass, vector) -> float:
    v = np.asarray(vector, dtype=float)
    return float((v @ (stiffness @ v)) / (v @ (mass @ v)))


def dump_eigenvector_json(path, vector):
    """Sidecar JSON: vertex index -> value, index-aligned array."""
    import json

    with open(path, "w") as fh:
        json.dump({"values": [float(x) for x in np.asarray(vector)]}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
