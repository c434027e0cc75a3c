"""Triangle meshes on the unit sphere, partition constructors, and antipodal maps.

Two mesh families are provided: geodesic icospheres (quasi-uniform, used for
generic partitions and closed-surface spectra) and structured latitude-longitude
grids (used when a boundary curve must lie exactly on mesh edges, e.g. meridians
or latitude circles).  A lat-long grid can carry a "seam": the meridian at
azimuth pi, flagged edge-path along which sign-flipped couplings realize
antiperiodic boundary conditions in the azimuthal variable.

Partitions are triangle labelings (never vertex labelings), so boundary
extraction and Dirichlet masks are unambiguous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .errors import CapacityError, MeshSymmetryError

UNIT_NORM_TOL = 1e-12
ANTIPODAL_MATCH_TOL = 1e-9
SEAM_AZIMUTH_TOL = 1e-9
MAX_ICOSPHERE_LEVEL = 8

_GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTICES = np.array(
    [
        [-1.0, _GOLDEN, 0.0],
        [1.0, _GOLDEN, 0.0],
        [-1.0, -_GOLDEN, 0.0],
        [1.0, -_GOLDEN, 0.0],
        [0.0, -1.0, _GOLDEN],
        [0.0, 1.0, _GOLDEN],
        [0.0, -1.0, -_GOLDEN],
        [0.0, 1.0, -_GOLDEN],
        [_GOLDEN, 0.0, -1.0],
        [_GOLDEN, 0.0, 1.0],
        [-_GOLDEN, 0.0, -1.0],
        [-_GOLDEN, 0.0, 1.0],
    ]
)

_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [5, 4, 9], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)

# Vertices of a regular tetrahedron inscribed in the unit sphere.
TETRAHEDRON_VERTICES = np.array(
    [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
) / np.sqrt(3.0)


def _normalize_rows(v):
    return v / np.linalg.norm(v, axis=1)[:, None]


def geodesic_distance(a, b):
    """Great-circle distance between unit vectors; dot product clamped to [-1, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.sum(a * b, axis=-1)
    return np.arccos(np.clip(d, -1.0, 1.0))


def spherical_angles(points):
    """Return (theta, phi) with theta in [0, pi], phi in (-pi, pi]."""
    p = np.asarray(points, dtype=float)
    theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    phi = np.arctan2(p[..., 1], p[..., 0])
    return theta, phi


def rotation_matrix(axis, angle):
    """Rotation by `angle` about `axis` (Rodrigues formula)."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    kx = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * (kx @ kx)


class TriangleMesh:
    """Closed, oriented triangulation with all vertices on the unit sphere.

    Optionally carries a seam: an ordered pole-to-pole vertex path along the
    azimuth-pi meridian, used for antiperiodic assembly.
    """

    def __init__(self, vertices, triangles, seam_vertices=None, pole_indices=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.seam_vertices = (
            None if seam_vertices is None else np.asarray(seam_vertices, dtype=np.int64)
        )
        self.pole_indices = None if pole_indices is None else tuple(int(i) for i in pole_indices)
        self._validate()

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def has_seam(self):
        return self.seam_vertices is not None

    @cached_property
    def _edge_data(self):
        tri = self.triangles
        nf = tri.shape[0]
        e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        tid = np.tile(np.arange(nf), 3)
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        tid = tid[order]
        if len(e) % 2 or not np.array_equal(e[0::2], e[1::2]):
            raise ValueError("mesh is not a closed edge-manifold")
        edges = e[0::2]
        if len(np.unique(edges, axis=0)) != len(edges):
            raise ValueError("mesh has an edge shared by more than two triangles")
        return edges, np.column_stack([tid[0::2], tid[1::2]])

    @property
    def edges(self):
        """(E, 2) vertex index pairs, each sorted, each shared by two triangles."""
        return self._edge_data[0]

    @property
    def edge_triangles(self):
        """(E, 2) incident triangle ids aligned with `edges`."""
        return self._edge_data[1]

    @cached_property
    def triangle_areas(self):
        r = self.vertices[self.triangles]
        cross = np.cross(r[:, 1] - r[:, 0], r[:, 2] - r[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    @cached_property
    def triangle_centroids(self):
        """Flat centroids projected to the unit sphere."""
        c = self.vertices[self.triangles].mean(axis=1)
        return _normalize_rows(c)

    @cached_property
    def triangle_adjacency(self):
        et = self.edge_triangles
        nf = self.n_triangles
        ones = np.ones(len(et), dtype=bool)
        adj = sparse.coo_matrix((ones, (et[:, 0], et[:, 1])), shape=(nf, nf))
        return (adj + adj.T).tocsr()

    @cached_property
    def vertex_adjacency(self):
        e = self.edges
        nv = self.n_vertices
        ones = np.ones(len(e), dtype=bool)
        adj = sparse.coo_matrix((ones, (e[:, 0], e[:, 1])), shape=(nv, nv))
        return (adj + adj.T).tocsr()

    @cached_property
    def max_edge_length(self):
        """Largest geodesic edge length."""
        e = self.edges
        return float(geodesic_distance(self.vertices[e[:, 0]], self.vertices[e[:, 1]]).max())

    @property
    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_triangles

    def _validate(self):
        norms = np.linalg.norm(self.vertices, axis=1)
        if np.abs(norms - 1.0).max() > UNIT_NORM_TOL:
            raise ValueError("vertices are not on the unit sphere")
        if self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices:
            raise ValueError("triangle index out of range")
        if self.euler_characteristic != 2:
            raise ValueError(f"Euler characteristic {self.euler_characteristic}, expected 2")
        if self.triangle_areas.min() <= 0.0:
            raise ValueError("mesh contains a degenerate triangle")
        if self.seam_vertices is not None:
            self._validate_seam()

    def _validate_seam(self):
        seam = self.seam_vertices
        if self.pole_indices is None or len(self.pole_indices) != 2:
            raise ValueError("seamed mesh must record its two pole vertices")
        if seam[0] != self.pole_indices[0] or seam[-1] != self.pole_indices[1]:
            raise ValueError("seam must run pole to pole")
        if len(np.unique(seam)) != len(seam):
            raise ValueError("seam path revisits a vertex")
        _, phi = spherical_angles(self.vertices[seam[1:-1]])
        if np.abs(np.abs(phi) - np.pi).max() > SEAM_AZIMUTH_TOL:
            raise ValueError("seam vertices must lie on the azimuth-pi meridian")
        edge_set = {tuple(e) for e in self.edges}
        for a, b in zip(seam[:-1], seam[1:]):
            if (min(a, b), max(a, b)) not in edge_set:
                raise ValueError("seam is not an edge path")


@dataclass
class PartitionLabeling:
    """Per-triangle labels in {1..k}; every label used at least once."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.k < 1:
            raise ValueError("k must be positive")
        used = np.unique(self.labels)
        if used.min() < 1 or used.max() > self.k:
            raise ValueError("labels outside {1..k}")
        if len(used) != self.k:
            raise ValueError("every label in {1..k} must be used")

    def mask(self, label):
        return self.labels == label


def _orient_outward(vertices, triangles):
    """Flip triangle winding so all normals point away from the origin."""
    tris = np.array(triangles, dtype=np.int64)
    r = vertices[tris]
    n = np.cross(r[:, 1] - r[:, 0], r[:, 2] - r[:, 0])
    inward = np.einsum("ij,ij->i", r.mean(axis=1), n) < 0
    tris[inward] = tris[inward][:, [0, 2, 1]]
    return tris


def _subdivide(vertices, triangles):
    verts = [v for v in vertices]
    midpoint = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in midpoint:
            m = 0.5 * (verts[a] + verts[b])
            m = m / np.linalg.norm(m)
            midpoint[key] = len(verts)
            verts.append(m)
        return midpoint[key]

    out = np.empty((4 * len(triangles), 3), dtype=np.int64)
    for i, (a, b, c) in enumerate(triangles):
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out[4 * i : 4 * i + 4] = [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.array(verts), out


def subdivide_mesh(mesh: TriangleMesh) -> TriangleMesh:
    """One 4-to-1 refinement with midpoints projected to the sphere.

    Children of triangle t occupy rows 4t..4t+3 of the refined mesh, so a
    per-triangle labeling prolongs as np.repeat(labels, 4).  Seam metadata is
    not carried over.
    """
    verts, faces = _subdivide(mesh.vertices, mesh.triangles)
    return TriangleMesh(verts, _orient_outward(verts, faces))


def build_icosphere(level: int) -> TriangleMesh:
    """Icosahedron subdivided `level` times, vertices projected to the sphere.

    V = 10 * 4**level + 2, F = 20 * 4**level.
    """
    if level < 0:
        raise ValueError("subdivision level must be non-negative")
    if level > MAX_ICOSPHERE_LEVEL:
        raise CapacityError(f"icosphere level {level} exceeds guard {MAX_ICOSPHERE_LEVEL}")
    verts = _normalize_rows(_ICO_VERTICES)
    faces = _ICO_FACES
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    return TriangleMesh(verts, _orient_outward(verts, faces))


def _ring_colatitudes(n_theta, pinned):
    """Northern ring colatitudes, uniform unless one ring is pinned.

    With `pinned` (a colatitude in (0, pi/2]), the nearest ring index is moved
    exactly onto it and the rings on either side are spaced linearly, so a cap
    boundary at that colatitude lies on mesh edges.
    """
    half = n_theta // 2
    if pinned is None:
        return np.pi * np.arange(1, half + 1) / n_theta
    if not 0.0 < pinned <= 0.5 * np.pi:
        raise ValueError("pinned colatitude must lie in (0, pi/2]")
    target = int(round(pinned / np.pi * n_theta))
    target = max(1, min(half, target))
    rings = np.empty(half)
    rings[: target] = pinned * np.arange(1, target + 1) / target
    if target < half:
        rings[target:] = pinned + (0.5 * np.pi - pinned) * np.arange(1, half - target + 1) / (
            half - target
        )
    return rings


def build_latlong_mesh(n_theta: int, n_phi: int, with_seam: bool = False,
                       pinned_colatitude: float | None = None) -> TriangleMesh:
    """Structured latitude-longitude triangulation with pole fans.

    The northern hemisphere is triangulated with a fixed quad diagonal; the
    southern half is its image under x -> -x, so the mesh is antipodally
    symmetric by construction.  Column n_phi/2 is the exact azimuth-pi
    meridian; with `with_seam` it is recorded as the seam path.  With
    `pinned_colatitude`, one vertex ring (and its mirror) is placed exactly at
    that colatitude.
    """
    if n_theta < 4 or n_theta % 2:
        raise ValueError("n_theta must be even and at least 4")
    if n_phi < 8 or n_phi % 2:
        raise ValueError("n_phi must be even and at least 8")
    half = n_phi // 2
    nv = 2 + (n_theta - 1) * n_phi

    def vid(i, j):
        return 2 + (i - 1) * n_phi + (j % n_phi)

    def amap(v):
        if v < 2:
            return 1 - v
        i, j = divmod(v - 2, n_phi)
        return vid(n_theta - (i + 1), j + half)

    verts = np.zeros((nv, 3))
    verts[0] = (0.0, 0.0, 1.0)
    verts[1] = (0.0, 0.0, -1.0)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    rings = _ring_colatitudes(n_theta, pinned_colatitude)
    for i in range(1, n_theta // 2 + 1):
        th = rings[i - 1]
        row = np.column_stack(
            [np.sin(th) * np.cos(phi), np.sin(th) * np.sin(phi), np.full(n_phi, np.cos(th))]
        )
        verts[vid(i, 0) : vid(i, 0) + n_phi] = row
    cols = np.arange(n_phi)
    for i in range(n_theta // 2 + 1, n_theta):
        src = n_theta - i
        verts[vid(i, 0) + cols] = -verts[vid(src, 0) + (cols + half) % n_phi]

    north = []
    for j in range(n_phi):
        north.append((0, vid(1, j), vid(1, j + 1)))
    for i in range(1, n_theta // 2):
        for j in range(n_phi):
            a, b = vid(i, j), vid(i, j + 1)
            c, d = vid(i + 1, j), vid(i + 1, j + 1)
            north.append((a, b, d))
            north.append((a, d, c))
    south = [(amap(u), amap(w), amap(v)) for (u, v, w) in north]
    tris = _orient_outward(verts, np.array(north + south, dtype=np.int64))

    seam = poles = None
    if with_seam:
        seam = np.array([0] + [vid(i, half) for i in range(1, n_theta)] + [1], dtype=np.int64)
        poles = (0, 1)
    return TriangleMesh(verts, tris, seam_vertices=seam, pole_indices=poles)


def build_seamed_mesh(level: int) -> TriangleMesh:
    """Seamed lat-long grid at dyadic resolution: (8 * 2**level) x (16 * 2**level)."""
    if level < 2:
        raise ValueError("seamed mesh level must be at least 2")
    n_theta = 8 * 2**level
    if n_theta > 8 * 2**MAX_ICOSPHERE_LEVEL:
        raise CapacityError("seamed mesh level exceeds capacity guard")
    return build_latlong_mesh(n_theta, 2 * n_theta, with_seam=True)


def region_area(mesh: TriangleMesh, mask) -> float:
    """Sum of flat triangle areas over the member triangles (steradians)."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (mesh.n_triangles,):
        raise ValueError("mask length does not match triangle count")
    return float(mesh.triangle_areas[mask].sum())


def polar_cap_mask(mesh: TriangleMesh, theta0: float):
    """Triangles whose centroid lies in the cap theta < theta0 around +z."""
    theta, _ = spherical_angles(mesh.triangle_centroids)
    return theta < theta0


def make_lune_partition(mesh: TriangleMesh, k: int, rotation=None) -> PartitionLabeling:
    """Partition into k equal azimuth sectors of width 2*pi/k.

    Triangle t gets label j when the azimuth of rotation^-1 applied to its
    centroid falls in [2*pi*(j-1)/k, 2*pi*j/k).  k=2 gives two hemispheres,
    k=3 the three-meridian partition.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    c = mesh.triangle_centroids
    if rotation is not None:
        c = c @ np.asarray(rotation, dtype=float)
    phi = np.mod(np.arctan2(c[:, 1], c[:, 0]), 2.0 * np.pi)
    labels = np.minimum((phi * k / (2.0 * np.pi)).astype(np.int64), k - 1) + 1
    return PartitionLabeling(labels, k)


def make_tetrahedral_partition(mesh: TriangleMesh) -> PartitionLabeling:
    """Voronoi cells (by geodesic distance) of the four tetrahedron vertices."""
    ang = geodesic_distance(
        mesh.triangle_centroids[:, None, :], TETRAHEDRON_VERTICES[None, :, :]
    )
    return PartitionLabeling(np.argmin(ang, axis=1) + 1, 4)


def antipodal_vertex_map(mesh: TriangleMesh):
    """Permutation sending each vertex to the vertex at its antipode."""
    tree = cKDTree(mesh.vertices)
    dist, idx = tree.query(-mesh.vertices, k=1)
    if dist.max() > ANTIPODAL_MATCH_TOL:
        raise MeshSymmetryError("mesh has a vertex with no antipodal partner")
    if not np.array_equal(idx[idx], np.arange(mesh.n_vertices)):
        raise MeshSymmetryError("antipodal vertex matching is not an involution")
    return idx


def antipodal_triangle_map(mesh: TriangleMesh):
    """Permutation sending each triangle to the triangle at its antipode."""
    vmap = antipodal_vertex_map(mesh)
    key = {tuple(t): i for i, t in enumerate(np.sort(mesh.triangles, axis=1))}
    image = np.sort(vmap[mesh.triangles], axis=1)
    out = np.empty(mesh.n_triangles, dtype=np.int64)
    for i, t in enumerate(image):
        j = key.get(tuple(t))
        if j is None:
            raise MeshSymmetryError("triangulation is not antipodally symmetric")
        out[i] = j
    if not np.array_equal(out[out], np.arange(mesh.n_triangles)):
        raise MeshSymmetryError("antipodal triangle matching is not an involution")
    return out


def inversion_image(mesh: TriangleMesh, labeling):
    """Transport a labeling or mask through the antipodal map x -> -x.

    Exact as a permutation of triangles; applying it twice is the identity.
    """
    tmap = antipodal_triangle_map(mesh)
    if isinstance(labeling, PartitionLabeling):
        return PartitionLabeling(labeling.labels[tmap], labeling.k)
    arr = np.asarray(labeling)
    if arr.shape != (mesh.n_triangles,):
        raise ValueError("labeling length does not match triangle count")
    return arr[tmap]


def export_obj(mesh: TriangleMesh, path):
    """ASCII OBJ with deterministic ordering and full float precision."""
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def export_labels_json(path, labels=None, k=None, masks=None):
    """Sidecar JSON keyed by triangle index (arrays are index-aligned)."""
    payload = {}
    if labels is not None:
        payload["k"] = int(k) if k is not None else int(np.max(labels))
        payload["labels"] = [int(x) for x in np.asarray(labels)]
    if masks is not None:
        payload["masks"] = {
            str(name): [bool(x) for x in np.asarray(m)] for name, m in masks.items()
        }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
