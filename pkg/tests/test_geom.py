import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spherepart import geom
from spherepart.errors import CapacityError, MeshSymmetryError

FOUR_PI = 4.0 * np.pi


def test_icosphere_base_counts():
    mesh = geom.build_icosphere(0)
    assert mesh.n_vertices == 12
    assert mesh.n_triangles == 20


def test_icosphere_level_one_counts():
    mesh = geom.build_icosphere(1)
    assert mesh.n_vertices == 42
    assert mesh.n_triangles == 80


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_icosphere_vertex_count_formula(level):
    mesh = geom.build_icosphere(level)
    assert mesh.n_vertices == 10 * 4**level + 2
    assert mesh.euler_characteristic == 2


def test_icosphere_area_converges(ico3):
    assert abs(ico3.triangle_areas.sum() - FOUR_PI) / FOUR_PI < 0.005


def test_icosphere_capacity_guard():
    with pytest.raises(CapacityError):
        geom.build_icosphere(9)


def test_mesh_invariants(ico4, grid32):
    for mesh in (ico4, grid32):
        assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-12)
        assert mesh.triangle_areas.min() > 0
        assert mesh.euler_characteristic == 2


def test_seamed_mesh_level_two(grid32):
    # 32 x 64 grid: one seam vertex per interior ring plus the two poles
    assert len(grid32.seam_vertices) == 33
    assert grid32.seam_vertices[0] == grid32.pole_indices[0]
    assert grid32.seam_vertices[-1] == grid32.pole_indices[1]
    _, phi = geom.spherical_angles(grid32.vertices[grid32.seam_vertices[1:-1]])
    assert np.abs(np.abs(phi) - np.pi).max() < 1e-9


def test_seamed_mesh_min_level():
    with pytest.raises(ValueError):
        geom.build_seamed_mesh(1)


def test_lune_partition_equal_areas(ico4):
    labeling = geom.make_lune_partition(ico4, 3)
    target = FOUR_PI / 3.0
    for j in range(1, 4):
        area = geom.region_area(ico4, labeling.mask(j))
        assert abs(area - target) / target < 0.02


def test_lune_partition_hemispheres(ico4):
    labeling = geom.make_lune_partition(ico4, 2)
    for j in (1, 2):
        area = geom.region_area(ico4, labeling.mask(j))
        assert abs(area - 2.0 * np.pi) / (2.0 * np.pi) < 0.02


def test_lune_partition_rotation_permutes_areas(ico4):
    rot = geom.rotation_matrix([0.0, 0.0, 1.0], 2.0 * np.pi / 3.0)
    plain = geom.make_lune_partition(ico4, 3)
    turned = geom.make_lune_partition(ico4, 3, rotation=rot)
    # a one-sector turn permutes the labels cyclically (1->3, 2->1, 3->2)
    assert np.array_equal(turned.labels, (plain.labels + 1) % 3 + 1)


def test_lune_partition_k_guard(ico3):
    with pytest.raises(ValueError):
        geom.make_lune_partition(ico3, 1)


def test_tetrahedral_partition_areas(ico4):
    labeling = geom.make_tetrahedral_partition(ico4)
    assert labeling.k == 4
    for j in range(1, 5):
        area = geom.region_area(ico4, labeling.mask(j))
        assert abs(area - np.pi) / np.pi < 0.02


def test_region_area_full_and_empty(ico3):
    full = np.ones(ico3.n_triangles, dtype=bool)
    assert abs(geom.region_area(ico3, full) - FOUR_PI) / FOUR_PI < 0.005
    assert geom.region_area(ico3, ~full) == 0.0


def test_region_area_hemisphere_latlong():
    mesh = geom.build_latlong_mesh(64, 128)
    mask = mesh.triangle_centroids[:, 2] > 0
    assert abs(geom.region_area(mesh, mask) - 2.0 * np.pi) / (2.0 * np.pi) < 0.003


def test_region_area_additive(ico4):
    labeling = geom.make_lune_partition(ico4, 5)
    total = sum(geom.region_area(ico4, labeling.mask(j)) for j in range(1, 6))
    assert total == pytest.approx(ico4.triangle_areas.sum(), abs=1e-12)


def test_inversion_hemisphere_complement(ico4):
    mask = ico4.triangle_centroids[:, 2] > 0
    image = geom.inversion_image(ico4, mask)
    # no centroid sits exactly on the equatorial plane of this mask's axis?
    on_plane = np.isclose(ico4.triangle_centroids[:, 2], 0.0, atol=1e-15)
    assert not np.any(image[~on_plane] & mask[~on_plane])
    assert_allclose(
        geom.region_area(ico4, image), geom.region_area(ico4, mask), rtol=1e-12
    )


def test_inversion_is_involution(ico4, grid32):
    for mesh in (ico4, grid32):
        labeling = geom.make_lune_partition(mesh, 3)
        once = geom.inversion_image(mesh, labeling)
        twice = geom.inversion_image(mesh, once)
        assert np.array_equal(twice.labels, labeling.labels)


def test_inversion_maps_lune_partition_to_lune_partition(grid96):
    from spherepart import analysis

    labeling = geom.make_lune_partition(grid96, 3)
    image = geom.inversion_image(grid96, labeling)
    # areas preserved label by label (isometry)
    for j in range(1, 4):
        assert_allclose(
            geom.region_area(grid96, image.mask(j)),
            geom.region_area(grid96, labeling.mask(j)),
            rtol=1e-12,
        )
    # the boundary of the image is the image of the boundary
    tmap = geom.antipodal_triangle_map(grid96)
    et = grid96.edge_triangles
    before = labeling.labels[et[:, 0]] != labeling.labels[et[:, 1]]
    after = image.labels[et[:, 0]] != image.labels[et[:, 1]]
    edge_key = {tuple(e): i for i, e in enumerate(grid96.edges)}
    vmap = geom.antipodal_vertex_map(grid96)
    mapped = np.zeros_like(before)
    for e in grid96.edges[before]:
        a, b = sorted((vmap[e[0]], vmap[e[1]]))
        mapped[edge_key[(a, b)]] = True
    assert np.array_equal(after, mapped)
    # and the image is again a three-sector partition: same topology
    bg = analysis.extract_boundary(grid96, image)
    assert sorted(bg.critical_points.values()) == [3, 3]
    assert bg.b1 == 1


def test_antipodal_map_rejects_asymmetric_mesh(ico3):
    verts = ico3.vertices.copy()
    # nudge one vertex along the sphere so its antipode is unmatched
    v = verts[7]
    axis = np.cross(v, [0.0, 0.0, 1.0])
    rot = geom.rotation_matrix(axis, 1e-4)
    verts[7] = rot @ v
    broken = geom.TriangleMesh(verts, ico3.triangles)
    with pytest.raises(MeshSymmetryError):
        geom.antipodal_vertex_map(broken)


def test_geodesic_distance_clamps():
    v = np.array([0.6, 0.8, 0.0])
    assert geom.geodesic_distance(v, v) == 0.0
    assert geom.geodesic_distance(v, -v) == pytest.approx(np.pi)


def test_subdivide_mesh_child_blocks(ico3):
    fine = geom.subdivide_mesh(ico3)
    assert fine.n_triangles == 4 * ico3.n_triangles
    labeling = geom.make_lune_partition(ico3, 4)
    prolonged = np.repeat(labeling.labels, 4)
    native = geom.make_lune_partition(fine, 4)
    # children inherit the parent's sector except right at sector boundaries
    assert (prolonged == native.labels).mean() > 0.97


def test_partition_labeling_validation():
    with pytest.raises(ValueError):
        geom.PartitionLabeling(np.array([1, 1, 1]), 2)  # label 2 unused
    with pytest.raises(ValueError):
        geom.PartitionLabeling(np.array([0, 1]), 2)  # label 0 out of range


def test_obj_export_roundtrip(tmp_path, ico3):
    path = tmp_path / "mesh.obj"
    geom.export_obj(ico3, path)
    lines = path.read_text().splitlines()
    nv = sum(1 for ln in lines if ln.startswith("v "))
    nf = sum(1 for ln in lines if ln.startswith("f "))
    assert (nv, nf) == (ico3.n_vertices, ico3.n_triangles)
    # deterministic bytes
    path2 = tmp_path / "mesh2.obj"
    geom.export_obj(ico3, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_labels_sidecar(tmp_path, ico3):
    labeling = geom.make_lune_partition(ico3, 3)
    path = tmp_path / "labels.json"
    geom.export_labels_json(path, labels=labeling.labels, k=3)
    payload = json.loads(path.read_text())
    assert payload["k"] == 3
    assert payload["labels"][:5] == [int(x) for x in labeling.labels[:5]]
    assert len(payload["labels"]) == ico3.n_triangles


def test_pinned_colatitude_ring():
    theta0 = float(np.arccos(1.0 / np.sqrt(3.0)))
    mesh = geom.build_latlong_mesh(64, 128, pinned_colatitude=theta0)
    theta, _ = geom.spherical_angles(mesh.vertices)
    assert np.isclose(theta, theta0, atol=1e-12).sum() == 128
    geom.antipodal_triangle_map(mesh)  # still antipodally symmetric
