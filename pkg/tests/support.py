"""Shared test helpers: independent residual oracles and random mask growth."""

import numpy as np

from spherepart import exact


def ode_laplacian_residual(ell, m, parity, theta, phi, h=1e-3):
    """|Delta u - ell(ell+1) u| via 4th-order finite differences in theta.

    The azimuthal part is exact (the phi dependence is trig(m*phi)), so the
    residual only probes the colatitude profile; independent of how the
    harmonic itself is built.
    """
    idx = exact.HarmonicIndex(ell, m)

    def f(th):
        return exact.eval_real_harmonic(idx, parity, th, phi)

    d1 = (-f(theta + 2 * h) + 8 * f(theta + h) - 8 * f(theta - h) + f(theta - 2 * h)) / (12 * h)
    d2 = (
        -f(theta + 2 * h)
        + 16 * f(theta + h)
        - 30 * f(theta)
        + 16 * f(theta - h)
        - f(theta - 2 * h)
    ) / (12 * h * h)
    u = f(theta)
    lap = -(d2 + np.cos(theta) / np.sin(theta) * d1 - m * m * u / np.sin(theta) ** 2)
    return np.abs(lap - ell * (ell + 1.0) * u)


def stencil_residual(values_fn, lam, theta, phi, h):
    """5-point spherical-coordinate Laplacian residual at (theta, phi) points."""
    u0 = values_fn(theta, phi)
    d2phi = (values_fn(theta, phi + h) - 2 * u0 + values_fn(theta, phi - h)) / h**2
    up, um = values_fn(theta + h, phi), values_fn(theta - h, phi)
    sp, sm = np.sin(theta + 0.5 * h), np.sin(theta - 0.5 * h)
    dtheta = (sp * (up - u0) - sm * (u0 - um)) / (h**2 * np.sin(theta))
    lap = -(d2phi / np.sin(theta) ** 2 + dtheta)
    return np.abs(lap - lam * u0)


def random_connected_mask(mesh, rng, area_fraction):
    """Grow a random edge-connected triangle set to the requested area fraction."""
    adj = mesh.triangle_adjacency
    areas = mesh.triangle_areas
    target = area_fraction * areas.sum()
    mask = np.zeros(mesh.n_triangles, dtype=bool)
    start = int(rng.integers(mesh.n_triangles))
    mask[start] = True
    total = areas[start]
    frontier = set(adj.indices[adj.indptr[start] : adj.indptr[start + 1]])
    while total < target and frontier:
        pick = int(rng.choice(sorted(frontier)))
        frontier.discard(pick)
        if mask[pick]:
            continue
        mask[pick] = True
        total += areas[pick]
        for nbr in adj.indices[adj.indptr[pick] : adj.indptr[pick + 1]]:
            if not mask[nbr]:
                frontier.add(int(nbr))
    return mask


def great_circle_deviation(points):
    """Max geodesic distance of unit points from their best-fit great circle."""
    _, _, vt = np.linalg.svd(np.asarray(points))
    normal = vt[-1]
    return float(np.abs(np.arcsin(np.clip(points @ normal, -1.0, 1.0))).max())
