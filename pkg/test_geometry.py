#!/usr/bin/env python3
"""
Convex geometry tests
Initial polygons, vertex reconstruction, support functions and Hausdorff distances
"""

import numpy as np
import pytest

from crystalflow.anisotropy import cosine_energy, discretize, isotropic_energy
from crystalflow.crystalline_flow import PolygonState, enclosed_area, side_lengths
from crystalflow.errors import ConfigurationError, DegenerateInitializationError, InvalidComparisonError
from crystalflow.geometry import (
    VertexPolygon,
    brute_force_hausdorff,
    curvature_errors,
    doubling_ratios,
    hausdorff_distance,
    initial_error_study,
    initial_polygon,
    polygon_support,
    side_splits,
    tangent_polygon,
    vertices_from_support,
)
from crystalflow.smooth_flow import SupportFunctionField, boundary_points, circle_field, ellipse_field


def square() -> PolygonState:
    return PolygonState(time=0.0, aniso=discretize(isotropic_energy(), 4), d=np.ones(4))


def test_initial_polygon_of_unit_circle():
    state = initial_polygon(circle_field(1.0, 256), 16, energy=isotropic_energy())
    np.testing.assert_allclose(state.d, 1.0)
    assert state.n_sides == 16


def test_initial_polygon_of_ellipse():
    state = initial_polygon(ellipse_field(2.0, 1.0, 256), 4, energy=isotropic_energy())
    np.testing.assert_allclose(state.d, [2.0, 1.0, 2.0, 1.0], atol=1e-14)


def test_initial_polygon_interpolates_off_grid():
    """N = 12 does not divide M = 256, so the support is interpolated"""
    state = initial_polygon(ellipse_field(2.0, 1.0, 256), 12, energy=isotropic_energy())
    angles = state.aniso.angles
    exact = np.sqrt((2.0 * np.cos(angles)) ** 2 + np.sin(angles) ** 2)
    np.testing.assert_allclose(state.d, exact, atol=1e-5)


def test_initial_polygon_needs_an_energy():
    with pytest.raises(ConfigurationError):
        initial_polygon(circle_field(1.0, 64), 8)


def test_degenerate_initial_polygon():
    u = np.ones(8)
    u[0] = 1.5
    with pytest.raises(DegenerateInitializationError):
        initial_polygon(SupportFunctionField(u=u), 8, energy=isotropic_energy())


def test_square_vertices():
    vertices = vertices_from_support(square()).vertices
    np.testing.assert_allclose(vertices, [[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]], atol=1e-14)


def test_hexagon_circumradius():
    state = PolygonState(time=0.0, aniso=discretize(isotropic_energy(), 6), d=np.ones(6))
    radii = np.linalg.norm(vertices_from_support(state).vertices, axis=1)
    np.testing.assert_allclose(radii, 2.0 / np.sqrt(3.0), atol=1e-14)


def random_polygon(rng, n: int) -> PolygonState:
    """Unit-apothem N-gon with support perturbations of order dtheta^2, small enough to keep every side"""
    aniso = discretize(isotropic_energy(), n)
    return PolygonState(time=0.0, aniso=aniso, d=1.0 + 0.1 * aniso.dtheta ** 2 * rng.uniform(-1.0, 1.0, n))


def test_vertex_and_side_formulas_agree_on_random_states():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        state = random_polygon(rng, int(rng.integers(8, 33)))
        aniso = state.aniso
        polygon = vertices_from_support(state)
        np.testing.assert_allclose(polygon.edge_lengths(), side_lengths(state), atol=1e-12)
        assert polygon.is_strictly_convex()
        assert polygon.shoelace_area() == pytest.approx(enclosed_area(state), abs=1e-12)
        np.testing.assert_allclose(polygon.support(aniso.angles), state.d, atol=1e-12)


def test_square_support_function():
    polygon = vertices_from_support(square())
    assert polygon_support(polygon, 0.0) == pytest.approx(1.0)
    assert polygon_support(polygon, np.pi / 4) == pytest.approx(np.sqrt(2.0))


def test_hausdorff_distances():
    circle = circle_field(1.0, 256)
    assert hausdorff_distance(circle, vertices_from_support(square()), 8192) == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-4)
    assert hausdorff_distance(circle, circle) == 0.0
    assert hausdorff_distance(circle, circle_field(0.5, 256)) == pytest.approx(0.5, abs=1e-14)


def test_hausdorff_needs_origin_inside():
    shifted = VertexPolygon(vertices=np.array([[1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(InvalidComparisonError):
        hausdorff_distance(circle_field(1.0, 64), shifted)


def test_initial_polygon_circumscribes_the_curve():
    """h_P >= h_C everywhere, with equality in the normal directions i * dtheta"""
    a, b = 2.0, 1.0
    state = initial_polygon(ellipse_field(a, b, 1024), 16, energy=isotropic_energy())
    polygon = vertices_from_support(state)

    phi = 2.0 * np.pi * np.arange(4096) / 4096
    exact = np.sqrt((a * np.cos(phi)) ** 2 + (b * np.sin(phi)) ** 2)
    gap = polygon_support(polygon, phi) - exact
    assert np.min(gap) >= -1e-12
    assert np.max(gap) > 1e-3

    normals = state.aniso.angles
    exact_at_normals = np.sqrt((a * np.cos(normals)) ** 2 + (b * np.sin(normals)) ** 2)
    np.testing.assert_allclose(polygon_support(polygon, normals), exact_at_normals, atol=1e-12)


def test_hausdorff_distance_is_a_metric_on_random_triples():
    rng = np.random.default_rng(11)
    bodies = [circle_field(1.0, 256), circle_field(0.9, 256), ellipse_field(1.3, 0.8, 256)]
    bodies += [vertices_from_support(random_polygon(rng, n)) for n in (8, 12, 16, 24, 32)]
    for _ in range(200):
        a, b, c = (bodies[i] for i in rng.choice(len(bodies), size=3, replace=False))
        ab = hausdorff_distance(a, b, 2048)
        assert ab == hausdorff_distance(b, a, 2048)
        assert ab <= hausdorff_distance(a, c, 2048) + hausdorff_distance(c, b, 2048) + 1e-12


def test_support_hausdorff_matches_point_sets():
    curve = ellipse_field(2.0, 1.0, 1024)
    state = initial_polygon(curve, 16, energy=isotropic_energy())
    polygon = vertices_from_support(state)

    by_support = hausdorff_distance(polygon, curve, 8192)
    by_points = brute_force_hausdorff(polygon.boundary_points(500), boundary_points(curve, 20000))
    assert by_support == pytest.approx(by_points, abs=2e-3)


def test_side_splits_of_circumscribed_polygons():
    circle = circle_field(1.0, 256)
    state = initial_polygon(circle, 16, energy=isotropic_energy())
    before, after = side_splits(circle, state)
    np.testing.assert_allclose(before, np.tan(state.dtheta / 2), atol=1e-10)
    np.testing.assert_allclose(after, np.tan(state.dtheta / 2), atol=1e-10)

    ellipse = ellipse_field(2.0, 1.0, 1024)
    state = initial_polygon(ellipse, 32, energy=isotropic_energy())
    before, after = side_splits(ellipse, state)
    np.testing.assert_allclose(before + after, side_lengths(state), atol=1e-12)
    assert np.all(before > 0) and np.all(after > 0)


def test_tangent_polygon_matches_initial_polygon():
    curve = ellipse_field(2.0, 1.0, 512)
    aniso = discretize(cosine_energy(0.1, 2), 16)
    np.testing.assert_array_equal(tangent_polygon(curve, aniso).d, initial_polygon(curve, 16, aniso).d)


def test_curvature_errors_vanish_for_isotropic_circle():
    circle = circle_field(1.0, 256)
    for n in (8, 16, 32):
        lam, upsilon = curvature_errors(circle, isotropic_energy(), initial_polygon(circle, n, energy=isotropic_energy()))
        assert np.max(np.abs(lam)) < 1e-12
        assert np.max(np.abs(upsilon)) < 1e-10


def test_doubling_ratios():
    assert doubling_ratios([16, 32, 48], [4.0, 1.0, 0.5]) == [None, 4.0, None]
    assert doubling_ratios([8, 16], [1.0, 0.0]) == [None, None]


def test_initial_errors_on_ellipse():
    """Lambda(0) is second order and Upsilon(0) first order in dtheta"""
    records = initial_error_study(ellipse_field(2.0, 1.0, 4096), isotropic_energy(), [16, 32, 64])
    assert [r.n_sides for r in records] == [16, 32, 64]
    assert records[0].lambda_ratio is None
    for record in records[1:]:
        assert 3.2 <= record.lambda_ratio <= 4.8
        assert 1.5 <= record.upsilon_ratio <= 2.6
        assert record.hausdorff_ratio > 3.0
