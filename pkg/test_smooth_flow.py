#!/usr/bin/env python3
"""
Reference solver tests
Support-function curvature, exact circle shrinkage, area decay and the curve catalog
"""

import numpy as np
import pytest

from crystalflow.anisotropy import cosine_energy, isotropic_energy
from crystalflow.errors import ConfigurationError, ConvexityLostError, OutOfDomainError
from crystalflow.models import CurveKind, CurveSpec, IntegratorMethod, RunConfig
from crystalflow.smooth_flow import (
    ExactCircleSolution,
    SupportFunctionField,
    boundary_points,
    build_curve,
    circle_field,
    curvature_field,
    ellipse_field,
    evolve_reference,
    exact_circle,
    field_area,
    kappa_residual,
    smooth_area_rate,
    smooth_extinction_time,
    support_pde_rhs,
    tangent_points,
    weighted_curvature_field,
)


def test_exact_circle_radius():
    assert exact_circle(1.0, 0.0).radius == 1.0
    assert exact_circle(1.0, 0.375).radius == pytest.approx(0.5)
    assert ExactCircleSolution(2.0).extinction_time == pytest.approx(2.0)
    with pytest.raises(OutOfDomainError):
        exact_circle(1.0, 0.5)


def test_circle_curvature():
    np.testing.assert_allclose(curvature_field(circle_field(0.8, 64)), 1.25, atol=1e-13)


def test_ellipse_curvature_at_both_axes():
    """kappa = a / b^2 at phi = 0 and b / a^2 at phi = pi/2"""
    field = ellipse_field(2.0, 1.0, 4096)
    kappa = curvature_field(field)
    assert kappa[0] == pytest.approx(2.0, abs=1e-4)
    assert kappa[1024] == pytest.approx(0.25, abs=1e-4)


def test_translated_circle_curvature():
    phi = 2.0 * np.pi * np.arange(512) / 512
    field = SupportFunctionField(u=1.0 + 0.2 * np.cos(phi))
    np.testing.assert_allclose(curvature_field(field), 1.0, atol=1e-4)


def test_weighted_curvature_of_unit_circle():
    field = circle_field(1.0, 256)
    expected = 1.0 - 0.3 * np.cos(2.0 * field.angles)
    np.testing.assert_allclose(weighted_curvature_field(field, cosine_energy(0.1, 2)), expected, atol=1e-13)
    np.testing.assert_allclose(support_pde_rhs(field, cosine_energy(0.1, 2)), -expected, atol=1e-13)


def test_convexity_loss_is_reported():
    phi = 2.0 * np.pi * np.arange(256) / 256
    field = SupportFunctionField(u=1.0 + 0.5 * np.cos(3.0 * phi), time=0.1)
    with pytest.raises(ConvexityLostError) as info:
        curvature_field(field)
    assert info.value.time == 0.1


def test_areas_and_extinction_times():
    assert field_area(circle_field(1.0, 128)) == pytest.approx(np.pi, abs=1e-13)
    assert field_area(ellipse_field(2.0, 1.0, 4096)) == pytest.approx(2.0 * np.pi, abs=1e-4)
    assert smooth_area_rate(isotropic_energy(), 512) == pytest.approx(-2.0 * np.pi, abs=1e-12)
    assert smooth_area_rate(cosine_energy(0.1, 2), 512) == pytest.approx(-2.0 * np.pi, abs=1e-12)
    assert smooth_extinction_time(circle_field(1.0, 512), isotropic_energy()) == pytest.approx(0.5, abs=1e-13)


def test_interpolated_support():
    field = ellipse_field(2.0, 1.0, 256)
    phi = np.random.default_rng(1).uniform(0.0, 2.0 * np.pi, 50)
    exact = np.sqrt((2.0 * np.cos(phi)) ** 2 + np.sin(phi) ** 2)
    np.testing.assert_allclose(field.support(phi), exact, atol=1e-5)


def test_tangent_points_lie_on_ellipse():
    field = ellipse_field(2.0, 1.0, 1024)
    points = tangent_points(field, np.array([0.0, np.pi / 2, np.pi]))
    np.testing.assert_allclose(points, [[2.0, 0.0], [0.0, 1.0], [-2.0, 0.0]], atol=1e-6)

    boundary = boundary_points(field, 200)
    np.testing.assert_allclose((boundary[:, 0] / 2.0) ** 2 + boundary[:, 1] ** 2, 1.0, atol=1e-4)


def test_unit_circle_reference_follows_exact_law():
    trajectory = evolve_reference(circle_field(1.0, 1024), isotropic_energy(), 0.375)
    np.testing.assert_allclose(trajectory.final.u, 0.5, atol=1e-6)
    assert trajectory.final.time == 0.375


def test_reference_area_decays_affinely():
    energy = cosine_energy(0.1, 2)
    field0 = circle_field(1.0, 256)
    samples = np.linspace(0.0, 0.25, 6)[1:]
    trajectory = evolve_reference(field0, energy, 0.25, sample_times=samples)
    assert len(trajectory) == 6
    rate = smooth_area_rate(energy, 256)
    for snapshot in trajectory:
        assert field_area(snapshot) == pytest.approx(np.pi + rate * snapshot.time, abs=1e-6)


def test_reference_self_convergence():
    """Doubling M moves the anisotropic solution by O(dphi^2)"""
    energy = cosine_energy(0.1, 2)
    fields = [evolve_reference(circle_field(1.0, m), energy, 0.2).final for m in (128, 256, 512)]
    coarse = np.max(np.abs(fields[0].u - fields[1].u[::2]))
    fine = np.max(np.abs(fields[1].u - fields[2].u[::2]))
    assert coarse / fine == pytest.approx(4.0, rel=0.2)


def test_curvature_residual_is_small():
    energy = cosine_energy(0.1, 2)
    trajectory = evolve_reference(circle_field(1.0, 256), energy, 0.2, sample_times=[0.1], residuals=True)
    assert len(trajectory.residuals) == 3
    assert all(residual < 1e-5 for _, residual in trajectory.residuals)
    assert kappa_residual(trajectory.final, energy) < 1e-5


def test_reference_refuses_end_time_past_extinction():
    with pytest.raises(ConfigurationError):
        evolve_reference(circle_field(1.0, 64), isotropic_energy(), 0.6)


def test_reference_defaults_to_a_stiff_solver():
    config = RunConfig()
    assert config.reference_integrator.method == IntegratorMethod.BDF
    assert config.integrator.method == IntegratorMethod.RK45


def test_fine_grid_anisotropic_reference_stays_convex():
    trajectory = evolve_reference(circle_field(1.0, 1024), cosine_energy(0.1, 2), 0.25,
                                  sample_times=np.linspace(0.0, 0.25, 6)[1:])
    assert len(trajectory) == 6
    assert trajectory.final.time == 0.25
    for snapshot in trajectory:
        assert np.all(curvature_field(snapshot) > 0)


def test_non_convex_start_is_refused():
    phi = 2.0 * np.pi * np.arange(256) / 256
    with pytest.raises(ConvexityLostError):
        evolve_reference(SupportFunctionField(u=1.0 + 0.5 * np.cos(3.0 * phi)), isotropic_energy(), 0.1)


def test_curve_catalog():
    assert np.allclose(build_curve(CurveSpec(kind=CurveKind.CIRCLE, r0=0.7), 64).u, 0.7)
    ellipse = build_curve(CurveSpec(kind="ellipse", a=2.0, b=1.0), 4)
    np.testing.assert_allclose(ellipse.u, [2.0, 1.0, 2.0, 1.0], atol=1e-14)
    series = build_curve(CurveSpec(kind="series", r0=1.0, series_cos=[0.0, 0.05], series_sin=[0.0, 0.0, 0.02]), 64)
    expected = 1.0 + 0.05 * np.cos(2 * series.angles) + 0.02 * np.sin(3 * series.angles)
    np.testing.assert_allclose(series.u, expected, atol=1e-14)


def test_non_convex_series_is_rejected():
    with pytest.raises(ConfigurationError):
        build_curve(CurveSpec(kind="series", r0=1.0, series_cos=[0.0, 0.0, 0.5]), 256)
