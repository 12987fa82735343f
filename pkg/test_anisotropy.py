#!/usr/bin/env python3
"""
Interfacial energy tests
Admissibility checks, the discrete factors g_i and the energy catalog
"""

import numpy as np
import pytest
from pydantic import ValidationError

from crystalflow.anisotropy import (
    build_energy,
    cosine_energy,
    discretize,
    isotropic_energy,
    trigonometric_energy,
    validate_energy,
)
from crystalflow.errors import ConfigurationError, InvalidEnergyError, NonConvexFrankDiagramError
from crystalflow.models import EnergyKind, EnergySpec


def test_isotropic_energy_is_admissible():
    """f = 1 passes with min f = min g = 1"""
    result = validate_energy(isotropic_energy())
    assert result.passed
    assert result.f_min == pytest.approx(1.0)
    assert result.g_min == pytest.approx(1.0)


def test_cosine_energy_minimum_of_g():
    """f = 1 + 0.1 cos 2theta has g = 1 - 0.3 cos 2theta, smallest at theta = 0"""
    result = validate_energy(cosine_energy(0.1, 2))
    assert result.passed
    assert result.g_min == pytest.approx(0.7, abs=1e-12)
    assert result.theta_g_min == pytest.approx(0.0, abs=1e-12)


def test_strong_cosine_energy_fails_validation():
    """f = 1 + 0.5 cos 2theta has g = 1 - 1.5 cos 2theta < 0"""
    energy = cosine_energy(0.5, 2, check=False)
    result = validate_energy(energy)
    assert not result.passed
    assert result.g_min == pytest.approx(-0.5, abs=1e-12)

    with pytest.raises(InvalidEnergyError):
        cosine_energy(0.5, 2)


def test_non_finite_energy_is_rejected():
    with pytest.raises(InvalidEnergyError):
        trigonometric_energy(1.0, [np.nan])


def test_validation_needs_enough_samples():
    with pytest.raises(ConfigurationError):
        validate_energy(isotropic_energy(), samples=16)


def test_discrete_factors_of_constant_energy():
    aniso = discretize(isotropic_energy(), 8)
    assert aniso.dtheta == pytest.approx(np.pi / 4)
    np.testing.assert_allclose(aniso.g_i, 1.0, atol=1e-14)
    np.testing.assert_allclose(aniso.h_i, 1.0, atol=1e-14)


def test_discrete_factor_of_cosine_energy_octagon():
    """g_0 = 1.1 + (1 - 2.2 + 1) / (2 - sqrt 2)"""
    aniso = discretize(cosine_energy(0.1, 2), 8)
    expected = 1.1 + (1.0 - 2.2 + 1.0) / (2.0 - np.sqrt(2.0))
    assert aniso.g_i[0] == pytest.approx(expected, abs=1e-12)
    assert aniso.g_i[0] == pytest.approx(0.758579, abs=1e-6)


def test_discrete_factors_closed_form():
    """For cos(2theta) the second difference gives g_i = 1 + 0.1 (1 - 4 cos^2(dtheta/2)) cos(2 i dtheta)"""
    aniso = discretize(cosine_energy(0.1, 2), 16)
    expected = 1.0 + 0.1 * (1.0 - 4.0 * np.cos(aniso.dtheta / 2) ** 2) * np.cos(2 * aniso.angles)
    np.testing.assert_allclose(aniso.g_i, expected, atol=1e-12)


def test_discrete_factors_converge_at_second_order():
    energy = cosine_energy(0.1, 2)
    errors = []
    for n in (16, 32, 64):
        aniso = discretize(energy, n)
        errors.append(np.max(np.abs(aniso.g_i - energy.g(aniso.angles))))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.05)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.05)


def test_discretize_rejects_small_polygons():
    with pytest.raises(ConfigurationError):
        discretize(isotropic_energy(), 3)


def test_non_convex_frank_diagram_is_detected():
    """Unvalidated energy whose discrete g_0 comes out negative"""
    energy = trigonometric_energy(1.0, [0.0, 0.5], check=False)
    with pytest.raises(NonConvexFrankDiagramError):
        discretize(energy, 16)


def test_admissible_energies_give_positive_discrete_factors():
    """g_i 2 tan(dtheta/2) is a side of the polygon circumscribed about the Wulff shape"""
    rng = np.random.default_rng(7)
    k = np.arange(1, 7)
    energies = [cosine_energy(0.33, 2), cosine_energy(0.066, 4), cosine_energy(0.028, 6)]
    for _ in range(40):
        cos_coeffs = 0.15 / k ** 2 * rng.uniform(-1.0, 1.0, k.size)
        sin_coeffs = 0.15 / k ** 2 * rng.uniform(-1.0, 1.0, k.size)
        energies.append(trigonometric_energy(1.0, cos_coeffs, sin_coeffs))

    for energy in energies:
        assert validate_energy(energy).passed
        for n in (8, 16, 32, 64):
            assert np.min(discretize(energy, n).g_i) > 0


def test_fourier_energy_derivatives():
    spec = EnergySpec(kind=EnergyKind.FOURIER, cos_coeffs=[0.0, 0.05], sin_coeffs=[0.0, 0.0, 0.02])
    energy = build_energy(spec)
    theta = np.linspace(0.0, 2.0 * np.pi, 37)

    expected = 1.0 + 0.05 * np.cos(2 * theta) + 0.02 * np.sin(3 * theta)
    np.testing.assert_allclose(energy.f(theta), expected, atol=1e-14)

    step = 1e-4
    second = (energy.f(theta + step) - 2.0 * energy.f(theta) + energy.f(theta - step)) / step ** 2
    np.testing.assert_allclose(energy.f_double_prime(theta), second, atol=1e-5)
    first = (energy.f(theta + step) - energy.f(theta - step)) / (2.0 * step)
    np.testing.assert_allclose(energy.f_prime(theta), first, atol=1e-7)
    np.testing.assert_allclose(energy.h(theta), 1.0 / energy.g(theta))


def test_cosine_spec_records_parameters():
    energy = build_energy(EnergySpec(kind="cosine", epsilon=0.05, harmonic=4))
    assert energy.name == "cosine"
    assert energy.parameters["epsilon"] == 0.05
    assert energy.parameters["harmonic"] == 4


def test_energy_spec_rejects_non_positive_scale():
    with pytest.raises(ValidationError):
        EnergySpec(scale=0.0)
