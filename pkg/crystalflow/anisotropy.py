"""
Interfacial energy f(theta) and its derived quantities
Smooth g = f + f'', h = 1/g and the discrete g_i, h_i used by the polygon flow
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from .errors import InvalidEnergyError, ConfigurationError, NonConvexFrankDiagramError
from .models import EnergyKind, EnergySpec, ValidationResult

logger = logging.getLogger(__name__)

AngleFunction = Callable[[np.ndarray], np.ndarray]

DEFAULT_VALIDATION_SAMPLES = 4096


def second_difference_denominator(dtheta: float) -> float:
    """2(1 - cos dtheta), evaluated as 4 sin^2(dtheta/2) to avoid cancellation"""
    return 4.0 * np.sin(0.5 * dtheta) ** 2


@dataclass(frozen=True, eq=False)
class AnisotropyFunction:
    """Closed-form energy triple (f, f', f''), all 2pi-periodic"""
    name: str
    f: AngleFunction
    f_prime: AngleFunction
    f_double_prime: AngleFunction
    parameters: Dict[str, Any] = field(default_factory=dict)

    def g(self, theta) -> np.ndarray:
        return self.f(theta) + self.f_double_prime(theta)

    def h(self, theta) -> np.ndarray:
        return 1.0 / self.g(theta)


@dataclass(frozen=True, eq=False)
class DiscreteAnisotropy:
    """Energy sampled at the N admissible normal angles i*dtheta"""
    n_sides: int
    dtheta: float
    f_i: np.ndarray
    g_i: np.ndarray
    h_i: np.ndarray

    @property
    def angles(self) -> np.ndarray:
        return self.dtheta * np.arange(self.n_sides)

    @property
    def curvature_factor(self) -> float:
        """2 tan(dtheta/2), the numerator of the side curvature"""
        return 2.0 * np.tan(0.5 * self.dtheta)

    @property
    def denominator(self) -> float:
        return second_difference_denominator(self.dtheta)


def trigonometric_energy(scale: float = 1.0,
                         cos_coeffs: Sequence[float] = (),
                         sin_coeffs: Sequence[float] = (),
                         name: str = "fourier",
                         check: bool = True,
                         samples: int = DEFAULT_VALIDATION_SAMPLES,
                         extra_parameters: Optional[Dict[str, Any]] = None) -> AnisotropyFunction:
    """f(theta) = scale + sum_k a_k cos(k theta) + b_k sin(k theta), k = 1, 2, ..."""
    a = np.asarray(cos_coeffs, dtype=float)
    b = np.asarray(sin_coeffs, dtype=float)
    ka = np.arange(1, a.size + 1, dtype=float)
    kb = np.arange(1, b.size + 1, dtype=float)

    def _series(theta, cos_weights, sin_weights, offset):
        theta = np.asarray(theta, dtype=float)
        value = np.full(theta.shape, offset, dtype=float)
        for k, coeff in zip(ka, cos_weights):
            value = value + coeff * np.cos(k * theta)
        for k, coeff in zip(kb, sin_weights):
            value = value + coeff * np.sin(k * theta)
        return value

    def f(theta):
        return _series(theta, a, b, scale)

    def f_prime(theta):
        theta = np.asarray(theta, dtype=float)
        value = np.zeros(theta.shape, dtype=float)
        for k, coeff in zip(ka, a):
            value = value - k * coeff * np.sin(k * theta)
        for k, coeff in zip(kb, b):
            value = value + k * coeff * np.cos(k * theta)
        return value

    def f_double_prime(theta):
        return _series(theta, -ka ** 2 * a, -kb ** 2 * b, 0.0)

    energy = AnisotropyFunction(
        name=name,
        f=f,
        f_prime=f_prime,
        f_double_prime=f_double_prime,
        parameters={"scale": scale, "cos_coeffs": a.tolist(), "sin_coeffs": b.tolist(), **(extra_parameters or {})},
    )
    if check:
        result = validate_energy(energy, samples)
        if not result.passed:
            raise InvalidEnergyError(
                f"energy '{name}' is not admissible: min f = {result.f_min:.6g}, min f + f'' = {result.g_min:.6g}",
                energy=name,
            )
    return energy


def isotropic_energy(scale: float = 1.0) -> AnisotropyFunction:
    return trigonometric_energy(scale=scale, name="isotropic")


def cosine_energy(epsilon: float, harmonic: int, scale: float = 1.0,
                  check: bool = True, samples: int = DEFAULT_VALIDATION_SAMPLES) -> AnisotropyFunction:
    """f(theta) = scale + epsilon cos(k theta)"""
    parameters = {"epsilon": epsilon, "harmonic": harmonic}
    if harmonic == 0:
        return trigonometric_energy(scale=scale + epsilon, name="cosine", check=check,
                                    samples=samples, extra_parameters=parameters)
    coeffs = np.zeros(harmonic)
    coeffs[harmonic - 1] = epsilon
    return trigonometric_energy(scale=scale, cos_coeffs=coeffs, name="cosine", check=check,
                                samples=samples, extra_parameters=parameters)


def build_energy(spec: EnergySpec, check: bool = True,
                 samples: int = DEFAULT_VALIDATION_SAMPLES) -> AnisotropyFunction:
    """Construct a catalog energy from its config spec"""
    if spec.kind == EnergyKind.ISOTROPIC:
        return isotropic_energy(spec.scale)
    if spec.kind == EnergyKind.COSINE:
        return cosine_energy(spec.epsilon, spec.harmonic, spec.scale, check=check, samples=samples)
    return trigonometric_energy(spec.scale, spec.cos_coeffs, spec.sin_coeffs, check=check, samples=samples)


def validate_energy(energy: AnisotropyFunction,
                    samples: int = DEFAULT_VALIDATION_SAMPLES) -> ValidationResult:
    """Heuristic positivity check of f and f + f'' on a uniform theta grid"""
    if samples < 64:
        raise ConfigurationError(f"validate_energy needs at least 64 samples, got {samples}")

    theta = 2.0 * np.pi * np.arange(samples) / samples
    f_values = np.asarray(energy.f(theta), dtype=float)
    g_values = f_values + np.asarray(energy.f_double_prime(theta), dtype=float)

    if not (np.all(np.isfinite(f_values)) and np.all(np.isfinite(g_values))):
        raise InvalidEnergyError(f"energy '{energy.name}' evaluates to a non-finite value", energy=energy.name)

    i_f = int(np.argmin(f_values))
    i_g = int(np.argmin(g_values))
    result = ValidationResult(
        passed=bool(f_values[i_f] > 0 and g_values[i_g] > 0),
        f_min=float(f_values[i_f]),
        g_min=float(g_values[i_g]),
        theta_f_min=float(theta[i_f]),
        theta_g_min=float(theta[i_g]),
        samples=samples,
    )
    logger.debug(f"Validated energy {energy.name}: min f={result.f_min:.6g}, min g={result.g_min:.6g}")
    return result


def discretize(energy: AnisotropyFunction, n_sides: int) -> DiscreteAnisotropy:
    """Sample f at i*dtheta and form g_i with the 2(1 - cos dtheta) second difference"""
    if n_sides < 4:
        raise ConfigurationError(f"polygon needs at least 4 sides, got {n_sides}")

    dtheta = 2.0 * np.pi / n_sides
    theta = dtheta * np.arange(n_sides)
    f_i = np.asarray(energy.f(theta), dtype=float)
    g_i = f_i + (np.roll(f_i, -1) - 2.0 * f_i + np.roll(f_i, 1)) / second_difference_denominator(dtheta)

    bad = np.flatnonzero(g_i <= 0)
    if bad.size:
        # unreachable for an admissible energy: the Frank diagram of 1/f is convex
        raise NonConvexFrankDiagramError(
            f"g_{bad[0]} = {g_i[bad[0]]:.6g} <= 0 for energy '{energy.name}' at N = {n_sides}",
            energy=energy.name, n_sides=n_sides,
        )

    return DiscreteAnisotropy(n_sides=n_sides, dtheta=dtheta, f_i=f_i, g_i=g_i, h_i=1.0 / g_i)
