"""
Reference solver for the smooth flow
A convex curve is stored by its support function u on a fine periodic grid and
moved by u_t = -W = -g / (u + u_phiphi) with the method of lines.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline

from .anisotropy import AnisotropyFunction
from .errors import ConfigurationError, ConvexityLostError, OutOfDomainError, StepUnderflowError
from .integrator import adaptive_steps
from .models import CurveKind, CurveSpec, IntegratorSettings, reference_integrator

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SupportFunctionField:
    """Support values u_j = u(j*dphi, t) on M equally spaced angles"""
    u: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))

    @property
    def grid_size(self) -> int:
        return self.u.size

    @property
    def dphi(self) -> float:
        return 2.0 * np.pi / self.u.size

    @property
    def angles(self) -> np.ndarray:
        return self.dphi * np.arange(self.u.size)

    @cached_property
    def _spline(self) -> CubicSpline:
        knots = np.append(self.angles, 2.0 * np.pi)
        return CubicSpline(knots, np.append(self.u, self.u[0]), bc_type="periodic")

    def support(self, phi) -> np.ndarray:
        """Periodic cubic interpolation of u at arbitrary angles"""
        return self._spline(np.mod(phi, 2.0 * np.pi))

    def support_derivative(self, phi) -> np.ndarray:
        return self._spline(np.mod(phi, 2.0 * np.pi), 1)

    def with_values(self, u: np.ndarray, time: float) -> "SupportFunctionField":
        return SupportFunctionField(u=u, time=time)


@dataclass(frozen=True)
class CircleSnapshot:
    time: float
    radius: float

    def field(self, grid_size: int) -> SupportFunctionField:
        return SupportFunctionField(u=np.full(grid_size, self.radius), time=self.time)


@dataclass(frozen=True)
class ExactCircleSolution:
    """Isotropic shrinking circle r(t) = sqrt(r0^2 - 2t)"""
    r0: float

    @property
    def extinction_time(self) -> float:
        return 0.5 * self.r0 ** 2

    def radius(self, t: float) -> float:
        if t >= self.extinction_time or t < 0:
            raise OutOfDomainError(f"t = {t} lies outside [0, {self.extinction_time})", r0=self.r0)
        return float(np.sqrt(self.r0 ** 2 - 2.0 * t))

    def at(self, t: float) -> CircleSnapshot:
        return CircleSnapshot(time=t, radius=self.radius(t))


@dataclass
class ReferenceTrajectory:
    """Reference fields at the sampled instants plus optional residual diagnostics"""
    fields: List[SupportFunctionField] = field(default_factory=list)
    residuals: List[Tuple[float, float]] = field(default_factory=list)
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.fields])

    @property
    def final(self) -> SupportFunctionField:
        return self.fields[-1]

    def __len__(self) -> int:
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, index):
        return self.fields[index]


def exact_circle(r0: float, t: float) -> CircleSnapshot:
    return ExactCircleSolution(r0).at(t)


def periodic_second_difference(values: np.ndarray, spacing: float) -> np.ndarray:
    return (np.roll(values, -1) - 2.0 * values + np.roll(values, 1)) / spacing ** 2


def periodic_central_difference(values: np.ndarray, spacing: float) -> np.ndarray:
    return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * spacing)


def radius_of_curvature(field: SupportFunctionField) -> np.ndarray:
    return field.u + periodic_second_difference(field.u, field.dphi)


def _curvature(u: np.ndarray, dphi: float, time: Optional[float]) -> np.ndarray:
    rho = u + periodic_second_difference(u, dphi)
    bad = np.flatnonzero(rho <= 0)
    if bad.size:
        j = int(bad[0])
        raise ConvexityLostError(f"convexity lost at grid point {j} (u + u'' = {rho[j]:.3g})", index=j, time=time)
    return 1.0 / rho


def curvature_field(field: SupportFunctionField) -> np.ndarray:
    """kappa_j = 1 / (u_j + D^2 u_j)"""
    return _curvature(field.u, field.dphi, field.time)


def weighted_curvature_field(field: SupportFunctionField, energy: AnisotropyFunction) -> np.ndarray:
    """W_j = g(j*dphi) kappa_j"""
    return energy.g(field.angles) * curvature_field(field)


def support_pde_rhs(field: SupportFunctionField, energy: AnisotropyFunction) -> np.ndarray:
    return -weighted_curvature_field(field, energy)


def field_area(field: SupportFunctionField) -> float:
    """Enclosed area 1/2 sum u_j (u_j + D^2 u_j) dphi"""
    return float(0.5 * np.sum(field.u * radius_of_curvature(field)) * field.dphi)


def smooth_area_rate(energy: AnisotropyFunction, grid_size: int) -> float:
    """-sum g(phi_j) dphi, the exact area rate of the semi-discrete flow"""
    angles = 2.0 * np.pi * np.arange(grid_size) / grid_size
    return float(-np.sum(energy.g(angles)) * 2.0 * np.pi / grid_size)


def smooth_extinction_time(field: SupportFunctionField, energy: AnisotropyFunction) -> float:
    return field_area(field) / -smooth_area_rate(energy, field.grid_size)


def tangent_points(field: SupportFunctionField, phi) -> np.ndarray:
    """Boundary point with exterior normal phi: u e(phi) + u_phi e(phi)^perp"""
    phi = np.asarray(phi, dtype=float)
    u = field.support(phi)
    du = field.support_derivative(phi)
    return np.stack([u * np.cos(phi) - du * np.sin(phi), u * np.sin(phi) + du * np.cos(phi)], axis=-1)


def boundary_points(field: SupportFunctionField, count: int) -> np.ndarray:
    return tangent_points(field, 2.0 * np.pi * np.arange(count) / count)


def kappa_residual(field: SupportFunctionField, energy: AnisotropyFunction, delta: float = 1e-4) -> float:
    """
    max_j |W_t - h (W^2 W_phiphi + W^3)| with W_t from a centred difference in time
    along the semi-discrete flow; O(dphi^2) + O(delta^2) for a smooth solution
    """
    g = energy.g(field.angles)
    w = g * _curvature(field.u, field.dphi, field.time)
    forward = g * _curvature(field.u - delta * w, field.dphi, field.time)
    backward = g * _curvature(field.u + delta * w, field.dphi, field.time)
    w_t = (forward - backward) / (2.0 * delta)
    expected = (w ** 2 * periodic_second_difference(w, field.dphi) + w ** 3) / g
    return float(np.max(np.abs(w_t - expected)))


def _periodic_tridiagonal(size: int):
    pattern = sparse.diags([1, 1, 1], [-1, 0, 1], shape=(size, size), format="lil")
    pattern[0, size - 1] = 1
    pattern[size - 1, 0] = 1
    return pattern.tocsr()


def evolve_reference(field0: SupportFunctionField,
                     energy: AnisotropyFunction,
                     t_end: float,
                     tolerances: Optional[IntegratorSettings] = None,
                     sample_times: Optional[Sequence[float]] = None,
                     residuals: bool = False) -> ReferenceTrajectory:
    """Method-of-lines integration of u_t = -W, keeping fields at t0 and at each sample time"""
    settings = tolerances or reference_integrator()
    curvature_field(field0)  # a non-convex start raises ConvexityLostError
    horizon = field0.time + smooth_extinction_time(field0, energy)
    if t_end >= field0.time + (1.0 - settings.extinction_margin) * (horizon - field0.time):
        raise ConfigurationError(f"t_end = {t_end:.6g} is not safely below the smooth extinction time {horizon:.6g}")

    g = energy.g(field0.angles)
    dphi = field0.dphi

    def rhs(t, u):
        with np.errstate(divide="ignore"):
            return -g / (u + periodic_second_difference(u, dphi))

    def check(t, u):
        _curvature(u, dphi, t)

    trajectory = ReferenceTrajectory(fields=[field0])
    if residuals:
        trajectory.residuals.append((field0.time, kappa_residual(field0, energy)))

    jac_sparsity = _periodic_tridiagonal(field0.grid_size)
    logger.debug(f"Evolving reference field M={field0.grid_size} to t={t_end:.6g}")
    last_u = field0.u
    try:
        for t, u, sampled in adaptive_steps(rhs, field0.time, field0.u, t_end, settings,
                                            sample_times, jac_sparsity=jac_sparsity, check=check):
            trajectory.steps += 1
            last_u = u
            if sampled:
                snapshot = field0.with_values(u, t)
                trajectory.fields.append(snapshot)
                if residuals:
                    trajectory.residuals.append((t, kappa_residual(snapshot, energy)))
    except StepUnderflowError as error:
        error.last_state = field0.with_values(last_u, error.time)
        raise

    logger.info(f"🌀 Reference M={field0.grid_size}: reached t={t_end:.6g} in {trajectory.steps} steps")
    return trajectory


def circle_field(r0: float, grid_size: int) -> SupportFunctionField:
    return SupportFunctionField(u=np.full(grid_size, float(r0)))


def ellipse_field(a: float, b: float, grid_size: int) -> SupportFunctionField:
    """Centred ellipse with semiaxes a (along x) and b (along y)"""
    phi = 2.0 * np.pi * np.arange(grid_size) / grid_size
    return SupportFunctionField(u=np.sqrt((a * np.cos(phi)) ** 2 + (b * np.sin(phi)) ** 2))


def series_field(c0: float, cos_coeffs: Sequence[float], sin_coeffs: Sequence[float],
                 grid_size: int) -> SupportFunctionField:
    """u = c0 + sum_k a_k cos(k phi) + b_k sin(k phi), k = 1, 2, ..."""
    phi = 2.0 * np.pi * np.arange(grid_size) / grid_size
    u = np.full(grid_size, float(c0))
    for k, coeff in enumerate(cos_coeffs, start=1):
        u += coeff * np.cos(k * phi)
    for k, coeff in enumerate(sin_coeffs, start=1):
        u += coeff * np.sin(k * phi)
    return SupportFunctionField(u=u)


def build_curve(spec: CurveSpec, grid_size: int) -> SupportFunctionField:
    """Initial smooth convex curve from its config spec"""
    if spec.kind == CurveKind.CIRCLE:
        curve = circle_field(spec.r0, grid_size)
    elif spec.kind == CurveKind.ELLIPSE:
        curve = ellipse_field(spec.a, spec.b, grid_size)
    else:
        curve = series_field(spec.r0, spec.series_cos, spec.series_sin, grid_size)

    if np.any(curve.u <= 0) or np.any(radius_of_curvature(curve) <= 0):
        raise ConfigurationError(f"initial {spec.kind.value} curve is not a convex body around the origin")
    return curve
