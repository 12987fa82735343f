"""
Convex-geometry utilities
Initial polygon construction, vertex reconstruction, support functions,
Hausdorff distance and the initial discretization-error study
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .anisotropy import AnisotropyFunction, discretize, DiscreteAnisotropy
from .crystalline_flow import PolygonState, side_lengths, weighted_curvatures
from .errors import ConfigurationError, DegenerateInitializationError, InvalidComparisonError, SideVanishedError
from .models import InitialErrorRecord
from .smooth_flow import (
    SupportFunctionField,
    periodic_central_difference,
    weighted_curvature_field,
)

logger = logging.getLogger(__name__)

DEFAULT_HAUSDORFF_SAMPLES = 8192


class SupportBody(Protocol):
    def support(self, phi) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class VertexPolygon:
    """Counterclockwise vertices; vertex i joins side i-1 and side i"""
    vertices: np.ndarray

    @property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=1)

    def is_strictly_convex(self) -> bool:
        edges = self.edges
        following = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * following[:, 1] - edges[:, 1] * following[:, 0]
        return bool(np.all(cross > 0))

    def support(self, phi) -> np.ndarray:
        return polygon_support(self, phi)

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices + np.roll(self.vertices, -1, axis=0))

    def shoelace_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def boundary_points(self, per_edge: int) -> np.ndarray:
        fractions = np.arange(per_edge) / per_edge
        points = self.vertices[:, None, :] + fractions[None, :, None] * self.edges[:, None, :]
        return points.reshape(-1, 2)


def initial_polygon(curve: SupportFunctionField, n_sides: int, aniso: Optional[DiscreteAnisotropy] = None,
                    energy: Optional[AnisotropyFunction] = None) -> PolygonState:
    """
    Polygon made of segments on the tangent lines of the curve at the points with
    exterior normal (cos i*dtheta, sin i*dtheta): d_i = u(i*dtheta)
    """
    if aniso is None:
        if energy is None:
            raise ConfigurationError("initial_polygon needs either a discrete anisotropy or an energy")
        aniso = discretize(energy, n_sides)
    dtheta = 2.0 * np.pi / n_sides
    step = curve.grid_size // n_sides
    if curve.grid_size % n_sides == 0:
        d = curve.u[::step].copy()
    else:
        d = curve.support(dtheta * np.arange(n_sides))

    state = PolygonState(time=curve.time, aniso=aniso, d=d)
    try:
        side_lengths(state)
    except SideVanishedError as error:
        raise DegenerateInitializationError(
            f"initial polygon with N = {n_sides} has a zero-length side {error.index}",
            n_sides=n_sides, index=error.index,
        ) from error
    return state


def tangent_polygon(field: SupportFunctionField, aniso: DiscreteAnisotropy) -> PolygonState:
    """Circumscribed polygon C_P(t) of the curve at the field's time"""
    return initial_polygon(field, aniso.n_sides, aniso)


def vertices_from_support(state: PolygonState) -> VertexPolygon:
    """Intersection of consecutive side lines x.e_i = d_i"""
    angles = state.aniso.angles
    perp = np.column_stack([-np.sin(angles), np.cos(angles)])
    d_prev = np.roll(state.d, 1)
    perp_prev = np.roll(perp, 1, axis=0)
    # vertex i is the corner between side i-1 and side i
    vertices = (state.d[:, None] * perp_prev - d_prev[:, None] * perp) / np.sin(state.dtheta)
    return VertexPolygon(vertices=vertices)


def polygon_support(poly: VertexPolygon, phi) -> np.ndarray:
    """max over vertices v of v.(cos phi, sin phi)"""
    phi = np.asarray(phi, dtype=float)
    directions = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return np.max(directions @ poly.vertices.T, axis=-1)


def hausdorff_distance(body_a: SupportBody, body_b: SupportBody,
                       samples: int = DEFAULT_HAUSDORFF_SAMPLES) -> float:
    """
    Hausdorff distance of two convex bodies as the sup-norm of their support
    difference on a uniform angle grid; both bodies must contain the origin.
    """
    phi = 2.0 * np.pi * np.arange(samples) / samples
    h_a = np.asarray(body_a.support(phi), dtype=float)
    h_b = np.asarray(body_b.support(phi), dtype=float)
    if np.min(h_a) <= 0 or np.min(h_b) <= 0:
        raise InvalidComparisonError("origin is not interior to both bodies",
                                     min_support_a=float(np.min(h_a)), min_support_b=float(np.min(h_b)))
    return float(np.max(np.abs(h_a - h_b)))


def brute_force_hausdorff(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """Point-set Hausdorff distance of two dense boundary samplings"""
    return float(max(directed_hausdorff(points_a, points_b)[0], directed_hausdorff(points_b, points_a)[0]))


def side_splits(curve: SupportFunctionField, state: PolygonState) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lengths (L-, L+) of the parts of each side before and after the tangency point,
    measured along T_i; for a circumscribed polygon both are close to dtheta / (2 kappa).
    """
    dtheta = state.dtheta
    d = state.d
    start = (d * np.cos(dtheta) - np.roll(d, 1)) / np.sin(dtheta)
    end = (np.roll(d, -1) - d * np.cos(dtheta)) / np.sin(dtheta)
    tangency = curve.support_derivative(state.aniso.angles)
    return tangency - start, end - tangency


def curvature_errors(field: SupportFunctionField, energy: AnisotropyFunction,
                     state: PolygonState) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lambda_i = W(i*dtheta) - omega_i and
    Upsilon_i = W_theta(i*dtheta) - (omega_{i+1} - omega_i) / sin(dtheta),
    with W and W_theta taken from the reference field at its own resolution
    """
    n = state.n_sides
    w_field = weighted_curvature_field(field, energy)
    w_theta_field = periodic_central_difference(w_field, field.dphi)
    if field.grid_size % n == 0:
        stride = field.grid_size // n
        w, w_theta = w_field[::stride], w_theta_field[::stride]
    else:
        angles = state.aniso.angles
        w = SupportFunctionField(u=w_field).support(angles)
        w_theta = SupportFunctionField(u=w_theta_field).support(angles)

    omega = weighted_curvatures(state)
    lam = w - omega
    upsilon = w_theta - (np.roll(omega, -1) - omega) / np.sin(state.dtheta)
    return lam, upsilon


def doubling_ratios(n_values: Sequence[int], errors: Sequence[float]) -> List[Optional[float]]:
    """e(N) / e(2N) for consecutive doublings, None where undefined"""
    ratios = [None]
    for k in range(1, len(n_values)):
        previous, current = errors[k - 1], errors[k]
        if n_values[k] == 2 * n_values[k - 1] and current > 0 and previous > 0:
            ratios.append(float(previous / current))
        else:
            ratios.append(None)
    return ratios


def initial_error_study(curve: SupportFunctionField, energy: AnisotropyFunction,
                        n_list: Sequence[int],
                        hausdorff_samples: int = DEFAULT_HAUSDORFF_SAMPLES) -> List[InitialErrorRecord]:
    """Lambda_max(0), Upsilon_max(0) and D(P(0), C(0)) for each N, with doubling ratios"""
    n_values = sorted(n_list)
    rows = []
    for n in n_values:
        state = initial_polygon(curve, n, energy=energy)
        lam, upsilon = curvature_errors(curve, energy, state)
        rows.append({
            "n_sides": n,
            "dtheta": state.dtheta,
            "lambda_max0": float(np.max(np.abs(lam))),
            "upsilon_max0": float(np.max(np.abs(upsilon))),
            "hausdorff0": hausdorff_distance(vertices_from_support(state), curve, hausdorff_samples),
        })
        logger.info(f"📐 N={n}: Lambda0={rows[-1]['lambda_max0']:.3e}, Upsilon0={rows[-1]['upsilon_max0']:.3e}")

    for key, ratio_key in (("lambda_max0", "lambda_ratio"), ("upsilon_max0", "upsilon_ratio"),
                           ("hausdorff0", "hausdorff_ratio")):
        for row, ratio in zip(rows, doubling_ratios(n_values, [row[key] for row in rows])):
            row[ratio_key] = ratio

    return [InitialErrorRecord(**row) for row in rows]
