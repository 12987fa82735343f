"""
Crystalline motion by weighted curvature
An N-sided polygon with fixed exterior normals e_i = (cos i*dtheta, sin i*dtheta)
is stored by its support distances d_i; every side moves inward with speed
omega_i = g_i * 2 tan(dtheta/2) / L_i until the polygon shrinks to a point.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .anisotropy import DiscreteAnisotropy
from .errors import ConfigurationError, InvalidComparisonError, SideVanishedError, StepUnderflowError
from .integrator import adaptive_steps
from .models import IntegratorSettings

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PolygonState:
    """Support distances d_i of the N side lines at time t"""
    time: float
    aniso: DiscreteAnisotropy
    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.shape != (self.aniso.n_sides,):
            raise ConfigurationError(f"expected {self.aniso.n_sides} support distances, got shape {d.shape}")
        object.__setattr__(self, "d", d)

    @property
    def n_sides(self) -> int:
        return self.aniso.n_sides

    @property
    def dtheta(self) -> float:
        return self.aniso.dtheta


@dataclass(frozen=True)
class MonitorRecord:
    time: float
    area: float
    total_length: float
    omega_min: float
    omega_max: float
    omega_median: float
    h1_functional: float
    log_curvature: float
    median_bound: float


@dataclass
class PolygonTrajectory:
    """States at every accepted step, with one monitor record per state"""
    states: List[PolygonState] = field(default_factory=list)
    monitors: List[MonitorRecord] = field(default_factory=list)
    sample_indices: List[int] = field(default_factory=list)

    def append(self, state: PolygonState, sampled: bool = False):
        if self.states and state.time <= self.states[-1].time:
            raise ConfigurationError(f"trajectory times must increase: {state.time} after {self.states[-1].time}")
        self.states.append(state)
        self.monitors.append(monitor(state))
        if sampled:
            self.sample_indices.append(len(self.states) - 1)

    @property
    def times(self) -> np.ndarray:
        return np.array([state.time for state in self.states])

    @property
    def final(self) -> PolygonState:
        return self.states[-1]

    def sampled_states(self) -> List[PolygonState]:
        return [self.states[i] for i in self.sample_indices]

    def __len__(self) -> int:
        return len(self.states)


@dataclass
class CurvatureTrajectory:
    """Weighted curvatures omega_i integrated directly from their ODE system"""
    times: np.ndarray
    omegas: np.ndarray
    sample_indices: List[int]


@dataclass(frozen=True)
class InvariantReport:
    omega_min_nondecreasing: bool
    length_decreasing: bool
    h1_nondecreasing: bool
    area_affine: bool
    convex: bool
    median_bounded: bool
    worst_area_deviation: float

    @property
    def ok(self) -> bool:
        return (self.omega_min_nondecreasing and self.length_decreasing and self.h1_nondecreasing
                and self.area_affine and self.convex and self.median_bounded)


def _trig(dtheta: float):
    return 1.0 / np.tan(dtheta), 1.0 / np.sin(dtheta)


def _side_lengths(d: np.ndarray, dtheta: float) -> np.ndarray:
    cot, csc = _trig(dtheta)
    return (np.roll(d, -1) + np.roll(d, 1)) * csc - 2.0 * d * cot


def _weighted_curvatures(d: np.ndarray, aniso: DiscreteAnisotropy) -> np.ndarray:
    return aniso.g_i * aniso.curvature_factor / _side_lengths(d, aniso.dtheta)


def _raise_if_vanished(lengths: np.ndarray, time: float, threshold: float = 0.0, state=None):
    bad = np.flatnonzero(lengths <= threshold)
    if bad.size:
        i = int(bad[0])
        raise SideVanishedError(f"side {i} vanished at t = {time:.17g} (L = {lengths[i]:.3g})",
                                index=i, time=time, last_state=state)


def side_lengths(state: PolygonState, vanish_tolerance: float = 0.0) -> np.ndarray:
    """L_i = (d_{i+1} + d_{i-1}) csc(dtheta) - 2 d_i cot(dtheta)"""
    lengths = _side_lengths(state.d, state.dtheta)
    _raise_if_vanished(lengths, state.time, vanish_tolerance, state)
    return lengths


def curvatures(state: PolygonState) -> np.ndarray:
    return state.aniso.curvature_factor / side_lengths(state)


def weighted_curvatures(state: PolygonState) -> np.ndarray:
    return state.aniso.g_i * curvatures(state)


def omega_ode_rhs(omega: np.ndarray, aniso: DiscreteAnisotropy) -> np.ndarray:
    """Evolution of the weighted curvatures: h_i [omega_i^2 D^2 omega_i + omega_i^3]"""
    omega = np.asarray(omega, dtype=float)
    second = (np.roll(omega, -1) - 2.0 * omega + np.roll(omega, 1)) / aniso.denominator
    return aniso.h_i * (omega ** 2 * second + omega ** 3)


def support_ode_rhs(state: PolygonState) -> np.ndarray:
    """Each side line moves inward with its weighted curvature: d_i' = -omega_i"""
    return -weighted_curvatures(state)


def _side_length_rate(omega: np.ndarray, dtheta: float) -> np.ndarray:
    cot, csc = _trig(dtheta)
    return 2.0 * cot * omega - csc * (np.roll(omega, -1) + np.roll(omega, 1))


def side_length_rate(state: PolygonState) -> np.ndarray:
    """L_i' = 2 cot(dtheta) omega_i - csc(dtheta) (omega_{i+1} + omega_{i-1})"""
    return _side_length_rate(weighted_curvatures(state), state.dtheta)


def total_length_rate(state: PolygonState) -> float:
    """Total perimeter rate, -sum 4 g_i (cot - csc)^2 / L_i; always negative"""
    cot, csc = _trig(state.dtheta)
    lengths = side_lengths(state)
    return float(-np.sum(4.0 * state.aniso.g_i * (cot - csc) ** 2 / lengths))


def enclosed_area(state: PolygonState) -> float:
    """A = 1/2 sum d_i L_i, valid with the origin inside the polygon"""
    if np.any(state.d <= 0):
        i = int(np.flatnonzero(state.d <= 0)[0])
        raise InvalidComparisonError(f"origin lies outside the polygon (d_{i} = {state.d[i]:.6g})", index=i)
    return float(0.5 * np.dot(state.d, side_lengths(state)))


def area_rate(aniso: DiscreteAnisotropy) -> float:
    """Constant area rate -sum g_i 2 tan(dtheta/2), independent of the state"""
    return float(-np.sum(aniso.g_i) * aniso.curvature_factor)


def extinction_time(state0: PolygonState) -> float:
    return enclosed_area(state0) / -area_rate(state0.aniso)


def median_weighted_curvature(omega: Sequence[float]) -> float:
    """max_j min over the half-window {j+1, ..., j+floor(N/2)} (N even) or {j+1, ..., j+(N-1)/2} (N odd)"""
    omega = np.asarray(omega, dtype=float)
    n = omega.size
    if n < 4:
        raise ConfigurationError(f"median weighted curvature needs N >= 4, got {n}")
    width = n // 2 if n % 2 == 0 else (n - 1) // 2
    windows = (np.arange(n)[:, None] + np.arange(1, width + 1)[None, :]) % n
    return float(np.max(np.min(omega[windows], axis=1)))


def median_curvature_bound(state: PolygonState) -> float:
    """Upper bound (5/4) g_max L / A of the median weighted curvature"""
    return float(1.25 * np.max(state.aniso.g_i) * np.sum(side_lengths(state)) / enclosed_area(state))


def normals_and_tangents(aniso: DiscreteAnisotropy):
    """Interior normals N_i = -(cos, sin) and tangents T_i = (-sin, cos) as (N, 2) arrays"""
    angles = aniso.angles
    normals = -np.column_stack([np.cos(angles), np.sin(angles)])
    tangents = np.column_stack([-np.sin(angles), np.cos(angles)])
    return normals, tangents


def midpoint_velocity(state: PolygonState, i: int) -> np.ndarray:
    """Velocity of the midpoint of side i: omega_i N_i - (omega_{i+1} - omega_{i-1}) / (2 sin dtheta) T_i"""
    omega = weighted_curvatures(state)
    n = state.n_sides
    normals, tangents = normals_and_tangents(state.aniso)
    i = i % n
    tangential = (omega[(i + 1) % n] - omega[(i - 1) % n]) / (2.0 * np.sin(state.dtheta))
    return omega[i] * normals[i] - tangential * tangents[i]


def h1_functional(omega: Sequence[float], dtheta: float) -> float:
    """sum [omega_i^2 - (omega_{i+1} - omega_i)^2 / (2(1 - cos dtheta))] dtheta"""
    omega = np.asarray(omega, dtype=float)
    jumps = np.roll(omega, -1) - omega
    denominator = 4.0 * np.sin(0.5 * dtheta) ** 2
    return float(np.sum(omega ** 2 - jumps ** 2 / denominator) * dtheta)


def log_curvature_functional(omega: Sequence[float], aniso: DiscreteAnisotropy) -> float:
    """sum g_i log(omega_i) dtheta; stays bounded while the median weighted curvature does"""
    return float(np.sum(aniso.g_i * np.log(np.asarray(omega, dtype=float))) * aniso.dtheta)


def monitor(state: PolygonState) -> MonitorRecord:
    lengths = side_lengths(state)
    omega = state.aniso.g_i * state.aniso.curvature_factor / lengths
    area = float(0.5 * np.dot(state.d, lengths))
    return MonitorRecord(
        time=state.time,
        area=area,
        total_length=float(np.sum(lengths)),
        omega_min=float(np.min(omega)),
        omega_max=float(np.max(omega)),
        omega_median=median_weighted_curvature(omega),
        h1_functional=h1_functional(omega, state.dtheta),
        log_curvature=log_curvature_functional(omega, state.aniso) if np.all(omega > 0) else float("nan"),
        median_bound=float(1.25 * np.max(state.aniso.g_i) * np.sum(lengths) / area),
    )


def _check_horizon(t0: float, t_end: float, horizon: float, settings: IntegratorSettings):
    limit = t0 + (1.0 - settings.extinction_margin) * (horizon - t0)
    if t_end >= limit:
        raise ConfigurationError(
            f"t_end = {t_end:.6g} is not safely below the extinction time {horizon:.6g} "
            f"(margin {settings.extinction_margin})"
        )


def evolve(state0: PolygonState,
           t_end: float,
           tolerances: Optional[IntegratorSettings] = None,
           sample_times: Optional[Sequence[float]] = None) -> PolygonTrajectory:
    """
    Integrate d_i' = -omega_i(d) with adaptive embedded RK steps up to t_end.

    A monitor record is kept for every accepted step. A side shorter than
    vanish_tolerance * L_min(0) aborts the run with SideVanishedError.
    """
    settings = tolerances or IntegratorSettings()
    aniso = state0.aniso
    _check_horizon(state0.time, t_end, state0.time + extinction_time(state0), settings)

    threshold = settings.vanish_tolerance * float(np.min(side_lengths(state0)))
    trajectory = PolygonTrajectory()
    trajectory.append(state0, sampled=True)

    def rhs(t, d):
        return -_weighted_curvatures(d, aniso)

    def check(t, d):
        _raise_if_vanished(_side_lengths(d, aniso.dtheta), t, threshold, trajectory.final)

    logger.debug(f"Evolving N={aniso.n_sides} polygon from t={state0.time:.6g} to t={t_end:.6g}")
    try:
        for t, d, sampled in adaptive_steps(rhs, state0.time, state0.d, t_end, settings, sample_times,
                                            check=check):
            trajectory.append(PolygonState(time=t, aniso=aniso, d=d), sampled)
    except StepUnderflowError as error:
        error.last_state = trajectory.final
        raise

    logger.info(f"🔷 N={aniso.n_sides}: reached t={t_end:.6g} in {len(trajectory) - 1} steps")
    return trajectory


def evolve_curvatures(omega0: Sequence[float],
                      aniso: DiscreteAnisotropy,
                      t_end: float,
                      tolerances: Optional[IntegratorSettings] = None,
                      sample_times: Optional[Sequence[float]] = None,
                      t0: float = 0.0) -> CurvatureTrajectory:
    """Integrate the omega ODE system on its own, without the polygon geometry"""
    settings = tolerances or IntegratorSettings()
    times, omegas, samples = [t0], [np.array(omega0, dtype=float)], [0]

    for t, omega, sampled in adaptive_steps(lambda t, w: omega_ode_rhs(w, aniso), t0, omegas[0],
                                            t_end, settings, sample_times):
        times.append(t)
        omegas.append(omega)
        if sampled:
            samples.append(len(times) - 1)

    return CurvatureTrajectory(times=np.array(times), omegas=np.array(omegas), sample_indices=samples)


def check_invariants(trajectory: PolygonTrajectory,
                     slack: float = 1e-10,
                     area_tolerance: float = 1e-8) -> InvariantReport:
    """Monotonicity, area affinity and convexity along a recorded run"""
    records = trajectory.monitors
    aniso = trajectory.states[0].aniso
    t = np.array([r.time for r in records])
    area = np.array([r.area for r in records])
    length = np.array([r.total_length for r in records])
    omega_min = np.array([r.omega_min for r in records])
    h1 = np.array([r.h1_functional for r in records])
    median = np.array([r.omega_median for r in records])
    bound = np.array([r.median_bound for r in records])

    def _never_drops(values):
        return bool(np.all(np.diff(values) >= -slack * np.maximum(1.0, np.abs(values[:-1]))))

    deviation = area - area[0] - area_rate(aniso) * (t - t[0])
    worst = float(np.max(np.abs(deviation))) if deviation.size else 0.0

    return InvariantReport(
        omega_min_nondecreasing=_never_drops(omega_min),
        length_decreasing=_never_drops(-length),
        h1_nondecreasing=_never_drops(h1),
        area_affine=worst < area_tolerance,
        convex=bool(np.all(omega_min > 0)),
        median_bounded=bool(np.all(median <= bound * (1.0 + slack))),
        worst_area_deviation=worst,
    )
