"""
Experiment driver
Runs matched polygon / reference pairs, measures the Hausdorff and curvature
errors at the comparison instants, fits convergence rates over a doubling
ladder of polygon sizes and checks the discrete Poincare inequality.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import solve_banded

from .anisotropy import AnisotropyFunction, build_energy, discretize
from .crystalline_flow import (
    InvariantReport,
    PolygonState,
    PolygonTrajectory,
    check_invariants,
    evolve,
    extinction_time,
)
from .errors import ConfigurationError, CrystalflowError
from .geometry import (
    curvature_errors,
    doubling_ratios,
    hausdorff_distance,
    initial_error_study,
    initial_polygon,
    tangent_polygon,
    vertices_from_support,
)
from .models import (
    ConvergenceRecord,
    ConvergenceReport,
    InitialErrorRecord,
    PoincareResult,
    RateSummary,
    RunConfig,
)
from .smooth_flow import (
    ReferenceTrajectory,
    SupportFunctionField,
    build_curve,
    evolve_reference,
    smooth_extinction_time,
)

logger = logging.getLogger(__name__)

# slope windows of the log-log fits
RATE_WINDOWS: Dict[str, Tuple[float, float]] = {
    "hausdorff": (1.6, 2.4),
    "lambda": (1.6, 2.4),
    "upsilon": (0.7, 1.3),
    "hausdorff_tangent": (1.6, 2.4),
    "tangent_curve": (1.6, 2.4),
}
GATING_RATES = ("hausdorff", "upsilon")

# below this every error of a quantity is integrator noise, not discretization error
EXACT_ERROR = 1e-7


@dataclass(frozen=True)
class ErrorSample:
    """Errors of one polygon against the reference at one comparison instant"""
    time: float
    hausdorff: float
    hausdorff_tangent: float
    tangent_curve: float
    lambda_max: float
    upsilon_max: float


@dataclass
class PairedRun:
    n_sides: int
    t_end: float
    extinction_time: float
    polygon: PolygonTrajectory
    reference: ReferenceTrajectory
    errors: List[ErrorSample] = field(default_factory=list)
    invariants: Optional[InvariantReport] = None

    def sup(self, name: str) -> float:
        return float(max(getattr(sample, name) for sample in self.errors))

    def record(self) -> ConvergenceRecord:
        return ConvergenceRecord(
            n_sides=self.n_sides,
            dtheta=2.0 * np.pi / self.n_sides,
            t_end=self.t_end,
            extinction_time=self.extinction_time,
            sup_hausdorff=self.sup("hausdorff"),
            sup_lambda=self.sup("lambda_max"),
            sup_upsilon=self.sup("upsilon_max"),
            sup_hausdorff_tangent=self.sup("hausdorff_tangent"),
            sup_tangent_curve=self.sup("tangent_curve"),
            steps=len(self.polygon) - 1,
            invariants_ok=bool(self.invariants is not None and self.invariants.ok),
        )


def comparison_times(t_end: float, count: int) -> np.ndarray:
    """count equally spaced instants in (0, t_end], the last one being t_end"""
    return np.linspace(0.0, t_end, count + 1)[1:]


def _context(config: RunConfig, n: Optional[int] = None) -> dict:
    context = {"energy": config.energy.kind.value, "curve": config.curve.kind.value}
    if n is not None:
        context["n_sides"] = n
    return context


def compare(state: PolygonState, curve: SupportFunctionField, energy: AnisotropyFunction,
            hausdorff_samples: int) -> ErrorSample:
    """D(P, C), both triangle halves through C_P, and the max-norm curvature errors"""
    polygon = vertices_from_support(state)
    circumscribed = vertices_from_support(tangent_polygon(curve, state.aniso))
    lam, upsilon = curvature_errors(curve, energy, state)
    return ErrorSample(
        time=state.time,
        hausdorff=hausdorff_distance(polygon, curve, hausdorff_samples),
        hausdorff_tangent=hausdorff_distance(polygon, circumscribed, hausdorff_samples),
        tangent_curve=hausdorff_distance(circumscribed, curve, hausdorff_samples),
        lambda_max=float(np.max(np.abs(lam))),
        upsilon_max=float(np.max(np.abs(upsilon))),
    )


def common_end_time(config: RunConfig, energy: AnisotropyFunction, curve: SupportFunctionField,
                    n_values: Sequence[int]) -> float:
    """t_end_fraction of the earliest extinction among the polygons and the reference"""
    horizons = [smooth_extinction_time(curve, energy)]
    for n in n_values:
        horizons.append(extinction_time(initial_polygon(curve, n, discretize(energy, n))))
    return config.t_end_fraction * min(horizons)


def run_pair(config: RunConfig, n: int,
             reference: Optional[ReferenceTrajectory] = None,
             t_end: Optional[float] = None) -> PairedRun:
    """
    Evolve the N-gon circumscribed about the configured curve next to the reference
    flow and record the errors at every comparison instant.

    A precomputed reference must have been sampled at comparison_times(t_end, sample_times).
    """
    try:
        energy = build_energy(config.energy, samples=config.validation_samples)
        curve = build_curve(config.curve, config.reference_grid)
        aniso = discretize(energy, n)
        state0 = initial_polygon(curve, n, aniso)
        horizon = extinction_time(state0)
        if t_end is None:
            t_end = config.t_end_fraction * min(horizon, smooth_extinction_time(curve, energy))
        samples = comparison_times(t_end, config.sample_times)

        if reference is None:
            reference = evolve_reference(curve, energy, t_end, config.reference_integrator, samples)
        polygon = evolve(state0, t_end, config.integrator, samples)

        states = polygon.sampled_states()
        if len(states) != len(reference) or not np.allclose([s.time for s in states], reference.times,
                                                           rtol=0.0, atol=1e-12 * max(1.0, t_end)):
            raise ConfigurationError("reference trajectory was not sampled at the polygon comparison times")

        run = PairedRun(n_sides=n, t_end=t_end, extinction_time=horizon, polygon=polygon, reference=reference)
        for state, snapshot in zip(states, reference):
            run.errors.append(compare(state, snapshot, energy, config.hausdorff_samples))
        run.invariants = check_invariants(polygon)
    except CrystalflowError as error:
        raise error.with_context(**_context(config, n))

    if not run.invariants.ok:
        logger.warning(f"⚠️ N={n}: monotone invariants violated ({run.invariants})")
    logger.info(f"📊 N={n}: sup D={run.sup('hausdorff'):.3e}, sup Lambda={run.sup('lambda_max'):.3e}, "
                f"sup Upsilon={run.sup('upsilon_max'):.3e}")
    return run


def fit_rates(quantity: str, dtheta: Sequence[float], errors: Sequence[float],
              window: Optional[Tuple[float, float]] = None) -> RateSummary:
    """Doubling ratios, their log2 orders, and the least-squares slope of log e against log dtheta"""
    if window is None:
        window = RATE_WINDOWS.get(quantity, (1.6, 2.4))
    dtheta = np.asarray(dtheta, dtype=float)
    errors = np.asarray(errors, dtype=float)
    n_values = [int(round(2.0 * np.pi / step)) for step in dtheta]

    ratios = doubling_ratios(n_values, errors)
    orders = [float(np.log2(r)) if r is not None else None for r in ratios]

    if np.all(errors < EXACT_ERROR):
        return RateSummary(quantity=quantity, ratios=ratios, orders=orders, slope=None,
                           window=window, status="exact", passed=True)

    slope = None
    if np.all(errors > 0) and errors.size >= 2:
        slope = float(np.polyfit(np.log(dtheta), np.log(errors), 1)[0])
    passed = slope is not None and window[0] <= slope <= window[1]
    return RateSummary(quantity=quantity, ratios=ratios, orders=orders, slope=slope,
                       window=window, status="fitted", passed=passed)


def _rates(records: List[ConvergenceRecord]) -> Dict[str, RateSummary]:
    dtheta = [r.dtheta for r in records]
    columns = {
        "hausdorff": [r.sup_hausdorff for r in records],
        "lambda": [r.sup_lambda for r in records],
        "upsilon": [r.sup_upsilon for r in records],
        "hausdorff_tangent": [r.sup_hausdorff_tangent for r in records],
        "tangent_curve": [r.sup_tangent_curve for r in records],
    }
    rates = {}
    for quantity, values in columns.items():
        rates[quantity] = fit_rates(quantity, dtheta, values)
        summary = rates[quantity]
        slope = "n/a" if summary.slope is None else f"{summary.slope:.3f}"
        logger.info(f"📈 {quantity}: status={summary.status}, slope={slope}")
    return rates


def _validate_ladder(n_list: Sequence[int]) -> List[int]:
    n_values = sorted(n_list)
    if len(n_values) < 3:
        raise ConfigurationError(f"a convergence study needs at least 3 polygon sizes, got {n_values}")
    for small, large in zip(n_values, n_values[1:]):
        if large != 2 * small:
            raise ConfigurationError(f"polygon sizes must double: {small} is followed by {large}")
    return n_values


def run_study(config: RunConfig) -> Tuple[ConvergenceReport, List[PairedRun]]:
    """One shared reference run, then one polygon run per N (in worker processes when workers > 1)"""
    n_values = _validate_ladder(config.n_list)
    try:
        energy = build_energy(config.energy, samples=config.validation_samples)
        curve = build_curve(config.curve, config.reference_grid)
        t_end = common_end_time(config, energy, curve, n_values)
        logger.info(f"🚀 Convergence study: N={n_values}, M={config.reference_grid}, t_end={t_end:.6g}")
        reference = evolve_reference(curve, energy, t_end, config.reference_integrator,
                                     comparison_times(t_end, config.sample_times))
    except CrystalflowError as error:
        raise error.with_context(**_context(config))

    if config.workers > 1:
        logger.info(f"⚙️  Running {len(n_values)} polygon sizes on {config.workers} workers")
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = [executor.submit(run_pair, config, n, reference, t_end) for n in n_values]
            runs = [future.result() for future in futures]
    else:
        runs = [run_pair(config, n, reference, t_end) for n in n_values]

    records = [run.record() for run in runs]
    rates = _rates(records)
    passed = all(rates[name].passed for name in GATING_RATES)
    if not passed:
        failed = [name for name in GATING_RATES if not rates[name].passed]
        logger.warning(f"⚠️ Rate check failed for {', '.join(failed)}")
    else:
        logger.info("✅ Convergence rates within their windows")

    report = ConvergenceReport(config=config.model_dump(mode="json"), records=records,
                               rates=rates, passed=passed)
    return report, runs


def convergence_study(config: RunConfig) -> ConvergenceReport:
    return run_study(config)[0]


def polygon_run(config: RunConfig, n: Optional[int] = None) -> PolygonTrajectory:
    """Single polygon flow to t_end_fraction of its own extinction time"""
    n = n or config.single_run_sides
    try:
        energy = build_energy(config.energy, samples=config.validation_samples)
        curve = build_curve(config.curve, config.reference_grid)
        state0 = initial_polygon(curve, n, discretize(energy, n))
        t_end = config.t_end_fraction * extinction_time(state0)
        return evolve(state0, t_end, config.integrator, comparison_times(t_end, config.sample_times))
    except CrystalflowError as error:
        raise error.with_context(**_context(config, n))


def reference_run(config: RunConfig, residuals: bool = True) -> ReferenceTrajectory:
    """Single reference flow to t_end_fraction of the smooth extinction time"""
    try:
        energy = build_energy(config.energy, samples=config.validation_samples)
        curve = build_curve(config.curve, config.reference_grid)
        t_end = config.t_end_fraction * smooth_extinction_time(curve, energy)
        return evolve_reference(curve, energy, t_end, config.reference_integrator,
                                comparison_times(t_end, config.sample_times), residuals=residuals)
    except CrystalflowError as error:
        raise error.with_context(**_context(config))


def initial_errors(config: RunConfig) -> List[InitialErrorRecord]:
    try:
        energy = build_energy(config.energy, samples=config.validation_samples)
        curve = build_curve(config.curve, config.reference_grid)
        return initial_error_study(curve, energy, config.n_list, config.hausdorff_samples)
    except CrystalflowError as error:
        raise error.with_context(**_context(config))


def poincare_ratio(p: Sequence[float]) -> float:
    """sum (p_{m+1} - p_m)^2 / sum p_m^2 for a sequence p_0..p_M"""
    p = np.asarray(p, dtype=float)
    return float(np.sum(np.diff(p) ** 2) / np.sum(p ** 2))


def smallest_tridiagonal_eigenvalue(size: int, tolerance: float = 1e-15,
                                    max_iterations: int = 500) -> Tuple[float, int]:
    """Inverse iteration on the size x size matrix tridiag(-1, 2, -1)"""
    bands = np.zeros((3, size))
    bands[0, 1:] = -1.0
    bands[1, :] = 2.0
    bands[2, :-1] = -1.0

    def apply(v):
        product = 2.0 * v
        product[:-1] -= v[1:]
        product[1:] -= v[:-1]
        return product

    v = np.ones(size) / np.sqrt(size)
    eigenvalue = float(v @ apply(v))
    for iteration in range(1, max_iterations + 1):
        w = solve_banded((1, 1), bands, v)
        v = w / np.linalg.norm(w)
        updated = float(v @ apply(v))
        if abs(updated - eigenvalue) <= tolerance:
            return updated, iteration
        eigenvalue = updated
    return eigenvalue, max_iterations


def poincare_check(m: int, trials: int, seed: Union[int, np.random.SeedSequence] = 0) -> PoincareResult:
    """
    sum p_m^2 <= sum (p_{m+1} - p_m)^2 / (2(1 - cos(pi/M))) on random sequences with
    p_0 = p_M = 0, plus the matching smallest eigenvalue of tridiag(-1, 2, -1)
    """
    if m < 2 or trials < 1:
        raise ConfigurationError(f"poincare_check needs m >= 2 and trials >= 1, got m={m}, trials={trials}")

    expected = 2.0 * (1.0 - np.cos(np.pi / m))
    rng = np.random.default_rng(seed)
    p = rng.standard_normal((trials, m + 1))
    p[:, 0] = 0.0
    p[:, -1] = 0.0

    lhs = np.sum(p ** 2, axis=1)
    rhs = np.sum(np.diff(p, axis=1) ** 2, axis=1) / expected
    worst_slack = float(np.min((rhs - lhs) / rhs))

    eigenvalue, iterations = smallest_tridiagonal_eigenvalue(m - 1)
    passed = bool(worst_slack >= -1e-12 and abs(eigenvalue - expected) < 1e-10)
    return PoincareResult(m=m, trials=trials, worst_slack=worst_slack, eigenvalue=eigenvalue,
                          expected_eigenvalue=float(expected), iterations=iterations, passed=passed)


def poincare_sweep(m_values: Sequence[int], trials: int, seed: int = 0) -> List[PoincareResult]:
    children = np.random.SeedSequence(seed).spawn(len(m_values))
    results = [poincare_check(m, trials, child) for m, child in zip(m_values, children)]
    failed = [r.m for r in results if not r.passed]
    if failed:
        logger.warning(f"⚠️ Poincare check failed for M={failed}")
    else:
        logger.info(f"✅ Poincare check passed for {len(results)} values of M")
    return results
