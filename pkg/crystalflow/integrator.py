"""
Adaptive time stepping shared by the polygon and reference flows
Wraps scipy's embedded Runge-Kutta solvers (RK45 is the Dormand-Prince 5(4) pair) and BDF
for stiff systems, and yields every accepted step so callers can record monitors or check for breakdown
"""

import logging
from typing import Callable, Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import BDF, DOP853, RK23, RK45

from .errors import ConfigurationError, StepUnderflowError
from .models import IntegratorMethod, IntegratorSettings

logger = logging.getLogger(__name__)

_SOLVERS = {
    IntegratorMethod.RK45: RK45,
    IntegratorMethod.DOP853: DOP853,
    IntegratorMethod.RK23: RK23,
    IntegratorMethod.BDF: BDF,
}

RightHandSide = Callable[[float, np.ndarray], np.ndarray]
StateCheck = Callable[[float, np.ndarray], None]


def stop_times(t0: float, t_end: float, sample_times: Optional[Sequence[float]] = None) -> np.ndarray:
    """Sorted segment end points in (t0, t_end], always ending at t_end"""
    if t_end <= t0:
        raise ConfigurationError(f"end time {t_end} must exceed start time {t0}")
    stops = [t_end]
    if sample_times is not None:
        stops.extend(float(t) for t in sample_times if t0 < t < t_end)
    return np.unique(np.asarray(stops, dtype=float))


def adaptive_steps(rhs: RightHandSide,
                   t0: float,
                   y0: np.ndarray,
                   t_end: float,
                   settings: IntegratorSettings,
                   sample_times: Optional[Sequence[float]] = None,
                   jac_sparsity=None,
                   check: Optional[StateCheck] = None) -> Iterator[Tuple[float, np.ndarray, bool]]:
    """
    Integrate y' = rhs(t, y) from t0 to t_end, yielding (t, y, is_sample) after each accepted step.

    The run is split into segments ending exactly at the requested sample times, so
    sampled states are integrated to, never interpolated. The last step size of a
    segment seeds the first step of the next one.

    check(t, y) runs on every accepted state before it is yielded and raises to abort
    the run. The right-hand side must not raise: scipy also evaluates it on trial
    stages of steps it later rejects.
    """
    solver_class = _SOLVERS[IntegratorMethod(settings.method)]
    options = {"rtol": settings.tol_rel, "atol": settings.tol_abs}
    if settings.max_step is not None:
        options["max_step"] = settings.max_step
    if jac_sparsity is not None and solver_class is BDF:
        options["jac_sparsity"] = jac_sparsity

    t = float(t0)
    y = np.array(y0, dtype=float)
    step_hint = None
    accepted = 0

    for stop in stop_times(t0, t_end, sample_times):
        first_step = None
        if step_hint is not None:
            first_step = min(step_hint, stop - t)
        solver = solver_class(rhs, t, y, stop, first_step=first_step, **options)

        while solver.status == "running":
            message = solver.step()
            if solver.status == "failed":
                raise StepUnderflowError(
                    f"integration failed at t = {solver.t:.17g}: {message}",
                    time=float(t), last_state=y.copy(),
                )
            if check is not None:
                check(float(solver.t), solver.y)
            t, y = float(solver.t), np.array(solver.y)
            accepted += 1
            yield t, y, solver.status == "finished"

        step_hint = getattr(solver, "h_abs", None)
        logger.debug(f"Segment to t={stop:.6g} done after {accepted} accepted steps")
