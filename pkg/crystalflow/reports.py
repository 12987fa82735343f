"""
Report and CSV writers
The report is one YAML document; every run also gets CSV tables written with pandas.
Nothing time-dependent is written, so identical runs produce identical files.
"""

import logging
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import pandas as pd
import yaml

from .analysis import PairedRun
from .crystalline_flow import PolygonTrajectory
from .errors import ReportWriteError
from .models import ConvergenceReport, InitialErrorRecord, PoincareResult
from .smooth_flow import ReferenceTrajectory, field_area

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
REPORT_NAME = "report.yaml"


@contextmanager
def _writing(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        yield path
    except OSError as error:
        raise ReportWriteError(f"could not write {error.strerror or error}", path) from error


def write_yaml(document: Any, path: Path) -> Path:
    path = Path(path)
    with _writing(path):
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(document, f, sort_keys=False, default_flow_style=False)
    return path


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    with _writing(path):
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def trajectory_frame(trajectory: PolygonTrajectory, sampled_only: bool = False) -> pd.DataFrame:
    """Monitor columns, d_0..d_{N-1}, then the bound diagnostics; one row per state"""
    indices = trajectory.sample_indices if sampled_only else range(len(trajectory))
    rows = []
    for i in indices:
        state, record = trajectory.states[i], trajectory.monitors[i]
        row = {
            "t": record.time,
            "A": record.area,
            "L_total": record.total_length,
            "omega_min": record.omega_min,
            "omega_max": record.omega_max,
            "omega_median_star": record.omega_median,
            "h1_functional": record.h1_functional,
        }
        row.update({f"d_{j}": value for j, value in enumerate(state.d)})
        row["log_curvature"] = record.log_curvature
        row["median_bound"] = record.median_bound
        rows.append(row)
    return pd.DataFrame(rows)


def write_trajectory_csv(trajectory: PolygonTrajectory, path: Path, sampled_only: bool = False) -> Path:
    return write_frame(trajectory_frame(trajectory, sampled_only), path)


def write_errors_csv(run: PairedRun, path: Path) -> Path:
    return write_frame(pd.DataFrame([asdict(sample) for sample in run.errors]), path)


def write_reference_csv(trajectory: ReferenceTrajectory, path: Path, stride: int = 1) -> Path:
    """Sampled reference fields: t, A, optional residual, then every stride-th u_j"""
    residuals = dict(trajectory.residuals)
    rows = []
    for snapshot in trajectory:
        row = {"t": snapshot.time, "A": field_area(snapshot)}
        if residuals:
            row["residual"] = residuals.get(snapshot.time, float("nan"))
        row.update({f"u_{j}": snapshot.u[j] for j in range(0, snapshot.grid_size, stride)})
        rows.append(row)
    return write_frame(pd.DataFrame(rows), path)


def write_initial_errors_csv(records: Sequence[InitialErrorRecord], path: Path) -> Path:
    return write_frame(pd.DataFrame([r.model_dump() for r in records]), path)


def write_poincare_csv(results: Sequence[PoincareResult], path: Path) -> Path:
    return write_frame(pd.DataFrame([r.model_dump() for r in results]), path)


def emit_reports(report: ConvergenceReport, out_dir: Path, runs: Iterable[PairedRun] = (),
                 sampled_only: bool = False) -> List[Path]:
    """report.yaml plus trajectory_N{n}.csv and errors_N{n}.csv for every run"""
    out_dir = Path(out_dir)
    written = [write_yaml(report.model_dump(mode="json"), out_dir / REPORT_NAME)]
    for run in runs:
        written.append(write_trajectory_csv(run.polygon, out_dir / f"trajectory_N{run.n_sides}.csv",
                                            sampled_only=sampled_only))
        written.append(write_errors_csv(run, out_dir / f"errors_N{run.n_sides}.csv"))

    logger.info(f"💾 Results saved to: {out_dir}")
    for path in written:
        logger.info(f"  • {path.name}")
    return written
