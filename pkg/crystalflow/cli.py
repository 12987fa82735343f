"""
crystalflow command line
Every subcommand reads an optional key=value run file (--config) and accepts a
--key=value override for each of its keys.
"""

import functools
import logging
from pathlib import Path
from typing import List, Optional

import click
import numpy as np
from rich.console import Console
from rich.table import Table

from .analysis import (
    initial_errors,
    poincare_sweep,
    polygon_run,
    reference_run,
    run_study,
)
from .anisotropy import build_energy, discretize, validate_energy
from .config_manager import FLAT_KEYS, load_run_config
from .crystalline_flow import check_invariants
from .errors import ConfigurationError, CrystalflowError, InvalidEnergyError
from .models import ConvergenceReport
from .reports import (
    emit_reports,
    write_initial_errors_csv,
    write_poincare_csv,
    write_reference_csv,
    write_trajectory_csv,
)

logger = logging.getLogger("crystalflow")
console = Console()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
REFERENCE_CSV_COLUMNS = 256

KEY_HELP = {
    "energy": "Energy catalog key: isotropic, cosine or fourier",
    "n_list": "Comma-separated polygon sizes, each dividing the grid",
    "n": "Polygon size for single runs",
    "grid": "Reference resolution M",
    "samples": "Number of comparison instants in (0, t_end]",
    "out": "Output directory",
    "method": "RK45, DOP853, RK23 or BDF",
}


def setup_logging(verbose: bool = False, log_file: Optional[Path] = None):
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def config_options(command):
    """--config plus one override option per run-file key"""
    for key in reversed(list(FLAT_KEYS)):
        names = [f"--{key}"]
        if "_" in key:
            names.append(f"--{key.replace('_', '-')}")
        help_text = KEY_HELP.get(key, f"Override the '{key}' config key")
        command = click.option(*names, key, default=None, help=help_text)(command)
    return click.option("--config", "-c", "config_path", default=None,
                        type=click.Path(path_type=Path, dir_okay=False),
                        help="key=value run file")(command)


def handle_errors(command):
    """Map crystalflow failures to their exit codes"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except CrystalflowError as error:
            logger.error(f"❌ {type(error).__name__}: {error}")
            console.print(f"[red]❌ {type(error).__name__}: {error}[/red]")
            raise SystemExit(error.exit_code)
    return wrapper


def _fmt(value: Optional[float], spec: str = ".3e") -> str:
    return "-" if value is None else format(value, spec)


def _status(passed: bool) -> str:
    return "[green]PASS[/green]" if passed else "[red]FAIL[/red]"


class CrystalflowGroup(click.Group):
    """Command-line usage errors exit with 1; exit code 2 is kept for numerical failures"""

    def parse_args(self, ctx, args):
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as error:
            error.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as error:
            error.exit_code = 1
            raise


@click.group(cls=CrystalflowGroup)
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.option("--log-file", type=click.Path(path_type=Path, dir_okay=False), default=None,
              help="Also write the log to this file")
def cli(verbose: bool, log_file: Optional[Path]):
    """Crystalline curvature flow of convex polygons and its convergence to the smooth flow"""
    setup_logging(verbose, log_file)


@cli.command("validate-energy")
@config_options
@handle_errors
def validate_energy_command(config_path: Optional[Path], **overrides):
    """Check f > 0 and f + f'' > 0 and show g_i for each polygon size"""
    config = load_run_config(config_path, overrides)
    energy = build_energy(config.energy, check=False)
    result = validate_energy(energy, config.validation_samples)

    table = Table(title=f"Energy '{energy.name}'")
    table.add_column("quantity")
    table.add_column("minimum", justify="right")
    table.add_column("at theta", justify="right")
    table.add_row("f", _fmt(result.f_min, ".6g"), _fmt(result.theta_f_min, ".4f"))
    table.add_row("f + f''", _fmt(result.g_min, ".6g"), _fmt(result.theta_g_min, ".4f"))
    console.print(table)

    if not result.passed:
        raise InvalidEnergyError(f"energy '{energy.name}' is not admissible "
                                 f"(min f = {result.f_min:.6g}, min f + f'' = {result.g_min:.6g})")

    for n in sorted(config.n_list):
        aniso = discretize(energy, n)
        console.print(f"N={n}: min g_i = {np.min(aniso.g_i):.6g}, max g_i = {np.max(aniso.g_i):.6g}")
    console.print(f"✅ {_status(True)} ({result.samples} samples)")


@cli.command("evolve")
@config_options
@handle_errors
def evolve_command(config_path: Optional[Path], **overrides):
    """Single polygon run to t_end_fraction of its extinction time"""
    config = load_run_config(config_path, overrides)
    trajectory = polygon_run(config)
    n = trajectory.final.n_sides
    path = write_trajectory_csv(trajectory, config.output_dir / f"trajectory_N{n}.csv")

    table = Table(title=f"Polygon flow N={n}")
    for column in ("t", "area", "length", "omega min", "omega max", "omega*", "H1"):
        table.add_column(column, justify="right")
    for i in trajectory.sample_indices:
        r = trajectory.monitors[i]
        table.add_row(_fmt(r.time, ".5f"), _fmt(r.area, ".8f"), _fmt(r.total_length, ".8f"),
                      _fmt(r.omega_min, ".6f"), _fmt(r.omega_max, ".6f"), _fmt(r.omega_median, ".6f"),
                      _fmt(r.h1_functional, ".6f"))
    console.print(table)

    invariants = check_invariants(trajectory)
    console.print(f"Invariants: {_status(invariants.ok)} "
                  f"(worst area deviation {invariants.worst_area_deviation:.3e})")
    console.print(f"💾 {path}")


@cli.command("reference")
@config_options
@handle_errors
def reference_command(config_path: Optional[Path], **overrides):
    """Single reference run to t_end_fraction of the smooth extinction time"""
    config = load_run_config(config_path, overrides)
    trajectory = reference_run(config)
    stride = max(1, config.reference_grid // REFERENCE_CSV_COLUMNS)
    path = write_reference_csv(trajectory, config.output_dir / f"reference_M{config.reference_grid}.csv", stride)

    worst = max((residual for _, residual in trajectory.residuals), default=float("nan"))
    console.print(f"🌀 M={config.reference_grid}: {trajectory.steps} steps to t={trajectory.final.time:.6g}, "
                  f"max residual {worst:.3e}")
    console.print(f"💾 {path}")


def _print_report(report: ConvergenceReport):
    records = Table(title="Sup-over-time errors")
    for column in ("N", "dtheta", "D(P,C)", "D(P,C_P)", "D(C_P,C)", "Lambda", "Upsilon", "steps", "invariants"):
        records.add_column(column, justify="right")
    for r in report.records:
        records.add_row(str(r.n_sides), _fmt(r.dtheta, ".5f"), _fmt(r.sup_hausdorff), _fmt(r.sup_hausdorff_tangent),
                        _fmt(r.sup_tangent_curve), _fmt(r.sup_lambda), _fmt(r.sup_upsilon), str(r.steps),
                        _status(r.invariants_ok))
    console.print(records)

    rates = Table(title="Convergence rates")
    for column in ("quantity", "ratios", "slope", "window", "status", "result"):
        rates.add_column(column)
    for name, summary in report.rates.items():
        ratios = ", ".join(_fmt(r, ".3f") for r in summary.ratios[1:])
        window = f"[{summary.window[0]}, {summary.window[1]}]"
        rates.add_row(name, ratios, _fmt(summary.slope, ".3f"), window, summary.status, _status(summary.passed))
    console.print(rates)


@cli.command("converge")
@config_options
@handle_errors
def converge_command(config_path: Optional[Path], **overrides):
    """Full convergence study over n_list with report.yaml and per-N CSVs"""
    config = load_run_config(config_path, overrides)
    report, runs = run_study(config)
    emit_reports(report, config.output_dir, runs)
    _print_report(report)
    console.print(f"Overall: {_status(report.passed)}")
    if not report.passed:
        raise SystemExit(1)


@cli.command("initial-error")
@config_options
@handle_errors
def initial_error_command(config_path: Optional[Path], **overrides):
    """Lambda, Upsilon and Hausdorff errors of the initial polygons"""
    config = load_run_config(config_path, overrides)
    records = initial_errors(config)
    path = write_initial_errors_csv(records, config.output_dir / "initial_errors.csv")

    table = Table(title="Initial discretization errors")
    for column in ("N", "Lambda(0)", "ratio", "Upsilon(0)", "ratio", "D(0)", "ratio"):
        table.add_column(column, justify="right")
    for r in records:
        table.add_row(str(r.n_sides), _fmt(r.lambda_max0), _fmt(r.lambda_ratio, ".3f"), _fmt(r.upsilon_max0),
                      _fmt(r.upsilon_ratio, ".3f"), _fmt(r.hausdorff0), _fmt(r.hausdorff_ratio, ".3f"))
    console.print(table)
    console.print(f"💾 {path}")


@cli.command("poincare")
@click.option("--m-min", default=2, show_default=True, type=int)
@click.option("--m-max", default=64, show_default=True, type=int)
@click.option("--trials", default=1000, show_default=True, type=int)
@config_options
@handle_errors
def poincare_command(m_min: int, m_max: int, trials: int, config_path: Optional[Path], **overrides):
    """Discrete Poincare inequality on random zero-endpoint sequences, seeded by the seed key"""
    if m_max < m_min:
        raise ConfigurationError(f"--m-max {m_max} is below --m-min {m_min}")
    config = load_run_config(config_path, overrides)
    results = poincare_sweep(range(m_min, m_max + 1), trials, config.seed)
    path = write_poincare_csv(results, config.output_dir / "poincare.csv")

    failed = [r for r in results if not r.passed]
    worst = min(results, key=lambda r: r.worst_slack)
    console.print(f"M={m_min}..{m_max}, {trials} trials each: worst relative slack {worst.worst_slack:.3e} "
                  f"at M={worst.m}")
    console.print(f"max eigenvalue error {max(abs(r.eigenvalue - r.expected_eigenvalue) for r in results):.3e}")
    console.print(f"{_status(not failed)}  💾 {path}")
    if failed:
        raise SystemExit(1)


def main():
    cli(prog_name="crystalflow")


if __name__ == "__main__":
    main()
