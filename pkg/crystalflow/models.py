from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


class EnergyKind(str, Enum):
    ISOTROPIC = "isotropic"
    COSINE = "cosine"
    FOURIER = "fourier"


class CurveKind(str, Enum):
    CIRCLE = "circle"
    ELLIPSE = "ellipse"
    SERIES = "series"


class IntegratorMethod(str, Enum):
    RK45 = "RK45"
    DOP853 = "DOP853"
    RK23 = "RK23"
    BDF = "BDF"


class EnergySpec(BaseModel):
    """Catalog key plus parameters of the interfacial energy f"""
    kind: EnergyKind = EnergyKind.COSINE
    scale: float = Field(default=1.0, description="Constant term of f")
    epsilon: float = Field(default=0.1, description="Amplitude of the cosine energy")
    harmonic: int = Field(default=2, description="Harmonic k of the cosine energy")
    cos_coeffs: List[float] = Field(default_factory=list, description="Fourier energy cos(k theta) coefficients, k = 1, 2, ...")
    sin_coeffs: List[float] = Field(default_factory=list, description="Fourier energy sin(k theta) coefficients, k = 1, 2, ...")

    @field_validator("scale")
    @classmethod
    def _positive_scale(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("energy scale must be positive")
        return value

    @field_validator("harmonic")
    @classmethod
    def _nonnegative_harmonic(cls, value: int) -> int:
        if value < 0:
            raise ValueError("harmonic must be >= 0")
        return value


class CurveSpec(BaseModel):
    """Initial smooth convex curve"""
    kind: CurveKind = CurveKind.CIRCLE
    r0: float = Field(default=1.0, description="Circle radius, or constant term of a support series")
    a: float = Field(default=2.0, description="Ellipse semiaxis along x")
    b: float = Field(default=1.0, description="Ellipse semiaxis along y")
    series_cos: List[float] = Field(default_factory=list, description="Support series cos(k phi) coefficients, k = 1, 2, ...")
    series_sin: List[float] = Field(default_factory=list, description="Support series sin(k phi) coefficients, k = 1, 2, ...")

    @model_validator(mode="after")
    def _positive_sizes(self) -> "CurveSpec":
        if self.r0 <= 0 or self.a <= 0 or self.b <= 0:
            raise ValueError("curve sizes r0, a, b must be positive")
        return self


class IntegratorSettings(BaseModel):
    """Adaptive step controls of one flow: scipy solver, tolerances and stopping margins"""
    tol_abs: float = Field(default=1e-10, gt=0)
    tol_rel: float = Field(default=1e-10, gt=0)
    method: IntegratorMethod = IntegratorMethod.RK45
    max_step: Optional[float] = Field(default=None, gt=0)
    vanish_tolerance: float = Field(default=1e-9, gt=0, description="Side vanishes below this fraction of the initial L_min")
    extinction_margin: float = Field(default=1e-3, ge=0, lt=1, description="t_end must stay below (1 - margin) of the extinction time")


def reference_integrator() -> IntegratorSettings:
    """Defaults of the method-of-lines reference flow, a stiff system"""
    return IntegratorSettings(method=IntegratorMethod.BDF)


class RunConfig(BaseModel):
    """Complete configuration of a polygon / reference experiment"""
    energy: EnergySpec = Field(default_factory=EnergySpec)
    curve: CurveSpec = Field(default_factory=CurveSpec)
    n_list: List[int] = Field(default_factory=lambda: [16, 32, 64, 128])
    n_sides: Optional[int] = Field(default=None, description="Polygon size for single runs; defaults to n_list[0]")
    reference_grid: int = Field(default=4096, ge=16, description="Reference resolution M")
    t_end_fraction: float = Field(default=0.6, description="End time as a fraction of the extinction time")
    integrator: IntegratorSettings = Field(default_factory=IntegratorSettings, description="Polygon flow integrator")
    reference_integrator: IntegratorSettings = Field(default_factory=reference_integrator,
                                                     description="Reference flow integrator")
    sample_times: int = Field(default=64, ge=1, description="Number of comparison instants in (0, t_end]")
    hausdorff_samples: int = Field(default=8192, ge=64)
    validation_samples: int = Field(default=4096, ge=64)
    workers: int = Field(default=1, ge=1)
    seed: int = 0
    output_dir: Path = Path("results")

    @field_validator("t_end_fraction")
    @classmethod
    def _fraction_below_one(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("t_end_fraction must lie in (0, 1)")
        return value

    @model_validator(mode="after")
    def _polygon_sizes_fit_grid(self) -> "RunConfig":
        if not self.n_list:
            raise ValueError("n_list must not be empty")
        sizes = list(self.n_list) + ([self.n_sides] if self.n_sides is not None else [])
        for n in sizes:
            if n < 4:
                raise ValueError(f"polygon size {n} is below 4")
            if self.reference_grid % n != 0:
                raise ValueError(f"polygon size {n} does not divide the reference grid {self.reference_grid}")
        return self

    @property
    def single_run_sides(self) -> int:
        return self.n_sides if self.n_sides is not None else self.n_list[0]


class ValidationResult(BaseModel):
    passed: bool
    f_min: float
    g_min: float
    theta_f_min: float
    theta_g_min: float
    samples: int


class InitialErrorRecord(BaseModel):
    n_sides: int
    dtheta: float
    lambda_max0: float
    upsilon_max0: float
    hausdorff0: float
    lambda_ratio: Optional[float] = None
    upsilon_ratio: Optional[float] = None
    hausdorff_ratio: Optional[float] = None


class ConvergenceRecord(BaseModel):
    """Sup-over-time errors of one polygon size"""
    n_sides: int
    dtheta: float
    t_end: float
    extinction_time: float
    sup_hausdorff: float
    sup_lambda: float
    sup_upsilon: float
    sup_hausdorff_tangent: float = Field(description="sup_t D(P, C_P)")
    sup_tangent_curve: float = Field(description="sup_t D(C_P, C)")
    steps: int
    invariants_ok: bool


class RateSummary(BaseModel):
    quantity: str
    ratios: List[Optional[float]] = Field(default_factory=list, description="Consecutive doubling ratios e(N)/e(2N)")
    orders: List[Optional[float]] = Field(default_factory=list, description="log2 of the doubling ratios")
    slope: Optional[float] = Field(default=None, description="Least-squares slope of log error against log dtheta")
    window: Tuple[float, float]
    status: str = "fitted"
    passed: bool


class ConvergenceReport(BaseModel):
    config: Dict[str, Any]
    records: List[ConvergenceRecord]
    rates: Dict[str, RateSummary]
    passed: bool


class PoincareResult(BaseModel):
    """Discrete Poincare inequality check for sequences with p_0 = p_M = 0"""
    m: int
    trials: int
    worst_slack: float = Field(description="min over trials of rhs - lhs, scaled by rhs")
    eigenvalue: float = Field(description="Smallest eigenvalue of the tridiagonal (2, -1) matrix by inverse iteration")
    expected_eigenvalue: float
    iterations: int
    passed: bool
