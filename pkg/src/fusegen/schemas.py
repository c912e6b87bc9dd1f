"""Request/response models for the HTTP service.

Every service payload is defined here so the CLI (which calls the same
handlers in process, or over HTTP with --server) and the service agree
on one schema.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from .diagnostics import Diagnostic


class DiagnosticModel(BaseModel):
    severity: str
    message: str
    file: str
    line: int
    col: int
    rendered: str

    @classmethod
    def from_diagnostic(cls, diag: Diagnostic) -> "DiagnosticModel":
        return cls(
            severity=diag.severity,
            message=diag.message,
            file=diag.file,
            line=diag.line,
            col=diag.col,
            rendered=diag.render(),
        )


class SourceBundle(BaseModel):
    """A description plus everything needed to resolve it without a
    filesystem: include texts keyed by include name, and the invariant
    role assignment when the description has more than two invariants."""

    source: str
    filename: str = "<input>"
    includes: dict[str, str] = Field(default_factory=dict)
    process: list[str] | None = None
    measure: str | None = None


class ModelSummary(BaseModel):
    state: list[str]
    measurement: list[str]
    extras: list[str]
    linear: bool
    modes: list[str]
    report: str


class CheckRequest(SourceBundle):
    pass


class CheckResponse(BaseModel):
    ok: bool
    diagnostics: list[DiagnosticModel] = Field(default_factory=list)
    summary: ModelSummary | None = None


class GenerateRequest(SourceBundle):
    filter: str = "ekf"
    diff: str = "autodiff"
    prefix: str = "kf_"
    basename: str = "filter"
    single_precision: bool = False
    additive_noise: bool = True


class GeneratedFile(BaseModel):
    filename: str
    content: str


class GenerateResponse(BaseModel):
    header: GeneratedFile
    implementation: GeneratedFile
    warnings: list[DiagnosticModel] = Field(default_factory=list)
    summary: ModelSummary


class SimulateRequest(BaseModel):
    system: str = "pendulum"
    seed: int = 0
    dt: float = 0.01
    steps: int = 2000
    theta0_deg: float = 20.0
    omega0: float = 0.0
    length: float = 1.0
    mass: float = 1.0
    damping: float = 0.0
    process_variance: float = 0.0
    measurement_variance: float = 0.0
    speed: float = 0.2
    wheel_base: float = 0.16


class SimulateResponse(BaseModel):
    measurements_csv: str
    truth_csv: str
    state_names: list[str]
    measurement_names: list[str]
    extra_names: list[str]
    multi_mode: bool


class EvaluateRequest(SourceBundle):
    system: str = "pendulum"
    filter: str = "ekf"
    seeds: int = 10
    seed0: int = 1
    dt: float = 0.01
    steps: int = 2000
    theta0_deg: float = 20.0
    omega0: float = 0.0
    length: float = 1.0
    mass: float = 1.0
    damping: float = 0.0
    process_variance: float = 0.0
    measurement_variance: float = 0.0
    speed: float = 0.2
    wheel_base: float = 0.16
    init_state: list[float] | None = None
    init_theta_deg: float | None = None
    init_omega: float | None = None
    init_covariance: list[float] | None = None
    name: str = ""


class SeedScore(BaseModel):
    seed: int
    mse: dict[str, float]
    second_half_mse: dict[str, float]
    avg_position_error: float | None = None
    avg_yaw_error_deg: float | None = None
    updates_skipped: int = 0


class EvaluateResponse(BaseModel):
    name: str
    mean_mse: dict[str, float]
    mean_second_half_mse: dict[str, float]
    mean_position_error: float | None = None
    mean_yaw_error_deg: float | None = None
    per_seed: list[SeedScore]
    report: str


class CountOpsRequest(SourceBundle):
    pass


class WorkSummary(BaseModel):
    mode: str
    unit_name: str
    process_units: int
    measurement_units: int
    total_units: int
    scalar_instructions: int
    description: str


class CountOpsResponse(BaseModel):
    standard: WorkSummary
    autodiff: WorkSummary
    reduction_percent: float


class HealthResponse(BaseModel):
    status: str
    version: str
