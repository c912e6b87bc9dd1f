"""HTTP service exposing the compiler pipeline.

The handlers (do_check, do_generate, ...) are plain functions over the
pydantic schemas; the FastAPI app wires them to routes, and the CLI
calls them directly when no --server is given.  Failures raise
ServiceFailure, which the app maps to an HTTP error envelope:

    422 {"diagnostics": [...]} for source problems,
    400 {"message": "..."} for unsatisfiable option combinations.
"""

from __future__ import annotations

import math
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .ast import Description
from .autodiff import count_evaluations
from .codegen import GenOptions, generate
from .diagnostics import Diagnostic, SourceError
from .dimensions import check_description
from .experiments import ExperimentConfig, run_experiment
from .model import StateSpaceModel, build_model, dump_model
from .schemas import (
    CheckRequest,
    CheckResponse,
    CountOpsRequest,
    CountOpsResponse,
    DiagnosticModel,
    EvaluateRequest,
    EvaluateResponse,
    GeneratedFile,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    ModelSummary,
    SeedScore,
    SimulateRequest,
    SimulateResponse,
    SourceBundle,
    WorkSummary,
)
from .signals import IncludeResolver, build_signal_table, load_description_text
from .simulate import (
    measurement_csv,
    simulate_diff_drive,
    simulate_pendulum,
    states_csv,
    stroll_segments,
)


class ServiceFailure(Exception):
    """A handler-level failure with an HTTP mapping."""

    def __init__(
        self,
        status_code: int,
        message: str | None = None,
        diagnostics: list[Diagnostic] | None = None,
    ):
        super().__init__(message or "request failed")
        self.status_code = status_code
        self.message = message
        self.diagnostics = diagnostics or []

    def payload(self) -> dict:
        if self.diagnostics:
            return {
                "diagnostics": [
                    DiagnosticModel.from_diagnostic(d).model_dump() for d in self.diagnostics
                ]
            }
        return {"message": self.message or "request failed"}


def _source_error(exc: SourceError) -> ServiceFailure:
    return ServiceFailure(422, diagnostics=exc.diagnostics)


def _load_bundle(bundle: SourceBundle) -> tuple[Description, list[Diagnostic]]:
    """Parse + validate + dimension-check an inline source bundle.

    Raises ServiceFailure(422) with the collected diagnostics on errors;
    returns the merged description and any warnings.
    """
    resolver = IncludeResolver(sources=bundle.includes, use_env=False)
    try:
        desc, warnings = load_description_text(bundle.source, bundle.filename, resolver)
    except SourceError as exc:
        raise _source_error(exc) from exc
    signals, sig_diags = build_signal_table(desc)
    dim_diags = check_description(desc, signals)
    errors = [d for d in sig_diags + dim_diags if d.severity == "error"]
    if errors:
        raise ServiceFailure(422, diagnostics=errors)
    warnings = warnings + [d for d in sig_diags + dim_diags if d.severity == "warning"]
    return desc, warnings


def _build(bundle: SourceBundle) -> tuple[StateSpaceModel, list[Diagnostic]]:
    desc, warnings = _load_bundle(bundle)
    try:
        model = build_model(desc, process=bundle.process, measure=bundle.measure)
    except SourceError as exc:
        raise _source_error(exc) from exc
    return model, warnings + model.warnings


def _summary(model: StateSpaceModel) -> ModelSummary:
    return ModelSummary(
        state=model.variables.state,
        measurement=model.variables.measurement,
        extras=model.variables.extras,
        linear=model.linear,
        modes=[m.name for m in model.modes],
        report=dump_model(model),
    )


def do_check(req: CheckRequest) -> CheckResponse:
    try:
        desc, warnings = _load_bundle(req)
    except ServiceFailure as exc:
        return CheckResponse(
            ok=False,
            diagnostics=[DiagnosticModel.from_diagnostic(d) for d in exc.diagnostics],
        )

    summary = None
    diags = list(warnings)
    # Role assignment is only checkable when it is unambiguous or given.
    if req.process or req.measure or len(desc.invariants) == 2:
        try:
            model = build_model(desc, process=req.process, measure=req.measure)
            summary = _summary(model)
            diags += model.warnings
        except SourceError as exc:
            return CheckResponse(
                ok=False,
                diagnostics=[
                    DiagnosticModel.from_diagnostic(d) for d in diags + exc.diagnostics
                ],
            )
    return CheckResponse(
        ok=True,
        diagnostics=[DiagnosticModel.from_diagnostic(d) for d in diags],
        summary=summary,
    )


def do_generate(req: GenerateRequest) -> GenerateResponse:
    model, warnings = _build(req)
    opts = GenOptions(
        filter_kind=req.filter,
        diff_mode={"auto": "autodiff"}.get(req.diff, req.diff),
        symbol_prefix=req.prefix,
        output_basename=req.basename,
        single_precision=req.single_precision,
        additive_noise=req.additive_noise,
    )
    try:
        generated = generate(model, opts)
    except ValueError as exc:
        raise ServiceFailure(400, message=str(exc)) from exc
    return GenerateResponse(
        header=GeneratedFile(filename=generated.header_filename, content=generated.header),
        implementation=GeneratedFile(
            filename=generated.impl_filename, content=generated.implementation
        ),
        warnings=[DiagnosticModel.from_diagnostic(d) for d in warnings],
        summary=_summary(model),
    )


def _run_simulation(req: SimulateRequest):
    if req.system == "pendulum":
        return simulate_pendulum(
            theta0=math.radians(req.theta0_deg),
            omega0=req.omega0,
            dt=req.dt,
            steps=req.steps,
            length=req.length,
            mass=req.mass,
            damping=req.damping,
            process_variance=req.process_variance,
            measurement_variance=req.measurement_variance,
            seed=req.seed,
        )
    if req.system == "diffdrive":
        return simulate_diff_drive(
            segments=stroll_segments(speed=req.speed, wheel_base=req.wheel_base),
            wheel_base=req.wheel_base,
            dt=req.dt,
            measurement_variance=req.measurement_variance,
            seed=req.seed,
        )
    raise ServiceFailure(
        400, message=f"unknown system '{req.system}' (expected 'pendulum' or 'diffdrive')"
    )


def do_simulate(req: SimulateRequest) -> SimulateResponse:
    try:
        trace = _run_simulation(req)
    except ValueError as exc:
        raise ServiceFailure(400, message=str(exc)) from exc
    return SimulateResponse(
        measurements_csv=measurement_csv(trace),
        truth_csv=states_csv(trace.times, trace.truth),
        state_names=trace.state_names,
        measurement_names=trace.measurement_names,
        extra_names=trace.extra_names,
        multi_mode=trace.multi_mode,
    )


def do_evaluate(req: EvaluateRequest) -> EvaluateResponse:
    model, _warnings = _build(req)
    try:
        config = ExperimentConfig(
            system=req.system,
            model_path=Path(req.filename),
            filter_kind=req.filter,
            seeds=req.seeds,
            seed0=req.seed0,
            dt=req.dt,
            steps=req.steps,
            theta0_deg=req.theta0_deg,
            omega0=req.omega0,
            length=req.length,
            mass=req.mass,
            damping=req.damping,
            process_variance=req.process_variance,
            measurement_variance=req.measurement_variance,
            speed=req.speed,
            wheel_base=req.wheel_base,
            process=req.process,
            measure=req.measure,
            init_state=req.init_state,
            init_theta_deg=req.init_theta_deg,
            init_omega=req.init_omega,
            init_covariance=req.init_covariance,
            name=req.name or req.filename,
        )
        result = run_experiment(config, model=model)
    except ValueError as exc:
        raise ServiceFailure(400, message=str(exc)) from exc
    return EvaluateResponse(
        name=config.name,
        mean_mse=result.mean_mse,
        mean_second_half_mse=result.mean_second_half_mse,
        mean_position_error=result.mean_position_error,
        mean_yaw_error_deg=result.mean_yaw_error_deg,
        per_seed=[
            SeedScore(
                seed=r.seed,
                mse=r.full.mse,
                second_half_mse=r.second_half.mse,
                avg_position_error=r.full.avg_position_error,
                avg_yaw_error_deg=r.full.avg_yaw_error_deg,
                updates_skipped=r.updates_skipped,
            )
            for r in result.per_seed
        ],
        report=result.describe(),
    )


def do_count_ops(req: CountOpsRequest) -> CountOpsResponse:
    model, _warnings = _build(req)
    try:
        standard = count_evaluations(model, "standard")
        autodiff = count_evaluations(model, "autodiff")
    except ValueError as exc:
        raise ServiceFailure(400, message=str(exc)) from exc
    reduction = 100.0 * (1.0 - autodiff.total_units / standard.total_units)
    return CountOpsResponse(
        standard=_work_summary(standard),
        autodiff=_work_summary(autodiff),
        reduction_percent=reduction,
    )


def _work_summary(estimate) -> WorkSummary:
    return WorkSummary(
        mode=estimate.mode,
        unit_name=estimate.unit_name,
        process_units=estimate.process_units,
        measurement_units=estimate.measurement_units,
        total_units=estimate.total_units,
        scalar_instructions=estimate.scalar_instructions,
        description=estimate.describe(),
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="fusegen",
        version=__version__,
        description="Compiles physics descriptions into embedded C state estimators.",
    )

    @app.exception_handler(ServiceFailure)
    async def service_failure_handler(_request: Request, exc: ServiceFailure) -> JSONResponse:
        return JSONResponse(status_code=exc.status_code, content=exc.payload())

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/check", response_model=CheckResponse)
    def check(req: CheckRequest) -> CheckResponse:
        return do_check(req)

    @app.post("/v1/generate", response_model=GenerateResponse)
    def generate_route(req: GenerateRequest) -> GenerateResponse:
        return do_generate(req)

    @app.post("/v1/simulate", response_model=SimulateResponse)
    def simulate_route(req: SimulateRequest) -> SimulateResponse:
        return do_simulate(req)

    @app.post("/v1/evaluate", response_model=EvaluateResponse)
    def evaluate_route(req: EvaluateRequest) -> EvaluateResponse:
        return do_evaluate(req)

    @app.post("/v1/count-ops", response_model=CountOpsResponse)
    def count_ops_route(req: CountOpsRequest) -> CountOpsResponse:
        return do_count_ops(req)

    return app


app = create_app()
