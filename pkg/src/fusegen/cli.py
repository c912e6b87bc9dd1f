"""Command-line interface.

Every data-bearing subcommand is a thin client over the service
handlers: by default they run in process, and with --server URL the
same request is POSTed to a running service instead, so results match
either way.

Exit codes: 0 success, 1 semantic failure (diagnostics, unsatisfiable
options), 2 usage errors and unreadable files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .codegen import dump_ssa
from .experiments import ExperimentConfig, load_config, run_experiment
from .reference import run_filter
from .schemas import (
    CheckRequest,
    CheckResponse,
    CountOpsRequest,
    CountOpsResponse,
    EvaluateRequest,
    EvaluateResponse,
    GenerateRequest,
    GenerateResponse,
    SimulateRequest,
    SimulateResponse,
)
from .service import (
    ServiceFailure,
    do_check,
    do_count_ops,
    do_evaluate,
    do_generate,
    do_simulate,
)
from .signals import SIGNAL_PATH_ENV, collect_include_sources
from .simulate import states_csv


class ClientFailure(Exception):
    """An HTTP error envelope from a remote service."""

    def __init__(self, payload: dict):
        super().__init__("request failed")
        self.payload = payload


def _print_failure(payload: dict) -> None:
    if "diagnostics" in payload:
        for diag in payload["diagnostics"]:
            print(diag.get("rendered", diag.get("message", "")), file=sys.stderr)
    else:
        print(payload.get("message", "request failed"), file=sys.stderr)


def _post(server: str, path: str, payload, response_cls):
    import httpx

    try:
        response = httpx.post(
            server.rstrip("/") + path, json=payload.model_dump(), timeout=300.0
        )
        if response.status_code in (400, 422):
            raise ClientFailure(response.json())
        response.raise_for_status()
    except httpx.HTTPError as exc:
        raise ClientFailure({"message": f"service request failed: {exc}"}) from exc
    return response_cls.model_validate(response.json())


def _read_source(path_text: str) -> tuple[str, str]:
    path = Path(path_text)
    return path.read_text(encoding="utf-8"), str(path)


def _split_names(text: str | None) -> list[str] | None:
    if text is None:
        return None
    names = [part.strip() for part in text.split(",") if part.strip()]
    return names or None


def _bundle_fields(args) -> dict:
    source, filename = _read_source(args.source)
    search = [str(Path(filename).parent)] + list(args.include_path or [])
    includes = collect_include_sources(source, filename, search)
    return {
        "source": source,
        "filename": filename,
        "includes": includes,
        "process": _split_names(args.process),
        "measure": args.measure,
    }


# -- subcommand implementations ------------------------------------------


def cmd_check(args) -> int:
    request = CheckRequest(**_bundle_fields(args))
    if args.server:
        response = _post(args.server, "/v1/check", request, CheckResponse)
    else:
        response = do_check(request)
    for diag in response.diagnostics:
        print(diag.rendered, file=sys.stderr)
    if not response.ok:
        return 1
    if response.summary is not None:
        print(response.summary.report, end="")
    else:
        print("ok")
    return 0


def cmd_generate(args) -> int:
    basename = Path(args.output).name
    out_dir = Path(args.output).parent
    request = GenerateRequest(
        **_bundle_fields(args),
        filter=args.filter,
        diff=args.diff,
        prefix=args.prefix,
        basename=basename,
        single_precision=args.single_precision,
    )
    if args.emit_ssa and args.server:
        print("--emit-ssa is a local transform; drop --server to use it", file=sys.stderr)
        return 2
    if args.server:
        response = _post(args.server, "/v1/generate", request, GenerateResponse)
    else:
        response = do_generate(request)
    for diag in response.warnings:
        print(diag.rendered, file=sys.stderr)
    if args.dump_model:
        print(response.summary.report, end="")
    if args.emit_ssa:
        from .service import _build

        model, _ = _build(request)
        diff = {"auto": "autodiff"}.get(args.diff, args.diff)
        print(dump_ssa(model, diff), end="")
    out_dir.mkdir(parents=True, exist_ok=True)
    header_path = out_dir / response.header.filename
    impl_path = out_dir / response.implementation.filename
    header_path.write_text(response.header.content, encoding="utf-8")
    impl_path.write_text(response.implementation.content, encoding="utf-8")
    print(f"wrote {header_path} and {impl_path}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    request = SimulateRequest(
        system=args.system,
        seed=args.seed,
        dt=args.dt,
        steps=args.steps,
        theta0_deg=args.theta0_deg,
        omega0=args.omega0,
        length=args.length,
        mass=args.mass,
        damping=args.damping,
        process_variance=args.process_variance,
        measurement_variance=args.measurement_variance,
        speed=args.speed,
        wheel_base=args.wheel_base,
    )
    if args.server:
        response = _post(args.server, "/v1/simulate", request, SimulateResponse)
    else:
        response = do_simulate(request)
    if args.output and args.output != "-":
        Path(args.output).write_text(response.measurements_csv, encoding="utf-8")
        print(f"wrote {args.output}", file=sys.stderr)
    else:
        print(response.measurements_csv, end="")
    if args.truth_out:
        Path(args.truth_out).write_text(response.truth_csv, encoding="utf-8")
        print(f"wrote {args.truth_out}", file=sys.stderr)
    return 0


def _evaluate_request_from_config(config: ExperimentConfig) -> EvaluateRequest:
    source = config.model_path.read_text(encoding="utf-8")
    includes = collect_include_sources(
        source, str(config.model_path), [str(config.model_path.parent)]
    )
    return EvaluateRequest(
        source=source,
        filename=str(config.model_path),
        includes=includes,
        process=config.process,
        measure=config.measure,
        system=config.system,
        filter=config.filter_kind,
        seeds=config.seeds,
        seed0=config.seed0,
        dt=config.dt,
        steps=config.steps,
        theta0_deg=config.theta0_deg,
        omega0=config.omega0,
        length=config.length,
        mass=config.mass,
        damping=config.damping,
        process_variance=config.process_variance,
        measurement_variance=config.measurement_variance,
        speed=config.speed,
        wheel_base=config.wheel_base,
        init_state=config.init_state,
        init_theta_deg=config.init_theta_deg,
        init_omega=config.init_omega,
        init_covariance=config.init_covariance,
        name=config.name,
    )


def cmd_evaluate(args) -> int:
    try:
        config = load_config(args.config)
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return 1
    if args.seeds is not None:
        config.seeds = args.seeds
    if args.plot_data and args.server:
        print("--plot-data is computed locally; drop --server to use it", file=sys.stderr)
        return 2
    request = _evaluate_request_from_config(config)
    if args.server:
        response = _post(args.server, "/v1/evaluate", request, EvaluateResponse)
    else:
        response = do_evaluate(request)
    print(response.report)
    if args.plot_data:
        _write_plot_data(config, Path(args.plot_data))
        print(f"wrote {args.plot_data}", file=sys.stderr)
    return 0


def _write_plot_data(config: ExperimentConfig, out_path: Path) -> None:
    """Truth and estimate trajectories of the first seed, side by side."""
    from .experiments import _initial_covariance, _initial_state, _simulate
    from .model import build_model
    from .signals import load_description

    description, _ = load_description(config.model_path)
    model = build_model(description, process=config.process, measure=config.measure)
    trace = _simulate(config, config.seed0)
    estimates, _filter = run_filter(
        model,
        trace,
        initial_state=_initial_state(config, model),
        initial_covariance=_initial_covariance(config, model),
        kind=config.filter_kind,
    )
    truth_csv = states_csv(trace.times, trace.truth).splitlines()
    est_csv = states_csv(trace.times, estimates).splitlines()
    names = trace.state_names
    header = "t," + ",".join(f"truth_{n}" for n in names)
    header += "," + ",".join(f"est_{n}" for n in names)
    lines = [header]
    for truth_line, est_line in zip(truth_csv[1:], est_csv[1:]):
        est_fields = est_line.split(",")[1:]
        lines.append(truth_line + "," + ",".join(est_fields))
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_count_ops(args) -> int:
    request = CountOpsRequest(**_bundle_fields(args))
    if args.server:
        response = _post(args.server, "/v1/count-ops", request, CountOpsResponse)
    else:
        response = do_count_ops(request)
    print(f"standard: {response.standard.description}")
    print(f"autodiff: {response.autodiff.description}")
    print(f"reduction: {response.reduction_percent:.1f}% fewer model-function evaluations")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# -- argument plumbing -----------------------------------------------------


def _add_source_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("source", help="description file to read")
    parser.add_argument(
        "-I",
        "--include-path",
        action="append",
        metavar="DIR",
        help=f"extra include search directory (also {SIGNAL_PATH_ENV})",
    )
    parser.add_argument(
        "--process",
        metavar="NAMES",
        help="comma-separated process invariant names (required with >2 invariants)",
    )
    parser.add_argument("--measure", metavar="NAME", help="measurement invariant name")


def _add_server_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--server",
        metavar="URL",
        help="run the request against this service instead of in process",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusegen",
        description="Compile physics descriptions into embedded C state estimators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse and dimension-check a description")
    _add_source_options(p_check)
    _add_server_option(p_check)
    p_check.set_defaults(func=cmd_check)

    p_gen = sub.add_parser("generate", help="emit C filter sources for a description")
    _add_source_options(p_gen)
    p_gen.add_argument(
        "--filter", choices=["lkf", "ekf"], default="ekf", help="filter kind to generate"
    )
    p_gen.add_argument(
        "--diff",
        choices=["standard", "autodiff", "auto"],
        default="autodiff",
        help="how Jacobians are computed ('auto' means autodiff)",
    )
    p_gen.add_argument(
        "-o",
        "--output",
        default="filter",
        metavar="BASE",
        help="output basename; BASE.h and BASE.c are written",
    )
    p_gen.add_argument("--prefix", default="kf_", help="C symbol prefix")
    p_gen.add_argument(
        "--single-precision",
        action="store_true",
        help="emit a float (rather than double) filter",
    )
    p_gen.add_argument(
        "--dump-model", action="store_true", help="print the model report to stdout"
    )
    p_gen.add_argument(
        "--emit-ssa",
        action="store_true",
        help="print the model functions in SSA form to stdout",
    )
    _add_server_option(p_gen)
    p_gen.set_defaults(func=cmd_generate)

    p_sim = sub.add_parser("simulate", help="simulate a system and write measurement CSV")
    p_sim.add_argument("system", choices=["pendulum", "diffdrive"])
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--dt", type=float, default=0.01)
    p_sim.add_argument("--steps", type=int, default=2000)
    p_sim.add_argument("--theta0-deg", type=float, default=20.0)
    p_sim.add_argument("--omega0", type=float, default=0.0)
    p_sim.add_argument("--length", type=float, default=1.0)
    p_sim.add_argument("--mass", type=float, default=1.0)
    p_sim.add_argument("--damping", type=float, default=0.0)
    p_sim.add_argument("--process-variance", type=float, default=0.0)
    p_sim.add_argument("--measurement-variance", type=float, default=0.0)
    p_sim.add_argument("--speed", type=float, default=0.2)
    p_sim.add_argument("--wheel-base", type=float, default=0.16)
    p_sim.add_argument(
        "-o", "--output", metavar="FILE", help="measurement CSV path ('-' for stdout)"
    )
    p_sim.add_argument("--truth-out", metavar="FILE", help="also write the true states")
    _add_server_option(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_eval = sub.add_parser("evaluate", help="run an experiment config and print scores")
    p_eval.add_argument("config", help="experiment .cfg file")
    p_eval.add_argument("--seeds", type=int, help="override the seed count")
    p_eval.add_argument(
        "--plot-data",
        metavar="FILE",
        help="write first-seed truth/estimate trajectories as CSV",
    )
    _add_server_option(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_count = sub.add_parser(
        "count-ops", help="compare differentiation work between modes"
    )
    _add_source_options(p_count)
    _add_server_option(p_count)
    p_count.set_defaults(func=cmd_count_ops)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ServiceFailure as exc:
        _print_failure(exc.payload())
        return 1
    except ClientFailure as exc:
        _print_failure(exc.payload)
        return 1
    except FileNotFoundError as exc:
        print(f"cannot read {exc.filename}", file=sys.stderr)
        return 2
    except IsADirectoryError as exc:
        print(f"cannot read {exc.filename}: is a directory", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
