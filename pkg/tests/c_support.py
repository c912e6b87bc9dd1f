"""Helpers to compile and run generated C filters against the CSV harness."""

from __future__ import annotations

import shutil
import subprocess
from pathlib import Path

from fusegen.codegen import GenOptions, generate
from fusegen.printer import format_number
from fusegen.reference import run_filter
from fusegen.simulate import SimulationTrace, measurement_csv

ROOT = Path(__file__).resolve().parent.parent
RUNTIME = ROOT / "runtime"
HARNESS = ROOT / "tests" / "c" / "harness.c"

CFLAGS = ["-std=c99", "-Wall", "-Wextra", "-Werror", "-O2", "-ffp-contract=off"]


def compiler() -> str | None:
    for candidate in ("cc", "gcc", "clang"):
        if shutil.which(candidate):
            return candidate
    return None


def build_filter_harness(
    workdir: Path,
    model,
    *,
    prefix: str,
    diff_mode: str = "autodiff",
    filter_kind: str = "ekf",
    single_precision: bool = False,
) -> Path:
    """Generate sources for *model*, compile them with the harness and the
    matrix runtime, and return the executable path."""
    cc = compiler()
    assert cc is not None
    workdir.mkdir(parents=True, exist_ok=True)
    src = generate(
        model,
        GenOptions(
            filter_kind=filter_kind,
            diff_mode=diff_mode,
            symbol_prefix=prefix,
            output_basename="gen",
            single_precision=single_precision,
        ),
    )
    (workdir / src.header_filename).write_text(src.header)
    (workdir / src.impl_filename).write_text(src.implementation)

    n = model.state_dim
    z = model.measurement_dim
    extras = len(model.variables.extras)
    exe = workdir / "harness"
    cmd = [
        cc,
        *CFLAGS,
        f"-I{RUNTIME / 'include'}",
        f"-I{workdir}",
        f'-DKF_HEADER="{src.header_filename}"',
        f"-DKF_PREFIX={prefix}",
        f"-DKF_N={n}",
        f"-DKF_Z={z}",
        f"-DKF_EXTRAS={extras}",
    ]
    if single_precision:
        cmd.append("-DKFRT_REAL=float")
    cmd += [str(HARNESS), str(workdir / src.impl_filename), str(RUNTIME / "src" / "kfrt.c")]
    cmd += ["-o", str(exe), "-lm"]
    subprocess.run(cmd, check=True, capture_output=True, text=True)
    return exe


def write_inputs(
    workdir: Path,
    trace: SimulationTrace,
    initial_state: list[float],
    initial_covariance: list[list[float]],
) -> tuple[Path, Path]:
    trace_path = workdir / "trace.csv"
    trace_path.write_text(measurement_csv(trace))
    init_path = workdir / "init.txt"
    state_line = " ".join(format_number(v) for v in initial_state)
    cov_line = " ".join(format_number(v) for row in initial_covariance for v in row)
    init_path.write_text(state_line + "\n" + cov_line + "\n")
    return trace_path, init_path


def run_harness(exe: Path, trace_path: Path, init_path: Path) -> list[list[float]]:
    out_path = exe.parent / "out.csv"
    proc = subprocess.run(
        [str(exe), str(trace_path), str(init_path), str(out_path)],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"harness exited {proc.returncode}: {proc.stderr}")
    rows = out_path.read_text().strip().splitlines()[1:]
    return [[float(cell) for cell in row.split(",")[1:]] for row in rows]


def c_versus_reference(
    workdir: Path,
    model,
    trace: SimulationTrace,
    initial_state: list[float],
    initial_covariance: list[list[float]],
    *,
    prefix: str,
    diff_mode: str = "autodiff",
    filter_kind: str = "ekf",
) -> tuple[list[list[float]], list[list[float]], float]:
    """Run the compiled filter and the direct-evaluation oracle over the
    same trace; return (c_states, oracle_states, worst_abs_difference)."""
    exe = build_filter_harness(
        workdir, model, prefix=prefix, diff_mode=diff_mode, filter_kind=filter_kind
    )
    trace_path, init_path = write_inputs(workdir, trace, initial_state, initial_covariance)
    c_states = run_harness(exe, trace_path, init_path)
    oracle, _ = run_filter(model, trace, initial_state, initial_covariance, kind=filter_kind)
    assert len(c_states) == len(oracle)
    worst = max(
        abs(a - b) for c_row, o_row in zip(c_states, oracle) for a, b in zip(c_row, o_row)
    )
    return c_states, oracle, worst
