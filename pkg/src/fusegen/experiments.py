"""Simulation experiments driven by small key=value config files.

An experiment couples a truth simulation (pendulum or differential
drive), a filter model loaded from a description file, and a scoring
pass, repeated over a block of seeds and averaged.  The filter run here
is the interpreted reference filter; generated C code is checked for
agreement with it separately, so accuracy results carry over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import StateSpaceModel, build_model
from .reference import run_filter
from .signals import load_description
from .simulate import (
    ScoreReport,
    SimulationTrace,
    score,
    simulate_diff_drive,
    simulate_pendulum,
    stroll_segments,
)

_SYSTEMS = ("pendulum", "diffdrive")
_FILTERS = ("ekf", "lkf")


def parse_config(text: str, filename: str = "<config>") -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{filename}:{lineno}: expected 'key = value', found '{line}'")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ValueError(f"{filename}:{lineno}: missing key before '='")
        if key in mapping:
            raise ValueError(f"{filename}:{lineno}: duplicate key '{key}'")
        mapping[key] = value
    return mapping


@dataclass
class ExperimentConfig:
    system: str
    model_path: Path
    filter_kind: str = "ekf"
    seeds: int = 10
    seed0: int = 1
    dt: float = 0.01
    steps: int = 2000
    # pendulum truth
    theta0_deg: float = 20.0
    omega0: float = 0.0
    length: float = 1.0
    mass: float = 1.0
    damping: float = 0.0
    process_variance: float = 0.0
    measurement_variance: float = 0.0
    # differential-drive truth
    speed: float = 0.2
    wheel_base: float = 0.16
    # invariant roles (required when the description has more than two)
    process: list[str] | None = None
    measure: str | None = None
    # filter initialisation
    init_state: list[float] | None = None
    init_theta_deg: float | None = None
    init_omega: float | None = None
    init_covariance: list[float] | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.system not in _SYSTEMS:
            raise ValueError(f"unknown system '{self.system}' (expected one of {_SYSTEMS})")
        if self.filter_kind not in _FILTERS:
            raise ValueError(f"unknown filter '{self.filter_kind}' (expected one of {_FILTERS})")
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


_FLOAT_KEYS = {
    "dt",
    "theta0_deg",
    "omega0",
    "length",
    "mass",
    "damping",
    "process_variance",
    "measurement_variance",
    "speed",
    "wheel_base",
    "init_theta_deg",
    "init_omega",
}
_INT_KEYS = {"seeds", "seed0", "steps"}
_LIST_KEYS = {"init_state", "init_covariance"}
_STR_KEYS = {"system", "model", "filter", "name", "measure"}
_NAME_LIST_KEYS = {"process"}


def config_from_mapping(
    mapping: dict[str, str], base_dir: Path, filename: str = "<config>"
) -> ExperimentConfig:
    known = _FLOAT_KEYS | _INT_KEYS | _LIST_KEYS | _STR_KEYS | _NAME_LIST_KEYS
    unknown = sorted(set(mapping) - known)
    if unknown:
        raise ValueError(f"{filename}: unknown configuration keys: {', '.join(unknown)}")
    if "system" not in mapping:
        raise ValueError(f"{filename}: missing required key 'system'")
    if "model" not in mapping:
        raise ValueError(f"{filename}: missing required key 'model'")

    kwargs: dict[str, object] = {
        "system": mapping["system"],
        "model_path": (base_dir / mapping["model"]).resolve(),
    }
    if "filter" in mapping:
        kwargs["filter_kind"] = mapping["filter"]
    if "name" in mapping:
        kwargs["name"] = mapping["name"]
    if "measure" in mapping:
        kwargs["measure"] = mapping["measure"]
    if "process" in mapping:
        kwargs["process"] = [
            part.strip() for part in mapping["process"].split(",") if part.strip()
        ]
    for key in _FLOAT_KEYS:
        if key in mapping:
            kwargs[key] = _parse_float(mapping[key], key, filename)
    for key in _INT_KEYS:
        if key in mapping:
            kwargs[key] = _parse_int(mapping[key], key, filename)
    for key in _LIST_KEYS:
        if key in mapping:
            kwargs[key] = [
                _parse_float(part.strip(), key, filename)
                for part in mapping[key].split(",")
                if part.strip()
            ]
    return ExperimentConfig(**kwargs)  # type: ignore[arg-type]


def _parse_float(text: str, key: str, filename: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{filename}: value for '{key}' is not a number: '{text}'") from None


def _parse_int(text: str, key: str, filename: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"{filename}: value for '{key}' is not an integer: '{text}'") from None


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    mapping = parse_config(path.read_text(encoding="utf-8"), str(path))
    config = config_from_mapping(mapping, path.parent, str(path))
    if not config.name:
        config.name = path.stem
    return config


@dataclass
class SeedResult:
    seed: int
    full: ScoreReport
    second_half: ScoreReport
    updates_skipped: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    model: StateSpaceModel
    per_seed: list[SeedResult] = field(default_factory=list)

    @property
    def mean_mse(self) -> dict[str, float]:
        names = self.per_seed[0].full.mse
        return {
            name: float(np.mean([r.full.mse[name] for r in self.per_seed])) for name in names
        }

    @property
    def mean_second_half_mse(self) -> dict[str, float]:
        names = self.per_seed[0].second_half.mse
        return {
            name: float(np.mean([r.second_half.mse[name] for r in self.per_seed]))
            for name in names
        }

    @property
    def mean_position_error(self) -> float | None:
        values = [r.full.avg_position_error for r in self.per_seed]
        if any(v is None for v in values):
            return None
        return float(np.mean([v for v in values if v is not None]))

    @property
    def mean_yaw_error_deg(self) -> float | None:
        values = [r.full.avg_yaw_error_deg for r in self.per_seed]
        if any(v is None for v in values):
            return None
        return float(np.mean([v for v in values if v is not None]))

    def describe(self) -> str:
        lines = [f"experiment: {self.config.name or '(unnamed)'}"]
        lines.append(f"system: {self.config.system}")
        lines.append(f"filter: {self.config.filter_kind}")
        lines.append(f"seeds: {len(self.per_seed)} (starting at {self.config.seed0})")
        for name, value in self.mean_mse.items():
            lines.append(f"mean mse[{name}]: {value:.6g}")
        for name, value in self.mean_second_half_mse.items():
            lines.append(f"mean second-half mse[{name}]: {value:.6g}")
        if self.mean_position_error is not None:
            lines.append(f"mean position error: {self.mean_position_error:.6g} m")
        if self.mean_yaw_error_deg is not None:
            lines.append(f"mean yaw error: {self.mean_yaw_error_deg:.6g} deg")
        skipped = sum(r.updates_skipped for r in self.per_seed)
        if skipped:
            lines.append(f"updates skipped: {skipped}")
        return "\n".join(lines)


def _simulate(config: ExperimentConfig, seed: int) -> SimulationTrace:
    if config.system == "pendulum":
        return simulate_pendulum(
            theta0=math.radians(config.theta0_deg),
            omega0=config.omega0,
            dt=config.dt,
            steps=config.steps,
            length=config.length,
            mass=config.mass,
            damping=config.damping,
            process_variance=config.process_variance,
            measurement_variance=config.measurement_variance,
            seed=seed,
        )
    return simulate_diff_drive(
        segments=stroll_segments(speed=config.speed, wheel_base=config.wheel_base),
        wheel_base=config.wheel_base,
        dt=config.dt,
        measurement_variance=config.measurement_variance,
        seed=seed,
    )


def _initial_state(config: ExperimentConfig, model: StateSpaceModel) -> list[float]:
    if config.init_state is not None:
        if len(config.init_state) != model.state_dim:
            raise ValueError(
                f"init_state has {len(config.init_state)} entries for a "
                f"{model.state_dim}-state model"
            )
        return list(config.init_state)
    if config.system == "pendulum":
        theta_deg = (
            config.init_theta_deg if config.init_theta_deg is not None else config.theta0_deg
        )
        omega = config.init_omega if config.init_omega is not None else config.omega0
        return [math.radians(theta_deg), omega]
    return [0.0, 0.0, 0.0][: model.state_dim]


def _initial_covariance(config: ExperimentConfig, model: StateSpaceModel) -> list[list[float]]:
    n = model.state_dim
    diag = config.init_covariance
    if diag is None:
        diag = [0.1] * n
    elif len(diag) == 1:
        diag = diag * n
    elif len(diag) != n:
        raise ValueError(f"init_covariance has {len(diag)} entries for a {n}-state model")
    return [[diag[i] if i == j else 0.0 for j in range(n)] for i in range(n)]


def run_experiment(
    config: ExperimentConfig,
    search_paths: list[Path] | None = None,
    model: StateSpaceModel | None = None,
) -> ExperimentResult:
    if model is None:
        description, _warnings = load_description(config.model_path, search_paths=search_paths)
        model = build_model(description, process=config.process, measure=config.measure)
    result = ExperimentResult(config=config, model=model)
    initial_state = _initial_state(config, model)
    initial_covariance = _initial_covariance(config, model)
    if config.system == "pendulum":
        position_pair = ("x", "y")  # absent from the model; position scoring disabled
    else:
        position_pair = ("x", "y")
    for offset in range(config.seeds):
        seed = config.seed0 + offset
        trace = _simulate(config, seed)
        estimates, filt = run_filter(
            model,
            trace,
            initial_state=initial_state,
            initial_covariance=initial_covariance,
            kind=config.filter_kind,
        )
        full = score(
            trace.truth,
            estimates,
            trace.state_names,
            position_pair=position_pair,
        )
        half_start = len(trace) // 2
        second_half = score(
            trace.truth,
            estimates,
            trace.state_names,
            position_pair=position_pair,
            start=half_start,
        )
        result.per_seed.append(
            SeedResult(
                seed=seed,
                full=full,
                second_half=second_half,
                updates_skipped=filt.updates_skipped,
            )
        )
    return result
