"""Ground-truth simulators and trace handling.

The simulators integrate the *real* dynamics (RK4 for the pendulum,
piecewise kinematics for the differential drive); the generated filters
see only their first-order models plus injected noise, which is exactly
the regime they must cope with in the field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .printer import format_number
from .rng import Rng

STANDARD_GRAVITY = 9.80665


@dataclass
class SimulationTrace:
    """One simulated run: the hidden truth plus everything the filter is
    allowed to see (measurements, extras, mode switches)."""

    state_names: list[str]
    measurement_names: list[str]
    extra_names: list[str]
    times: list[float] = field(default_factory=list)
    truth: list[list[float]] = field(default_factory=list)
    measurements: list[list[float]] = field(default_factory=list)
    extras: list[list[float]] = field(default_factory=list)
    modes: list[int] = field(default_factory=list)
    multi_mode: bool = False
    seed: int = 0

    def __len__(self) -> int:
        return len(self.times)

    def validate(self) -> None:
        n = len(self.times)
        if not (len(self.truth) == len(self.measurements) == len(self.extras) == len(self.modes) == n):
            raise ValueError("trace columns have mismatched lengths")
        for earlier, later in zip(self.times, self.times[1:]):
            if later <= earlier:
                raise ValueError("trace times must be strictly increasing")

    def append(
        self,
        t: float,
        truth: list[float],
        measurement: list[float],
        extras: list[float],
        mode: int = 0,
    ) -> None:
        self.times.append(t)
        self.truth.append(list(truth))
        self.measurements.append(list(measurement))
        self.extras.append(list(extras))
        self.modes.append(mode)


def measurement_csv(trace: SimulationTrace) -> str:
    """The filter-facing CSV: time, measurements, extras, and the mode
    column when the model has more than one."""
    header = ["t"]
    header += [f"z_{i}" for i in range(len(trace.measurement_names))]
    header += [f"extra_{i}" for i in range(len(trace.extra_names))]
    if trace.multi_mode:
        header.append("mode")
    lines = [",".join(header)]
    for i, t in enumerate(trace.times):
        row = [format_number(t)]
        row += [format_number(v) for v in trace.measurements[i]]
        row += [format_number(v) for v in trace.extras[i]]
        if trace.multi_mode:
            row.append(str(trace.modes[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def states_csv(times: list[float], states: list[list[float]], prefix: str = "s") -> str:
    """CSV of a state trajectory: time then one column per component."""
    width = len(states[0]) if states else 0
    header = ["t"] + [f"{prefix}_{i}" for i in range(width)]
    lines = [",".join(header)]
    for t, row in zip(times, states):
        lines.append(",".join([format_number(t)] + [format_number(v) for v in row]))
    return "\n".join(lines) + "\n"


def read_states_csv(text: str) -> tuple[list[float], list[list[float]]]:
    lines = [line for line in text.strip().splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty state CSV")
    times: list[float] = []
    states: list[list[float]] = []
    for line in lines[1:]:
        cells = [float(cell) for cell in line.split(",")]
        times.append(cells[0])
        states.append(cells[1:])
    return times, states


# -- pendulum ------------------------------------------------------------


def _pendulum_rates(
    theta: float, omega: float, gravity: float, length: float, damping: float, mass: float
) -> tuple[float, float]:
    return omega, -(damping / mass) * omega - (gravity / length) * math.sin(theta)


def rk4_pendulum_step(
    theta: float,
    omega: float,
    dt: float,
    gravity: float,
    length: float,
    damping: float,
    mass: float,
) -> tuple[float, float]:
    """Classic fourth-order Runge-Kutta step of the damped pendulum."""
    k1t, k1w = _pendulum_rates(theta, omega, gravity, length, damping, mass)
    k2t, k2w = _pendulum_rates(
        theta + 0.5 * dt * k1t, omega + 0.5 * dt * k1w, gravity, length, damping, mass
    )
    k3t, k3w = _pendulum_rates(
        theta + 0.5 * dt * k2t, omega + 0.5 * dt * k2w, gravity, length, damping, mass
    )
    k4t, k4w = _pendulum_rates(theta + dt * k3t, omega + dt * k3w, gravity, length, damping, mass)
    return (
        theta + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
        omega + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    )


def simulate_pendulum(
    *,
    theta0: float,
    omega0: float = 0.0,
    dt: float,
    steps: int,
    length: float = 1.0,
    mass: float = 1.0,
    damping: float = 0.0,
    gravity: float = STANDARD_GRAVITY,
    process_variance: float = 0.0,
    measurement_variance: float = 0.0,
    seed: int = 0,
) -> SimulationTrace:
    """Simulate the damped pendulum with a rate gyro on the pivot.

    Process noise (a random angular-velocity disturbance of the given
    variance) is injected after each integration step; the gyro reads
    the disturbed velocity plus its own measurement noise.
    """
    rng = Rng(seed)
    trace = SimulationTrace(
        state_names=["theta", "dtheta"],
        measurement_names=["gyro_z"],
        extra_names=["dt", "L"],
        seed=seed,
    )
    theta, omega = theta0, omega0
    process_std = math.sqrt(process_variance)
    measurement_std = math.sqrt(measurement_variance)
    t = 0.0
    for _ in range(steps):
        theta, omega = rk4_pendulum_step(theta, omega, dt, gravity, length, damping, mass)
        if process_std > 0.0:
            omega += rng.normal(0.0, process_std)
        t += dt
        gyro = omega + (rng.normal(0.0, measurement_std) if measurement_std > 0.0 else 0.0)
        trace.append(t, [theta, omega], [gyro], [dt, length])
    return trace


def pendulum_energy(
    theta: float, omega: float, gravity: float, length: float, mass: float
) -> float:
    """Total mechanical energy, zero at the bottom of the swing."""
    return 0.5 * mass * (length * omega) ** 2 + mass * gravity * length * (1.0 - math.cos(theta))


# -- differential drive --------------------------------------------------


@dataclass(frozen=True)
class DriveSegment:
    """Constant wheel-speed setpoints held for a duration.

    Equal speeds translate the robot; exactly opposite speeds spin it in
    place.  Anything else is outside the supported kinematics.
    """

    right_speed: float
    left_speed: float
    duration: float

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("segment duration must be positive")
        if self.right_speed != self.left_speed and self.right_speed != -self.left_speed:
            raise ValueError(
                "wheel setpoints must be equal (translate) or opposite (spin); "
                f"got right={self.right_speed:g}, left={self.left_speed:g}"
            )

    @property
    def spinning(self) -> bool:
        return self.right_speed == -self.left_speed and self.right_speed != 0.0


def stroll_segments(speed: float = 0.2, wheel_base: float = 0.16) -> list[DriveSegment]:
    """The reference walk: 1 m out, about-face, 2 m back, quarter turn
    left, 1 m — ending at (-1, -1) facing negative y."""
    spin_rate = 2.0 * speed / wheel_base

    def straight(distance: float) -> DriveSegment:
        return DriveSegment(speed, speed, distance / speed)

    def spin_left(angle: float) -> DriveSegment:
        return DriveSegment(speed, -speed, angle / spin_rate)

    return [
        straight(1.0),
        spin_left(math.pi),
        straight(2.0),
        spin_left(math.pi / 2.0),
        straight(1.0),
    ]


def simulate_diff_drive(
    *,
    segments: list[DriveSegment],
    wheel_base: float,
    dt: float,
    measurement_variance: float = 0.0,
    seed: int = 0,
    start: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> SimulationTrace:
    """Run a waypoint script on the two-mode kinematics.

    A segment whose duration is not a multiple of dt ends with one
    shorter step; the per-step interval is part of the trace, so the
    filter sees the same timing.  Position fixes on both axes carry the
    given noise variance.
    """
    rng = Rng(seed)
    trace = SimulationTrace(
        state_names=["x", "y", "theta"],
        measurement_names=["pos_x", "pos_y"],
        extra_names=["v", "dt", "l"],
        multi_mode=True,
        seed=seed,
    )
    x, y, theta = start
    measurement_std = math.sqrt(measurement_variance)
    t = 0.0
    for segment in segments:
        remaining = segment.duration
        while remaining > 1e-12:
            step = dt if remaining >= dt else remaining
            remaining -= step
            v = segment.right_speed
            if segment.spinning:
                theta += 2.0 * v * step / wheel_base
                mode = 1
            else:
                x += v * math.cos(theta) * step
                y += v * math.sin(theta) * step
                mode = 0
            t += step
            zx = x + (rng.normal(0.0, measurement_std) if measurement_std > 0.0 else 0.0)
            zy = y + (rng.normal(0.0, measurement_std) if measurement_std > 0.0 else 0.0)
            trace.append(t, [x, y, theta], [zx, zy], [v, step, wheel_base], mode)
    return trace


# -- scoring --------------------------------------------------------------


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.atan2(math.sin(angle), math.cos(angle))
    return math.pi if wrapped == -math.pi else wrapped


@dataclass
class ScoreReport:
    mse: dict[str, float]
    avg_position_error: float | None = None
    avg_yaw_error_deg: float | None = None

    def describe(self) -> str:
        parts = [f"mse[{name}] = {value:.6g}" for name, value in self.mse.items()]
        if self.avg_position_error is not None:
            parts.append(f"avg position error = {self.avg_position_error:.6g} m")
        if self.avg_yaw_error_deg is not None:
            parts.append(f"avg yaw error = {self.avg_yaw_error_deg:.6g} deg")
        return "\n".join(parts)


def score(
    truth: list[list[float]],
    estimates: list[list[float]],
    state_names: list[str],
    position_pair: tuple[str, str] = ("x", "y"),
    yaw_name: str = "theta",
    start: int = 0,
) -> ScoreReport:
    """Accuracy of an estimate trajectory against the simulated truth.

    Mean squared error per state component; robot-style trajectories
    additionally get mean Euclidean position error and mean absolute yaw
    error (wrapped to (-180, 180] degrees).  *start* skips initial rows,
    for judging convergence after a transient.
    """
    if len(truth) != len(estimates):
        raise ValueError(
            f"truth has {len(truth)} rows but estimates has {len(estimates)}"
        )
    rows = list(zip(truth, estimates))[start:]
    if not rows:
        raise ValueError("no rows left to score")

    mse: dict[str, float] = {}
    for index, name in enumerate(state_names):
        errors = [(est[index] - tru[index]) ** 2 for tru, est in rows]
        mse[name] = sum(errors) / len(errors)

    avg_position = None
    if position_pair[0] in state_names and position_pair[1] in state_names:
        ix = state_names.index(position_pair[0])
        iy = state_names.index(position_pair[1])
        distances = [
            math.hypot(est[ix] - tru[ix], est[iy] - tru[iy]) for tru, est in rows
        ]
        avg_position = sum(distances) / len(distances)

    avg_yaw = None
    if yaw_name in state_names and avg_position is not None:
        it = state_names.index(yaw_name)
        errors = [abs(wrap_angle(est[it] - tru[it])) for tru, est in rows]
        avg_yaw = math.degrees(sum(errors) / len(errors))

    return ScoreReport(mse, avg_position, avg_yaw)
