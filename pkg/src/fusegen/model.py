"""Builds a state-space model out of a checked description.

This is where invariants get their filter roles: process invariants
define the state vector and its transition, the measurement invariant
defines what the sensors observe, and Gaussian annotations become the
process and measurement noise covariance matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ast import (
    Call,
    ConstantRef,
    Description,
    Expr,
    Ident,
    Invariant,
    Neg,
    Num,
    BinOp,
    Pow,
    contains_ident,
)
from .diagnostics import Diagnostic, SourceError, error, warning
from .symbolic import derivative, num, simplify, substitute

DEFAULT_PROCESS_VARIANCE = 1e-6
DEFAULT_MEASUREMENT_VARIANCE = 1e-3


@dataclass
class ModelVariables:
    """Role assignment for every invariant parameter.

    state:       parameters constrained by the process invariants, in
                 constraint order; these form the estimated state vector.
    measurement: parameters constrained by the measurement invariant.
    extras:      everything else, passed to the filter at every step
                 (process-invariant parameters first, then measurement).
    """

    state: list[str]
    measurement: list[str]
    extras: list[str]


@dataclass
class ProcessMode:
    """One process invariant: the transition function for one movement
    regime.  Models with a single process invariant have a single mode."""

    name: str
    transition: list[Expr]
    jacobian: list[list[Expr]]
    matrix: list[list[Expr]] | None = None
    offset: list[Expr] | None = None


@dataclass
class StateSpaceModel:
    variables: ModelVariables
    linear: bool
    modes: list[ProcessMode]
    measurement: list[Expr]
    measurement_jacobian: list[list[Expr]]
    measurement_matrix: list[list[Expr]] | None
    measurement_offset: list[Expr] | None
    process_noise: np.ndarray
    measurement_noise: np.ndarray
    constants: dict[str, float]
    signals: dict[str, str]
    warnings: list[Diagnostic] = field(default_factory=list)

    @property
    def state_dim(self) -> int:
        return len(self.variables.state)

    @property
    def measurement_dim(self) -> int:
        return len(self.variables.measurement)


def _affine_degree(expr: Expr, state: set[str]) -> int | None:
    """Degree of *expr* viewed as a polynomial in the state variables:
    0 (state-free), 1 (affine), or None (not affine)."""
    if isinstance(expr, Ident):
        return 1 if expr.name in state else 0
    if isinstance(expr, (Num, ConstantRef)):
        return 0
    if isinstance(expr, Neg):
        return _affine_degree(expr.operand, state)
    if isinstance(expr, BinOp):
        left = _affine_degree(expr.left, state)
        right = _affine_degree(expr.right, state)
        if left is None or right is None:
            return None
        if expr.op in ("+", "-"):
            return max(left, right)
        if expr.op == "*":
            if left == 0:
                return right
            if right == 0:
                return left
            return None
        # division: the denominator must be state-free
        return left if right == 0 else None
    if isinstance(expr, Pow):
        base = _affine_degree(expr.base, state)
        if base is None:
            return None
        if expr.exponent == 0 or base == 0:
            return 0
        return base if expr.exponent == 1 else None
    if isinstance(expr, Call):
        arg = _affine_degree(expr.arg, state)
        if arg is None or arg > 0:
            return None
        return 0
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def analyze_linearity(rhs_list: list[Expr], state: list[str]) -> bool:
    """True when every right-hand side is affine in the state vector."""
    names = set(state)
    return all(_affine_degree(rhs, names) in (0, 1) for rhs in rhs_list)


def affine_coefficients(rhs: Expr, state: list[str]) -> tuple[list[Expr], Expr]:
    """Split an affine right-hand side into per-state coefficients and the
    state-free offset.  Coefficients of an affine expression are
    state-free by construction."""
    coefficients = []
    for name in state:
        coeff = derivative(rhs, name)
        if contains_ident(coeff, set(state)):
            raise ValueError(f"expression is not affine in '{name}'")
        coefficients.append(coeff)
    zeros = {name: num(0.0) for name in state}
    offset = simplify(substitute(rhs, zeros))
    return coefficients, offset


def identify_invariants(
    desc: Description,
    process: list[str] | None,
    measure: str | None,
) -> tuple[list[Invariant], Invariant, list[Diagnostic]]:
    """Pick the process and measurement invariants by name.

    With no names given, a two-invariant description is read as
    (process, measurement) in declaration order; anything else must be
    spelled out.
    """
    available = ", ".join(inv.name for inv in desc.invariants) or "none"
    diags: list[Diagnostic] = []

    if process is None and measure is None:
        if len(desc.invariants) == 2:
            process = [desc.invariants[0].name]
            measure = desc.invariants[1].name
        else:
            raise SourceError(
                [
                    error(
                        f"cannot infer invariant roles from {len(desc.invariants)} "
                        f"invariants; name the process and measurement invariants "
                        f"(available: {available})",
                        desc.source_name,
                        _desc_span(desc),
                    )
                ]
            )
    if process is None or measure is None or not process:
        raise SourceError(
            [
                error(
                    "both the process and measurement invariants must be named",
                    desc.source_name,
                    _desc_span(desc),
                )
            ]
        )

    chosen: list[Invariant] = []
    for name in process:
        inv = desc.invariant(name)
        if inv is None:
            raise SourceError(
                [
                    error(
                        f"no invariant named '{name}' (available: {available})",
                        desc.source_name,
                        _desc_span(desc),
                    )
                ]
            )
        chosen.append(inv)
    measure_inv = desc.invariant(measure)
    if measure_inv is None:
        raise SourceError(
            [
                error(
                    f"no invariant named '{measure}' (available: {available})",
                    desc.source_name,
                    _desc_span(desc),
                )
            ]
        )
    if measure in process:
        raise SourceError(
            [
                error(
                    f"invariant '{measure}' cannot be both process and measurement",
                    desc.source_name,
                    measure_inv.span,
                )
            ]
        )

    used = set(process) | {measure}
    for inv in desc.invariants:
        if inv.name not in used:
            diags.append(
                warning(
                    f"invariant '{inv.name}' is not used by this configuration",
                    desc.source_name,
                    inv.span,
                )
            )
    return chosen, measure_inv, diags


def _desc_span(desc: Description):
    if desc.invariants:
        return desc.invariants[0].span
    from .diagnostics import Span

    return Span(0, 0, 1, 1)


def classify_variables(
    process_invs: list[Invariant],
    measure_inv: Invariant,
    filename: str,
) -> ModelVariables:
    """Assign every parameter a role.  Raises SourceError on ambiguity."""
    diags: list[Diagnostic] = []

    state = [c.lhs for c in process_invs[0].constraints]
    for inv in process_invs[1:]:
        other = [c.lhs for c in inv.constraints]
        if other != state:
            diags.append(
                error(
                    f"process invariant '{inv.name}' constrains [{', '.join(other)}] "
                    f"but '{process_invs[0].name}' constrains [{', '.join(state)}]; "
                    f"all process invariants must constrain the same state variables "
                    f"in the same order",
                    filename,
                    inv.span,
                )
            )

    measurement = [c.lhs for c in measure_inv.constraints]

    shared = [name for name in measurement if name in state]
    for name in shared:
        diags.append(
            error(
                f"'{name}' is constrained by both a process and the measurement "
                f"invariant; its role is ambiguous",
                filename,
                measure_inv.span,
            )
        )

    if "dt" in state or "dt" in measurement:
        diags.append(
            error(
                "'dt' is the sampling interval and cannot be a constrained variable",
                filename,
                process_invs[0].span,
            )
        )

    taken = set(state) | set(measurement)
    extras: list[str] = []
    for inv in [*process_invs, measure_inv]:
        for param in inv.parameters:
            if param.name not in taken and param.name not in extras:
                extras.append(param.name)

    if diags:
        raise SourceError(diags)
    return ModelVariables(state, measurement, extras)


def build_model(
    desc: Description,
    process: list[str] | None = None,
    measure: str | None = None,
    default_process_variance: float = DEFAULT_PROCESS_VARIANCE,
    default_measurement_variance: float = DEFAULT_MEASUREMENT_VARIANCE,
) -> StateSpaceModel:
    """Assemble the state-space model for the chosen invariants.

    The description must already have passed validation and dimension
    checking; this stage only reports role and noise problems.
    """
    process_invs, measure_inv, warnings_list = identify_invariants(desc, process, measure)
    filename = desc.source_name
    variables = classify_variables(process_invs, measure_inv, filename)
    _check_signal_agreement([*process_invs, measure_inv], filename)

    state = variables.state
    measurement_vars = variables.measurement

    modes: list[ProcessMode] = []
    for inv in process_invs:
        by_lhs = {c.lhs: c.rhs for c in inv.constraints}
        transition = [by_lhs[name] for name in state]
        jacobian = [[derivative(rhs, s) for s in state] for rhs in transition]
        modes.append(ProcessMode(inv.name, transition, jacobian))

    h_by_lhs = {c.lhs: c.rhs for c in measure_inv.constraints}
    measurement = [h_by_lhs[name] for name in measurement_vars]
    measurement_jacobian = [[derivative(rhs, s) for s in state] for rhs in measurement]

    all_rhs = [rhs for mode in modes for rhs in mode.transition] + measurement
    linear = analyze_linearity(all_rhs, state)

    measurement_matrix = None
    measurement_offset = None
    if linear:
        for mode in modes:
            rows = [affine_coefficients(rhs, state) for rhs in mode.transition]
            mode.matrix = [row for row, _ in rows]
            mode.offset = [off for _, off in rows]
        rows = [affine_coefficients(rhs, state) for rhs in measurement]
        measurement_matrix = [row for row, _ in rows]
        measurement_offset = [off for _, off in rows]

    warnings_all = list(warnings_list)
    process_noise = _noise_matrix(
        state,
        process_invs,
        default_process_variance,
        "process",
        filename,
        warnings_all,
    )
    measurement_noise = _noise_matrix(
        measurement_vars,
        [measure_inv],
        default_measurement_variance,
        "measurement",
        filename,
        warnings_all,
    )

    signals: dict[str, str] = {}
    for inv in [*process_invs, measure_inv]:
        for param in inv.parameters:
            signals.setdefault(param.name, param.signal)

    return StateSpaceModel(
        variables=variables,
        linear=linear,
        modes=modes,
        measurement=measurement,
        measurement_jacobian=measurement_jacobian,
        measurement_matrix=measurement_matrix,
        measurement_offset=measurement_offset,
        process_noise=process_noise,
        measurement_noise=measurement_noise,
        constants=desc.constant_values(),
        signals=signals,
        warnings=warnings_all,
    )


def _check_signal_agreement(invariants: list[Invariant], filename: str) -> None:
    seen: dict[str, tuple[str, str]] = {}
    diags: list[Diagnostic] = []
    for inv in invariants:
        for param in inv.parameters:
            if param.name in seen:
                signal, where = seen[param.name]
                if signal != param.signal:
                    diags.append(
                        error(
                            f"parameter '{param.name}' is '{param.signal}' in "
                            f"invariant '{inv.name}' but '{signal}' in '{where}'",
                            filename,
                            param.span,
                        )
                    )
            else:
                seen[param.name] = (param.signal, inv.name)
    if diags:
        raise SourceError(diags)


def _noise_matrix(
    names: list[str],
    invariants: list[Invariant],
    default_variance: float,
    role: str,
    filename: str,
    warnings_out: list[Diagnostic],
) -> np.ndarray:
    """Diagonal covariance from Gaussian annotations; the first invariant
    that annotates a variable wins."""
    diag = []
    for name in names:
        variance = None
        for inv in invariants:
            param = inv.parameter(name)
            if param is not None and param.uncertainty is not None:
                unc = param.uncertainty
                if unc.mean != 0:
                    warnings_out.append(
                        warning(
                            f"nonzero Gaussian mean on '{name}' is ignored; "
                            f"noise is modeled as zero-mean",
                            filename,
                            unc.span,
                        )
                    )
                variance = unc.variance
                break
        if variance is None:
            variance = default_variance
            span = invariants[0].span
            warnings_out.append(
                warning(
                    f"no uncertainty annotation on {role} variable '{name}'; "
                    f"defaulting its variance to {default_variance:g}",
                    filename,
                    span,
                )
            )
        diag.append(variance)
    return np.diag(np.asarray(diag, dtype=float)) if diag else np.zeros((0, 0))


def dump_model(model: StateSpaceModel) -> str:
    """Human-readable report of the built model."""
    from .printer import format_expr, format_number

    v = model.variables
    lines = []
    lines.append("state:        " + ", ".join(f"{s} ({model.signals.get(s, '?')})" for s in v.state))
    lines.append(
        "measurement:  " + ", ".join(f"{z} ({model.signals.get(z, '?')})" for z in v.measurement)
    )
    lines.append("extras:       " + ", ".join(f"{e} ({model.signals.get(e, '?')})" for e in v.extras))
    lines.append(f"kind:         {'linear' if model.linear else 'nonlinear'}")
    if model.constants:
        lines.append(
            "constants:    "
            + ", ".join(f"{k} = {format_number(val)}" for k, val in sorted(model.constants.items()))
        )
    for index, mode in enumerate(model.modes):
        lines.append(f"mode {index}: {mode.name}")
        for i, rhs in enumerate(mode.transition):
            lines.append(f"  f[{i}] ({v.state[i]}) = {format_expr(rhs)}")
        matrix = mode.matrix if model.linear else mode.jacobian
        label = "F" if model.linear else "dF"
        assert matrix is not None
        for i, row in enumerate(matrix):
            cells = ", ".join(format_expr(c) for c in row)
            lines.append(f"  {label}[{i}] = [{cells}]")
        if model.linear and mode.offset is not None:
            cells = ", ".join(format_expr(c) for c in mode.offset)
            lines.append(f"  offset = [{cells}]")
    lines.append("measurement model:")
    for i, rhs in enumerate(model.measurement):
        lines.append(f"  h[{i}] ({v.measurement[i]}) = {format_expr(rhs)}")
    matrix = model.measurement_matrix if model.linear else model.measurement_jacobian
    label = "H" if model.linear else "dH"
    assert matrix is not None
    for i, row in enumerate(matrix):
        cells = ", ".join(format_expr(c) for c in row)
        lines.append(f"  {label}[{i}] = [{cells}]")
    q = ", ".join(format_number(x) for x in np.diag(model.process_noise))
    r = ", ".join(format_number(x) for x in np.diag(model.measurement_noise))
    lines.append(f"process noise diag:     [{q}]")
    lines.append(f"measurement noise diag: [{r}]")
    return "\n".join(lines) + "\n"
